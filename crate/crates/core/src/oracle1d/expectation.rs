use serde::{Deserialize, Serialize};

use super::{require_1d, OracleError};
use crate::dynamics::{Kernel, RunConfig};
use crate::potential::Potential;
use crate::quadrature::{linspace, log_sum_exp, CompositeRule};

/// Integrand values below this fraction of the peak count as decayed.
const DECAY_TOL: f64 = 1e-12;
const GL_ORDER: usize = 10;
const KINK_SCAN: usize = 2001;

/// Functions of the energy `f(y) = g(U(y))` whose one-step expectation can
/// be assembled in log space. `U` is assumed positive for the power forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum Observable {
    One,
    /// `exp(theta U)`
    Exp {
        theta: f64,
    },
    /// `U^ell`
    Power {
        ell: f64,
    },
    /// `U^ell exp(theta U)`
    PowerExp {
        ell: f64,
        theta: f64,
    },
}

impl Observable {
    /// `ln f` at energy `u`.
    pub fn ln_value(&self, u: f64) -> f64 {
        let ln_pow = |ell: f64| {
            if ell == 0.0 {
                0.0
            } else if u > 0.0 {
                ell * u.ln()
            } else if u == 0.0 {
                f64::NEG_INFINITY
            } else {
                f64::NAN
            }
        };
        match *self {
            Observable::One => 0.0,
            Observable::Exp { theta } => theta * u,
            Observable::Power { ell } => ln_pow(ell),
            Observable::PowerExp { ell, theta } => ln_pow(ell) + theta * u,
        }
    }

    pub fn value(&self, u: f64) -> f64 {
        self.ln_value(u).exp()
    }
}

struct Step<'a> {
    p: &'a dyn Potential,
    cfg: &'a RunConfig,
    kind: Kernel,
    x: f64,
    ux: f64,
    gx: f64,
    mean: f64,
    scale: f64,
    e_h: f64,
}

impl<'a> Step<'a> {
    fn new(p: &'a dyn Potential, cfg: &'a RunConfig, x: f64, kind: Kernel) -> Result<Self, OracleError> {
        require_1d(p)?;
        cfg.validate()?;
        let ux = p.value(&[x]);
        let gx = p.grad_vec(&[x])[0];
        if !(ux.is_finite() && gx.is_finite()) {
            return Err(OracleError::NotResolvable(format!("U or grad U not finite at x = {x}")));
        }
        let e_h = cfg.e_h();
        if kind == Kernel::Patched && !(ux < e_h) {
            return Err(OracleError::OutsideLevelSet { u: ux, e_h });
        }
        Ok(Self {
            p,
            cfg,
            kind,
            x,
            ux,
            gx,
            mean: x - cfg.h * gx,
            scale: cfg.noise_scale(),
            e_h,
        })
    }

    fn g(&self, y: f64, uy: f64) -> f64 {
        let gy = self.p.grad_vec(&[y])[0];
        uy - self.ux - 0.5 * (gy + self.gx) * (y - self.x) + 0.25 * self.cfg.h * (gy * gy - self.gx * self.gx)
    }

    fn ln_q(&self, y: f64) -> f64 {
        let z = (y - self.mean) / self.scale;
        -0.5 * z * z - (self.scale * (2.0 * std::f64::consts::PI).sqrt()).ln()
    }

    /// `ln alpha(x, y)` and `U(y)`.
    fn ln_alpha(&self, y: f64) -> (f64, f64) {
        let uy = self.p.value(&[y]);
        let la = match self.kind {
            Kernel::Ula => 0.0,
            _ if !uy.is_finite() => f64::NEG_INFINITY,
            Kernel::Patched if !(uy < self.e_h) => f64::NEG_INFINITY,
            _ => {
                let v = (-self.cfg.beta * self.g(y, uy)).min(0.0);
                if v.is_nan() {
                    f64::NEG_INFINITY
                } else {
                    v
                }
            }
        };
        (la, uy)
    }

    fn ln_integrand(&self, y: f64, f: &Observable) -> f64 {
        let (la, uy) = self.ln_alpha(y);
        if la == f64::NEG_INFINITY {
            return la;
        }
        let v = self.ln_q(y) + la + f.ln_value(uy);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }
}

/// Points in `[lo, hi]` where the acceptance probability is not smooth: sign
/// changes of `G(x, .)` and, for the patched kernel, crossings of `U = E_h`.
pub fn acceptance_kinks(
    p: &dyn Potential,
    cfg: &RunConfig,
    x: f64,
    kind: Kernel,
    lo: f64,
    hi: f64,
) -> Result<Vec<f64>, OracleError> {
    let st = Step::new(p, cfg, x, kind)?;
    Ok(kinks(&st, lo, hi))
}

fn kinks(st: &Step, lo: f64, hi: f64) -> Vec<f64> {
    if st.kind == Kernel::Ula || !(hi > lo) {
        return Vec::new();
    }
    let mut fns: Vec<Box<dyn Fn(f64) -> f64 + '_>> = vec![Box::new(|y: f64| {
        let uy = st.p.value(&[y]);
        st.g(y, uy)
    })];
    if st.kind == Kernel::Patched {
        fns.push(Box::new(|y: f64| st.p.value(&[y]) - st.e_h));
    }
    let ys = linspace(lo, hi, KINK_SCAN);
    let mut out = Vec::new();
    for f in &fns {
        let vals: Vec<f64> = ys.iter().map(|&y| f(y)).collect();
        for i in 0..ys.len() - 1 {
            let (fa, fb) = (vals[i], vals[i + 1]);
            if !(fa.is_finite() && fb.is_finite()) || (fa > 0.0) == (fb > 0.0) {
                continue;
            }
            let (mut a, mut b, mut sa) = (ys[i], ys[i + 1], fa > 0.0);
            for _ in 0..100 {
                let m = 0.5 * (a + b);
                if m <= a || m >= b {
                    break;
                }
                let sm = f(m) > 0.0;
                if sm == sa {
                    a = m;
                    sa = sm;
                } else {
                    b = m;
                }
            }
            out.push(0.5 * (a + b));
        }
    }
    out.sort_by(|a, b| a.total_cmp(b));
    out.dedup();
    out
}

/// `ln E^x f(X_1)` for one step of `kind`.
pub fn log_expectation_under_step(
    p: &dyn Potential,
    cfg: &RunConfig,
    x: f64,
    f: &Observable,
    kind: Kernel,
) -> Result<f64, OracleError> {
    let st = Step::new(p, cfg, x, kind)?;
    let (m, s) = (st.mean, st.scale);
    let floor = DECAY_TOL.ln();
    let not_resolvable =
        |y: f64| OracleError::NotResolvable(format!("integrand for {f:?} does not decay (at y = {y} from x = {x})"));

    // peak of the integrand over the bulk of the proposal
    let peak = linspace(m - 12.0 * s, m + 12.0 * s, 241)
        .into_iter()
        .chain(std::iter::once(x))
        .map(|y| st.ln_integrand(y, f))
        .fold(f64::NEG_INFINITY, f64::max);
    if peak == f64::INFINITY {
        return Err(not_resolvable(m));
    }

    let mut w = 12.0;
    loop {
        let (lo, hi) = (m - w * s, m + w * s);
        let lo_ok = st.ln_integrand(lo, f) <= peak + floor;
        let hi_ok = st.ln_integrand(hi, f) <= peak + floor;
        if lo_ok && hi_ok {
            break;
        }
        w *= 2.0;
        if w > 12.0 * 1024.0 {
            return Err(not_resolvable(if lo_ok { hi } else { lo }));
        }
    }
    // far-tail probe: an integrand that dips and then regrows is not finite
    for k in 3..=60 {
        let d = s * 2f64.powi(k);
        if d <= w * s {
            continue;
        }
        for y in [m - d, m + d] {
            if st.ln_integrand(y, f) > peak + floor {
                return Err(not_resolvable(y));
            }
        }
    }

    let (lo, hi) = (m - w * s, m + w * s);
    let panels = (16.0 * w).ceil() as usize;
    let mut breaks = linspace(lo, hi, panels + 1);
    breaks.extend(kinks(&st, lo, hi));
    breaks.sort_by(|a, b| a.total_cmp(b));
    let rule = CompositeRule::from_breaks(&breaks, GL_ORDER);

    let mut terms = Vec::with_capacity(rule.nodes.len() + 1);
    let mut rejected = 0.0;
    for (&y, &wt) in rule.nodes.iter().zip(&rule.weights) {
        let (la, uy) = st.ln_alpha(y);
        let lq = st.ln_q(y);
        if st.kind != Kernel::Ula {
            // 1 - alpha, computed without cancellation
            rejected += wt * lq.exp() * -la.exp_m1();
        }
        if la > f64::NEG_INFINITY {
            let v = lq + la + f.ln_value(uy);
            if v.is_nan() || v == f64::INFINITY {
                return Err(not_resolvable(y));
            }
            terms.push(wt.ln() + v);
        }
    }
    if st.kind != Kernel::Ula && rejected > 0.0 {
        terms.push(rejected.ln() + f.ln_value(st.ux));
    }
    let out = log_sum_exp(&terms);
    if out.is_nan() || out == f64::INFINITY {
        return Err(not_resolvable(x));
    }
    Ok(out)
}

/// `E^x f(X_1) = int q(x,y) a(x,y) f(y) dy + (1 - a(x)) f(x)` by composite
/// Gauss-Legendre quadrature split at the acceptance kinks.
pub fn expectation_under_step(
    p: &dyn Potential,
    cfg: &RunConfig,
    x: f64,
    f: &Observable,
    kind: Kernel,
) -> Result<f64, OracleError> {
    log_expectation_under_step(p, cfg, x, f, kind).map(f64::exp)
}
