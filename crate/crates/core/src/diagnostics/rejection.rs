use serde::{Deserialize, Serialize};

use super::{guarded_loglog_fit, invalid, DiagnosticReport, DiagnosticsError, FittedConstant, Verdict};
use crate::dynamics::RunConfig;
use crate::potential::Potential;
use crate::quadrature::{gauss_hermite_normal, linspace, CompositeRule};
use crate::reporting::{CurveSeries, Scale};
use crate::rng::StreamRng;

const XI_RANGE: f64 = 12.0;
const GL_ORDER: usize = 10;
const KINK_SCAN: usize = 2001;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum RejectionMethod {
    /// Composite Gauss-Legendre over `xi in [-12, 12]`, split where the
    /// acceptance probability has a kink (one-dimensional only).
    Quadrature {
        panels: usize,
    },
    /// Gauss-Hermite rule for the standard normal (one-dimensional only).
    GaussHermite {
        nodes: usize,
    },
    MonteCarlo {
        samples: u64,
        seed: u64,
    },
}

impl Default for RejectionMethod {
    fn default() -> Self {
        RejectionMethod::Quadrature { panels: 96 }
    }
}

impl RejectionMethod {
    fn describe(&self) -> String {
        match self {
            RejectionMethod::Quadrature { panels } => {
                format!("composite Gauss-Legendre, {panels} panels x {GL_ORDER} nodes, kink-split")
            }
            RejectionMethod::GaussHermite { nodes } => format!("Gauss-Hermite, {nodes} nodes"),
            RejectionMethod::MonteCarlo { samples, .. } => format!("Monte Carlo, {samples} samples"),
        }
    }

    fn sample_size(&self) -> usize {
        match *self {
            RejectionMethod::Quadrature { panels } => panels * GL_ORDER,
            RejectionMethod::GaussHermite { nodes } => nodes,
            RejectionMethod::MonteCarlo { samples, .. } => samples as usize,
        }
    }
}

struct Rejection<'a> {
    p: &'a dyn Potential,
    beta: f64,
    h: f64,
    x: &'a [f64],
    ux: f64,
    gx: Vec<f64>,
    s: f64,
}

impl Rejection<'_> {
    /// `1 - alpha(x, x - h grad U(x) + s xi)`.
    fn one_minus_alpha(&self, xi: &[f64]) -> f64 {
        let y: Vec<f64> = (0..self.x.len())
            .map(|i| self.x[i] - self.h * self.gx[i] + self.s * xi[i])
            .collect();
        let uy = self.p.value(&y);
        let gy = self.p.grad_vec(&y);
        let mut inner = 0.0;
        let (mut ny, mut nx) = (0.0, 0.0);
        for i in 0..y.len() {
            inner += (gy[i] + self.gx[i]) * (y[i] - self.x[i]);
            ny += gy[i] * gy[i];
            nx += self.gx[i] * self.gx[i];
        }
        let g = uy - self.ux - 0.5 * inner + 0.25 * self.h * (ny - nx);
        let la = (-self.beta * g).min(0.0);
        if la.is_nan() {
            1.0
        } else {
            -la.exp_m1()
        }
    }
}

/// `E^x |1 - alpha_h(x, X*)|^p` with `X*` the Euler proposal from `x`.
/// Returns the estimate and, for Monte Carlo, its standard error.
pub fn rejection_moment(
    p: &dyn Potential,
    beta: f64,
    x: &[f64],
    h: f64,
    p_moment: u32,
    method: &RejectionMethod,
) -> Result<(f64, Option<f64>), DiagnosticsError> {
    RunConfig::new(h, beta).validate()?;
    if x.len() != p.dim() {
        return Err(invalid(format!("x has dimension {}, potential {}", x.len(), p.dim())));
    }
    if p_moment == 0 {
        return Err(invalid("moment order p must be at least 1"));
    }
    let r = Rejection {
        p,
        beta,
        h,
        x,
        ux: p.value(x),
        gx: p.grad_vec(x),
        s: (2.0 * h / beta).sqrt(),
    };
    let pw = p_moment as i32;
    let one_d = |name: &str| {
        if x.len() != 1 {
            Err(invalid(format!(
                "{name} is one-dimensional; use Monte Carlo in dimension {}",
                x.len()
            )))
        } else {
            Ok(())
        }
    };
    match *method {
        RejectionMethod::Quadrature { panels } => {
            one_d("quadrature")?;
            if panels == 0 {
                return Err(invalid("need at least one panel"));
            }
            let f = |xi: f64| r.one_minus_alpha(&[xi]);
            let mut breaks = linspace(-XI_RANGE, XI_RANGE, panels + 1);
            breaks.extend(alpha_kinks(&r));
            breaks.sort_by(|a, b| a.total_cmp(b));
            let rule = CompositeRule::from_breaks(&breaks, GL_ORDER);
            let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
            let v = rule.integrate(|xi| norm * (-0.5 * xi * xi).exp() * f(xi).powi(pw));
            Ok((v, None))
        }
        RejectionMethod::GaussHermite { nodes } => {
            one_d("Gauss-Hermite")?;
            if nodes == 0 || nodes > 200 {
                return Err(invalid("Gauss-Hermite needs 1..=200 nodes"));
            }
            let (xs, ws) = gauss_hermite_normal(nodes);
            let v = xs
                .iter()
                .zip(&ws)
                .map(|(&xi, &w)| w * r.one_minus_alpha(&[xi]).powi(pw))
                .sum();
            Ok((v, None))
        }
        RejectionMethod::MonteCarlo { samples, seed } => {
            if samples < 2 {
                return Err(invalid("Monte Carlo needs at least two samples"));
            }
            let mut rng = StreamRng::new(seed, 0);
            let mut xi = vec![0.0; x.len()];
            let (mut sum, mut sum2) = (0.0, 0.0);
            for _ in 0..samples {
                rng.fill_normal(&mut xi);
                let v = r.one_minus_alpha(&xi).powi(pw);
                sum += v;
                sum2 += v * v;
            }
            let n = samples as f64;
            let mean = sum / n;
            let var = (sum2 / n - mean * mean).max(0.0) * n / (n - 1.0);
            Ok((mean, Some((var / n).sqrt())))
        }
    }
}

/// Sign changes of `G` along the one-dimensional noise variable.
fn alpha_kinks(r: &Rejection) -> Vec<f64> {
    let g = |xi: f64| {
        let v = r.one_minus_alpha(&[xi]);
        // alpha = 1 exactly on one side of a kink
        v > 0.0
    };
    let xs = linspace(-XI_RANGE, XI_RANGE, KINK_SCAN);
    let vals: Vec<bool> = xs.iter().map(|&t| g(t)).collect();
    let mut out = Vec::new();
    for i in 0..xs.len() - 1 {
        if vals[i] == vals[i + 1] {
            continue;
        }
        let (mut a, mut b) = (xs[i], xs[i + 1]);
        let sa = vals[i];
        for _ in 0..100 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if g(m) == sa {
                a = m;
            } else {
                b = m;
            }
        }
        out.push(0.5 * (a + b));
    }
    out
}

/// Estimates `E|1 - alpha_h|^p` for every step size in `h_list` and fits
/// the log-log slope in `h`. PASS iff the slope is at least `1.5 p` minus a
/// 10% tolerance. Step sizes with `U(x) >= h^(-1/2)` are excluded.
pub fn rejection_scaling(
    p: &dyn Potential,
    beta: f64,
    x: &[f64],
    h_list: &[f64],
    p_moment: u32,
    method: &RejectionMethod,
) -> Result<DiagnosticReport, DiagnosticsError> {
    let ux = p.value(x);
    let mut notes = Vec::new();
    let mut pts = Vec::new();
    let mut ses = Vec::new();
    for &h in h_list {
        if !(h > 0.0 && h.is_finite()) {
            return Err(invalid(format!("step sizes must be positive (got {h})")));
        }
        if !(ux < h.powf(-0.5)) {
            notes.push(format!("h = {h} excluded: U(x) = {ux} >= h^(-1/2)"));
            continue;
        }
        let (v, se) = rejection_moment(p, beta, x, h, p_moment, method)?;
        pts.push((h, v));
        ses.push(se);
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.dedup_by(|a, b| a.0 == b.0);
    if pts.len() < 3 || pts[pts.len() - 1].0 / pts[0].0 < 8.0 {
        return Err(invalid("the admissible step sizes must span at least three octaves"));
    }
    let (hs, vs): (Vec<f64>, Vec<f64>) = pts.iter().copied().unzip();
    let (a, slope, se, used, dropped) =
        guarded_loglog_fit(&hs, &vs).ok_or_else(|| invalid("rejection moments vanish; nothing to fit"))?;
    if dropped {
        notes.push("curvature detected: the two largest step sizes were dropped from the fit".into());
    }
    let expected = 1.5 * p_moment as f64;
    let tol = 0.1 * expected;
    let mut rep = DiagnosticReport::new(
        "reject-scaling",
        if slope >= expected - tol {
            Verdict::Pass
        } else {
            Verdict::Fail
        },
    );
    let method_name = format!("OLS on log-log points; moments by {}", method.describe());
    rep.constants
        .push(FittedConstant::new("slope", slope, &method_name, used).with_std_error(se));
    rep.constants
        .push(FittedConstant::new("prefactor", a.exp(), &method_name, used));
    rep.constants.push(FittedConstant::new(
        "expected_slope",
        expected,
        "h^(3p/2) scaling",
        method.sample_size(),
    ));
    if let RejectionMethod::MonteCarlo { samples, .. } = method {
        rep.replicas = Some(*samples as usize);
    }
    rep.notes = notes;
    rep.curves.push(
        CurveSeries::new(format!("E|1-alpha|^{p_moment}"), "h", "moment", pts)?.with_scales(Scale::Log, Scale::Log),
    );
    Ok(rep)
}
