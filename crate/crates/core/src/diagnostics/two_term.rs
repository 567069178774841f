use serde::Serialize;

use super::{invalid, DiagnosticReport, DiagnosticsError, FittedConstant, Verdict};
use crate::dynamics::{Kernel, RunConfig};
use crate::oracle1d::{build_kernel, exit_probability, propagate_blocks, stationary_measure, Grid1D};
use crate::potential::Potential;
use crate::quadrature::ols;
use crate::reporting::{CurveSeries, Scale};

/// Slack allowed in the pointwise triangle check.
const TRIANGLE_TOL: f64 = 1e-6;
/// Patched TV values below this are rounding noise and left out of the fit.
const FIT_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoTermRow {
    /// Block index; block `k` ends after `k floor(1/h)` steps.
    pub k: usize,
    pub mala_tv: f64,
    pub patched_tv: f64,
    /// `2 mu(U >= E_h)`
    pub floor: f64,
    /// `2 P(tau_h <= k floor(1/h))`
    pub coupling: f64,
    /// `patched_tv + floor + coupling - mala_tv`
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoTermReport {
    pub e_h: f64,
    pub block_len: usize,
    pub start: f64,
    pub rows: Vec<TwoTermRow>,
    /// `2 mu(R_h^c)`
    pub floor: f64,
    /// `||mu_bar - mu||` computed from the two grid measures.
    pub floor_direct: f64,
    /// `2 exp(-beta E_h / 2)`
    pub floor_bound: f64,
    /// Per-block geometric rate of the patched curve.
    pub rho_hat: Option<f64>,
    pub rho_std_error: Option<f64>,
    pub rho_points: usize,
    /// Whether `mala_tv <= patched_tv + floor + coupling` within `1e-6`
    /// at every block.
    pub holds: bool,
    pub min_slack: f64,
}

impl TwoTermReport {
    pub fn to_report(&self) -> Result<DiagnosticReport, DiagnosticsError> {
        let rho_ok = self.rho_hat.is_some_and(|r| r > 0.0 && r < 1.0);
        let mut rep = DiagnosticReport::new(
            "two-term",
            if self.holds && rho_ok {
                Verdict::Pass
            } else {
                Verdict::Fail
            },
        );
        let n = self.rows.len();
        if let Some(r) = self.rho_hat {
            let mut c = FittedConstant::new("rho_hat", r, "log-linear OLS on the patched TV curve", self.rho_points);
            c.std_error = self.rho_std_error;
            rep.constants.push(c);
        }
        rep.constants.push(FittedConstant::new(
            "floor",
            self.floor,
            "2 mu(U >= E_h) by grid quadrature",
            n,
        ));
        rep.constants.push(FittedConstant::new(
            "floor_bound",
            self.floor_bound,
            "2 exp(-beta E_h / 2)",
            1,
        ));
        rep.constants.push(FittedConstant::new(
            "min_slack",
            self.min_slack,
            "pointwise over blocks",
            n,
        ));
        if !self.holds {
            rep.notes
                .push("the triangle decomposition is violated at some block".into());
        }
        if self.floor > self.floor_bound {
            rep.notes
                .push("floor exceeds 2 exp(-beta E_h / 2) at this level".into());
        }
        let col = |f: fn(&TwoTermRow) -> f64| -> Vec<f64> { self.rows.iter().map(f).collect() };
        for (name, vals) in [
            ("mala_tv", col(|r| r.mala_tv)),
            ("patched_tv", col(|r| r.patched_tv)),
            ("floor", col(|r| r.floor)),
            ("coupling", col(|r| r.coupling)),
        ] {
            rep.curves.push(
                CurveSeries::indexed(name, "block", "total variation", &vals)?.with_scales(Scale::Linear, Scale::Log),
            );
        }
        Ok(rep)
    }
}

/// Oracle decomposition of the MALA distance to stationarity into the
/// patched chain's distance to its own invariant measure, the floor
/// `||mu_bar - mu|| = 2 mu(R_h^c)` and the coupling term `2 P(tau_h <= n)`.
pub fn two_term_tv_probe(
    p: &dyn Potential,
    cfg: &RunConfig,
    start: f64,
    grid: &Grid1D,
    k_max: usize,
) -> Result<TwoTermReport, DiagnosticsError> {
    cfg.validate()?;
    if k_max == 0 {
        return Err(invalid("need at least one block"));
    }
    let e_h = cfg.e_h();
    let mu = stationary_measure(p, cfg.beta, grid, None)?;
    let mu_bar = stationary_measure(p, cfg.beta, grid, Some(e_h))?;
    let mala = build_kernel(p, cfg, grid, Kernel::Mala)?;
    let patched = build_kernel(p, cfg, grid, Kernel::Patched)?;
    let s = grid.nearest(start);
    let l = cfg.block_len();

    let floor = 2.0
        * mala
            .energies
            .iter()
            .zip(&mu.masses)
            .filter(|(u, _)| !(**u < e_h))
            .map(|(_, m)| m)
            .sum::<f64>();
    let floor_direct = mu_bar.tv(&mu)?;
    let a = propagate_blocks(&mala, s, l, k_max, &mu)?;
    let b = propagate_blocks(&patched, s, l, k_max, &mu_bar)?;
    let exit = exit_probability(&mala, s, e_h, l * k_max)?;

    let rows: Vec<TwoTermRow> = (0..k_max)
        .map(|i| {
            let coupling = (2.0 * exit[(i + 1) * l - 1]).min(2.0);
            TwoTermRow {
                k: i + 1,
                mala_tv: a[i],
                patched_tv: b[i],
                floor,
                coupling,
                slack: b[i] + floor + coupling - a[i],
            }
        })
        .collect();
    let min_slack = rows.iter().map(|r| r.slack).fold(f64::INFINITY, f64::min);

    let (ks, lb): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.patched_tv > FIT_FLOOR)
        .map(|r| (r.k as f64, r.patched_tv.ln()))
        .unzip();
    let fit = if ks.len() >= 3 { ols(&ks, &lb) } else { None };

    Ok(TwoTermReport {
        e_h,
        block_len: l,
        start: grid.nodes[s],
        rows,
        floor,
        floor_direct,
        floor_bound: 2.0 * (-cfg.beta * e_h / 2.0).exp(),
        rho_hat: fit.map(|(_, slope, _)| slope.exp()),
        rho_std_error: fit.map(|(_, slope, se)| slope.exp() * se),
        rho_points: ks.len(),
        holds: min_slack >= -TRIANGLE_TOL,
        min_slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::builtin_potential;

    #[test]
    fn decomposition_on_a_small_grid() {
        let p = builtin_potential("quartic", &[], 1).unwrap();
        let g = Grid1D::uniform(-4.0, 4.0, 401).unwrap();
        let cfg = RunConfig::new(0.1, 1.0).with_level(3.0);
        let r = two_term_tv_probe(&p, &cfg, 1.0, &g, 10).unwrap();
        assert!(r.holds, "min slack {}", r.min_slack);
        assert!((r.floor - r.floor_direct).abs() < 1e-12);
        assert!(r.floor <= r.floor_bound);
        let rho = r.rho_hat.unwrap();
        assert!(rho > 0.0 && rho < 1.0);
        assert!(r.rows.windows(2).all(|w| w[1].coupling >= w[0].coupling));
        let rep = r.to_report().unwrap();
        assert_eq!(rep.verdict, Verdict::Pass);
        assert_eq!(rep.curves.len(), 4);
    }

    #[test]
    fn start_outside_level_set_is_an_error() {
        let p = builtin_potential("quartic", &[], 1).unwrap();
        let g = Grid1D::uniform(-4.0, 4.0, 401).unwrap();
        let cfg = RunConfig::new(0.1, 1.0).with_level(3.0);
        assert!(two_term_tv_probe(&p, &cfg, 2.0, &g, 2).is_err());
    }
}
