use serde::{Deserialize, Serialize};

use super::{invalid, DiagnosticReport, DiagnosticsError, FittedConstant, Verdict};
use crate::dynamics::{Kernel, RunConfig};
use crate::oracle1d::{log_expectation_under_step, Observable, OracleError};
use crate::potential::Potential;
use crate::reporting::{CurveSeries, Scale};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LyapunovForm {
    /// `exp(theta U)`
    ExpThetaU,
    /// `U^ell`
    UPowerEll,
    /// `U^ell exp(theta U)`
    UPowerExp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovSpec {
    pub theta: f64,
    pub form: LyapunovForm,
    pub ell: Option<u32>,
}

impl LyapunovSpec {
    pub fn exp(theta: f64) -> Self {
        Self {
            theta,
            form: LyapunovForm::ExpThetaU,
            ell: None,
        }
    }

    pub fn power(ell: u32) -> Self {
        Self {
            theta: 0.0,
            form: LyapunovForm::UPowerEll,
            ell: Some(ell),
        }
    }

    pub fn validate(&self, beta: f64) -> Result<(), DiagnosticsError> {
        let needs_theta = self.form != LyapunovForm::UPowerEll;
        if needs_theta && !(self.theta > 0.0 && self.theta < beta) {
            return Err(invalid(format!(
                "theta must lie in (0, beta = {beta}) (got {})",
                self.theta
            )));
        }
        if self.form != LyapunovForm::ExpThetaU && !matches!(self.ell, Some(l) if l >= 1) {
            return Err(invalid("ell must be an integer >= 1 for the power forms"));
        }
        Ok(())
    }

    pub fn observable(&self) -> Observable {
        let ell = self.ell.unwrap_or(1) as f64;
        match self.form {
            LyapunovForm::ExpThetaU => Observable::Exp { theta: self.theta },
            LyapunovForm::UPowerEll => Observable::Power { ell },
            LyapunovForm::UPowerExp => Observable::PowerExp { ell, theta: self.theta },
        }
    }
}

/// One-step drift of `Phi` by quadrature: fits the smallest `gamma` and
/// `K` with `E^x Phi(X_1) <= exp(-gamma h) Phi(x) + K h` over `x_grid`.
/// `gamma` comes from the outer quarter of the grid by energy. Grid points
/// with `U(x) >= h^(-1/2)` are excluded.
pub fn lyapunov_drift_probe(
    p: &dyn Potential,
    cfg: &RunConfig,
    spec: &LyapunovSpec,
    x_grid: &[f64],
    kind: Kernel,
) -> Result<DiagnosticReport, DiagnosticsError> {
    cfg.validate()?;
    spec.validate(cfg.beta)?;
    if p.dim() != 1 {
        return Err(invalid("the drift probe is one-dimensional"));
    }
    let f = spec.observable();
    let cap = cfg.h.powf(-0.5);
    let mut xs: Vec<f64> = x_grid.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    xs.dedup();
    let mut notes = Vec::new();
    let mut rows = Vec::new();
    for &x in &xs {
        let u = p.value(&[x]);
        if !(u < cap) {
            notes.push(format!("x = {x} excluded: U = {u} >= h^(-1/2)"));
            continue;
        }
        match log_expectation_under_step(p, cfg, x, &f, kind) {
            Ok(le) => rows.push((x, u, le, f.ln_value(u))),
            Err(OracleError::NotResolvable(msg)) => {
                let mut rep = DiagnosticReport::new("lyapunov", Verdict::Infeasible);
                rep.notes = notes;
                rep.notes.push(format!(
                    "{kind} one-step expectation of {f:?} diverges at x = {x}: \
                     the expectation is infinite under the proposal moves ({msg})"
                ));
                return Ok(rep);
            }
            Err(e) => return Err(e.into()),
        }
    }
    if rows.len() < 4 {
        return Err(invalid("need at least four admissible grid points"));
    }
    let h = cfg.h;
    let mut by_energy: Vec<&(f64, f64, f64, f64)> = rows.iter().collect();
    by_energy.sort_by(|a, b| a.1.total_cmp(&b.1));
    let outer = &by_energy[by_energy.len() - by_energy.len().div_ceil(4)..];
    let gamma = outer.iter().map(|r| -(r.2 - r.3) / h).fold(f64::INFINITY, f64::min);
    let k = rows
        .iter()
        .map(|r| (r.2.exp() - (-gamma * h + r.3).exp()) / h)
        .fold(0.0, f64::max);

    let verdict = if gamma > 0.0 { Verdict::Pass } else { Verdict::Fail };
    let mut rep = DiagnosticReport::new("lyapunov", verdict);
    let method = format!("{kind} one-step quadrature on {} grid points", rows.len());
    rep.constants
        .push(FittedConstant::new("gamma", gamma, &method, outer.len()));
    rep.constants.push(FittedConstant::new("K", k, &method, rows.len()));
    rep.notes = notes;
    rep.curves.push(
        CurveSeries::new(
            "E Phi(X1) / Phi(x)",
            "x",
            "ratio",
            rows.iter().map(|r| (r.0, (r.2 - r.3).exp())).collect(),
        )?
        .with_scales(Scale::Linear, Scale::Log),
    );
    Ok(rep)
}
