//! Probes of the quantitative behaviour of the samplers: rejection scaling,
//! Lyapunov drift, Euler transience, minorization overlap, geometric
//! ergodicity classification and the two-term convergence bound.
//!
//! Every probe returns a [`DiagnosticReport`] whose fitted constants carry
//! their estimation method and sample size, plus the curves behind them.

mod classify;
mod drift;
mod generator;
mod minorization;
mod rejection;
mod transience;
mod two_term;

pub use classify::{geo_ergodicity_classifier, ClassifierReport, GeoVerdict};
pub use drift::{lyapunov_drift_probe, LyapunovForm, LyapunovSpec};
pub use generator::{apply_generator, generator_drift_fit, lyapunov_generator};
pub use minorization::{minorization_overlap, minorization_plateau, MinorizationOptions};
pub use rejection::{rejection_moment, rejection_scaling, RejectionMethod};
pub use transience::{euler_transience_probe, TransienceConfig};
pub use two_term::{two_term_tv_probe, TwoTermReport, TwoTermRow};

use serde::Serialize;
use thiserror::Error;

use crate::dynamics::DynamicsError;
use crate::oracle1d::OracleError;
use crate::quadrature::ols;
use crate::reporting::{CurveSeries, ReportingError};

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Reporting(#[from] ReportingError),
}

fn invalid(msg: impl Into<String>) -> DiagnosticsError {
    DiagnosticsError::InvalidInput(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
    #[serde(rename = "INFEASIBLE")]
    Infeasible,
    #[serde(rename = "TRANSIENT")]
    Transient,
    #[serde(rename = "STABLE-AT-HORIZON")]
    StableAtHorizon,
    #[serde(rename = "NOT-GEOMETRIC")]
    NotGeometric,
    #[serde(rename = "GEOMETRIC-PLAUSIBLE")]
    GeometricPlausible,
    #[serde(rename = "INCONCLUSIVE")]
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Infeasible => "INFEASIBLE",
            Verdict::Transient => "TRANSIENT",
            Verdict::StableAtHorizon => "STABLE-AT-HORIZON",
            Verdict::NotGeometric => "NOT-GEOMETRIC",
            Verdict::GeometricPlausible => "GEOMETRIC-PLAUSIBLE",
            Verdict::Inconclusive => "INCONCLUSIVE",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A fitted stand-in for one of the existence-level constants.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FittedConstant {
    pub name: String,
    pub value: f64,
    pub std_error: Option<f64>,
    pub method: String,
    pub sample_size: usize,
}

impl FittedConstant {
    pub fn new(name: &str, value: f64, method: &str, sample_size: usize) -> Self {
        Self {
            name: name.into(),
            value,
            std_error: None,
            method: method.into(),
            sample_size,
        }
    }

    pub fn with_std_error(mut self, se: f64) -> Self {
        self.std_error = Some(se);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticReport {
    pub probe: String,
    pub verdict: Verdict,
    pub constants: Vec<FittedConstant>,
    pub replicas: Option<usize>,
    pub config_hash: Option<String>,
    pub notes: Vec<String>,
    /// Underlying curves, written to CSV/SVG rather than into the JSON.
    #[serde(skip)]
    pub curves: Vec<CurveSeries>,
}

impl DiagnosticReport {
    pub fn new(probe: &str, verdict: Verdict) -> Self {
        Self {
            probe: probe.into(),
            verdict,
            constants: Vec::new(),
            replicas: None,
            config_hash: None,
            notes: Vec::new(),
            curves: Vec::new(),
        }
    }

    pub fn constant(&self, name: &str) -> Option<&FittedConstant> {
        self.constants.iter().find(|c| c.name == name)
    }

    /// Value of the named constant; panics if absent.
    pub fn value(&self, name: &str) -> f64 {
        self.constant(name)
            .unwrap_or_else(|| panic!("report `{}` has no constant `{name}`", self.probe))
            .value
    }

    pub fn with_config_hash(mut self, hash: impl Into<String>) -> Self {
        self.config_hash = Some(hash.into());
        self
    }
}

/// Log-log OLS slope with a curvature guard: if the local slopes between
/// neighbouring points spread by more than 0.1, the two largest abscissae
/// are dropped (at least four points are kept). Returns
/// `(intercept, slope, stderr, points_used, dropped)`.
pub(crate) fn guarded_loglog_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64, usize, bool)> {
    let mut pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0 && a.is_finite() && b.is_finite())
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let local: Vec<f64> = pts.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)).collect();
    let spread =
        local.iter().copied().fold(f64::NEG_INFINITY, f64::max) - local.iter().copied().fold(f64::INFINITY, f64::min);
    let dropped = spread > 0.1 && pts.len() >= 6;
    if dropped {
        pts.truncate(pts.len() - 2);
    }
    let (lx, ly): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    let (a, b, se) = ols(&lx, &ly)?;
    Some((a, b, se, lx.len(), dropped))
}
