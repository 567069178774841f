//! Potential-energy interface and reference potentials.
//!
//! Every sampler in this crate targets the density proportional to
//! `exp(-beta * U(x))`. A [`Potential`] supplies `U` and its gradient, and
//! optionally second-order information used by the assumption validator.

mod builtin;
mod probes;
mod validate;

pub use builtin::{builtin_potential, Builtin, Family, FAMILIES};
pub use probes::{halton, ProbeBox};
pub use validate::{
    exponential_envelope_check, validate_assumptions, AssumptionReport, Clause, ClauseReport, ClauseVerdict,
    EnvelopeReport, Witness,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error("unknown potential family `{0}` (expected one of: quadratic, quartic, even-power, double-well-confined)")]
    UnknownFamily(String),
    #[error("invalid parameters for `{family}`: {reason}")]
    InvalidParams { family: String, reason: String },
    #[error("non-finite input: {0}")]
    NonFinite(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Energy landscape `U: R^n -> R` together with its derivatives.
///
/// Implementations must be pure: the samplers share a single potential
/// across concurrently running chains.
pub trait Potential: Send + Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// Writes `grad U(x)` into `out` (length [`Potential::dim`]).
    fn gradient(&self, x: &[f64], out: &mut [f64]);

    /// Quadratic form `D^2 U(x)(eta, eta)`, when available.
    fn hessian_form(&self, _x: &[f64], _eta: &[f64]) -> Option<f64> {
        None
    }

    /// `Delta U(x)`. Defaults to the trace of [`Potential::hessian_form`].
    fn laplacian(&self, x: &[f64]) -> Option<f64> {
        let n = self.dim();
        let mut e = vec![0.0; n];
        let mut sum = 0.0;
        for i in 0..n {
            e[i] = 1.0;
            sum += self.hessian_form(x, &e)?;
            e[i] = 0.0;
        }
        Some(sum)
    }

    /// Frobenius norm of the derivative tensor `D^order U(x)` for
    /// `order` in 2..=4, when an analytic form is available.
    fn derivative_norm(&self, _order: usize, _x: &[f64]) -> Option<f64> {
        None
    }

    fn grad_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        self.gradient(x, &mut g);
        g
    }
}

type ValueFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;
type HessFn = dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync;

/// A potential assembled from closures, for landscapes outside the builtin
/// families.
pub struct FnPotential {
    name: String,
    dim: usize,
    value: Box<ValueFn>,
    grad: Box<GradFn>,
    hess: Option<Box<HessFn>>,
}

impl FnPotential {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            dim,
            value: Box::new(value),
            grad: Box::new(grad),
            hess: None,
        }
    }

    pub fn with_hessian_form(mut self, hess: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.hess = Some(Box::new(hess));
        self
    }
}

impl std::fmt::Debug for FnPotential {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FnPotential")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("has_hessian", &self.hess.is_some())
            .finish()
    }
}

impl Potential for FnPotential {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        (self.grad)(x, out)
    }

    fn hessian_form(&self, x: &[f64], eta: &[f64]) -> Option<f64> {
        self.hess.as_ref().map(|h| h(x, eta))
    }
}

/// Five-point central-difference gradient of `U`, used to cross-check
/// analytic gradients.
pub fn finite_difference_gradient(p: &dyn Potential, x: &[f64], step: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = step * (1.0 + x[i].abs());
            let mut at = |t: f64| {
                probe[i] = x[i] + t;
                let v = p.value(&probe);
                probe[i] = x[i];
                v
            };
            let (f2, f1, b1, b2) = (at(2.0 * h), at(h), at(-h), at(-2.0 * h));
            (-f2 + 8.0 * f1 - 8.0 * b1 + b2) / (12.0 * h)
        })
        .collect()
}
