//! Stepping kernels for the overdamped Langevin dynamics
//! `dY = -grad U(Y) dt + sqrt(2/beta) dW` and the chain runners built on
//! them.
//!
//! All three kernels share the forward Euler proposal
//! `y = x - h grad U(x) + sqrt(2h/beta) xi`. ULA always moves, MALA applies a
//! Metropolis correction evaluated in log space through
//! `log alpha = min(0, -beta G(x, y))`, and patched MALA additionally rejects
//! every proposal leaving `R_h = {U < E_h}`, `E_h = E_star h^(-1/4)`.

mod coupling;
mod runner;
mod step;
mod trajectory;

pub use coupling::{coupled_replicas, coupled_run, CouplingSummary};
pub use runner::{run_chain, run_chain_on_stream, run_replicas, ChainStatus, ChainSummary, Recorder};
pub use step::{
    direct_log_ratio, euler_proposal, g_function, log_acceptance, log_euler_density, log_target, mala_step,
    patched_mala_step, ula_step, ChainState, StepOutcome,
};
pub use trajectory::{trajectory_header, TrajectoryRecorder, TRAJECTORY_COLUMNS};

#[allow(unused_imports)]
pub(crate) use step::{advance, Scratch};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite gradient at position {0:?}")]
    NonFiniteGradient(Vec<f64>),
    #[error("non-finite state at position {0:?}")]
    NonFiniteState(Vec<f64>),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("start outside the level set: U = {u} >= E_h = {e_h}")]
    OutsideLevelSet { u: f64, e_h: f64 },
    #[error("uniform variate {0} is outside [0, 1]")]
    InvalidUniform(f64),
}

/// Step size, temperature and level-set constants of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub h: f64,
    pub beta: f64,
    /// Level constant; the patched kernel lives on `{U < e_star h^(-1/4)}`.
    pub e_star: f64,
    /// Exponent of the Lyapunov function `exp(theta U)`.
    pub theta: f64,
    pub seed: u64,
    pub n_steps: u64,
}

impl RunConfig {
    /// Defaults: `e_star = 1`, `theta = beta / 2`, seed 0, no steps.
    pub fn new(h: f64, beta: f64) -> Self {
        Self {
            h,
            beta,
            e_star: 1.0,
            theta: 0.5 * beta,
            seed: 0,
            n_steps: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_steps(mut self, n: u64) -> Self {
        self.n_steps = n;
        self
    }

    pub fn with_e_star(mut self, e_star: f64) -> Self {
        self.e_star = e_star;
        self
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    /// Chooses `e_star` so that `E_h` equals `e_h` at this step size.
    pub fn with_level(mut self, e_h: f64) -> Self {
        self.e_star = e_h * self.h.powf(0.25);
        self
    }

    /// `E_h = e_star h^(-1/4)`.
    pub fn e_h(&self) -> f64 {
        self.e_star * self.h.powf(-0.25)
    }

    /// Proposal standard deviation `sqrt(2h/beta)`.
    pub fn noise_scale(&self) -> f64 {
        (2.0 * self.h / self.beta).sqrt()
    }

    /// Steps per unit of physical time, `floor(1/h)` (at least one).
    pub fn block_len(&self) -> usize {
        // guard against 1/h landing a hair below an integer
        ((1.0 / self.h) * (1.0 + 1e-12)).floor().max(1.0) as usize
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        let bad = |m: String| Err(DynamicsError::InvalidConfig(m));
        if !(self.h.is_finite() && self.h > 0.0) {
            return bad(format!("h must be positive and finite (got {})", self.h));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return bad(format!("beta must be positive and finite (got {})", self.beta));
        }
        if !(self.e_star.is_finite() && self.e_star > 0.0) {
            return bad(format!("e_star must be positive and finite (got {})", self.e_star));
        }
        if !(self.theta.is_finite() && self.theta > 0.0 && self.theta < self.beta) {
            return bad(format!(
                "theta must satisfy 0 < theta < beta (got theta = {}, beta = {})",
                self.theta, self.beta
            ));
        }
        if !self.e_h().is_finite() {
            return bad("E_h = e_star h^(-1/4) is not finite".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    Ula,
    Mala,
    Patched,
}

impl Kernel {
    pub const ALL: [Kernel; 3] = [Kernel::Ula, Kernel::Mala, Kernel::Patched];

    pub fn as_str(&self) -> &'static str {
        match self {
            Kernel::Ula => "ula",
            Kernel::Mala => "mala",
            Kernel::Patched => "patched",
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Kernel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ula" | "euler" => Ok(Kernel::Ula),
            "mala" => Ok(Kernel::Mala),
            "patched" | "patched-mala" => Ok(Kernel::Patched),
            other => Err(format!("unknown kernel `{other}` (expected ula, mala or patched)")),
        }
    }
}
