//! Langevin-dynamics samplers and the diagnostics used to study their
//! convergence on potentials whose gradient is not globally Lipschitz.
//!
//! The crate is organised around five modules:
//!
//! * [`potential`]: the energy landscape `U`, reference potentials and a
//!   numerical spot check of the growth/regularity conditions the samplers
//!   are analysed under.
//! * [`dynamics`]: the forward Euler (ULA), MALA and patched-MALA kernels,
//!   the log-space acceptance engine, chain runners and coupled runs driven
//!   by shared random streams.
//! * [`oracle1d`]: a deterministic ground-truth engine for one-dimensional
//!   problems. It discretises the transition kernels on a quadrature grid and
//!   computes total-variation curves, stationary measures, exit probabilities
//!   and one-step expectations.
//! * [`diagnostics`]: probes for rejection-probability scaling, Lyapunov
//!   drift, Euler transience, minorization, geometric-ergodicity
//!   classification and the two-term total-variation decomposition.
//! * [`reporting`]: CSV, JSON and SVG emitters for curves and reports.
//!
//! ```
//! use mala_core::dynamics::{run_chain, Kernel, RunConfig};
//! use mala_core::potential::builtin_potential;
//!
//! let quartic = builtin_potential("quartic", &[], 1).unwrap();
//! let cfg = RunConfig::new(0.05, 1.0).with_seed(7).with_steps(1_000);
//! let summary = run_chain(&quartic, &[0.0], &cfg, Kernel::Mala, None).unwrap();
//! assert_eq!(summary.steps, 1_000);
//! assert!(summary.acceptance_rate.unwrap() > 0.9);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod dynamics;
pub mod oracle1d;
pub mod potential;
pub mod quadrature;
pub mod reporting;
pub mod rng;

pub use dynamics::{Kernel, RunConfig};
pub use potential::{builtin_potential, Potential};

/// Crate version, recorded in experiment manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Positions with any component beyond this magnitude count as diverged.
pub const DIVERGENCE_POSITION: f64 = 1e50;
/// Energies beyond this value count as diverged.
pub const DIVERGENCE_ENERGY: f64 = 1e100;
