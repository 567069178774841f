//! Deterministic ground truth for one-dimensional problems.
//!
//! The transition kernels are discretised on a quadrature grid: the entry
//! for source node `x_i` and destination `x_j` is `q_h(x_i, x_j) a(x_i, x_j) w_j`
//! and the rejected mass sits on the diagonal as an atom. Iterating these
//! matrices gives total-variation curves and exit probabilities without any
//! Monte-Carlo noise.

mod curves;
mod dump;
mod expectation;
mod grid;
mod kernel;
mod measure;

pub use curves::{exit_probability, kernel_power_tv, propagate_blocks, sde_reference_distribution};
pub use dump::{decode_kernel_dump, DumpHeader, KernelDump, DUMP_FORMAT};
pub use expectation::{acceptance_kinks, expectation_under_step, log_expectation_under_step, Observable};
pub use grid::{Grid1D, GridRule};
pub use kernel::{build_kernel, build_kernel_with, BuildOptions, KernelMatrix};
pub(crate) use measure::tv_masses;
pub use measure::{stationary_measure, GridMeasure};

use thiserror::Error;

use crate::dynamics::DynamicsError;
use crate::potential::Potential;

/// Required coverage of `exp(-beta U)` by a grid.
pub const COVERAGE_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid misses an estimated {tail:e} of the target mass; try bounds [{}, {}]", suggested.0, suggested.1)]
    Coverage { tail: f64, suggested: (f64, f64) },
    #[error("proposal mass {leak:e} leaks off the grid from x = {x} (density-weighted limit {max:e})")]
    Truncation { x: f64, leak: f64, max: f64 },
    #[error("grid spacing {spacing} does not resolve the proposal scale {scale} (need scale >= 3 spacing)")]
    Resolution { spacing: f64, scale: f64 },
    #[error("negative transition mass {value:e} in row {row}")]
    NegativeEntry { row: usize, value: f64 },
    #[error("start node has U = {u} >= E_h = {e_h}")]
    OutsideLevelSet { u: f64, e_h: f64 },
    #[error("node index {index} out of range for a grid of {len} nodes")]
    InvalidStart { index: usize, len: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("expectation not resolvable on grid: {0}")]
    NotResolvable(String),
    #[error("the oracle handles one-dimensional potentials only (got dimension {0})")]
    NotOneDimensional(usize),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("malformed kernel dump: {0}")]
    Decode(String),
}

pub(crate) fn require_1d(p: &dyn Potential) -> Result<(), OracleError> {
    if p.dim() != 1 {
        return Err(OracleError::NotOneDimensional(p.dim()));
    }
    Ok(())
}

fn tail_fraction(p: &dyn Potential, beta: f64, grid: &Grid1D) -> f64 {
    let us: Vec<f64> = grid.nodes.iter().map(|&x| p.value(&[x])).collect();
    let umin = us.iter().copied().fold(f64::INFINITY, f64::min);
    let z: f64 = us
        .iter()
        .zip(&grid.weights)
        .map(|(u, w)| w * (-beta * (u - umin)).exp())
        .sum();
    let (a, b) = grid.bounds;
    // Laplace-type tail estimate exp(-beta U(e)) / (beta |U'(e)|) at each end
    let tail = |e: f64, outward: f64| {
        let slope = p.grad_vec(&[e])[0] * outward;
        if !(slope > 0.0) {
            return f64::INFINITY;
        }
        (-beta * (p.value(&[e]) - umin)).exp() / (beta * slope)
    };
    (tail(a, -1.0) + tail(b, 1.0)) / z
}

/// Estimated fraction of `exp(-beta U)` outside the grid; errors with
/// suggested bounds when it exceeds [`COVERAGE_TOL`].
pub(crate) fn coverage_tail(p: &dyn Potential, beta: f64, grid: &Grid1D) -> Result<f64, OracleError> {
    let t = tail_fraction(p, beta, grid);
    if t <= COVERAGE_TOL {
        return Ok(t);
    }
    let (a, b) = grid.bounds;
    let (mut lo, mut hi) = (a, b);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let half = 0.625 * (hi - lo);
        lo = mid - half;
        hi = mid + half;
        if let Ok(g) = Grid1D::uniform(lo, hi, 2001) {
            if tail_fraction(p, beta, &g) <= COVERAGE_TOL {
                break;
            }
        }
    }
    Err(OracleError::Coverage {
        tail: t,
        suggested: (lo, hi),
    })
}
