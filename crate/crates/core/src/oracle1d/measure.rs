use serde::Serialize;

use super::{coverage_tail, require_1d, Grid1D, OracleError};
use crate::potential::Potential;

/// Probability masses on the nodes of a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridMeasure {
    pub grid: Grid1D,
    pub masses: Vec<f64>,
}

impl GridMeasure {
    pub fn point_mass(grid: &Grid1D, index: usize) -> Result<Self, OracleError> {
        if index >= grid.len() {
            return Err(OracleError::InvalidStart { index, len: grid.len() });
        }
        let mut masses = vec![0.0; grid.len()];
        masses[index] = 1.0;
        Ok(Self {
            grid: grid.clone(),
            masses,
        })
    }

    pub fn total(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// `sum |m_i - n_i|`, so mutually singular measures are at distance 2.
    pub fn tv(&self, other: &GridMeasure) -> Result<f64, OracleError> {
        tv_masses(&self.masses, &other.masses)
    }

    pub fn expectation(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.grid
            .nodes
            .iter()
            .zip(&self.masses)
            .map(|(&x, &m)| if m == 0.0 { 0.0 } else { m * f(x) })
            .sum()
    }

    pub fn mean(&self) -> f64 {
        self.expectation(|x| x)
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.expectation(|x| (x - m) * (x - m))
    }

    /// Mass of the nodes with `U >= level`.
    pub fn mass_above(&self, p: &dyn Potential, level: f64) -> f64 {
        self.grid
            .nodes
            .iter()
            .zip(&self.masses)
            .filter(|(&x, _)| p.value(&[x]) >= level)
            .map(|(_, &m)| m)
            .sum()
    }
}

pub(crate) fn tv_masses(a: &[f64], b: &[f64]) -> Result<f64, OracleError> {
    if a.len() != b.len() {
        return Err(OracleError::DimensionMismatch(format!(
            "measures on {} and {} nodes",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum())
}

/// Masses proportional to `w_i exp(-beta U(x_i))`, optionally restricted to
/// `{U < e_h}` and renormalised.
pub fn stationary_measure(
    p: &dyn Potential,
    beta: f64,
    grid: &Grid1D,
    conditioned_to: Option<f64>,
) -> Result<GridMeasure, OracleError> {
    require_1d(p)?;
    if !(beta.is_finite() && beta > 0.0) {
        return Err(OracleError::InvalidGrid(format!("beta must be positive (got {beta})")));
    }
    coverage_tail(p, beta, grid)?;
    let us: Vec<f64> = grid.nodes.iter().map(|&x| p.value(&[x])).collect();
    let umin = us.iter().copied().fold(f64::INFINITY, f64::min);
    let mut masses: Vec<f64> = us
        .iter()
        .zip(&grid.weights)
        .map(|(&u, &w)| match conditioned_to {
            Some(e) if !(u < e) => 0.0,
            _ => w * (-beta * (u - umin)).exp(),
        })
        .collect();
    let z: f64 = masses.iter().sum();
    if !(z > 0.0) {
        return Err(OracleError::InvalidGrid(format!(
            "no grid node lies in {{U < {}}}",
            conditioned_to.unwrap_or(f64::NAN)
        )));
    }
    for m in &mut masses {
        *m /= z;
    }
    Ok(GridMeasure {
        grid: grid.clone(),
        masses,
    })
}
