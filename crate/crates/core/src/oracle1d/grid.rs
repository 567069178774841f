use serde::{Deserialize, Serialize};

use super::OracleError;
use crate::potential::Potential;
use crate::quadrature::CompositeRule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridRule {
    /// Uniform nodes with composite trapezoid weights.
    Trapezoid,
    /// Gauss-Legendre panels.
    GaussLegendre { panels: usize, order: usize },
}

/// Quadrature grid on `[a, b]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub bounds: (f64, f64),
    pub rule: GridRule,
}

impl Grid1D {
    /// `n` uniform nodes on `[a, b]` including both end points, trapezoid
    /// weights.
    pub fn uniform(a: f64, b: f64, n: usize) -> Result<Self, OracleError> {
        check_bounds(a, b)?;
        if n < 2 {
            return Err(OracleError::InvalidGrid("at least two nodes are required".into()));
        }
        let dx = (b - a) / (n - 1) as f64;
        let nodes: Vec<f64> = (0..n).map(|i| if i == n - 1 { b } else { a + dx * i as f64 }).collect();
        let mut weights = vec![dx; n];
        weights[0] = 0.5 * dx;
        weights[n - 1] = 0.5 * dx;
        Ok(Self {
            nodes,
            weights,
            bounds: (a, b),
            rule: GridRule::Trapezoid,
        })
    }

    /// Gauss-Legendre panels on `[a, b]`.
    pub fn gauss_legendre(a: f64, b: f64, panels: usize, order: usize) -> Result<Self, OracleError> {
        check_bounds(a, b)?;
        if panels == 0 || order == 0 {
            return Err(OracleError::InvalidGrid("panels and order must be positive".into()));
        }
        let r = CompositeRule::new(a, b, panels, order);
        Ok(Self {
            nodes: r.nodes,
            weights: r.weights,
            bounds: (a, b),
            rule: GridRule::GaussLegendre { panels, order },
        })
    }

    /// Uniform grid with the given spacing, widened from `[a, b]` by factors
    /// of 1.25 until it covers `1 - 1e-10` of `exp(-beta U)`.
    pub fn auto_cover(p: &dyn Potential, beta: f64, a: f64, b: f64, spacing: f64) -> Result<Self, OracleError> {
        let (mut lo, mut hi) = (a, b);
        for _ in 0..40 {
            let n = ((hi - lo) / spacing).round() as usize + 1;
            let g = Self::uniform(lo, hi, n.max(2))?;
            match super::coverage_tail(p, beta, &g) {
                Ok(_) => return Ok(g),
                Err(_) => {
                    let mid = 0.5 * (lo + hi);
                    let half = 0.625 * (hi - lo);
                    lo = mid - half;
                    hi = mid + half;
                }
            }
        }
        Err(OracleError::Coverage {
            tail: f64::NAN,
            suggested: (lo, hi),
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Largest gap between consecutive nodes.
    pub fn max_spacing(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Index of the node nearest to `x`.
    pub fn nearest(&self, x: f64) -> usize {
        let i = self.nodes.partition_point(|&v| v < x);
        if i == 0 {
            0
        } else if i == self.nodes.len() {
            self.nodes.len() - 1
        } else if (x - self.nodes[i - 1]) <= (self.nodes[i] - x) {
            i - 1
        } else {
            i
        }
    }

    /// Half-open index range of nodes inside `[lo, hi]`.
    pub fn index_range(&self, lo: f64, hi: f64) -> (usize, usize) {
        let a = self.nodes.partition_point(|&v| v < lo);
        let b = self.nodes.partition_point(|&v| v <= hi);
        (a, b.max(a))
    }
}

fn check_bounds(a: f64, b: f64) -> Result<(), OracleError> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(OracleError::InvalidGrid(format!(
            "bounds must be finite with a < b (got [{a}, {b}])"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_weights_sum_to_length() {
        for n in [2, 3, 101, 4001] {
            let g = Grid1D::uniform(-6.0, 6.0, n).unwrap();
            let s: f64 = g.weights.iter().sum();
            assert!((s - 12.0).abs() <= 1e-12 * 12.0, "n={n}: {s}");
            assert!(g.nodes.windows(2).all(|w| w[0] < w[1]));
            assert_eq!(g.nodes[n - 1], 6.0);
        }
    }

    #[test]
    fn gauss_legendre_grid() {
        let g = Grid1D::gauss_legendre(-1.0, 3.0, 8, 6).unwrap();
        assert_eq!(g.len(), 48);
        assert!((g.weights.iter().sum::<f64>() - 4.0).abs() < 1e-13);
        assert!(g.nodes.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn nearest_node() {
        let g = Grid1D::uniform(0.0, 1.0, 11).unwrap();
        assert_eq!(g.nearest(-5.0), 0);
        assert_eq!(g.nearest(0.31), 3);
        assert_eq!(g.nearest(0.36), 4);
        assert_eq!(g.nearest(7.0), 10);
        assert_eq!(g.index_range(0.25, 0.5), (3, 6));
    }

    #[test]
    fn invalid_grids() {
        assert!(Grid1D::uniform(1.0, 1.0, 10).is_err());
        assert!(Grid1D::uniform(0.0, 1.0, 1).is_err());
        assert!(Grid1D::uniform(0.0, f64::INFINITY, 10).is_err());
    }
}
