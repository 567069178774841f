use serde::Serialize;

use super::{invalid, DiagnosticReport, DiagnosticsError, FittedConstant, Verdict};
use crate::potential::Potential;
use crate::reporting::{CurveSeries, Scale};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GeoVerdict {
    #[serde(rename = "NOT-GEOMETRIC")]
    NotGeometric,
    #[serde(rename = "GEOMETRIC-PLAUSIBLE")]
    GeometricPlausible,
    #[serde(rename = "INCONCLUSIVE")]
    Inconclusive,
}

impl From<GeoVerdict> for Verdict {
    fn from(v: GeoVerdict) -> Self {
        match v {
            GeoVerdict::NotGeometric => Verdict::NotGeometric,
            GeoVerdict::GeometricPlausible => Verdict::GeometricPlausible,
            GeoVerdict::Inconclusive => Verdict::Inconclusive,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifierReport {
    pub verdict: GeoVerdict,
    /// `2 beta / h`
    pub threshold: f64,
    /// Smallest `|grad U(x)| / |x|` over the outer half of the radii.
    pub min_ratio: f64,
    /// Largest ratio over the outer half of the radii.
    pub max_ratio: f64,
    pub radii: Vec<f64>,
    /// Minimum over rays at each radius (`NaN` where nothing was finite).
    pub ratios: Vec<f64>,
}

impl ClassifierReport {
    pub fn to_report(&self) -> Result<DiagnosticReport, DiagnosticsError> {
        let mut rep = DiagnosticReport::new("classify", self.verdict.into());
        let n = self.radii.len();
        rep.constants.push(FittedConstant::new(
            "min_ratio",
            self.min_ratio,
            "ray probes, outer half",
            n / 2,
        ));
        rep.constants
            .push(FittedConstant::new("threshold", self.threshold, "2 beta / h", 1));
        let pts: Vec<(f64, f64)> = self
            .radii
            .iter()
            .zip(&self.ratios)
            .filter(|(_, r)| r.is_finite() && **r > 0.0)
            .map(|(&a, &b)| (a, b))
            .collect();
        if pts.len() >= 2 {
            rep.curves.push(
                CurveSeries::new("|grad U(x)| / |x|", "radius", "ratio", pts)?.with_scales(Scale::Log, Scale::Log),
            );
        }
        Ok(rep)
    }
}

/// Unit directions: the coordinate axes (both signs) and the two main
/// diagonals.
fn rays(dim: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for i in 0..dim {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; dim];
            e[i] = s;
            out.push(e);
        }
    }
    if dim > 1 {
        let c = 1.0 / (dim as f64).sqrt();
        out.push(vec![c; dim]);
        out.push(vec![-c; dim]);
    }
    out
}

/// Compares `|grad U(x)| / |x|` at radii `10^(30 k / (n - 1))`,
/// `k = 0..n`, with `2 beta / h`. NOT-GEOMETRIC if the running minimum over
/// the outer half of the radii exceeds the threshold, GEOMETRIC-PLAUSIBLE
/// if the ratio stays below it there, INCONCLUSIVE otherwise.
pub fn geo_ergodicity_classifier(
    p: &dyn Potential,
    beta: f64,
    h: f64,
    ray_samples: usize,
) -> Result<ClassifierReport, DiagnosticsError> {
    if ray_samples < 8 {
        return Err(invalid(format!("need at least 8 radii per ray (got {ray_samples})")));
    }
    if !(beta > 0.0 && h > 0.0 && beta.is_finite() && h.is_finite()) {
        return Err(invalid("beta and h must be positive"));
    }
    let threshold = 2.0 * beta / h;
    let dirs = rays(p.dim());
    let radii: Vec<f64> = (0..ray_samples)
        .map(|k| 10f64.powf(30.0 * k as f64 / (ray_samples - 1) as f64))
        .collect();
    let ratios: Vec<f64> = radii
        .iter()
        .map(|&r| {
            dirs.iter()
                .filter_map(|d| {
                    let x: Vec<f64> = d.iter().map(|v| v * r).collect();
                    let g = p.grad_vec(&x);
                    let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
                    let q = gn / r;
                    q.is_finite().then_some(q)
                })
                .fold(f64::NAN, f64::min)
        })
        .collect();
    let outer: Vec<f64> = ratios[ray_samples / 2..]
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .collect();
    let min_ratio = outer.iter().copied().fold(f64::INFINITY, f64::min);
    let max_ratio = outer.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let verdict = if outer.len() < 2 {
        GeoVerdict::Inconclusive
    } else if min_ratio > threshold {
        GeoVerdict::NotGeometric
    } else if max_ratio < threshold {
        GeoVerdict::GeometricPlausible
    } else {
        GeoVerdict::Inconclusive
    };
    Ok(ClassifierReport {
        verdict,
        threshold,
        min_ratio,
        max_ratio,
        radii,
        ratios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::builtin_potential;

    #[test]
    fn quartic_is_never_geometric() {
        let p = builtin_potential("quartic", &[], 1).unwrap();
        for h in [1.0, 0.1, 1e-3, 1e-6] {
            assert_eq!(
                geo_ergodicity_classifier(&p, 1.0, h, 16).unwrap().verdict,
                GeoVerdict::NotGeometric
            );
        }
        let p2 = builtin_potential("quartic", &[], 3).unwrap();
        assert_eq!(
            geo_ergodicity_classifier(&p2, 1.0, 0.01, 16).unwrap().verdict,
            GeoVerdict::NotGeometric
        );
    }

    #[test]
    fn quadratic_thresholds() {
        let p = builtin_potential("quadratic", &[], 1).unwrap();
        let small = geo_ergodicity_classifier(&p, 1.0, 0.1, 16).unwrap();
        assert_eq!(small.verdict, GeoVerdict::GeometricPlausible);
        assert!((small.min_ratio - 1.0).abs() < 1e-12);
        assert_eq!(
            geo_ergodicity_classifier(&p, 1.0, 3.0, 16).unwrap().verdict,
            GeoVerdict::NotGeometric
        );
        assert!(geo_ergodicity_classifier(&p, 1.0, 0.1, 4).is_err());
    }

    #[test]
    fn verdict_depends_on_beta_over_h_only() {
        let p = builtin_potential("quadratic", &[], 1).unwrap();
        for (beta, h) in [(1.0, 0.1), (1.0, 3.0), (1.0, 2.0 + 1e-9)] {
            let a = geo_ergodicity_classifier(&p, beta, h, 12).unwrap().verdict;
            let b = geo_ergodicity_classifier(&p, 7.0 * beta, 7.0 * h, 12).unwrap().verdict;
            assert_eq!(a, b);
        }
    }
}
