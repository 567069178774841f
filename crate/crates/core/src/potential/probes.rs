use super::PotentialError;

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Radical inverse of `index` in the given base.
fn radical_inverse(mut index: u64, base: u32) -> f64 {
    let b = base as f64;
    let mut inv = 1.0 / b;
    let mut out = 0.0;
    while index > 0 {
        out += (index % base as u64) as f64 * inv;
        index /= base as u64;
        inv /= b;
    }
    out
}

/// The `n` first points (starting at index 1) of the Halton sequence in
/// `[0,1)^dim`.
pub fn halton(n: usize, dim: usize) -> Vec<Vec<f64>> {
    assert!(dim <= PRIMES.len(), "halton: at most {} dimensions", PRIMES.len());
    (1..=n as u64)
        .map(|i| (0..dim).map(|d| radical_inverse(i, PRIMES[d])).collect())
        .collect()
}

/// Axis-aligned box of probe points.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ProbeBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, PotentialError> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(PotentialError::InvalidInput(
                "probe box bounds must have equal, positive length".into(),
            ));
        }
        if lower.iter().chain(&upper).any(|v| !v.is_finite()) {
            return Err(PotentialError::NonFinite("probe box bound".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| l >= u) {
            return Err(PotentialError::InvalidInput(
                "probe box lower bounds must be below upper bounds".into(),
            ));
        }
        Ok(Self { lower, upper })
    }

    pub fn cube(dim: usize, lower: f64, upper: f64) -> Self {
        Self {
            lower: vec![lower; dim],
            upper: vec![upper; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Deterministic low-discrepancy probe set. In one dimension this is the
    /// van der Corput sequence together with both end points.
    pub fn points(&self, n: usize) -> Vec<Vec<f64>> {
        let mut pts: Vec<Vec<f64>> = halton(n.saturating_sub(2), self.dim())
            .into_iter()
            .map(|u| self.map_unit(&u))
            .collect();
        pts.push(self.lower.clone());
        pts.push(self.upper.clone());
        pts
    }

    fn map_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(t, (l, h))| l + t * (h - l))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn van_der_corput_prefix() {
        let pts = halton(4, 1);
        let flat: Vec<f64> = pts.into_iter().map(|p| p[0]).collect();
        assert_eq!(flat, vec![0.5, 0.25, 0.75, 0.125]);
    }

    #[test]
    fn probe_points_are_deterministic_and_inside() {
        let b = ProbeBox::new(vec![-5.0, 0.0], vec![5.0, 2.0]).unwrap();
        let a = b.points(200);
        assert_eq!(a, b.points(200));
        assert_eq!(a.len(), 200);
        for p in &a {
            assert!((-5.0..=5.0).contains(&p[0]) && (0.0..=2.0).contains(&p[1]));
        }
    }

    #[test]
    fn rejects_degenerate_boxes() {
        assert!(ProbeBox::new(vec![1.0], vec![1.0]).is_err());
        assert!(ProbeBox::new(vec![0.0], vec![f64::INFINITY]).is_err());
        assert!(ProbeBox::new(vec![0.0, 1.0], vec![2.0]).is_err());
    }
}
