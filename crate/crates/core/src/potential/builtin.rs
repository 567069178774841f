use super::{Potential, PotentialError};

/// Names accepted by [`builtin_potential`].
pub const FAMILIES: [&str; 4] = ["quadratic", "quartic", "even-power", "double-well-confined"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// `U(x) = 1 + |x|^2 / 2`.
    Quadratic,
    /// `U(x) = 1 + sum x_i^4 / 4`.
    Quartic,
    /// `U(x) = 1 + sum x_i^(2m) / (2m)`.
    EvenPower { m: u32 },
    /// `U(x) = 1 + (x^2 - a^2)^2 / 4`, one-dimensional.
    DoubleWellConfined { a: f64 },
}

/// One of the reference potentials. All of them are shifted by `+1` so that
/// `U >= 1` holds everywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct Builtin {
    family: Family,
    dim: usize,
    name: String,
}

/// Builds a reference potential.
///
/// `params` depends on the family: none for `quadratic` and `quartic`,
/// `[m]` (integer `m >= 1`) for `even-power`, `[a]` for
/// `double-well-confined` (which is one-dimensional only).
pub fn builtin_potential(family: &str, params: &[f64], dim: usize) -> Result<Builtin, PotentialError> {
    if let Some(bad) = params.iter().find(|v| !v.is_finite()) {
        return Err(PotentialError::NonFinite(format!("parameter {bad} for `{family}`")));
    }
    let invalid = |reason: &str| PotentialError::InvalidParams {
        family: family.to_string(),
        reason: reason.to_string(),
    };
    if dim == 0 {
        return Err(invalid("dimension must be positive"));
    }
    let fam = match family {
        "quadratic" | "quartic" => {
            if !params.is_empty() {
                return Err(invalid("takes no parameters"));
            }
            if family == "quadratic" {
                Family::Quadratic
            } else {
                Family::Quartic
            }
        }
        "even-power" => {
            let [m] = params else {
                return Err(invalid("expects exactly one parameter m"));
            };
            if *m < 1.0 || m.fract() != 0.0 || *m > 64.0 {
                return Err(invalid("m must be an integer in 1..=64"));
            }
            Family::EvenPower { m: *m as u32 }
        }
        "double-well-confined" => {
            let [a] = params else {
                return Err(invalid("expects exactly one parameter a"));
            };
            if dim != 1 {
                return Err(invalid("is one-dimensional"));
            }
            Family::DoubleWellConfined { a: *a }
        }
        other => return Err(PotentialError::UnknownFamily(other.to_string())),
    };
    let name = match fam {
        Family::EvenPower { m } => format!("even-power(m={m})"),
        Family::DoubleWellConfined { a } => format!("double-well-confined(a={a})"),
        _ => family.to_string(),
    };
    let name = if dim > 1 { format!("{name}[{dim}d]") } else { name };
    Ok(Builtin { family: fam, dim, name })
}

impl Builtin {
    pub fn family(&self) -> Family {
        self.family
    }

    /// Half-exponent `m` of a separable `t^(2m)/(2m)` family.
    fn half_power(&self) -> Option<u32> {
        match self.family {
            Family::Quadratic => Some(1),
            Family::Quartic => Some(2),
            Family::EvenPower { m } => Some(m),
            Family::DoubleWellConfined { .. } => None,
        }
    }

    /// `k`-th derivative of the one-dimensional profile at `t`.
    fn profile_derivative(&self, k: u32, t: f64) -> f64 {
        match self.half_power() {
            Some(m) => {
                let n = 2 * m;
                if k > n {
                    return 0.0;
                }
                // d^k/dt^k t^n / n = (n-1)(n-2)...(n-k+1) t^(n-k)
                let coeff: f64 = (1..k).map(|j| (n - j) as f64).product();
                coeff * t.powi((n - k) as i32)
            }
            None => {
                let Family::DoubleWellConfined { a } = self.family else {
                    unreachable!()
                };
                let a2 = a * a;
                match k {
                    1 => t * (t * t - a2),
                    2 => 3.0 * t * t - a2,
                    3 => 6.0 * t,
                    4 => 6.0,
                    _ => 0.0,
                }
            }
        }
    }

    fn profile(&self, t: f64) -> f64 {
        match self.half_power() {
            Some(m) => {
                let n = 2 * m;
                t.powi(n as i32) / n as f64
            }
            None => {
                let Family::DoubleWellConfined { a } = self.family else {
                    unreachable!()
                };
                let d = t * t - a * a;
                0.25 * d * d
            }
        }
    }
}

impl Potential for Builtin {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        1.0 + x.iter().map(|&t| self.profile(t)).sum::<f64>()
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        for (o, &t) in out.iter_mut().zip(x) {
            *o = self.profile_derivative(1, t);
        }
    }

    fn hessian_form(&self, x: &[f64], eta: &[f64]) -> Option<f64> {
        Some(
            x.iter()
                .zip(eta)
                .map(|(&t, &e)| self.profile_derivative(2, t) * e * e)
                .sum(),
        )
    }

    fn laplacian(&self, x: &[f64]) -> Option<f64> {
        Some(x.iter().map(|&t| self.profile_derivative(2, t)).sum())
    }

    fn derivative_norm(&self, order: usize, x: &[f64]) -> Option<f64> {
        if !(2..=4).contains(&order) {
            return None;
        }
        // separable: every derivative tensor is diagonal
        let sq: f64 = x
            .iter()
            .map(|&t| self.profile_derivative(order as u32, t).powi(2))
            .sum();
        Some(sq.sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::finite_difference_gradient;

    #[test]
    fn quartic_at_two() {
        let p = builtin_potential("quartic", &[], 1).unwrap();
        assert_eq!(p.value(&[2.0]), 5.0);
        assert_eq!(p.grad_vec(&[2.0]), vec![8.0]);
    }

    #[test]
    fn quadratic_minimum() {
        let p = builtin_potential("quadratic", &[], 1).unwrap();
        assert_eq!(p.value(&[0.0]), 1.0);
        assert_eq!(p.grad_vec(&[0.0]), vec![0.0]);
    }

    #[test]
    fn even_power_three_at_one() {
        let p = builtin_potential("even-power", &[3.0], 1).unwrap();
        assert!((p.value(&[1.0]) - (1.0 + 1.0 / 6.0)).abs() < 1e-15);
        assert_eq!(p.grad_vec(&[1.0]), vec![1.0]);
    }

    #[test]
    fn double_well_has_minima_at_a() {
        let p = builtin_potential("double-well-confined", &[1.5], 1).unwrap();
        assert_eq!(p.value(&[1.5]), 1.0);
        assert_eq!(p.value(&[-1.5]), 1.0);
        assert_eq!(p.grad_vec(&[1.5]), vec![0.0]);
        assert!((p.value(&[0.0]) - (1.0 + 1.5f64.powi(4) / 4.0)).abs() < 1e-12);
    }

    #[test]
    fn multi_dimensional_quartic_sums_coordinates() {
        let p = builtin_potential("quartic", &[], 3).unwrap();
        assert_eq!(p.value(&[1.0, 2.0, 0.0]), 1.0 + 0.25 + 4.0);
        assert_eq!(p.grad_vec(&[1.0, 2.0, -1.0]), vec![1.0, 8.0, -1.0]);
        assert_eq!(p.laplacian(&[1.0, 2.0, 0.0]), Some(3.0 + 12.0));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            builtin_potential("sextic", &[], 1),
            Err(PotentialError::UnknownFamily(_))
        ));
        assert!(matches!(
            builtin_potential("even-power", &[f64::NAN], 1),
            Err(PotentialError::NonFinite(_))
        ));
        assert!(builtin_potential("even-power", &[2.5], 1).is_err());
        assert!(builtin_potential("even-power", &[], 1).is_err());
        assert!(builtin_potential("quartic", &[1.0], 1).is_err());
        assert!(builtin_potential("double-well-confined", &[1.0], 2).is_err());
        assert!(builtin_potential("quadratic", &[], 0).is_err());
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        let pots = [
            builtin_potential("quadratic", &[], 1).unwrap(),
            builtin_potential("quartic", &[], 1).unwrap(),
            builtin_potential("even-power", &[3.0], 1).unwrap(),
            builtin_potential("double-well-confined", &[1.2], 1).unwrap(),
            builtin_potential("quartic", &[], 2).unwrap(),
        ];
        for p in &pots {
            let bx = crate::potential::ProbeBox::cube(p.dim(), -4.0, 4.0);
            for x in bx.points(1000) {
                let g = p.grad_vec(&x);
                let fd = finite_difference_gradient(p, &x, 1e-3);
                for (a, b) in g.iter().zip(&fd) {
                    let scale = a.abs().max(1.0);
                    assert!(
                        (a - b).abs() <= 1e-6 * scale,
                        "{}: grad {a} vs fd {b} at {x:?}",
                        p.name()
                    );
                }
            }
        }
    }

    #[test]
    fn derivative_norms_follow_profile() {
        let p = builtin_potential("quartic", &[], 1).unwrap();
        assert_eq!(p.derivative_norm(2, &[2.0]), Some(12.0));
        assert_eq!(p.derivative_norm(3, &[2.0]), Some(12.0));
        assert_eq!(p.derivative_norm(4, &[2.0]), Some(6.0));
        assert_eq!(p.derivative_norm(5, &[2.0]), None);
        let q = builtin_potential("quadratic", &[], 1).unwrap();
        assert_eq!(q.derivative_norm(3, &[2.0]), Some(0.0));
    }
}
