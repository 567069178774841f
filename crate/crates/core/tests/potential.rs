use mala_core::potential::{
    builtin_potential, exponential_envelope_check, finite_difference_gradient, validate_assumptions, ClauseVerdict,
    ProbeBox,
};
use mala_core::Potential;
use proptest::prelude::*;

fn builtins() -> Vec<mala_core::potential::Builtin> {
    vec![
        builtin_potential("quadratic", &[], 2).unwrap(),
        builtin_potential("quartic", &[], 1).unwrap(),
        builtin_potential("quartic", &[], 3).unwrap(),
        builtin_potential("even-power", &[3.0], 2).unwrap(),
        builtin_potential("double-well-confined", &[1.5], 1).unwrap(),
    ]
}

#[test]
fn analytic_gradients_match_five_point_differences() {
    for p in builtins() {
        let pts = ProbeBox::cube(p.dim(), -3.0, 3.0).points(1000);
        for x in &pts {
            let g = p.grad_vec(x);
            let fd = finite_difference_gradient(&p, x, 1e-3);
            let scale = g.iter().map(|v| v.abs()).fold(1.0, f64::max);
            for (a, b) in g.iter().zip(&fd) {
                assert!((a - b).abs() <= 1e-6 * scale, "{} at {x:?}: {a} vs {b}", p.name());
            }
        }
    }
}

#[test]
fn quartic_satisfies_every_clause() {
    let p = builtin_potential("quartic", &[], 1).unwrap();
    let r = validate_assumptions(&p, 1.0, &ProbeBox::cube(1, -5.0, 5.0), 1000).unwrap();
    assert!(r.clauses.iter().all(|c| c.verdict == ClauseVerdict::Pass));
    let c = r.fitted_c().unwrap();
    assert!(c > 0.0 && c < 1.0, "c = {c}");
}

#[test]
fn validator_is_deterministic() {
    let p = builtin_potential("quartic", &[], 2).unwrap();
    let b = ProbeBox::cube(2, -4.0, 4.0);
    assert_eq!(
        validate_assumptions(&p, 1.0, &b, 300).unwrap(),
        validate_assumptions(&p, 1.0, &b, 300).unwrap()
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn builtins_are_at_least_one(x in -50.0f64..50.0, y in -50.0f64..50.0) {
        for p in builtins() {
            let pt: Vec<f64> = [x, y].iter().copied().cycle().take(p.dim()).collect();
            prop_assert!(p.value(&pt) >= 1.0);
        }
    }

    #[test]
    fn envelope_constant_is_translation_consistent(shift in -0.5f64..0.5, seed in 0usize..50) {
        let p = builtin_potential("quartic", &[], 1).unwrap();
        let base: Vec<(Vec<f64>, Vec<f64>)> = (0..200)
            .map(|i| {
                let t = ((i + seed) as f64 * 0.618_033_988_75).fract();
                let x = -2.0 + 4.0 * t;
                (vec![x], vec![x + 0.05])
            })
            .collect();
        let moved: Vec<(Vec<f64>, Vec<f64>)> = base
            .iter()
            .map(|(a, b)| (vec![a[0] + shift * 1e-3], vec![b[0] + shift * 1e-3]))
            .collect();
        let c0 = exponential_envelope_check(&p, &base).unwrap().constant;
        let c1 = exponential_envelope_check(&p, &moved).unwrap().constant;
        // probe resolution: the pair spacing times the largest |grad U| / U on the box
        prop_assert!((c0 - c1).abs() <= 0.05 * 8.0 / 5.0, "{c0} vs {c1}");
    }
}
