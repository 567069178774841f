use mala_core::dynamics::{
    coupled_replicas, coupled_run, direct_log_ratio, g_function, log_acceptance, log_euler_density, log_target,
    run_chain_on_stream, run_replicas, Kernel, RunConfig,
};
use mala_core::potential::{builtin_potential, Potential};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn detailed_balance_identity(x in -4.0f64..4.0, y in -4.0f64..4.0, lh in -2.0f64..-0.5, beta in 0.5f64..4.0) {
        let p = builtin_potential("quartic", &[], 1).unwrap();
        let cfg = RunConfig::new(10f64.powf(lh), beta);
        let lhs = log_target(&p, beta, &[x]) + log_euler_density(&p, &cfg, &[x], &[y]).unwrap() + log_acceptance(&p, &cfg, &[x], &[y]);
        let rhs = log_target(&p, beta, &[y]) + log_euler_density(&p, &cfg, &[y], &[x]).unwrap() + log_acceptance(&p, &cfg, &[y], &[x]);
        prop_assert!((lhs - rhs).abs() <= 1e-10, "{lhs} vs {rhs}");
    }

    #[test]
    fn g_is_antisymmetric(x in -1e6f64..1e6, y in -1e6f64..1e6, z in -3.0f64..3.0, lh in -8.0f64..0.0) {
        let p = builtin_potential("quartic", &[], 2).unwrap();
        let cfg = RunConfig::new(10f64.powf(lh), 1.0);
        let (a, b) = ([x, z], [y, -z]);
        prop_assert!((g_function(&p, &cfg, &a, &b) + g_function(&p, &cfg, &b, &a)).abs() <= 1e-12);
    }

    #[test]
    fn g_matches_the_direct_ratio(x in -4.0f64..4.0, y in -4.0f64..4.0, lh in -3.0f64..-1.0) {
        let p = builtin_potential("quartic", &[], 1).unwrap();
        let cfg = RunConfig::new(10f64.powf(lh), 1.0);
        let d = direct_log_ratio(&p, &cfg, &[x], &[y]).unwrap();
        prop_assume!(d.is_finite());
        prop_assert!((-g_function(&p, &cfg, &[x], &[y]) - d).abs() <= 1e-8);
    }

    #[test]
    fn patched_tracks_mala_until_exit(x0 in -1.2f64..1.2, seed in 0u64..1_000, lh in -2.0f64..-0.7) {
        let p = builtin_potential("quartic", &[], 1).unwrap();
        let cfg = RunConfig::new(10f64.powf(lh), 1.0).with_seed(seed).with_steps(400);
        // the patched chain must start inside {U < E_h}
        prop_assume!(p.value(&[x0]) < cfg.e_h());
        let r = coupled_run(&p, &[x0], &cfg).unwrap();
        prop_assert!(r.consistent);
        if r.decoupled_at.is_none() {
            prop_assert_eq!(&r.mala_final, &r.patched_final);
        }
    }
}

#[test]
fn ula_one_step_law() {
    let p = builtin_potential("quartic", &[], 2).unwrap();
    let (h, beta) = (0.05, 2.0);
    let x = [0.7, -1.1];
    let cfg = RunConfig::new(h, beta).with_seed(11).with_steps(1);
    let n = 100_000u64;
    let ys: Vec<Vec<f64>> = (0..n)
        .map(|r| {
            run_chain_on_stream(&p, &x, &cfg, Kernel::Ula, r, None)
                .unwrap()
                .final_position
        })
        .collect();
    let var = 2.0 * h / beta;
    let g = [x[0].powi(3), x[1].powi(3)];
    for i in 0..2 {
        let mean = ys.iter().map(|y| y[i]).sum::<f64>() / n as f64;
        let expect = x[i] - h * g[i];
        let se = (var / n as f64).sqrt();
        assert!((mean - expect).abs() < 4.0 * se, "mean {i}: {mean} vs {expect}");
        let v = ys.iter().map(|y| (y[i] - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        // sd of the sample variance of a normal is var sqrt(2 / (n - 1))
        assert!(
            (v - var).abs() < 4.0 * var * (2.0 / (n - 1) as f64).sqrt(),
            "var {i}: {v} vs {var}"
        );
    }
    let cov = ys
        .iter()
        .map(|y| (y[0] - (x[0] - h * g[0])) * (y[1] - (x[1] - h * g[1])))
        .sum::<f64>()
        / n as f64;
    assert!(cov.abs() < 4.0 * var / (n as f64).sqrt(), "cov {cov}");
}

#[test]
fn replicas_do_not_depend_on_thread_count() {
    let p = builtin_potential("quartic", &[], 1).unwrap();
    let cfg = RunConfig::new(0.1, 1.0).with_seed(3).with_steps(500);
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = one.install(|| run_replicas(&p, &[0.5], &cfg, Kernel::Mala, 16).unwrap());
    let b = four.install(|| run_replicas(&p, &[0.5], &cfg, Kernel::Mala, 16).unwrap());
    assert_eq!(a, b);
    let c = one.install(|| coupled_replicas(&p, &[0.5], &cfg, 8).unwrap());
    let d = four.install(|| coupled_replicas(&p, &[0.5], &cfg, 8).unwrap());
    assert_eq!(c, d);
}

#[test]
fn mala_never_diverges_where_ula_does() {
    let p = builtin_potential("quartic", &[], 1).unwrap();
    let cfg = RunConfig::new(0.05, 1.0).with_seed(1).with_steps(2_000);
    let ula = run_chain_on_stream(&p, &[8.0], &cfg, Kernel::Ula, 0, None).unwrap();
    let mala = run_chain_on_stream(&p, &[8.0], &cfg, Kernel::Mala, 0, None).unwrap();
    assert!(ula.diverged_at.is_some());
    assert!(mala.diverged_at.is_none());
}
