use mala_core::dynamics::{Kernel, RunConfig};
use mala_core::oracle1d::{
    build_kernel, decode_kernel_dump, kernel_power_tv, propagate_blocks, stationary_measure, Grid1D, GridMeasure,
};
use mala_core::potential::builtin_potential;
use proptest::prelude::*;

fn kinds() -> [Kernel; 3] {
    [Kernel::Ula, Kernel::Mala, Kernel::Patched]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn rows_are_stochastic_and_nonnegative(h in 0.02f64..0.1, nodes in 301usize..701, k in 0usize..3) {
        let p = builtin_potential("quartic", &[], 1).unwrap();
        let cfg = RunConfig::new(h, 1.0).with_level(4.0);
        let g = Grid1D::uniform(-4.0, 4.0, nodes).unwrap();
        let m = build_kernel(&p, &cfg, &g, kinds()[k]).unwrap();
        for i in 0..m.len() {
            prop_assert!((m.row_sum(i) - 1.0).abs() <= 1e-12, "row {i}: {}", m.row_sum(i));
            let (_, band) = m.band(i);
            prop_assert!(band.iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn tv_is_non_increasing(h in 0.03f64..0.2, start in -2.0f64..2.0) {
        let p = builtin_potential("quartic", &[], 1).unwrap();
        let cfg = RunConfig::new(h, 1.0);
        let g = Grid1D::uniform(-4.0, 4.0, 401).unwrap();
        let m = build_kernel(&p, &cfg, &g, Kernel::Mala).unwrap();
        let mu = stationary_measure(&p, 1.0, &g, None).unwrap();
        let tv = kernel_power_tv(&m, g.nearest(start), 60, &mu).unwrap();
        prop_assert!(tv.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }
}

#[test]
fn stationarity_and_matrix_detailed_balance() {
    let p = builtin_potential("quartic", &[], 1).unwrap();
    let g = Grid1D::uniform(-6.0, 6.0, 4001).unwrap();
    let mu = stationary_measure(&p, 1.0, &g, None).unwrap();
    for h in [0.1, 0.05] {
        let m = build_kernel(&p, &RunConfig::new(h, 1.0), &g, Kernel::Mala).unwrap();
        let mut next = vec![0.0; g.len()];
        m.apply(&mu.masses, &mut next);
        let moved = GridMeasure {
            masses: next,
            ..mu.clone()
        };
        assert!(moved.tv(&mu).unwrap() <= 1e-6);
        for i in (0..g.len()).step_by(37) {
            let (lo, band) = m.band(i);
            for j in (lo..lo + band.len()).step_by(5) {
                let a = mu.masses[i] * m.entry(i, j);
                let b = mu.masses[j] * m.entry(j, i);
                assert!((a - b).abs() <= 1e-8 * a.max(b) + 1e-20, "({i},{j}): {a} vs {b}");
            }
        }
    }
}

#[test]
fn grid_refinement_moves_tv_by_little() {
    let p = builtin_potential("quartic", &[], 1).unwrap();
    let cfg = RunConfig::new(0.05, 1.0);
    let curve = |n: usize| {
        let g = Grid1D::uniform(-4.0, 4.0, n).unwrap();
        let m = build_kernel(&p, &cfg, &g, Kernel::Mala).unwrap();
        let mu = stationary_measure(&p, 1.0, &g, None).unwrap();
        propagate_blocks(&m, g.nearest(1.0), cfg.block_len(), 10, &mu).unwrap()
    };
    let (a, b) = (curve(1601), curve(3201));
    for (k, (x, y)) in a.iter().zip(&b).enumerate() {
        assert!((x - y).abs() <= 1e-4, "block {}: {x} vs {y}", k + 1);
    }
}

#[test]
fn dump_round_trip() {
    let p = builtin_potential("quartic", &[], 1).unwrap();
    let g = Grid1D::uniform(-3.0, 3.0, 121).unwrap();
    let m = build_kernel(&p, &RunConfig::new(0.1, 1.0).with_level(3.0), &g, Kernel::Patched).unwrap();
    let bytes = m.to_dump("abc");
    let d = decode_kernel_dump(&bytes).unwrap();
    assert_eq!(d.header.n, 121);
    assert_eq!(d.header.config_hash, "abc");
    assert_eq!(d.matrix, m.dense());
    assert_eq!(d.atom, m.atom);
    assert!(decode_kernel_dump(&bytes[..bytes.len() - 1]).is_err());
}
