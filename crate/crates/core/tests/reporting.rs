use mala_core::dynamics::{trajectory_header, TRAJECTORY_COLUMNS};
use mala_core::reporting::{csv_string, parse_csv, svg_string, to_sorted_json, CurveSeries, Scale};
use proptest::prelude::*;

#[test]
fn golden_headers() {
    let a = CurveSeries::indexed("tv", "block", "total variation", &[1.0, 0.5]).unwrap();
    let b = CurveSeries::indexed("floor", "block", "total variation", &[0.1, 0.1]).unwrap();
    let s = csv_string(&[a, b]).unwrap();
    assert_eq!(s.lines().next().unwrap(), "block,tv,floor");
    assert_eq!(
        TRAJECTORY_COLUMNS,
        ["step", "U", "accepted", "log_ratio", "exited_level_set"]
    );
    assert_eq!(trajectory_header(2), "step,x0,x1,U,accepted,log_ratio,exited_level_set");
}

#[test]
fn json_keys_are_sorted() {
    #[derive(serde::Serialize)]
    struct S {
        zeta: u8,
        alpha: u8,
    }
    let s = to_sorted_json(&S { zeta: 1, alpha: 2 }).unwrap();
    assert!(s.find("alpha").unwrap() < s.find("zeta").unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn csv_round_trips_exactly(ys in proptest::collection::vec(-1e300f64..1e300, 1..50)) {
        let c = CurveSeries::indexed("y", "k", "v", &ys).unwrap();
        let t = parse_csv(&csv_string(std::slice::from_ref(&c)).unwrap()).unwrap();
        prop_assert_eq!(t.column("y").unwrap(), ys);
    }

    #[test]
    fn writers_are_deterministic(ys in proptest::collection::vec(1e-12f64..1.0, 2..40)) {
        let c = CurveSeries::indexed("y", "k", "v", &ys).unwrap().with_scales(Scale::Linear, Scale::Log);
        prop_assert_eq!(svg_string(std::slice::from_ref(&c), "t").unwrap(), svg_string(std::slice::from_ref(&c), "t").unwrap());
        prop_assert_eq!(csv_string(std::slice::from_ref(&c)).unwrap(), csv_string(std::slice::from_ref(&c)).unwrap());
    }
}
