use proptest::prelude::*;
use vmlab_core::schedules::{check_a31, check_a35, check_a42, check_a46, CheckGrid, Integrability, Status};
use vmlab_core::Schedule;

proptest! {
    #[test]
    fn power_derivatives_match_central_differences(c0 in 0.01..5.0f64, a in 0.0..4.0f64, t in 0.0..50.0f64) {
        let s = Schedule::power(c0, a);
        let h = 1e-4 * (1.0 + t);
        let jet = s.jet(t).unwrap();
        for order in 1..=3 {
            let fd = (s.eval(t + h, order - 1).unwrap() - s.eval(t - h, order - 1).unwrap()) / (2.0 * h);
            let scale = jet[order - 1].abs().max(jet[order].abs()).max(1e-12);
            prop_assert!((jet[order] - fd).abs() <= 1e-5 * scale, "order {} at {}: {} vs {}", order, t, jet[order], fd);
        }
    }

    #[test]
    fn power_schedules_are_non_increasing(c0 in 0.01..5.0f64, a in 0.0..4.0f64, t in 0.0..100.0f64, dt in 0.0..10.0f64) {
        let s = Schedule::power(c0, a);
        prop_assert!(s.value(t + dt) <= s.value(t));
        prop_assert!(s.slope(t) <= 0.0);
    }
}

#[test]
fn tabulated_schedule_matches_its_source_on_the_grid() {
    let times: Vec<f64> = (0..=40).map(|k| 0.25 * k as f64).collect();
    let tab = Schedule::tabulate(times.clone(), |t| 0.5 / (t + 1.0)).unwrap();
    for &t in &times {
        assert!((tab.value(t) - 0.5 / (t + 1.0)).abs() < 1e-15);
    }
    assert_eq!(tab.integrability(), Integrability::Unknown);
    assert_eq!(tab.value(100.0), tab.value(10.0));
}

#[test]
fn power_family_assumption_verdicts() {
    let grid = CheckGrid::geometric(0.01, 1e3);
    let r = check_a31(&Schedule::power(0.5, 1.0), &Schedule::power(0.2, 2.0), &grid).unwrap();
    assert_eq!(r.status, Status::Holds);
    assert_eq!(r.c1, Some(1.0));
    assert!((r.c2.unwrap() - 0.4).abs() < 1e-12);
    let r = check_a31(&Schedule::power(1.0, 3.0), &Schedule::power(1.0, 1.0), &grid).unwrap();
    assert_eq!(r.status, Status::Violated);

    assert!(check_a35(&Schedule::power(1.0, 2.0), &Schedule::power(1.0, 1.0), &grid).unwrap().holds());

    let ok = check_a42(&Schedule::constant(0.1), &Schedule::Zero, 1.0, 1.0, &grid).unwrap();
    assert!(ok.holds());
    assert!((ok.threshold.unwrap() - 0.25).abs() < 1e-12);
    assert!(!check_a42(&Schedule::constant(0.3), &Schedule::Zero, 1.0, 1.0, &grid).unwrap().holds());

    assert!(check_a46(&Schedule::power(1.0, 1.0), &Schedule::constant(1.0)).holds());
    assert!(!check_a46(&Schedule::constant(1.0), &Schedule::Zero).holds());
}
