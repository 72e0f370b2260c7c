use nalgebra::DVector;
use proptest::prelude::*;
use vmlab_core::integrators::{integrate, step_cn, step_lm, step_vm, Scheme, SolverConfig};
use vmlab_core::objectives::{make_objective, Family, QuadraticSpec};
use vmlab_core::quadratic_lg::{closed_form_cn, eigenmodes};
use vmlab_core::Schedule;

fn vec_strategy(n: usize) -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(-2.0..2.0f64, n).prop_map(DVector::from_vec)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // Setting a coefficient to zero builds the very same linear system, so
    // the results must agree bit for bit.
    #[test]
    fn schemes_degenerate_exactly(
        fam in 0usize..4,
        x in vec_strategy(4),
        x_prev in vec_strategy(4),
        gamma in 1e-3..0.5f64,
        beta in 0.2..3.0f64,
        alpha in 0.0..2.0f64,
    ) {
        let spec = QuadraticSpec::Spectrum(vec![3.5, 4.0, 6.0, 12.0]);
        let obj = make_objective(Family::ALL[fam], &spec).unwrap();
        let vm = step_vm(obj.as_ref(), &x, &x_prev, gamma, beta, 0.0, alpha).unwrap();
        let lm = step_lm(obj.as_ref(), &x, gamma, beta, alpha).unwrap();
        prop_assert_eq!(vm, lm);
        let lm0 = step_lm(obj.as_ref(), &x, gamma, beta, 0.0).unwrap();
        let cn = step_cn(obj.as_ref(), &x, gamma, beta).unwrap();
        prop_assert_eq!(lm0, cn);
    }
}

fn cn_error(gamma: f64) -> f64 {
    let obj = make_objective(Family::Quadratic, &QuadraticSpec::Spectrum(vec![0.1, 10.0])).unwrap();
    let x0 = DVector::from_vec(vec![1.0, -1.0]);
    let cfg = SolverConfig::at_rest(Scheme::CN, gamma, 1.0, 20.0, x0.clone());
    let tr = integrate(obj.as_ref(), &Schedule::Zero, &Schedule::Zero, &cfg).unwrap();
    tr.times.iter().zip(&tr.states).map(|(&t, x)| (x - &x0 * closed_form_cn(1.0, 1.0, t)).norm()).fold(0.0, f64::max)
}

#[test]
fn cn_scheme_is_first_order() {
    let (e1, e2, e3) = (cn_error(0.1), cn_error(0.05), cn_error(0.025));
    assert!(e1 <= 0.05 * 2f64.sqrt(), "{e1}");
    for r in [e1 / e2, e2 / e3] {
        assert!((1.7..=2.3).contains(&r), "ratio {r}");
    }
}

#[test]
fn quadratic_vm_splits_into_scalar_modes() {
    let spec = QuadraticSpec::Matrix(vec![vec![2.0, 0.5, 0.0], vec![0.5, 1.0, 0.3], vec![0.0, 0.3, 3.0]]);
    let obj = make_objective(Family::Quadratic, &spec).unwrap();
    let eps = Schedule::power(0.3, 2.0);
    let alpha = Schedule::power(0.5, 1.0);
    let x0 = DVector::from_vec(vec![1.0, -0.5, 0.25]);
    let v0 = DVector::from_vec(vec![0.2, 0.0, -0.1]);
    let cfg = SolverConfig { gamma: 0.02, beta: 1.3, horizon: 5.0, x0: x0.clone(), v0: v0.clone(), scheme: Scheme::VM };
    let tr = integrate(obj.as_ref(), &eps, &alpha, &cfg).unwrap();

    let dec = eigenmodes(&spec, 1.3, &eps, &alpha, &x0, &v0).unwrap();
    let per_mode: Vec<Vec<f64>> = dec.modes.iter().map(|m| m.integrate(Scheme::VM, 0.02, 5.0).unwrap().1).collect();
    for (k, x) in tr.states.iter().enumerate() {
        let y: Vec<f64> = per_mode.iter().map(|v| v[k]).collect();
        assert!((dec.reconstruct(&y) - x).norm() <= 1e-10, "step {k}");
    }
}

#[test]
fn vm_approaches_cn_as_mass_vanishes() {
    let obj = make_objective(Family::Quadratic, &QuadraticSpec::Spectrum(vec![0.1, 10.0])).unwrap();
    let x0 = DVector::from_vec(vec![1.0, 1.0]);
    let cn = integrate(
        obj.as_ref(),
        &Schedule::Zero,
        &Schedule::Zero,
        &SolverConfig::at_rest(Scheme::CN, 0.01, 1.0, 10.0, x0.clone()),
    )
    .unwrap();
    let gaps: Vec<f64> = [1.0, 0.1, 0.01]
        .iter()
        .map(|&e0| {
            let cfg = SolverConfig::at_rest(Scheme::VM, 0.01, 1.0, 10.0, x0.clone());
            let vm = integrate(obj.as_ref(), &Schedule::power(e0, 1.0), &Schedule::Zero, &cfg).unwrap();
            vm.states.iter().zip(&cn.states).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
        })
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
}

#[test]
fn initial_velocity_enters_through_backward_difference() {
    let obj = make_objective(Family::Quadratic, &QuadraticSpec::Spectrum(vec![1.0])).unwrap();
    let cfg = SolverConfig {
        gamma: 0.1,
        beta: 1.0,
        horizon: 0.1,
        x0: DVector::from_element(1, 1.0),
        v0: DVector::from_element(1, 2.0),
        scheme: Scheme::VM,
    };
    let tr = integrate(obj.as_ref(), &Schedule::constant(0.5), &Schedule::Zero, &cfg).unwrap();
    // (ε/γ + βλ)z = (ε/γ)γv0 − γλx0 with ε/γ = 5: 6z = 1 − 0.1
    assert!((tr.states[1][0] - (1.0 + 0.9 / 6.0)).abs() < 1e-15);
    assert_eq!(tr.velocities[0][0], 2.0);
}
