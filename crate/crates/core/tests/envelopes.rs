use nalgebra::DVector;
use vmlab_core::bounds::{
    distances, envelope_c35, envelope_t32, envelope_t36_shape, fit_constant, BoundInputs, TheoremId,
};
use vmlab_core::integrators::{integrate, Scheme, SolverConfig};
use vmlab_core::objectives::{make_objective, Family, QuadraticSpec};
use vmlab_core::quadrature::QuadratureRule;
use vmlab_core::schedules::{check_a31, CheckGrid};
use vmlab_core::Schedule;

const RULE: QuadratureRule = QuadratureRule::AdaptiveSimpson { tol: 1e-10 };

#[test]
fn explicit_envelopes_cover_quadratic_runs() {
    let spec = QuadraticSpec::log_spaced(10, 100.0, 10.0);
    let obj = make_objective(Family::Quadratic, &spec).unwrap();
    let x0 = DVector::from_fn(10, |i, _| if i % 2 == 0 { 1.0 } else { -1.0 });
    let (gamma, beta) = (0.05, 1.0);
    for eps in [Schedule::power(1.0, 1.0), Schedule::power(0.5, 2.0)] {
        let cfg = SolverConfig::at_rest(Scheme::VM, gamma, beta, 30.0, x0.clone());
        let tr = integrate(obj.as_ref(), &eps, &Schedule::Zero, &cfg).unwrap();
        let xn: Vec<DVector<f64>> = tr.times.iter().map(|&t| &x0 * (-t / beta).exp()).collect();
        let d = distances(&tr.states, &xn).unwrap();

        let a31 = check_a31(&eps, &Schedule::Zero, &CheckGrid::geometric(gamma, 30.0)).unwrap();
        assert!(a31.holds());
        let inputs = BoundInputs {
            u0: obj.value(&x0),
            mu: obj.exact_modulus().unwrap(),
            beta,
            c1: a31.c1.unwrap(),
            c2: a31.c2.unwrap(),
            eps0: eps.initial(),
            v0_norm: 0.0,
        };
        let t32 = envelope_t32(&eps, &inputs, &tr.times, RULE).unwrap();
        let slack = 10.0 * gamma * (1.0 + x0.norm());
        assert!(d.iter().zip(&t32.values).all(|(d, b)| *d <= b + slack));
        if inputs.c1 < 2.0 / beta {
            let c35 = envelope_c35(&eps, &inputs, &tr.times).unwrap();
            assert!(c35.values.iter().zip(&t32.values).all(|(c, t)| c >= t));
        }
    }
}

#[test]
fn fitted_shape_constant_is_grid_stable() {
    let spec = QuadraticSpec::Spectrum((0..6).map(|i| 3.1 + i as f64).collect());
    let obj = make_objective(Family::GaussQuad, &spec).unwrap();
    let eps = Schedule::power(1.0, 2.0);
    let alpha = Schedule::power(1.0, 2.0);
    let x0 = DVector::from_element(6, 1.0);
    let fit = |gamma: f64| {
        let vm =
            integrate(obj.as_ref(), &eps, &alpha, &SolverConfig::at_rest(Scheme::VM, gamma, 1.0, 20.0, x0.clone()))
                .unwrap();
        let cn =
            integrate(obj.as_ref(), &eps, &alpha, &SolverConfig::at_rest(Scheme::CN, gamma, 1.0, 20.0, x0.clone()))
                .unwrap();
        let d = distances(&vm.states, &cn.states).unwrap();
        let shape = envelope_t36_shape(TheoremId::T36N, &eps, &alpha, 1.0, &vm.times, RULE);
        fit_constant(&d, &shape.values).unwrap()
    };
    let (c1, c2) = (fit(0.1), fit(0.05));
    assert!((c2 / c1 - 1.0).abs() <= 0.2, "{c1} vs {c2}");
}
