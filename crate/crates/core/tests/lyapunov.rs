use nalgebra::DVector;
use vmlab_core::integrators::{integrate, lyapunov_series, Scheme, SolverConfig, Trajectory};
use vmlab_core::objectives::{make_objective, Family, Objective, QuadraticSpec};
use vmlab_core::Schedule;

fn spec(family: Family) -> QuadraticSpec {
    let QuadraticSpec::Spectrum(l) = QuadraticSpec::log_spaced(10, 100.0, 10.0) else { unreachable!() };
    match family {
        // keeps the Gaussian bump's curvature deficit away from zero
        Family::GaussQuad => QuadraticSpec::Spectrum(l.iter().map(|v| v + 3.0).collect()),
        _ => QuadraticSpec::Spectrum(l),
    }
}

fn run(family: Family, eps: &Schedule) -> (Box<dyn Objective>, Trajectory) {
    let obj = make_objective(family, &spec(family)).unwrap();
    let x0 = DVector::from_fn(10, |i, _| if i % 3 == 0 { -1.0 } else { 1.0 });
    let cfg = SolverConfig::at_rest(Scheme::VM, 0.1, 1.0, 50.0, x0);
    let tr = integrate(obj.as_ref(), eps, &Schedule::power(1.0, 1.0), &cfg).unwrap();
    (obj, tr)
}

#[test]
fn energy_is_non_increasing_on_every_family() {
    let eps = Schedule::power(1.0, 1.0);
    for family in Family::ALL {
        let (obj, tr) = run(family, &eps);
        let u = lyapunov_series(&tr, &eps, obj.as_ref());
        let worst = u.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
        assert!(worst <= 1e-8 * u[0], "{}: increase {worst}", family.as_str());
        assert!(*u.last().unwrap() < 1e-3 * u[0], "{}: no progress", family.as_str());
    }
}

#[test]
fn momentum_is_bounded_by_initial_energy() {
    let eps = Schedule::power(1.0, 1.0);
    for family in Family::ALL {
        let (obj, tr) = run(family, &eps);
        let u0 = lyapunov_series(&tr, &eps, obj.as_ref())[0];
        for (t, v) in tr.times.iter().zip(&tr.velocities) {
            let e = eps.value(*t);
            assert!(e * v.norm() <= (2.0 * u0).sqrt() * e.sqrt() + 1e-6, "{} at t = {t}", family.as_str());
        }
    }
}

#[test]
fn gradient_vanishes_along_cn_and_lm() {
    for family in Family::ALL {
        let obj = make_objective(family, &spec(family)).unwrap();
        let x0 = DVector::from_element(10, 1.0);
        for (scheme, alpha) in [(Scheme::CN, Schedule::Zero), (Scheme::LM, Schedule::power(1.0, 2.0))] {
            let tr = integrate(
                obj.as_ref(),
                &Schedule::Zero,
                &alpha,
                &SolverConfig::at_rest(scheme, 0.1, 1.0, 30.0, x0.clone()),
            )
            .unwrap();
            let g0 = obj.gradient(&tr.states[0]).norm();
            let g1 = obj.gradient(tr.states.last().unwrap()).norm();
            assert!(g1 < 1e-8 * g0, "{} {:?}: {g0} -> {g1}", family.as_str(), scheme);
        }
    }
}
