//! Semi-implicit Euler schemes for the continuous Newton (CN),
//! Levenberg-Marquardt (LM) and variable-mass (VM) flows.
//!
//! Every step solves one shifted Hessian system
//!
//! ```text
//! (shift·I + β∇²f(x_k)) z = rhs,    x_{k+1} = x_k + z
//! ```
//!
//! with `(shift, rhs)` equal to `(0, −γ∇f)` for CN, `(α_k, −γ∇f)` for LM and
//! `(ε_k/γ + α_k, (ε_k/γ)(x_k − x_{k−1}) − γ∇f)` for VM. The VM system is the
//! usual `[(ε_k + γα_k)I + γβ∇²f]` system divided by `γ`. With this layout
//! `ε_k = 0` reproduces the LM system and `α_k = 0` the CN system entry for
//! entry, so the degenerate schemes agree bit for bit.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{solve_spd, LinalgError, Solve};
use crate::objectives::Objective;
use crate::schedules::Schedule;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegrateError {
    #[error("singular system at step {step}: {source}")]
    Singular { step: usize, source: LinalgError },
    #[error("non-finite state at step {step}; last valid index {last_valid}")]
    Divergence { step: usize, last_valid: usize },
    #[error("invalid solver configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Scheme {
    CN,
    LM,
    VM,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::CN => "cn",
            Scheme::LM => "lm",
            Scheme::VM => "vm",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub gamma: f64,
    pub beta: f64,
    pub horizon: f64,
    pub x0: DVector<f64>,
    /// Initial velocity; only the VM scheme reads it, through `x_{−1} = x0 − γ v0`.
    pub v0: DVector<f64>,
    pub scheme: Scheme,
}

impl SolverConfig {
    /// Configuration started at rest.
    pub fn at_rest(scheme: Scheme, gamma: f64, beta: f64, horizon: f64, x0: DVector<f64>) -> Self {
        let v0 = DVector::zeros(x0.len());
        SolverConfig { gamma, beta, horizon, x0, v0, scheme }
    }

    pub fn validate(&self, dim: usize) -> Result<(), IntegrateError> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(IntegrateError::Config(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(IntegrateError::Config(format!("beta must be positive, got {}", self.beta)));
        }
        if !(self.horizon >= self.gamma && self.horizon.is_finite()) {
            return Err(IntegrateError::Config(format!("horizon {} must be at least gamma", self.horizon)));
        }
        if self.x0.len() != dim || self.v0.len() != dim {
            return Err(IntegrateError::Config(format!(
                "x0 and v0 must have the objective dimension {dim} (got {} and {})",
                self.x0.len(),
                self.v0.len()
            )));
        }
        Ok(())
    }

    /// Number of steps `K = floor(T/γ)`.
    pub fn steps(&self) -> usize {
        // guard against T/γ landing just below an integer
        (self.horizon / self.gamma * (1.0 + 4.0 * f64::EPSILON)).floor() as usize
    }
}

/// Linear-solve diagnostics of one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepDiagnostics {
    pub condition: f64,
    pub residual: f64,
}

impl From<&Solve> for StepDiagnostics {
    fn from(s: &Solve) -> Self {
        StepDiagnostics { condition: s.condition, residual: s.residual }
    }
}

/// States on the uniform grid `t_k = γk`, `k = 0..=K`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub scheme: Scheme,
    pub gamma: f64,
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    /// Backward differences `(x_k − x_{k−1})/γ`, with `v0` at `k = 0`.
    pub velocities: Vec<DVector<f64>>,
    /// One entry per step; `diagnostics[k]` produced `states[k + 1]`.
    pub diagnostics: Vec<StepDiagnostics>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, DVector::len)
    }

    /// Coordinate `i` of every state.
    pub fn component(&self, i: usize) -> Vec<f64> {
        self.states.iter().map(|x| x[i]).collect()
    }
}

fn shifted_solve(
    obj: &dyn Objective,
    x: &DVector<f64>,
    beta: f64,
    shift: f64,
    rhs: &DVector<f64>,
) -> Result<(DVector<f64>, Solve), LinalgError> {
    let mut m: DMatrix<f64> = obj.hessian(x) * beta;
    for i in 0..m.nrows() {
        m[(i, i)] += shift;
    }
    let s = solve_spd(&m, rhs)?;
    Ok((x + &s.z, s))
}

// Negative or non-finite coefficients void the definiteness of the shifted
// system and are reported as singular.
fn check_shift(value: f64) -> Result<(), LinalgError> {
    if value < 0.0 || !value.is_finite() {
        return Err(LinalgError::Singular { residual: f64::NAN });
    }
    Ok(())
}

/// `x_{k+1} = x_k − γ[β∇²f(x_k)]⁻¹∇f(x_k)`.
pub fn step_cn(obj: &dyn Objective, x: &DVector<f64>, gamma: f64, beta: f64) -> Result<DVector<f64>, LinalgError> {
    step_cn_diag(obj, x, gamma, beta).map(|(x, _)| x)
}

fn step_cn_diag(
    obj: &dyn Objective,
    x: &DVector<f64>,
    gamma: f64,
    beta: f64,
) -> Result<(DVector<f64>, Solve), LinalgError> {
    let rhs = obj.gradient(x) * (-gamma);
    shifted_solve(obj, x, beta, 0.0, &rhs)
}

/// `x_{k+1} = x_k − γ[α_k I + β∇²f(x_k)]⁻¹∇f(x_k)`.
pub fn step_lm(
    obj: &dyn Objective,
    x: &DVector<f64>,
    gamma: f64,
    beta: f64,
    alpha_k: f64,
) -> Result<DVector<f64>, LinalgError> {
    step_lm_diag(obj, x, gamma, beta, alpha_k).map(|(x, _)| x)
}

fn step_lm_diag(
    obj: &dyn Objective,
    x: &DVector<f64>,
    gamma: f64,
    beta: f64,
    alpha_k: f64,
) -> Result<(DVector<f64>, Solve), LinalgError> {
    check_shift(alpha_k)?;
    let rhs = obj.gradient(x) * (-gamma);
    shifted_solve(obj, x, beta, alpha_k, &rhs)
}

/// `x_{k+1} = x_k + [(ε_k + γα_k)I + γβ∇²f(x_k)]⁻¹(ε_k(x_k − x_{k−1}) − γ²∇f(x_k))`.
pub fn step_vm(
    obj: &dyn Objective,
    x: &DVector<f64>,
    x_prev: &DVector<f64>,
    gamma: f64,
    beta: f64,
    eps_k: f64,
    alpha_k: f64,
) -> Result<DVector<f64>, LinalgError> {
    step_vm_diag(obj, x, x_prev, gamma, beta, eps_k, alpha_k).map(|(x, _)| x)
}

fn step_vm_diag(
    obj: &dyn Objective,
    x: &DVector<f64>,
    x_prev: &DVector<f64>,
    gamma: f64,
    beta: f64,
    eps_k: f64,
    alpha_k: f64,
) -> Result<(DVector<f64>, Solve), LinalgError> {
    check_shift(eps_k)?;
    check_shift(alpha_k)?;
    let w = eps_k / gamma;
    let rhs = (x - x_prev) * w - obj.gradient(x) * gamma;
    shifted_solve(obj, x, beta, w + alpha_k, &rhs)
}

/// Runs `cfg.scheme` from `cfg.x0` up to `t_K = γ·floor(T/γ)`.
///
/// Schedules are sampled at the left endpoint `t_k` of each step. CN ignores
/// both schedules and LM ignores `eps`.
pub fn integrate(
    obj: &dyn Objective,
    eps: &Schedule,
    alpha: &Schedule,
    cfg: &SolverConfig,
) -> Result<Trajectory, IntegrateError> {
    cfg.validate(obj.dim())?;
    let k_max = cfg.steps();
    let gamma = cfg.gamma;

    let mut times = Vec::with_capacity(k_max + 1);
    let mut states = Vec::with_capacity(k_max + 1);
    let mut velocities = Vec::with_capacity(k_max + 1);
    let mut diagnostics = Vec::with_capacity(k_max);

    if cfg.x0.iter().any(|v| !v.is_finite()) {
        return Err(IntegrateError::Divergence { step: 0, last_valid: 0 });
    }
    times.push(0.0);
    states.push(cfg.x0.clone());
    velocities.push(cfg.v0.clone());
    let mut x_prev = &cfg.x0 - &cfg.v0 * gamma;

    for k in 0..k_max {
        let t = k as f64 * gamma;
        let x = &states[k];
        let step = match cfg.scheme {
            Scheme::CN => step_cn_diag(obj, x, gamma, cfg.beta),
            Scheme::LM => step_lm_diag(obj, x, gamma, cfg.beta, alpha.value(t)),
            Scheme::VM => step_vm_diag(obj, x, &x_prev, gamma, cfg.beta, eps.value(t), alpha.value(t)),
        };
        let (next, solve) = step.map_err(|source| IntegrateError::Singular { step: k, source })?;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(IntegrateError::Divergence { step: k + 1, last_valid: k });
        }
        diagnostics.push(StepDiagnostics::from(&solve));
        velocities.push((&next - x) / gamma);
        x_prev = x.clone();
        times.push((k + 1) as f64 * gamma);
        states.push(next);
    }
    Ok(Trajectory { scheme: cfg.scheme, gamma, times, states, velocities, diagnostics })
}

/// `U_k = ε(t_k)/2 ‖v_k‖² + f(x_k) − f⋆`.
///
/// `f⋆` is `f(minimizer)` when the minimizer is known and the smallest value
/// along the trajectory otherwise.
pub fn lyapunov_series(traj: &Trajectory, eps: &Schedule, obj: &dyn Objective) -> Vec<f64> {
    let values: Vec<f64> = traj.states.iter().map(|x| obj.value(x)).collect();
    let f_star = match obj.minimizer() {
        Some(xs) => obj.value(&xs),
        None => values.iter().copied().fold(f64::INFINITY, f64::min),
    };
    traj.times
        .iter()
        .zip(&traj.velocities)
        .zip(&values)
        .map(|((&t, v), &f)| 0.5 * eps.value(t) * v.norm_squared() + f - f_star)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{make_gauss_plus_quad, make_quadratic, QuadraticSpec};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn quad1(lambda: f64) -> impl Objective {
        make_quadratic(&QuadraticSpec::Spectrum(vec![lambda])).unwrap()
    }

    fn one(x: f64) -> DVector<f64> {
        DVector::from_element(1, x)
    }

    #[test]
    fn cn_examples() {
        assert_relative_eq!(step_cn(&quad1(1.0), &one(1.0), 0.1, 1.0).unwrap()[0], 0.9, epsilon = 1e-15);
        assert_relative_eq!(step_cn(&quad1(4.0), &one(1.0), 0.1, 1.0).unwrap()[0], 0.9, epsilon = 1e-15);
        assert_eq!(step_cn(&quad1(4.0), &one(0.0), 0.1, 1.0).unwrap()[0], 0.0);
    }

    #[test]
    fn lm_examples() {
        let f = quad1(1.0);
        assert_relative_eq!(step_lm(&f, &one(1.0), 0.1, 1.0, 1.0).unwrap()[0], 0.95, epsilon = 1e-15);
        assert_eq!(step_lm(&f, &one(1.0), 0.1, 1.0, 0.0).unwrap(), step_cn(&f, &one(1.0), 0.1, 1.0).unwrap());
        assert_eq!(step_lm(&f, &one(0.0), 0.1, 1.0, 0.7).unwrap()[0], 0.0);
    }

    #[test]
    fn vm_examples() {
        let f = quad1(1.0);
        assert_relative_eq!(step_vm(&f, &one(1.0), &one(1.0), 0.1, 1.0, 0.1, 0.0).unwrap()[0], 0.95, epsilon = 1e-15);
        assert_eq!(
            step_vm(&f, &one(1.0), &one(2.0), 0.1, 1.0, 0.0, 0.3).unwrap(),
            step_lm(&f, &one(1.0), 0.1, 1.0, 0.3).unwrap()
        );
        assert_eq!(step_vm(&f, &one(0.0), &one(0.0), 0.1, 1.0, 0.4, 0.3).unwrap()[0], 0.0);
    }

    #[test]
    fn singular_hessian_is_reported() {
        let f = make_gauss_plus_quad(&QuadraticSpec::Spectrum(vec![2.0])).unwrap();
        // Hessian at 0 is exactly zero
        assert!(step_cn(&f, &one(0.0), 0.1, 1.0).is_err());
    }

    #[test]
    fn cn_trajectory_matches_recurrence() {
        let f = quad1(7.0);
        let cfg = SolverConfig::at_rest(Scheme::CN, 0.1, 1.0, 5.0, one(1.0));
        let tr = integrate(&f, &Schedule::Zero, &Schedule::Zero, &cfg).unwrap();
        assert_eq!(tr.len(), 51);
        assert_relative_eq!(tr.times[50], 5.0, epsilon = 1e-14);
        for (k, x) in tr.states.iter().enumerate() {
            assert_relative_eq!(x[0], 0.9f64.powi(k as i32), max_relative = 1e-12);
        }
    }

    #[test]
    fn steps_floor() {
        let cfg = SolverConfig::at_rest(Scheme::CN, 0.3, 1.0, 1.0, one(1.0));
        assert_eq!(cfg.steps(), 3);
        let cfg = SolverConfig::at_rest(Scheme::CN, 0.1, 1.0, 50.0, one(1.0));
        assert_eq!(cfg.steps(), 500);
    }

    #[test]
    fn config_rejects_bad_values() {
        let f = quad1(1.0);
        let mut cfg = SolverConfig::at_rest(Scheme::CN, -0.1, 1.0, 1.0, one(1.0));
        assert!(matches!(integrate(&f, &Schedule::Zero, &Schedule::Zero, &cfg), Err(IntegrateError::Config(_))));
        cfg.gamma = 0.1;
        cfg.x0 = DVector::zeros(2);
        assert!(integrate(&f, &Schedule::Zero, &Schedule::Zero, &cfg).is_err());
    }

    #[test]
    fn lyapunov_examples() {
        let f = quad1(1.0);
        let eps = Schedule::constant(0.1);
        let cfg = SolverConfig::at_rest(Scheme::VM, 0.1, 1.0, 30.0, one(1.0));
        let tr = integrate(&f, &eps, &Schedule::Zero, &cfg).unwrap();
        let u = lyapunov_series(&tr, &eps, &f);
        assert_eq!(u[0], 0.5);
        assert!(*u.last().unwrap() < 1e-10);
    }

    #[test]
    fn divergence_is_reported() {
        // Negative curvature far from the origin is not a valid input, but a
        // huge step on a tiny-curvature quadratic overflows quickly.
        let f = quad1(1e-300);
        let cfg = SolverConfig::at_rest(Scheme::VM, 0.1, 1e-300, 1.0, one(1e300));
        let r = integrate(&f, &Schedule::constant(0.0), &Schedule::Zero, &cfg);
        assert!(r.is_err());
    }

    proptest! {
        #[test]
        fn degeneration_is_exact(
            l in prop::collection::vec(0.1f64..10.0, 3),
            x in prop::collection::vec(-2.0f64..2.0, 3),
            xp in prop::collection::vec(-2.0f64..2.0, 3),
            gamma in 0.01f64..0.5,
            beta in 0.2f64..3.0,
            alpha in 0.0f64..2.0,
        ) {
            let f = make_gauss_plus_quad(&QuadraticSpec::Spectrum(l.iter().map(|v| v + 2.5).collect())).unwrap();
            let (x, xp) = (DVector::from_vec(x), DVector::from_vec(xp));
            prop_assert_eq!(
                step_vm(&f, &x, &xp, gamma, beta, 0.0, alpha).unwrap(),
                step_lm(&f, &x, gamma, beta, alpha).unwrap()
            );
            prop_assert_eq!(step_lm(&f, &x, gamma, beta, 0.0).unwrap(), step_cn(&f, &x, gamma, beta).unwrap());
        }
    }
}
