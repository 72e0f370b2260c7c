//! Non-asymptotic distance envelopes between the variable-mass path and the
//! continuous Newton / Levenberg-Marquardt paths.
//!
//! All envelopes are evaluated on the trajectory grid and share the memory
//! term `∫₀ᵗ e^{(s−t)/β} g(s) ds`.

use nalgebra::DVector;
use serde::Serialize;
use thiserror::Error;

use crate::integrators::Trajectory;
use crate::quadrature::{adaptive_simpson, QuadratureRule};
use crate::schedules::Schedule;

/// `2 − c₁β` below this is reported as a near-pole warning.
pub const POLE_WARNING: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("strong-convexity modulus must be positive, got {0}")]
    InvalidModulus(f64),
    #[error("c1 = {c1} violates c1 < 2/beta = {limit}")]
    AssumptionViolated { c1: f64, limit: f64 },
    #[error("shape vanishes at grid index {0}")]
    DegenerateFit(usize),
    #[error("series are not aligned: {0}")]
    Alignment(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TheoremId {
    /// Distance to the continuous Newton path with explicit constants.
    #[serde(rename = "T3.2")]
    T32,
    /// Closed-form relaxation of [`TheoremId::T32`] for `c₁ < 2/β`.
    #[serde(rename = "C3.5")]
    C35,
    /// Unit-constant shape against the continuous Newton path.
    #[serde(rename = "T3.6-N")]
    T36N,
    /// Unit-constant shape against the Levenberg-Marquardt path.
    #[serde(rename = "T3.6-LM")]
    T36LM,
}

/// Data the explicit constants are built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundInputs {
    /// `U(0) = ε₀/2 ‖v₀‖² + f(x₀) − f⋆`.
    pub u0: f64,
    pub mu: f64,
    pub beta: f64,
    pub c1: f64,
    pub c2: f64,
    pub eps0: f64,
    pub v0_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct T32Constants {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EnvelopeConstants {
    pub c0: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub c3: Option<f64>,
    /// Fitted multiplier for the unit-constant shapes.
    pub fitted: Option<f64>,
}

/// An upper-bound curve on a trajectory grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundEnvelope {
    pub theorem: TheoremId,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub constants: EnvelopeConstants,
    pub inputs: Option<BoundInputs>,
    /// Set when a hypothesis is unverified (e.g. `μ` estimated or an
    /// assumption report failing); the curve is then indicative only.
    pub advisory: bool,
    pub warnings: Vec<String>,
}

impl BoundEnvelope {
    fn new(theorem: TheoremId, times: &[f64], values: Vec<f64>) -> Self {
        BoundEnvelope {
            theorem,
            times: times.to_vec(),
            values,
            constants: EnvelopeConstants::default(),
            inputs: None,
            advisory: false,
            warnings: Vec::new(),
        }
    }

    /// Multiplies the curve by `c` and records it as the fitted constant.
    pub fn scaled(mut self, c: f64) -> Self {
        self.values.iter_mut().for_each(|v| *v *= c);
        self.constants.fitted = Some(c);
        self
    }
}

/// `∫₀ᵗ e^{(s−t)/β} g(s) ds` by adaptive Simpson.
pub fn weighted_exp_integral(g: impl Fn(f64) -> f64, t: f64, beta: f64, tol: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    adaptive_simpson(|s| ((s - t) / beta).exp() * g(s), 0.0, t, tol)
}

/// `I(t_k) = ∫₀^{t_k} e^{(s−t_k)/β} g(s) ds` on every point of a grid starting at 0.
///
/// Uses the recursion `I_{k+1} = e^{−h/β} I_k + ∫_{t_k}^{t_{k+1}} e^{(s−t_{k+1})/β} g(s) ds`,
/// with the panel integral taken by the selected rule.
pub fn weighted_exp_integral_on_grid(
    g: impl Fn(f64) -> f64,
    times: &[f64],
    beta: f64,
    rule: QuadratureRule,
) -> Vec<f64> {
    let mut out = Vec::with_capacity(times.len());
    let Some(&t0) = times.first() else {
        return out;
    };
    debug_assert!(t0 == 0.0, "grid must start at 0");
    out.push(0.0);
    let mut acc = 0.0;
    let mut g_prev = g(t0);
    for w in times.windows(2) {
        let (a, b) = (w[0], w[1]);
        let decay = (-(b - a) / beta).exp();
        let g_next = g(b);
        let panel = match rule {
            QuadratureRule::TrapezoidOnGrid => 0.5 * (b - a) * (decay * g_prev + g_next),
            QuadratureRule::AdaptiveSimpson { tol } => {
                let span = times[times.len() - 1].max(f64::MIN_POSITIVE);
                adaptive_simpson(|s| ((s - b) / beta).exp() * g(s), a, b, tol * (b - a) / span)
            }
        };
        acc = decay * acc + panel;
        out.push(acc);
        g_prev = g_next;
    }
    out
}

/// Constants of the distance bound to the continuous Newton path:
/// `C₀ = 1/(βμ)`, `C₁ = √(2U₀)/(βμ)`, `C₂ = C₁ (1/β + c₁ + c₂)`.
pub fn constants_t32(u0: f64, mu: f64, beta: f64, c1: f64, c2: f64) -> Result<T32Constants, BoundsError> {
    if !(mu > 0.0) {
        return Err(BoundsError::InvalidModulus(mu));
    }
    let c0 = 1.0 / (beta * mu);
    let c1_const = (2.0 * u0.max(0.0)).sqrt() * c0;
    Ok(T32Constants { c0, c1: c1_const, c2: c1_const * (1.0 / beta + c1 + c2) })
}

/// `B(t) = C₀ e^{−t/β} ε₀‖ẋ₀‖ + C₁√ε(t) + C₂ ∫₀ᵗ e^{(s−t)/β} √ε(s) ds`.
pub fn envelope_t32(
    eps: &Schedule,
    inputs: &BoundInputs,
    times: &[f64],
    rule: QuadratureRule,
) -> Result<BoundEnvelope, BoundsError> {
    let k = constants_t32(inputs.u0, inputs.mu, inputs.beta, inputs.c1, inputs.c2)?;
    let beta = inputs.beta;
    let memory = weighted_exp_integral_on_grid(|s| eps.value(s).sqrt(), times, beta, rule);
    let values = times
        .iter()
        .zip(&memory)
        .map(|(&t, &m)| k.c0 * (-t / beta).exp() * inputs.eps0 * inputs.v0_norm + k.c1 * eps.value(t).sqrt() + k.c2 * m)
        .collect();
    let mut env = BoundEnvelope::new(TheoremId::T32, times, values);
    env.constants = EnvelopeConstants { c0: Some(k.c0), c1: Some(k.c1), c2: Some(k.c2), ..Default::default() };
    env.inputs = Some(*inputs);
    Ok(env)
}

/// `B(t) = C₀ e^{−t/β} ε₀‖ẋ₀‖ + C₃ √ε(t)` with `C₃ = C₁ + C₂·2β/(2 − c₁β)`.
///
/// The factor `2β/(2 − c₁β)` bounds `∫₀ᵗ e^{(s−t)/β} √ε(s) ds / √ε(t)` when
/// `|ε′| ≤ c₁ε`, so this envelope dominates [`envelope_t32`] pointwise.
pub fn envelope_c35(eps: &Schedule, inputs: &BoundInputs, times: &[f64]) -> Result<BoundEnvelope, BoundsError> {
    let beta = inputs.beta;
    let gap = 2.0 - inputs.c1 * beta;
    if !(gap > 0.0) {
        return Err(BoundsError::AssumptionViolated { c1: inputs.c1, limit: 2.0 / beta });
    }
    let k = constants_t32(inputs.u0, inputs.mu, beta, inputs.c1, inputs.c2)?;
    let c3 = k.c1 + k.c2 * 2.0 * beta / gap;
    let values = times
        .iter()
        .map(|&t| k.c0 * (-t / beta).exp() * inputs.eps0 * inputs.v0_norm + c3 * eps.value(t).sqrt())
        .collect();
    let mut env = BoundEnvelope::new(TheoremId::C35, times, values);
    env.constants = EnvelopeConstants { c0: Some(k.c0), c1: Some(k.c1), c2: Some(k.c2), c3: Some(c3), fitted: None };
    env.inputs = Some(*inputs);
    if gap < POLE_WARNING {
        env.warnings.push(format!("c1 = {} is within {gap:e} of 2/beta; C3 = {c3:e}", inputs.c1));
    }
    Ok(env)
}

/// Unit-constant shape `e^{−t/β} + √ε(t) + α(t) + ∫₀ᵗ e^{(s−t)/β}(√ε(s) + α(s)) ds`.
pub fn envelope_t36_shape(
    theorem: TheoremId,
    eps: &Schedule,
    alpha: &Schedule,
    beta: f64,
    times: &[f64],
    rule: QuadratureRule,
) -> BoundEnvelope {
    debug_assert!(matches!(theorem, TheoremId::T36N | TheoremId::T36LM));
    let g = |s: f64| eps.value(s).sqrt() + alpha.value(s);
    let memory = weighted_exp_integral_on_grid(g, times, beta, rule);
    let values = times.iter().zip(&memory).map(|(&t, &m)| (-t / beta).exp() + g(t) + m).collect();
    BoundEnvelope::new(theorem, times, values)
}

/// Smallest `C` with `distances ≤ C·shape` on the grid.
pub fn fit_constant(distances: &[f64], shape: &[f64]) -> Result<f64, BoundsError> {
    if distances.len() != shape.len() {
        return Err(BoundsError::Alignment(format!("{} distances vs {} shape values", distances.len(), shape.len())));
    }
    let mut c = 0.0_f64;
    for (k, (&d, &s)) in distances.iter().zip(shape).enumerate() {
        if !(s > 0.0) {
            return Err(BoundsError::DegenerateFit(k));
        }
        c = c.max(d / s);
    }
    Ok(c)
}

/// Pointwise Euclidean distances between two state sequences.
pub fn distances(a: &[DVector<f64>], b: &[DVector<f64>]) -> Result<Vec<f64>, BoundsError> {
    if a.len() != b.len() {
        return Err(BoundsError::Alignment(format!("{} vs {} states", a.len(), b.len())));
    }
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            if x.len() != y.len() {
                Err(BoundsError::Alignment(format!("dimension {} vs {}", x.len(), y.len())))
            } else {
                Ok((x - y).norm())
            }
        })
        .collect()
}

/// Pointwise distances between two trajectories on the same grid.
pub fn distance_series(a: &Trajectory, b: &Trajectory) -> Result<Vec<f64>, BoundsError> {
    if a.times.len() != b.times.len()
        || a.times.iter().zip(&b.times).any(|(s, t)| (s - t).abs() > 1e-12 * t.abs().max(1.0))
    {
        return Err(BoundsError::Alignment("trajectory grids differ".into()));
    }
    distances(&a.states, &b.states)
}
