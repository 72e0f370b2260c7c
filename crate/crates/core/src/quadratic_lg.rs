//! Eigenmode analysis of the flows on a quadratic `½‖Ax‖²`.
//!
//! In the eigenbasis of `AᵀA` every coordinate obeys the scalar equation
//!
//! ```text
//! ε(t) x'' + (α(t) + βλ) x' + λ x = 0.
//! ```
//!
//! With `p = (α + βλ)/ε` and `y = x·exp(∫p/2)` it becomes `y'' = r y` where
//! `r = p²/4 + p'/2 − λ/ε`. The Liouville-Green basis
//! `r^{−1/4} exp ∫(−p/2 ± √r)` solves the mode up to factors `1 + δᵢ` whose
//! size is controlled by `∫|φ|`, `φ = (4 r r'' − 5 r'²)/(16 r^{5/2})`.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use serde::Serialize;
use thiserror::Error;

use crate::integrators::{integrate, IntegrateError, Scheme, SolverConfig};
use crate::objectives::{make_quadratic, ObjectiveError, QuadraticSpec};
use crate::quadrature::{adaptive_simpson, cumulative_simpson};
use crate::schedules::{check_a42, CheckGrid, Integrability, Schedule, ScheduleError};

/// Default horizon for the `∫|φ|` head integral.
pub const PHI_TAIL: f64 = 1e4;

/// Default absolute tolerance for inner quadratures.
pub const LG_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LgError {
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
    #[error("r(t) = {r:e} is not positive at t = {t}")]
    NonPositiveR { t: f64, r: f64 },
    #[error("eps0 = {eps0} violates eps0 < (beta lambda)^2 / (2|alpha'| + 4 lambda) = {threshold}")]
    AssumptionViolated { eps0: f64, threshold: f64 },
    #[error("initial-condition system of the basis is singular")]
    DegenerateBasis,
    #[error("series underflows on the whole window [{0}, {1}]")]
    Underflow(f64, f64),
    #[error("invalid mode: {0}")]
    InvalidMode(String),
    #[error("integrability of {0} is unknown; rate classification needs an analytic schedule")]
    UnknownIntegrability(&'static str),
}

/// One eigenmode of the quadratic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarMode {
    pub lambda: f64,
    pub beta: f64,
    pub eps: Schedule,
    pub alpha: Schedule,
    pub x0: f64,
    pub v0: f64,
}

impl ScalarMode {
    pub fn new(lambda: f64, beta: f64, eps: Schedule, alpha: Schedule, x0: f64, v0: f64) -> Result<Self, LgError> {
        if !(lambda > 0.0 && beta > 0.0) {
            return Err(LgError::InvalidMode(format!("lambda and beta must be positive ({lambda}, {beta})")));
        }
        Ok(ScalarMode { lambda, beta, eps, alpha, x0, v0 })
    }

    /// Fails unless `ε₀ < (βλ)²/(2|α'(t)| + 4λ)` on a long geometric grid.
    pub fn require_a42(&self) -> Result<(), LgError> {
        let grid = CheckGrid::geometric(1e-3, PHI_TAIL);
        let rep = check_a42(&self.eps, &self.alpha, self.lambda, self.beta, &grid)?;
        if rep.holds() {
            Ok(())
        } else {
            Err(LgError::AssumptionViolated { eps0: self.eps.initial(), threshold: rep.threshold.unwrap_or(f64::NAN) })
        }
    }

    /// Integrates this mode with one of the discrete schemes; returns
    /// `(times, values)`.
    pub fn integrate(&self, scheme: Scheme, gamma: f64, horizon: f64) -> Result<(Vec<f64>, Vec<f64>), LgError> {
        let obj = make_quadratic(&QuadraticSpec::Spectrum(vec![self.lambda]))?;
        let cfg = SolverConfig {
            gamma,
            beta: self.beta,
            horizon,
            x0: DVector::from_element(1, self.x0),
            v0: DVector::from_element(1, self.v0),
            scheme,
        };
        let tr = integrate(&obj, &self.eps, &self.alpha, &cfg)?;
        let values = tr.component(0);
        Ok((tr.times, values))
    }
}

/// Modes of a quadratic together with the eigenvector matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalDecomposition {
    pub modes: Vec<ScalarMode>,
    /// Columns are the eigenvectors, ordered like `modes`.
    pub q: DMatrix<f64>,
}

impl ModalDecomposition {
    /// Maps per-mode values back to the original coordinates.
    pub fn reconstruct(&self, mode_values: &[f64]) -> DVector<f64> {
        &self.q * DVector::from_column_slice(mode_values)
    }
}

/// Splits the quadratic flow into scalar modes, ordered by increasing `λ`.
pub fn eigenmodes(
    spec: &QuadraticSpec,
    beta: f64,
    eps: &Schedule,
    alpha: &Schedule,
    x0: &DVector<f64>,
    v0: &DVector<f64>,
) -> Result<ModalDecomposition, LgError> {
    let (lambdas, q) = spec.eigen()?;
    if x0.len() != lambdas.len() || v0.len() != lambdas.len() {
        return Err(LgError::InvalidMode("initial data has the wrong dimension".into()));
    }
    let (y0, w0) = (q.transpose() * x0, q.transpose() * v0);
    let modes = lambdas
        .iter()
        .enumerate()
        .map(|(i, &l)| ScalarMode::new(l, beta, eps.clone(), alpha.clone(), y0[i], w0[i]))
        .collect::<Result<_, _>>()?;
    Ok(ModalDecomposition { modes, q })
}

/// `x₀ e^{−t/β}`.
pub fn closed_form_cn(x0: f64, beta: f64, t: f64) -> f64 {
    x0 * (-t / beta).exp()
}

/// `∫₀ᵗ λ/(α(s) + βλ) ds`, in closed form for zero, constant and `α₀/(t+1)`
/// damping and by adaptive Simpson otherwise.
pub fn lm_exponent(mode: &ScalarMode, t: f64, tol: f64) -> f64 {
    let (l, b) = (mode.lambda, mode.beta);
    match mode.alpha {
        Schedule::Zero => t / b,
        Schedule::Constant { c0 } => l * t / (c0 + b * l),
        Schedule::Power { c0, a } if a == 0.0 || c0 == 0.0 => l * t / (c0 + b * l),
        Schedule::Power { c0, a: 1.0 } => {
            let bl = b * l;
            (t - c0 / bl * ((c0 + bl * (t + 1.0)) / (c0 + bl)).ln()) / b
        }
        _ => lm_exponent_quadrature(mode, t, tol),
    }
}

/// [`lm_exponent`] by adaptive Simpson regardless of the family.
pub fn lm_exponent_quadrature(mode: &ScalarMode, t: f64, tol: f64) -> f64 {
    adaptive_simpson(|s| mode.lambda / (mode.alpha.value(s) + mode.beta * mode.lambda), 0.0, t, tol)
}

/// `x₀ exp(−∫₀ᵗ λ/(α + βλ))`.
pub fn closed_form_lm(mode: &ScalarMode, t: f64, tol: f64) -> f64 {
    mode.x0 * (-lm_exponent(mode, t, tol)).exp()
}

/// `p`, `r` and their derivatives at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrJet {
    pub t: f64,
    pub eps: f64,
    pub p: f64,
    pub dp: f64,
    pub d2p: f64,
    pub d3p: f64,
    pub r: f64,
    pub dr: f64,
    pub d2r: f64,
}

impl PrJet {
    /// `φ = (4 r r'' − 5 r'²)/(16 r^{5/2})`.
    pub fn phi(&self) -> f64 {
        (4.0 * self.r * self.d2r - 5.0 * self.dr * self.dr) / (16.0 * self.r.powf(2.5))
    }

    /// Exponent rate `−p/2 + √r` of the slowly decaying branch, written as
    /// `(p'/2 − λ/ε)/(√r + p/2)` to avoid cancellation when `p` is large.
    pub fn slow_rate(&self, lambda: f64) -> f64 {
        (0.5 * self.dp - lambda / self.eps) / (self.r.sqrt() + 0.5 * self.p)
    }

    /// Exponent rate `−p/2 − √r` of the fast branch.
    pub fn fast_rate(&self) -> f64 {
        -0.5 * self.p - self.r.sqrt()
    }
}

/// Evaluates `p, p', p'', p'''` and `r, r', r''` from the schedule jets.
///
/// Derivatives of `p = N/ε`, `N = α + βλ`, go through `w = 1/ε`. The
/// derivatives of `r` use the forms expressed through `r` itself:
/// `r' = (2p'/p) r + ¼(2p'' − 4p'²/p + 8λp'/(εp) + 4λε'/ε²)` and the matching
/// expression for `r''`.
pub fn p_r_eval(mode: &ScalarMode, t: f64) -> Result<PrJet, LgError> {
    let [e, e1, e2, e3] = mode.eps.jet(t)?;
    let [a, a1, a2, a3] = mode.alpha.jet(t)?;
    let l = mode.lambda;
    let n = a + mode.beta * l;

    let w = 1.0 / e;
    let w1 = -e1 * w * w;
    let w2 = (2.0 * e1 * e1 - e * e2) * w * w * w;
    let w3 = (-6.0 * e1.powi(3) + 6.0 * e * e1 * e2 - e * e * e3) * (w * w) * (w * w);

    let p = n * w;
    let p1 = a1 * w + n * w1;
    let p2 = a2 * w + 2.0 * a1 * w1 + n * w2;
    let p3 = a3 * w + 3.0 * a2 * w1 + 3.0 * a1 * w2 + n * w3;

    let r = 0.25 * p * p + 0.5 * p1 - l * w;
    if !(r > 0.0) {
        return Err(LgError::NonPositiveR { t, r });
    }
    let r1 = 2.0 * p1 / p * r + 0.25 * (2.0 * p2 - 4.0 * p1 * p1 / p + 8.0 * l * p1 / (e * p) + 4.0 * l * e1 / (e * e));
    let r2 = 2.0 * (p2 * p - p1 * p1) / (p * p) * r
        + 2.0 * p1 / p * r1
        + 0.25
            * (2.0 * p3
                + 4.0 * (p1.powi(3) - 2.0 * p2 * p1 * p) / (p * p)
                + 8.0 * l * (p2 * p * e - p1 * p1 * e - p1 * p * e1) / (e * e * p * p)
                + 4.0 * l * e2 / (e * e)
                - 8.0 * l * e1 * e1 / e.powi(3));
    Ok(PrJet { t, eps: e, p, dp: p1, d2p: p2, d3p: p3, r, dr: r1, d2r: r2 })
}

/// `φ(t)`.
pub fn phi(mode: &ScalarMode, t: f64) -> Result<f64, LgError> {
    Ok(p_r_eval(mode, t)?.phi())
}

/// `|φ|` as a plain function; evaluation errors become NaN so that callers
/// can detect them after integration.
fn abs_phi_fn(mode: &ScalarMode) -> impl Fn(f64) -> f64 + '_ {
    move |t| p_r_eval(mode, t).map_or(f64::NAN, |j| j.phi().abs())
}

/// Estimate of `∫₀^∞ |φ|`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiIntegral {
    /// Head integral plus the extrapolated tail.
    pub value: f64,
    /// `∫₀^{T_tail} |φ|`.
    pub head: f64,
    pub tail: f64,
    /// Contributions of `[0,1]` and of the decades `[10^k, 10^{k+1}]`.
    pub decades: Vec<f64>,
    /// False when the last two decade contributions do not shrink.
    pub convergent: bool,
}

/// `∫₀^{t_tail} |φ|` by adaptive Simpson, split on decades, plus a geometric
/// tail extrapolated from the ratio of the last two decade contributions.
pub fn phi_integral(mode: &ScalarMode, t_tail: f64, tol: f64) -> Result<PhiIntegral, LgError> {
    if !(t_tail > 1.0) {
        return Err(LgError::InvalidMode(format!("tail horizon must exceed 1, got {t_tail}")));
    }
    // surface evaluation errors eagerly
    p_r_eval(mode, 0.0)?;
    p_r_eval(mode, t_tail)?;
    let f = abs_phi_fn(mode);
    let mut edges = vec![0.0, 1.0];
    while *edges.last().unwrap() * 10.0 < t_tail * (1.0 + 1e-12) {
        edges.push(edges.last().unwrap() * 10.0);
    }
    if *edges.last().unwrap() < t_tail {
        edges.push(t_tail);
    }
    let decades: Vec<f64> = edges.windows(2).map(|w| adaptive_simpson(&f, w[0], w[1], tol)).collect();
    if decades.iter().any(|d| !d.is_finite()) {
        return Err(LgError::InvalidMode("phi is not finite on the integration range".into()));
    }
    let head: f64 = decades.iter().sum();
    let (convergent, tail) = match decades.len() {
        0..=2 => (true, 0.0),
        m => {
            let (d1, d2) = (decades[m - 2], decades[m - 1]);
            if d2 == 0.0 {
                (true, 0.0)
            } else if d2 < d1 {
                let q = d2 / d1;
                (true, d2 * q / (1.0 - q))
            } else {
                (false, f64::INFINITY)
            }
        }
    };
    Ok(PhiIntegral { value: head + tail, head, tail, decades, convergent })
}

/// Liouville-Green basis values at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LgBasis {
    pub u1: f64,
    pub u2: f64,
    pub du1: f64,
    pub du2: f64,
    /// `ln u₁`, `ln u₂`: `u₂` underflows quickly when `p` is large.
    pub ln_u1: f64,
    pub ln_u2: f64,
}

fn basis_from(jet: &PrJet, lambda: f64, i1: f64, i2: f64) -> LgBasis {
    let pre = -0.25 * jet.r.ln();
    let (ln_u1, ln_u2) = (pre + i1, pre + i2);
    let (u1, u2) = (ln_u1.exp(), ln_u2.exp());
    let log_deriv = -jet.dr / (4.0 * jet.r);
    LgBasis {
        u1,
        u2,
        du1: u1 * (log_deriv + jet.slow_rate(lambda)),
        du2: u2 * (log_deriv + jet.fast_rate()),
        ln_u1,
        ln_u2,
    }
}

/// `u₁,₂(t) = r^{−1/4} exp ∫₀ᵗ(−p/2 ± √r)` and their derivatives.
pub fn lg_basis(mode: &ScalarMode, t: f64, tol: f64) -> Result<LgBasis, LgError> {
    let jet = p_r_eval(mode, t)?;
    let slow = |s: f64| p_r_eval(mode, s).map_or(f64::NAN, |j| j.slow_rate(mode.lambda));
    let fast = |s: f64| p_r_eval(mode, s).map_or(f64::NAN, |j| j.fast_rate());
    let i1 = adaptive_simpson(slow, 0.0, t, tol);
    let i2 = adaptive_simpson(fast, 0.0, t, tol);
    if !(i1.is_finite() && i2.is_finite()) {
        return Err(LgError::NonPositiveR { t, r: f64::NAN });
    }
    Ok(basis_from(&jet, mode.lambda, i1, i2))
}

/// Liouville-Green approximation of one mode, fitted to its initial data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LgApprox {
    pub mode: ScalarMode,
    pub a: f64,
    pub b: f64,
    pub phi: PhiIntegral,
    pub tol: f64,
}

/// LG values on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LgTable {
    pub times: Vec<f64>,
    pub value: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub delta1: Vec<f64>,
    pub delta2: Vec<f64>,
}

/// Fits `A, B` from `A u₁(0) + B u₂(0) = x₀`, `A u₁'(0) + B u₂'(0) = ẋ₀`.
pub fn fit_ab(mode: &ScalarMode) -> Result<LgApprox, LgError> {
    fit_ab_with(mode, PHI_TAIL, LG_TOL)
}

pub fn fit_ab_with(mode: &ScalarMode, t_tail: f64, tol: f64) -> Result<LgApprox, LgError> {
    mode.require_a42()?;
    let b0 = lg_basis(mode, 0.0, tol)?;
    let m = Matrix2::new(b0.u1, b0.u2, b0.du1, b0.du2);
    let det = m.determinant();
    if !(det.abs() > 1e-14 * m.abs().max()) {
        return Err(LgError::DegenerateBasis);
    }
    let ab = m.lu().solve(&Vector2::new(mode.x0, mode.v0)).ok_or(LgError::DegenerateBasis)?;
    let phi = phi_integral(mode, t_tail, tol)?;
    Ok(LgApprox { mode: mode.clone(), a: ab[0], b: ab[1], phi, tol })
}

impl LgApprox {
    pub fn phi_total(&self) -> f64 {
        self.phi.value
    }

    /// `exp(½∫₀ᵗ|φ|) − 1`.
    pub fn delta1_env(&self, t: f64) -> f64 {
        (0.5 * adaptive_simpson(abs_phi_fn(&self.mode), 0.0, t, self.tol)).exp_m1()
    }

    /// `exp(½∫ₜ^∞|φ|) − 1`.
    pub fn delta2_env(&self, t: f64) -> f64 {
        let head = adaptive_simpson(abs_phi_fn(&self.mode), 0.0, t, self.tol);
        (0.5 * (self.phi_total() - head).max(0.0)).exp_m1()
    }

    /// `(A u₁ + B u₂, lower, upper)` at `t`, the interval propagating the
    /// δ envelopes through both terms.
    pub fn solution(&self, t: f64) -> Result<(f64, f64, f64), LgError> {
        let u = lg_basis(&self.mode, t, self.tol)?;
        Ok(self.combine(&u, self.delta1_env(t), self.delta2_env(t)))
    }

    fn combine(&self, u: &LgBasis, d1: f64, d2: f64) -> (f64, f64, f64) {
        let value = self.a * u.u1 + self.b * u.u2;
        let spread = self.a.abs() * u.u1 * d1 + self.b.abs() * u.u2 * d2;
        (value, value - spread, value + spread)
    }

    /// Values and envelopes on a sorted grid starting at 0, sharing prefix
    /// integrals between grid points.
    pub fn tabulate(&self, times: &[f64]) -> Result<LgTable, LgError> {
        if times.first() != Some(&0.0) {
            return Err(LgError::InvalidMode("grid must start at 0".into()));
        }
        let mode = &self.mode;
        let jets: Vec<PrJet> = times.iter().map(|&t| p_r_eval(mode, t)).collect::<Result<_, _>>()?;
        let slow = |s: f64| p_r_eval(mode, s).map_or(f64::NAN, |j| j.slow_rate(mode.lambda));
        let fast = |s: f64| p_r_eval(mode, s).map_or(f64::NAN, |j| j.fast_rate());
        let i1 = cumulative_simpson(slow, times, self.tol);
        let i2 = cumulative_simpson(fast, times, self.tol);
        let head = cumulative_simpson(abs_phi_fn(mode), times, self.tol);
        if i1.iter().chain(&i2).chain(&head).any(|v| v.is_nan()) {
            return Err(LgError::NonPositiveR { t: f64::NAN, r: f64::NAN });
        }
        let total = self.phi_total();
        let mut table = LgTable {
            times: times.to_vec(),
            value: Vec::with_capacity(times.len()),
            lower: Vec::with_capacity(times.len()),
            upper: Vec::with_capacity(times.len()),
            delta1: Vec::with_capacity(times.len()),
            delta2: Vec::with_capacity(times.len()),
        };
        for k in 0..times.len() {
            let u = basis_from(&jets[k], mode.lambda, i1[k], i2[k]);
            let d1 = (0.5 * head[k]).exp_m1();
            let d2 = (0.5 * (total - head[k]).max(0.0)).exp_m1();
            let (v, lo, hi) = self.combine(&u, d1, d2);
            table.value.push(v);
            table.lower.push(lo);
            table.upper.push(hi);
            table.delta1.push(d1);
            table.delta2.push(d2);
        }
        Ok(table)
    }
}

/// Value of the first-order expanded slow exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpandedExponent {
    /// `∫₀ᵗ [−λ/(α+βλ) − λ²ε/(α+βλ)³] ds`.
    pub value: f64,
    /// Set when `ε(t)/(βλ) > 0.1`: the dropped `o(ε)` term may matter.
    pub advisory: bool,
}

pub fn expanded_exponent(mode: &ScalarMode, t: f64, tol: f64) -> ExpandedExponent {
    let l = mode.lambda;
    let bl = mode.beta * l;
    let f = |s: f64| {
        let n = mode.alpha.value(s) + bl;
        -l / n - l * l * mode.eps.value(s) / n.powi(3)
    };
    ExpandedExponent { value: adaptive_simpson(f, 0.0, t, tol), advisory: mode.eps.value(t) / bl > 0.1 }
}

/// `ln(u₁(t)/u₁(0))`: the exact slow-branch log growth including the
/// `r^{−1/4}` prefactor, which the expanded exponent approximates.
pub fn slow_log_growth(mode: &ScalarMode, t: f64, tol: f64) -> Result<f64, LgError> {
    let u0 = lg_basis(mode, 0.0, tol)?;
    let ut = lg_basis(mode, t, tol)?;
    Ok(ut.ln_u1 - u0.ln_u1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Target {
    CN,
    LM,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Faster,
    AsFast,
    Slower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dominance {
    Eps,
    Alpha,
    Ambiguous,
}

/// Predicted asymptotic rate of the variable-mass mode against a reference flow.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RateClass {
    pub target: Target,
    pub verdict: Verdict,
    pub rationale: String,
}

/// Classification against CN, which depends on which coefficient dominates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "dominance", rename_all = "kebab-case")]
pub enum CnClass {
    Decided(RateClass),
    /// Dominance could not be decided on the tail; both branches reported.
    Ambiguous {
        if_alpha_dominant: RateClass,
        if_eps_dominant: RateClass,
    },
}

impl CnClass {
    pub fn verdict(&self) -> Option<Verdict> {
        match self {
            CnClass::Decided(c) => Some(c.verdict),
            CnClass::Ambiguous { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RateReport {
    pub dominance: Dominance,
    pub vs_cn: CnClass,
    pub vs_lm: RateClass,
}

/// Decides which of `ε`, `α` dominates on the tail half of `times` by strict
/// pointwise majority.
pub fn dominance(eps: &Schedule, alpha: &Schedule, times: &[f64]) -> Dominance {
    let tail = &times[times.len() / 2..];
    let (mut e_wins, mut a_wins) = (0usize, 0usize);
    for &t in tail {
        let (e, a) = (eps.value(t), alpha.value(t));
        if e > a {
            e_wins += 1;
        } else if a > e {
            a_wins += 1;
        }
    }
    match e_wins.cmp(&a_wins) {
        std::cmp::Ordering::Greater => Dominance::Eps,
        std::cmp::Ordering::Less => Dominance::Alpha,
        std::cmp::Ordering::Equal => Dominance::Ambiguous,
    }
}

fn integrable(s: &Schedule, name: &'static str) -> Result<bool, LgError> {
    match s.integrability() {
        Integrability::Integrable => Ok(true),
        Integrability::NonIntegrable => Ok(false),
        Integrability::Unknown => Err(LgError::UnknownIntegrability(name)),
    }
}

fn cn_alpha_branch(alpha_int: bool) -> RateClass {
    if alpha_int {
        RateClass {
            target: Target::CN,
            verdict: Verdict::AsFast,
            rationale: "alpha dominates and is integrable".into(),
        }
    } else {
        RateClass {
            target: Target::CN,
            verdict: Verdict::Slower,
            rationale: "alpha dominates and is non-integrable".into(),
        }
    }
}

fn cn_eps_branch(eps_int: bool) -> RateClass {
    if eps_int {
        RateClass { target: Target::CN, verdict: Verdict::AsFast, rationale: "eps dominates and is integrable".into() }
    } else {
        RateClass {
            target: Target::CN,
            verdict: Verdict::Faster,
            rationale: "eps dominates and is non-integrable".into(),
        }
    }
}

/// Predicted rates against LM (decided by integrability of `ε` alone) and
/// against CN (decided by the dominant coefficient's integrability).
pub fn classify_rates(eps: &Schedule, alpha: &Schedule, tail_grid: &[f64]) -> Result<RateReport, LgError> {
    let eps_int = integrable(eps, "eps")?;
    let alpha_int = integrable(alpha, "alpha")?;
    let vs_lm = if eps_int {
        RateClass { target: Target::LM, verdict: Verdict::AsFast, rationale: "eps is integrable".into() }
    } else {
        RateClass { target: Target::LM, verdict: Verdict::Faster, rationale: "eps is non-integrable".into() }
    };
    let dom = dominance(eps, alpha, tail_grid);
    let vs_cn = match dom {
        Dominance::Alpha => CnClass::Decided(cn_alpha_branch(alpha_int)),
        Dominance::Eps => CnClass::Decided(cn_eps_branch(eps_int)),
        Dominance::Ambiguous => CnClass::Ambiguous {
            if_alpha_dominant: cn_alpha_branch(alpha_int),
            if_eps_dominant: cn_eps_branch(eps_int),
        },
    };
    Ok(RateReport { dominance: dom, vs_cn, vs_lm })
}

/// Least-squares decay slope of `ln|series|` against `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub slope: f64,
    /// Window actually used.
    pub window: (f64, f64),
    /// True when the requested window was shrunk to avoid underflow.
    pub shrunk: bool,
}

/// Values below this count as underflowed.
const UNDERFLOW: f64 = 1e-290;

/// Fits the slope of `ln|series|` on `window`, shrinking the window from the
/// right to the last point before the series underflows or vanishes.
pub fn estimate_decay_rate(times: &[f64], series: &[f64], window: (f64, f64)) -> Result<DecayFit, LgError> {
    if times.len() != series.len() {
        return Err(LgError::InvalidMode("times and series differ in length".into()));
    }
    let (ta, tb) = window;
    let idx: Vec<usize> = (0..times.len()).filter(|&k| times[k] >= ta && times[k] <= tb).collect();
    let usable = idx.iter().take_while(|&&k| series[k].abs() > UNDERFLOW && series[k].is_finite()).count();
    if usable < 3 {
        return Err(LgError::Underflow(ta, tb));
    }
    let pts = &idx[..usable];
    let n = pts.len() as f64;
    let mt = pts.iter().map(|&k| times[k]).sum::<f64>() / n;
    let my = pts.iter().map(|&k| series[k].abs().ln()).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &k in pts {
        let dt = times[k] - mt;
        sxy += dt * (series[k].abs().ln() - my);
        sxx += dt * dt;
    }
    Ok(DecayFit { slope: sxy / sxx, window: (times[pts[0]], times[pts[usable - 1]]), shrunk: usable < idx.len() })
}
