//! Benchmark objectives: a quadratic `½‖Ax‖²` alone or plus a Gaussian bump,
//! a symmetric log-sum-exp, or a degree-50 polynomial.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::min_eigenvalue;

/// Lower clamp for strong-convexity estimates.
pub const MU_FLOOR: f64 = 1e-8;

/// The Gaussian bump has Hessian bounded below by `-2 I`.
pub const GAUSS_CURVATURE_DEFICIT: f64 = 2.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObjectiveError {
    #[error("invalid quadratic spec: {0}")]
    InvalidSpec(String),
    #[error("no sampled Hessian is positive definite (largest minimum eigenvalue {0:e})")]
    NonConvexRegion(f64),
    #[error("no samples supplied")]
    NoSamples,
}

/// The quadratic part `½‖Ax‖²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadraticSpec {
    /// Eigenvalues of `AᵀA` in the identity basis.
    Spectrum(Vec<f64>),
    /// The matrix `A` itself, row-major.
    Matrix(Vec<Vec<f64>>),
}

impl QuadraticSpec {
    /// Diagonal spectrum log-spaced on `[hi/kappa, hi]`.
    pub fn log_spaced(n: usize, kappa: f64, hi: f64) -> Self {
        assert!(n >= 1 && kappa >= 1.0 && hi > 0.0);
        let lo = hi / kappa;
        let eig = (0..n).map(|i| if n == 1 { lo } else { lo * (hi / lo).powf(i as f64 / (n - 1) as f64) }).collect();
        QuadraticSpec::Spectrum(eig)
    }

    pub fn dim(&self) -> usize {
        match self {
            QuadraticSpec::Spectrum(l) => l.len(),
            QuadraticSpec::Matrix(rows) => rows.first().map_or(0, Vec::len),
        }
    }

    /// `AᵀA`.
    pub fn gram(&self) -> Result<DMatrix<f64>, ObjectiveError> {
        let g = match self {
            QuadraticSpec::Spectrum(l) => DMatrix::from_diagonal(&DVector::from_column_slice(l)),
            QuadraticSpec::Matrix(rows) => {
                let n = rows.len();
                if n == 0 || rows.iter().any(|r| r.len() != n) {
                    return Err(ObjectiveError::InvalidSpec("A must be a non-empty square matrix".into()));
                }
                let a = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
                a.transpose() * a
            }
        };
        if g.nrows() == 0 {
            return Err(ObjectiveError::InvalidSpec("empty spectrum".into()));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(ObjectiveError::InvalidSpec("non-finite entry".into()));
        }
        Ok(g)
    }

    /// Eigenvalues of `AᵀA` in ascending order with orthonormal eigenvectors
    /// as the columns of `Q`.
    pub fn eigen(&self) -> Result<(Vec<f64>, DMatrix<f64>), ObjectiveError> {
        let g = self.gram()?;
        let (values, q) = match self {
            QuadraticSpec::Spectrum(l) => (l.clone(), DMatrix::identity(l.len(), l.len())),
            QuadraticSpec::Matrix(_) => {
                let se = SymmetricEigen::new(g);
                (se.eigenvalues.iter().copied().collect(), se.eigenvectors)
            }
        };
        if let Some(bad) = values.iter().find(|&&l| !(l > 0.0)) {
            return Err(ObjectiveError::InvalidSpec(format!("AᵀA has non-positive eigenvalue {bad}")));
        }
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
        let sorted = order.iter().map(|&i| values[i]).collect();
        let q_sorted = DMatrix::from_fn(q.nrows(), q.ncols(), |r, c| q[(r, order[c])]);
        Ok((sorted, q_sorted))
    }

    pub fn lambda_min(&self) -> Result<f64, ObjectiveError> {
        Ok(self.eigen()?.0[0])
    }
}

/// A smooth convex objective with analytic derivatives.
pub trait Objective: Send + Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn value(&self, x: &DVector<f64>) -> f64;
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64>;
    /// Known minimizer, if any.
    fn minimizer(&self) -> Option<DVector<f64>> {
        None
    }
    /// Strong-convexity modulus on the relevant sublevel set, if known.
    fn mu_hint(&self) -> Option<f64> {
        None
    }
    /// `Some(mu)` when the modulus is exact everywhere (quadratics).
    fn exact_modulus(&self) -> Option<f64> {
        None
    }
}

/// Names accepted by [`make_objective`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Quadratic,
    GaussQuad,
    LogsumexpQuad,
    Poly50Quad,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Quadratic, Family::GaussQuad, Family::LogsumexpQuad, Family::Poly50Quad];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Quadratic => "quadratic",
            Family::GaussQuad => "gauss_quad",
            Family::LogsumexpQuad => "logsumexp_quad",
            Family::Poly50Quad => "poly50_quad",
        }
    }
}

pub fn make_objective(family: Family, spec: &QuadraticSpec) -> Result<Box<dyn Objective>, ObjectiveError> {
    Ok(match family {
        Family::Quadratic => Box::new(make_quadratic(spec)?),
        Family::GaussQuad => Box::new(make_gauss_plus_quad(spec)?),
        Family::LogsumexpQuad => Box::new(make_logsumexp_plus_quad(spec)?),
        Family::Poly50Quad => Box::new(make_poly50_plus_quad(spec)?),
    })
}

/// Shared quadratic term.
#[derive(Debug, Clone)]
struct Quad {
    h: DMatrix<f64>,
    lambda_min: f64,
}

impl Quad {
    fn new(spec: &QuadraticSpec) -> Result<Self, ObjectiveError> {
        let lambda_min = spec.lambda_min()?;
        Ok(Quad { h: spec.gram()?, lambda_min })
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.h * x))
    }
}

/// `½‖Ax‖²`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    q: Quad,
}

impl Quadratic {
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.q.h
    }
}

pub fn make_quadratic(spec: &QuadraticSpec) -> Result<Quadratic, ObjectiveError> {
    Ok(Quadratic { q: Quad::new(spec)? })
}

impl Objective for Quadratic {
    fn name(&self) -> &str {
        "quadratic"
    }
    fn dim(&self) -> usize {
        self.q.h.nrows()
    }
    fn value(&self, x: &DVector<f64>) -> f64 {
        self.q.value(x)
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.q.h * x
    }
    fn hessian(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        self.q.h.clone()
    }
    fn minimizer(&self) -> Option<DVector<f64>> {
        Some(DVector::zeros(self.dim()))
    }
    fn mu_hint(&self) -> Option<f64> {
        Some(self.q.lambda_min)
    }
    fn exact_modulus(&self) -> Option<f64> {
        Some(self.q.lambda_min)
    }
}

/// `exp(−‖x‖²) + ½‖Ax‖²`.
#[derive(Debug, Clone)]
pub struct GaussPlusQuad {
    q: Quad,
    /// Set when `λ_min(AᵀA) ≤ 2`: strong convexity is then only local.
    pub weakly_convex: bool,
}

pub fn make_gauss_plus_quad(spec: &QuadraticSpec) -> Result<GaussPlusQuad, ObjectiveError> {
    let q = Quad::new(spec)?;
    let weakly_convex = q.lambda_min <= GAUSS_CURVATURE_DEFICIT;
    Ok(GaussPlusQuad { q, weakly_convex })
}

impl Objective for GaussPlusQuad {
    fn name(&self) -> &str {
        "gauss_quad"
    }
    fn dim(&self) -> usize {
        self.q.h.nrows()
    }
    fn value(&self, x: &DVector<f64>) -> f64 {
        (-x.norm_squared()).exp() + self.q.value(x)
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let g = (-x.norm_squared()).exp();
        &self.q.h * x - x * (2.0 * g)
    }
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let n = self.dim();
        let g = (-x.norm_squared()).exp();
        (x * x.transpose() * 4.0 - DMatrix::identity(n, n) * 2.0) * g + &self.q.h
    }
    // Origin is stationary; it is the minimizer once the sum is convex.
    fn minimizer(&self) -> Option<DVector<f64>> {
        (!self.weakly_convex).then(|| DVector::zeros(self.dim()))
    }
    fn mu_hint(&self) -> Option<f64> {
        (!self.weakly_convex).then_some(self.q.lambda_min - GAUSS_CURVATURE_DEFICIT)
    }
}

/// `log Σᵢ (e^{xᵢ} + e^{−xᵢ}) + ½‖Ax‖²`.
#[derive(Debug, Clone)]
pub struct LogSumExpPlusQuad {
    q: Quad,
}

pub fn make_logsumexp_plus_quad(spec: &QuadraticSpec) -> Result<LogSumExpPlusQuad, ObjectiveError> {
    Ok(LogSumExpPlusQuad { q: Quad::new(spec)? })
}

impl LogSumExpPlusQuad {
    // Shifted terms e^{±xᵢ − m} with m = max |xᵢ|, and their sum.
    fn shifted(x: &DVector<f64>) -> (f64, DVector<f64>, DVector<f64>, f64) {
        let m = x.amax();
        let plus = x.map(|v| (v - m).exp());
        let minus = x.map(|v| (-v - m).exp());
        let s = plus.sum() + minus.sum();
        (m, plus, minus, s)
    }
}

impl Objective for LogSumExpPlusQuad {
    fn name(&self) -> &str {
        "logsumexp_quad"
    }
    fn dim(&self) -> usize {
        self.q.h.nrows()
    }
    fn value(&self, x: &DVector<f64>) -> f64 {
        let (m, _, _, s) = Self::shifted(x);
        m + s.ln() + self.q.value(x)
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let (_, plus, minus, s) = Self::shifted(x);
        (plus - minus) / s + &self.q.h * x
    }
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let (_, plus, minus, s) = Self::shifted(x);
        let sinh = (&plus - &minus) / s;
        let cosh = (plus + minus) / s;
        DMatrix::from_diagonal(&cosh) - &sinh * sinh.transpose() + &self.q.h
    }
    fn minimizer(&self) -> Option<DVector<f64>> {
        Some(DVector::zeros(self.dim()))
    }
    // The log-sum-exp term is convex, so λ_min(AᵀA) is a global modulus.
    fn mu_hint(&self) -> Option<f64> {
        Some(self.q.lambda_min)
    }
}

/// `Σᵢ xᵢ⁵⁰ + ½‖Ax‖²`.
#[derive(Debug, Clone)]
pub struct Poly50PlusQuad {
    q: Quad,
}

pub fn make_poly50_plus_quad(spec: &QuadraticSpec) -> Result<Poly50PlusQuad, ObjectiveError> {
    Ok(Poly50PlusQuad { q: Quad::new(spec)? })
}

impl Objective for Poly50PlusQuad {
    fn name(&self) -> &str {
        "poly50_quad"
    }
    fn dim(&self) -> usize {
        self.q.h.nrows()
    }
    fn value(&self, x: &DVector<f64>) -> f64 {
        x.iter().map(|v| v.powi(50)).sum::<f64>() + self.q.value(x)
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        x.map(|v| 50.0 * v.powi(49)) + &self.q.h * x
    }
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_diagonal(&x.map(|v| 2450.0 * v.powi(48))) + &self.q.h
    }
    fn minimizer(&self) -> Option<DVector<f64>> {
        Some(DVector::zeros(self.dim()))
    }
    fn mu_hint(&self) -> Option<f64> {
        Some(self.q.lambda_min)
    }
}

/// Smallest Hessian eigenvalue over `samples`, clamped below at `floor`.
///
/// Returns the exact modulus for quadratics without sampling.
pub fn estimate_mu(obj: &dyn Objective, samples: &[DVector<f64>], floor: f64) -> Result<f64, ObjectiveError> {
    if let Some(mu) = obj.exact_modulus() {
        return Ok(mu.max(floor));
    }
    if samples.is_empty() {
        return Err(ObjectiveError::NoSamples);
    }
    let mins: Vec<f64> = samples.iter().map(|x| min_eigenvalue(&obj.hessian(x))).collect();
    let best = mins.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if best <= 0.0 {
        return Err(ObjectiveError::NonConvexRegion(best));
    }
    let worst = mins.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(worst.max(floor))
}
