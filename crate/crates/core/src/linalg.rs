//! Dense symmetric linear solves used by every integration step.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Relative residual a returned solution must achieve.
pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("singular linear system (relative residual {residual:e})")]
    Singular { residual: f64 },
    #[error("dimension mismatch: matrix is {rows}x{cols}, right-hand side has length {len}")]
    Dimension { rows: usize, cols: usize, len: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factorization {
    Cholesky,
    Lu,
}

/// Solution of `M z = b` with diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Solve {
    pub z: DVector<f64>,
    /// `‖M z − b‖ / ‖b‖`, or the absolute residual when `b = 0`.
    pub residual: f64,
    /// Cheap condition estimate: the squared ratio of extreme Cholesky
    /// pivots, or of extreme `U` pivots for the LU fallback.
    pub condition: f64,
    pub route: Factorization,
}

/// Solves `M z = b` for symmetric `M`.
///
/// Tries a Cholesky factorization first and falls back to LU with partial
/// pivoting when `M` is not numerically positive definite. One step of
/// iterative refinement is applied in both routes.
pub fn solve_spd(m: &DMatrix<f64>, b: &DVector<f64>) -> Result<Solve, LinalgError> {
    if !m.is_square() || m.nrows() != b.len() {
        return Err(LinalgError::Dimension { rows: m.nrows(), cols: m.ncols(), len: b.len() });
    }
    let b_norm = b.norm();
    let scale = if b_norm > 0.0 { b_norm } else { 1.0 };

    if let Some(chol) = m.clone().cholesky() {
        let diag = chol.l_dirty().diagonal();
        let condition = pivot_ratio(diag.iter().copied()).powi(2);
        let mut z = chol.solve(b);
        let r = b - m * &z;
        z += chol.solve(&r);
        let residual = (b - m * &z).norm() / scale;
        if z.iter().all(|v| v.is_finite()) && residual <= RESIDUAL_TOL {
            return Ok(Solve { z, residual, condition, route: Factorization::Cholesky });
        }
    }

    let lu = m.clone().lu();
    let condition = pivot_ratio(lu.u().diagonal().iter().copied());
    let Some(mut z) = lu.solve(b) else {
        return Err(LinalgError::Singular { residual: f64::INFINITY });
    };
    let r = b - m * &z;
    if let Some(dz) = lu.solve(&r) {
        z += dz;
    }
    let residual = (b - m * &z).norm() / scale;
    if !z.iter().all(|v| v.is_finite()) || residual > RESIDUAL_TOL || !condition.is_finite() {
        return Err(LinalgError::Singular { residual });
    }
    Ok(Solve { z, residual, condition, route: Factorization::Lu })
}

fn pivot_ratio(pivots: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = pivots.fold((f64::INFINITY, 0.0_f64), |(lo, hi), p| (lo.min(p.abs()), hi.max(p.abs())));
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigenvalues().min()
}
