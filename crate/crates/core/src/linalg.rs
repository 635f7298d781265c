//! Small complex linear-algebra helpers over nalgebra: SVD-based condition
//! numbers, rank-revealing solves and determinants.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Singular values, descending.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// 2-norm condition number `sigma_max / sigma_min`; infinite when rank deficient.
pub fn cond(m: &CMatrix) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// Condition limits applied before any inversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionLimits {
    /// Above this a warning is logged.
    pub warn: f64,
    /// Above this the inversion is refused.
    pub error: f64,
}

impl Default for ConditionLimits {
    fn default() -> Self {
        Self {
            warn: 1e6,
            error: 1e12,
        }
    }
}

impl ConditionLimits {
    /// Returns `cond(m)` or an [`Error::IllConditioned`] naming `what`.
    pub fn check(&self, m: &CMatrix, what: &str) -> Result<f64> {
        let c = cond(m);
        if !(c <= self.error) {
            return Err(Error::IllConditioned {
                what: what.to_string(),
                cond: c,
                limit: self.error,
            });
        }
        if c > self.warn {
            log::warn!("{what} is poorly conditioned: cond = {c:.3e}");
        }
        Ok(c)
    }
}

fn require_square(m: &CMatrix, what: &str) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Inverse of a square matrix through its SVD.
pub fn inverse(m: &CMatrix, what: &str) -> Result<CMatrix> {
    require_square(m, what)?;
    let svd = m.clone().svd(true, true);
    svd.pseudo_inverse(0.0)
        .map_err(|e| Error::Singular(format!("{what} ({e})")))
}

/// Solves `m x = b` for square `m` through its SVD.
pub fn solve(m: &CMatrix, b: &CVector, what: &str) -> Result<CVector> {
    require_square(m, what)?;
    if b.len() != m.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "{what}: right-hand side of length {} for {} rows",
            b.len(),
            m.nrows()
        )));
    }
    let svd = m.clone().svd(true, true);
    svd.solve(b, 0.0)
        .map_err(|e| Error::Singular(format!("{what} ({e})")))
}

/// Minimum-norm least-squares solution of `m x ~ b` through the SVD.
pub fn least_squares(m: &CMatrix, b: &CVector, what: &str) -> Result<CVector> {
    if b.len() != m.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "{what}: right-hand side of length {} for {} rows",
            b.len(),
            m.nrows()
        )));
    }
    let svd = m.clone().svd(true, true);
    let tol = svd.singular_values.max() * f64::EPSILON * m.nrows().max(m.ncols()) as f64;
    svd.solve(b, tol)
        .map_err(|e| Error::Singular(format!("{what} ({e})")))
}

/// Determinant by LU factorisation.
pub fn determinant(m: &CMatrix) -> Result<Complex64> {
    require_square(m, "determinant argument")?;
    Ok(m.clone().lu().determinant())
}
