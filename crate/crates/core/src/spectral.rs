//! Singular-value machinery: thin SVD, trace and spectral norms, spectral
//! soft-thresholding and projection onto the spectral-norm ball.
//!
//! The SVD is computed by a deterministic dense LAPACK-style routine; the same
//! input always yields the same factors. Singular-vector signs are not
//! normalized, so callers should only rely on `U f(S) V^T` products or spans.

use faer::{Accum, Mat, Par};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Singular values below this fraction of the largest count as zero when
/// reporting rank.
pub const RANK_NOISE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct SvdFactors {
    /// Left singular vectors, `rows x r`.
    pub u: Matrix,
    /// Singular values, nonincreasing, `r = min(rows, cols)`.
    pub s: Vec<f64>,
    /// Right singular vectors, `cols x r`.
    pub v: Matrix,
}

impl SvdFactors {
    /// `U diag(f(s)) V^T`, skipping columns where `f` vanishes.
    pub fn recompose_with(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let (m, n) = (self.u.rows(), self.v.rows());
        let weights: Vec<(usize, f64)> = self
            .s
            .iter()
            .enumerate()
            .map(|(j, &s)| (j, f(s)))
            .filter(|&(_, w)| w != 0.0)
            .collect();
        if weights.is_empty() {
            return Matrix::zeros(m, n);
        }
        let r = weights.len();
        let mut us = Mat::<f64>::zeros(m, r);
        let mut vr = Mat::<f64>::zeros(n, r);
        for (c, &(j, w)) in weights.iter().enumerate() {
            for i in 0..m {
                us[(i, c)] = self.u.get(i, j) * w;
            }
            for i in 0..n {
                vr[(i, c)] = self.v.get(i, j);
            }
        }
        let mut out = Mat::<f64>::zeros(m, n);
        faer::linalg::matmul::matmul(
            out.as_mut(),
            Accum::Replace,
            us.as_ref(),
            vr.as_ref().transpose(),
            1.0,
            Par::Seq,
        );
        Matrix::from_faer(out.as_ref())
    }

    pub fn recompose(&self) -> Matrix {
        self.recompose_with(|s| s)
    }

    /// Number of singular values above `RANK_NOISE_FLOOR * s[0]`.
    pub fn numerical_rank(&self) -> usize {
        numerical_rank(&self.s, RANK_NOISE_FLOOR)
    }
}

/// Count of `s_j > rel_tol * s_0`; zero for an all-zero spectrum.
pub fn numerical_rank(s: &[f64], rel_tol: f64) -> usize {
    match s.first() {
        Some(&top) if top > 0.0 => s.iter().filter(|&&v| v > rel_tol * top).count(),
        _ => 0,
    }
}

pub fn svd_thin(m: &Matrix) -> Result<SvdFactors> {
    let svd = m.as_faer().thin_svd().map_err(|_| Error::SvdFailed)?;
    let s: Vec<f64> = svd.S().column_vector().iter().map(|v| v.max(0.0)).collect();
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::SvdFailed);
    }
    Ok(SvdFactors { u: Matrix::from_faer(svd.U()), s, v: Matrix::from_faer(svd.V()) })
}

/// Singular values only, nonincreasing.
pub fn singular_values(m: &Matrix) -> Result<Vec<f64>> {
    let mut s = m.as_faer().singular_values().map_err(|_| Error::SvdFailed)?;
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::SvdFailed);
    }
    s.iter_mut().for_each(|v| *v = v.max(0.0));
    Ok(s)
}

pub fn trace_norm(m: &Matrix) -> Result<f64> {
    Ok(singular_values(m)?.iter().sum())
}

pub fn spectral_norm(m: &Matrix) -> Result<f64> {
    Ok(singular_values(m)?.first().copied().unwrap_or(0.0))
}

fn check_threshold(t: f64) -> Result<()> {
    if t < 0.0 || t.is_nan() {
        Err(Error::NegativeThreshold(t))
    } else {
        Ok(())
    }
}

/// Spectral soft-thresholding `U max(S - t, 0) V^T`, the minimizer of
/// `0.5 ||X - M||_F^2 + t ||X||_*`.
pub fn prox_trace(m: &Matrix, t: f64) -> Result<Matrix> {
    Ok(prox_trace_with_norm(m, t)?.0)
}

/// Like [`prox_trace`], also returning the trace norm of the result.
pub fn prox_trace_with_norm(m: &Matrix, t: f64) -> Result<(Matrix, f64)> {
    check_threshold(t)?;
    let f = svd_thin(m)?;
    let norm = f.s.iter().map(|s| (s - t).max(0.0)).sum();
    Ok((f.recompose_with(|s| (s - t).max(0.0)), norm))
}

/// Projection onto `{X : ||X|| <= t}`: `U min(S, t) V^T`.
pub fn project_spectral_ball(m: &Matrix, t: f64) -> Result<Matrix> {
    check_threshold(t)?;
    let f = svd_thin(m)?;
    if f.s.first().is_none_or(|&s| s <= t) {
        return Ok(m.clone());
    }
    Ok(f.recompose_with(|s| s.min(t)))
}
