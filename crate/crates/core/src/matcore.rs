//! Numerical primitives: soft thresholding, thin SVD, and the Euclidean
//! projections onto the nuclear-norm ball and onto the dictionary set
//! `{D : ||D||_* <= tau, ||D||_2 <= 1}`.
//!
//! Both projections act on singular values only. The nuclear and spectral
//! norms are unitarily invariant, so projecting a matrix reduces to projecting
//! its singular-value vector onto a capped simplex and rebuilding the matrix
//! from the original singular vectors.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;

/// Relative threshold (times the leading singular value) below which a
/// singular value does not count toward the numerical rank.
pub const RANK_THRESHOLD: f64 = 1e-6;

const SVD_MAX_ITERATIONS: usize = 10_000;
// nalgebra's own default. At plain machine epsilon the iteration can return
// a wrong decomposition for rank-deficient input instead of failing.
const SVD_EPS: f64 = 5.0 * f64::EPSILON;

#[inline]
pub fn soft_threshold(v: f64, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Thin singular value decomposition `M = U diag(s) V^T` with `s` sorted
/// nonincreasing.
#[derive(Debug, Clone)]
pub struct SvdResult {
    /// `rows x k`, orthonormal columns.
    pub left_vectors: Matrix,
    pub singular_values: Vec<f64>,
    /// `cols x k`, orthonormal columns.
    pub right_vectors: Matrix,
}

impl SvdResult {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// Rebuilds `U diag(values) V^T` with replacement singular values.
    pub fn recompose_with(&self, values: &[f64]) -> Matrix {
        assert_eq!(values.len(), self.singular_values.len());
        let mut scaled = self.left_vectors.clone();
        for (j, &s) in values.iter().enumerate() {
            scaled.column_mut(j).scale_mut(s);
        }
        scaled * self.right_vectors.transpose()
    }

    pub fn recompose(&self) -> Matrix {
        self.recompose_with(&self.singular_values)
    }
}

pub fn thin_svd(m: &Matrix) -> Result<SvdResult> {
    if m.is_empty() {
        return Err(Error::Dimension("SVD of an empty matrix".into()));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("SVD input contains non-finite entries".into()));
    }
    let svd = m
        .clone()
        .try_svd_unordered(true, true, SVD_EPS, SVD_MAX_ITERATIONS)
        .ok_or_else(|| {
            Error::Numerical(format!(
                "SVD of a {}x{} matrix did not converge",
                m.nrows(),
                m.ncols()
            ))
        })?;
    let u = svd.u.expect("left vectors requested");
    let v_t = svd.v_t.expect("right vectors requested");
    let k = svd.singular_values.len();

    // Sort here so the order does not depend on the backend's conventions.
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let mut left = Matrix::zeros(m.nrows(), k);
    let mut right = Matrix::zeros(m.ncols(), k);
    let mut values = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        let s = svd.singular_values[src];
        let flip = if s < 0.0 { -1.0 } else { 1.0 };
        values.push(s.abs());
        left.set_column(dst, &(u.column(src) * flip));
        right.set_column(dst, &v_t.row(src).transpose());
    }
    Ok(SvdResult {
        left_vectors: left,
        singular_values: values,
        right_vectors: right,
    })
}

pub fn singular_values(m: &Matrix) -> Result<Vec<f64>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("SVD input contains non-finite entries".into()));
    }
    let mut values: Vec<f64> = m
        .clone()
        .try_svd(false, false, SVD_EPS, SVD_MAX_ITERATIONS)
        .ok_or_else(|| Error::Numerical("singular values did not converge".into()))?
        .singular_values
        .iter()
        .map(|s| s.abs())
        .collect();
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

pub fn nuclear_norm(m: &Matrix) -> Result<f64> {
    Ok(singular_values(m)?.iter().sum())
}

pub fn spectral_norm(m: &Matrix) -> Result<f64> {
    Ok(singular_values(m)?.first().copied().unwrap_or(0.0))
}

/// Number of singular values above `RANK_THRESHOLD * s_1`.
pub fn numerical_rank(m: &Matrix) -> Result<usize> {
    let s = singular_values(m)?;
    Ok(rank_of_spectrum(&s))
}

pub fn rank_of_spectrum(sorted: &[f64]) -> usize {
    match sorted.first() {
        Some(&top) if top > 0.0 => {
            let cut = RANK_THRESHOLD * top;
            sorted.iter().filter(|&&s| s > cut).count()
        }
        _ => 0,
    }
}

/// Euclidean projection of `v` onto `{x : 0 <= x_i <= cap, sum x_i <= budget}`.
///
/// The solution has the form `x_i = clip(v_i - theta, 0, cap)` with
/// `theta >= 0`; `theta = 0` unless the sum constraint is active, in which case
/// `theta` is found by bisection and then refined from the active set.
/// `cap` may be `f64::INFINITY`.
pub fn project_capped_simplex(v: &[f64], budget: f64, cap: f64) -> Vec<f64> {
    assert!(budget > 0.0, "budget must be positive");
    assert!(cap > 0.0, "cap must be positive");

    let clipped = |theta: f64| -> Vec<f64> { v.iter().map(|&x| (x - theta).clamp(0.0, cap)).collect() };
    let total = |theta: f64| -> f64 { v.iter().map(|&x| (x - theta).clamp(0.0, cap)).sum() };

    if total(0.0) <= budget {
        return clipped(0.0);
    }

    // total() is continuous and nonincreasing in theta, positive at 0 and zero
    // at max(v).
    let mut lo = 0.0;
    let mut hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if total(mid) > budget {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi.abs().max(1.0) {
            break;
        }
    }

    // Refine: with the free/capped sets fixed, theta solves a linear equation.
    let theta = 0.5 * (lo + hi);
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    let mut capped = 0usize;
    for &x in v {
        let shifted = x - theta;
        if shifted >= cap {
            capped += 1;
        } else if shifted > 0.0 {
            free_sum += x;
            free_count += 1;
        }
    }
    let mut best = theta;
    if free_count > 0 {
        let exact = (free_sum - (budget - cap * capped as f64)) / free_count as f64;
        if exact >= 0.0 && (total(exact) - budget).abs() <= (total(theta) - budget).abs() {
            best = exact;
        }
    }
    clipped(best)
}

/// Frobenius projection onto the set `{D : ||D||_* <= tau, ||D||_2 <= 1}`.
pub fn project_to_dictionary_set(m: &Matrix, tau: f64) -> Result<Matrix> {
    project_spectrum(m, tau, 1.0)
}

/// Frobenius projection onto the nuclear-norm ball of the given radius.
pub fn project_nuclear_ball(m: &Matrix, radius: f64) -> Result<Matrix> {
    project_spectrum(m, radius, f64::INFINITY)
}

fn project_spectrum(m: &Matrix, budget: f64, cap: f64) -> Result<Matrix> {
    if budget <= 0.0 {
        return Err(Error::Config(format!("projection radius must be positive, got {budget}")));
    }
    if m.iter().all(|&v| v == 0.0) {
        return Ok(Matrix::zeros(m.nrows(), m.ncols()));
    }
    let svd = thin_svd(m)?;
    let projected = project_capped_simplex(&svd.singular_values, budget, cap);
    Ok(svd.recompose_with(&projected))
}

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power
/// iteration from a fixed start vector.
pub fn psd_spectral_norm(s: &Matrix, iterations: usize, tol: f64) -> f64 {
    let dim = s.nrows();
    if dim == 0 {
        return 0.0;
    }
    let mut x = DVector::from_fn(dim, |i, _| 1.0 + i as f64 / dim as f64);
    x /= x.norm();
    let mut estimate = 0.0;
    for _ in 0..iterations {
        let y = s * &x;
        let norm = y.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = x.dot(&y);
        x = y / norm;
        if (next - estimate).abs() <= tol * next.abs().max(f64::MIN_POSITIVE) {
            estimate = next;
            break;
        }
        estimate = next;
    }
    estimate.max(0.0)
}

/// `<A, B>_F`.
#[inline]
pub fn frobenius_dot(a: &Matrix, b: &Matrix) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x * y).sum()
}

pub fn all_finite(m: &Matrix) -> bool {
    m.iter().all(|v| v.is_finite())
}
