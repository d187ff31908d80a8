//! Closed-form constants of the mean and covariance expansions
//!
//! ```text
//! E R_i(t)            = a_i t    + b_i    + o(1)
//! Cov(R_i(t), R_j(t)) = c_ij t   + d_ij   + o(1)
//! ```
//!
//! Every function here is a direct formula over [`CycleMoments`]; indices
//! are reward coordinates (zero based). The ordinary-case quantities carry a
//! `ring` / `_ordinary` suffix; their delayed counterparts add first-cycle
//! terms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::CycleMoments;

/// Relative tolerance for the runtime cross-check of the two `c_ij` forms.
pub const COV_RATE_FORM_TOL: f64 = 1e-10;

/// `a_i = E X_i / E T`.
pub fn growth_rate(mom: &CycleMoments, i: usize) -> f64 {
    mom.lambda1[i] / mom.mu1
}

/// Ordinary-case constant of the mean curve.
pub fn mean_correction_ordinary(mom: &CycleMoments, i: usize) -> f64 {
    let a = growth_rate(mom, i);
    a * mom.mu2 / (2.0 * mom.mu1) - mom.m11[i] / mom.mu1
}

/// Delayed-case constant of the mean curve.
pub fn mean_correction(mom: &CycleMoments, i: usize) -> f64 {
    let a = growth_rate(mom, i);
    mean_correction_ordinary(mom, i) + mom.delay.ex0[i] - a * mom.delay.et0
}

/// Integral over `[0, inf)` of the remainder of the ordinary mean curve,
/// `E R_i(t) - a_i t - b_ring_i`.
pub fn ell(mom: &CycleMoments, i: usize) -> f64 {
    let (mu1, mu2, mu3) = (mom.mu1, mom.mu2, mom.mu3);
    let l1 = mom.lambda1[i];
    l1 * mu2 * mu2 / (4.0 * mu1 * mu1 * mu1) - l1 * mu3 / (6.0 * mu1 * mu1)
        + mom.m21[i] / (2.0 * mu1)
        - mu2 * mom.m11[i] / (2.0 * mu1 * mu1)
}

/// Growth rate of the ordinary product-reward process `sum X_i,n X_j,n`.
pub fn pair_rate(mom: &CycleMoments, i: usize, j: usize) -> f64 {
    mom.p011[(i, j)] / mom.mu1
}

/// Mean-curve constant of the ordinary product-reward process.
pub fn pair_correction_ordinary(mom: &CycleMoments, i: usize, j: usize) -> f64 {
    pair_rate(mom, i, j) * mom.mu2 / (2.0 * mom.mu1) - mom.p111[(i, j)] / mom.mu1
}

/// `c_ij` through `E T^-1 Cov(X_i - a_i T, X_j - a_j T)`.
pub fn cov_rate_covariance_form(mom: &CycleMoments, i: usize, j: usize) -> f64 {
    let (ai, aj) = (growth_rate(mom, i), growth_rate(mom, j));
    let second = mom.p011[(i, j)] - aj * mom.m11[i] - ai * mom.m11[j] + ai * aj * mom.mu2;
    // E[X_i - a_i T] vanishes by the definition of a_i, up to rounding.
    let gi = mom.lambda1[i] - ai * mom.mu1;
    let gj = mom.lambda1[j] - aj * mom.mu1;
    (second - gi * gj) / mom.mu1
}

/// `c_ij` through `a_ij + a_i b_ring_j + a_j b_ring_i`.
pub fn cov_rate_pair_form(mom: &CycleMoments, i: usize, j: usize) -> f64 {
    pair_rate(mom, i, j)
        + growth_rate(mom, i) * mean_correction_ordinary(mom, j)
        + growth_rate(mom, j) * mean_correction_ordinary(mom, i)
}

/// Relative disagreement between the two forms of `c_ij`.
pub fn cov_rate_residual(mom: &CycleMoments, i: usize, j: usize) -> f64 {
    let c = cov_rate_covariance_form(mom, i, j);
    let alt = cov_rate_pair_form(mom, i, j);
    (c - alt).abs() / c.abs().max(1.0)
}

/// Covariance rate `c_ij`. Both algebraic forms are evaluated; the
/// covariance form is returned and disagreement beyond
/// [`COV_RATE_FORM_TOL`] is an internal error.
pub fn cov_rate(mom: &CycleMoments, i: usize, j: usize) -> Result<f64> {
    let c = cov_rate_covariance_form(mom, i, j);
    let residual = cov_rate_residual(mom, i, j);
    if residual.is_nan() || residual > COV_RATE_FORM_TOL {
        return Err(Error::InternalConsistency(format!(
            "covariance rate forms disagree for ({i}, {j}): relative residual {residual:e}"
        )));
    }
    Ok(c)
}

/// Ordinary-case constant of the covariance curve.
pub fn cov_correction_ordinary(mom: &CycleMoments, i: usize, j: usize) -> f64 {
    mean_correction_ordinary(mom, i) * mean_correction_ordinary(mom, j)
        + pair_correction_ordinary(mom, i, j)
        + 2.0 * growth_rate(mom, i) * ell(mom, j)
        + 2.0 * growth_rate(mom, j) * ell(mom, i)
}

/// Delayed-case constant of the covariance curve.
pub fn cov_correction(mom: &CycleMoments, i: usize, j: usize) -> Result<f64> {
    let d = &mom.delay;
    let (ai, aj) = (growth_rate(mom, i), growth_rate(mom, j));
    Ok(
        cov_correction_ordinary(mom, i, j) - cov_rate(mom, i, j)? * d.et0
            + ai * aj * d.var_t0()
            + d.cov_x0(i, j)
            - ai * d.cov_t0_x0(j)
            - aj * d.cov_t0_x0(i),
    )
}

/// The single-coordinate variance constant written out with univariate
/// moments only (`E X^2`, `E T X^2`) instead of the pair moments. It must
/// agree with `cov_correction(mom, i, i)`.
pub fn variance_correction(mom: &CycleMoments, i: usize) -> f64 {
    let (mu1, mu2) = (mom.mu1, mom.mu2);
    let a = mom.lambda1[i] / mu1;
    let b_ring = a * mu2 / (2.0 * mu1) - mom.m11[i] / mu1;
    let b_ring_xx = mu2 * mom.lambda2[i] / (2.0 * mu1 * mu1) - mom.m12[i] / mu1;
    let ell = ell(mom, i);
    let d_ring = b_ring * b_ring + b_ring_xx + 4.0 * a * ell;
    let c = (mom.lambda2[i] - 2.0 * a * mom.m11[i] + a * a * mu2) / mu1;
    let d = &mom.delay;
    let var_x0 = d.ex0x0[(i, i)] - d.ex0[i] * d.ex0[i];
    d_ring - c * d.et0 + a * a * d.var_t0() + var_x0 - 2.0 * a * d.cov_t0_x0(i)
}

/// All constants for an `L`-coordinate model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticSummary {
    pub a: Vec<f64>,
    pub b_ring: Vec<f64>,
    pub b: Vec<f64>,
    pub ell: Vec<f64>,
    pub a_pair: Matrix,
    pub b_ring_pair: Matrix,
    pub c: Matrix,
    pub d_ring: Matrix,
    pub d: Matrix,
    /// Largest relative disagreement between the two `c_ij` forms.
    pub c_form_residual: f64,
}

impl AsymptoticSummary {
    pub fn dim(&self) -> usize {
        self.a.len()
    }
}

pub fn summarize(mom: &CycleMoments) -> Result<AsymptoticSummary> {
    let n = mom.dim();
    let per = |f: fn(&CycleMoments, usize) -> f64| (0..n).map(|i| f(mom, i)).collect::<Vec<_>>();
    let mut residual = 0.0f64;
    let c = Matrix::symmetric_from_fn(n, |i, j| {
        residual = residual.max(cov_rate_residual(mom, i, j));
        cov_rate(mom, i, j)
    })?;
    Ok(AsymptoticSummary {
        a: per(growth_rate),
        b_ring: per(mean_correction_ordinary),
        b: per(mean_correction),
        ell: per(ell),
        a_pair: Matrix::symmetric_from_fn(n, |i, j| Ok::<_, Error>(pair_rate(mom, i, j)))?,
        b_ring_pair: Matrix::symmetric_from_fn(n, |i, j| {
            Ok::<_, Error>(pair_correction_ordinary(mom, i, j))
        })?,
        c,
        d_ring: Matrix::symmetric_from_fn(n, |i, j| {
            Ok::<_, Error>(cov_correction_ordinary(mom, i, j))
        })?,
        d: Matrix::symmetric_from_fn(n, |i, j| cov_correction(mom, i, j))?,
        c_form_residual: residual,
    })
}
