//! The refined normal approximation `R(t) ~ N(a t + b, C t + D)`.
//!
//! `D` need not be positive definite, so the refined covariance is only a
//! covariance for `t` beyond a threshold `t0`. Since `C` is positive
//! definite, `C t + D` increases in the Loewner order and the set of `t`
//! where it is positive definite is an open half-line `(t0, inf)`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::asymptotics::AsymptoticSummary;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Absolute width at which the threshold bisection stops.
pub const THRESHOLD_TOL: f64 = 1e-9;

/// Where `C t + D` becomes positive definite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "t0", rename_all = "kebab-case")]
pub enum PdThreshold {
    /// `D` itself is positive definite, so every `t >= 0` works.
    AlwaysPd,
    /// Positive definite for `t > t0` only.
    Above(f64),
}

impl PdThreshold {
    /// `t0`, with `0` for [`PdThreshold::AlwaysPd`].
    pub fn value(&self) -> f64 {
        match *self {
            PdThreshold::AlwaysPd => 0.0,
            PdThreshold::Above(t0) => t0,
        }
    }

    pub fn admits(&self, t: f64) -> bool {
        match *self {
            PdThreshold::AlwaysPd => t >= 0.0,
            PdThreshold::Above(t0) => t > t0,
        }
    }
}

/// Smallest `t0` such that `C t + D` is positive definite for all `t > t0`,
/// located by bisection on the Cholesky-success predicate.
pub fn pd_threshold(c: &Matrix, d: &Matrix) -> Result<PdThreshold> {
    if c.dim() != d.dim() {
        return Err(Error::InvalidInput(format!(
            "C is {0}x{0} but D is {1}x{1}",
            c.dim(),
            d.dim()
        )));
    }
    if !c.is_positive_definite() {
        return Err(Error::InvalidInput(
            "covariance rate matrix C is not positive definite".into(),
        ));
    }
    if d.is_positive_definite() {
        return Ok(PdThreshold::AlwaysPd);
    }
    let pd_at = |t: f64| c.scale_add(t, d).is_positive_definite();
    let mut hi = 1.0;
    while !pd_at(hi) {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::InvalidInput(
                "C t + D never becomes positive definite".into(),
            ));
        }
    }
    let mut lo = 0.0;
    while hi - lo > THRESHOLD_TOL {
        let mid = 0.5 * (lo + hi);
        if pd_at(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(PdThreshold::Above(hi))
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal distribution function, via `erfc` so both tails keep
/// full relative precision.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// `E min(W, V)` for a bivariate normal `(W, V)`.
///
/// With `theta = sd(W - V)` this is
/// `Phi((mV - mW)/theta) mW + Phi((mW - mV)/theta) mV - theta phi((mW - mV)/theta)`,
/// and `min(mW, mV)` when `theta = 0`.
pub fn expected_min_bivariate(
    mean_w: f64,
    mean_v: f64,
    var_w: f64,
    var_v: f64,
    cov: f64,
) -> Result<f64> {
    if !(var_w >= 0.0 && var_v >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "variances must be nonnegative, got {var_w} and {var_v}"
        )));
    }
    let bound = (var_w * var_v).sqrt();
    if cov.is_nan() || cov.abs() > bound + 1e-12 * bound.max(f64::MIN_POSITIVE) {
        return Err(Error::InvalidInput(format!(
            "|cov| = {} exceeds sqrt(var_w var_v) = {bound}",
            cov.abs()
        )));
    }
    let var_diff = var_w + var_v - 2.0 * cov;
    // Rounding can leave a tiny negative number for perfectly correlated
    // coordinates; anything else tiny relative to the variances is zero too.
    let theta = if var_diff <= 1e-14 * (var_w + var_v) {
        0.0
    } else {
        var_diff.sqrt()
    };
    if theta == 0.0 {
        return Ok(mean_w.min(mean_v));
    }
    let z = (mean_w - mean_v) / theta;
    Ok(normal_cdf(-z) * mean_w + normal_cdf(z) * mean_v - theta * normal_pdf(z))
}

/// Time-parametrized Gaussian approximation built from an
/// [`AsymptoticSummary`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianApprox {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Matrix,
    pub d: Matrix,
    /// `None` when `C` is singular; the `D`-refined covariance is then only
    /// usable where it is positive semidefinite.
    pub threshold: Option<PdThreshold>,
}

/// Mean vector and covariance matrix at one time point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    pub mean: Vec<f64>,
    pub cov: Matrix,
}

impl GaussianApprox {
    pub fn new(summary: &AsymptoticSummary) -> Self {
        GaussianApprox {
            a: summary.a.clone(),
            b: summary.b.clone(),
            c: summary.c.clone(),
            d: summary.d.clone(),
            threshold: pd_threshold(&summary.c, &summary.d).ok(),
        }
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    /// Mean `a t (+ b)` and covariance `C t (+ D)`.
    pub fn params_at(&self, t: f64, use_b: bool, use_d: bool) -> Result<GaussianParams> {
        let mean = self
            .a
            .iter()
            .zip(&self.b)
            .map(|(a, b)| if use_b { a * t + b } else { a * t })
            .collect();
        let cov = if use_d {
            let cov = self.c.scale_add(t, &self.d);
            let ok = match self.threshold {
                Some(th) => th.admits(t) && cov.is_positive_definite(),
                None => cov.is_positive_semidefinite(1e-12),
            };
            if !ok {
                return Err(Error::NotPositiveDefinite {
                    t,
                    t0: self.threshold.map_or(f64::NAN, |th| th.value()),
                });
            }
            cov
        } else {
            self.c.scaled(t)
        };
        Ok(GaussianParams { mean, cov })
    }

    /// Approximate `E min(R_1(t), R_2(t))` for a two-coordinate model.
    pub fn expected_min(&self, t: f64, use_b: bool, use_d: bool) -> Result<f64> {
        if self.dim() != 2 {
            return Err(Error::UnsupportedDimension {
                expected: 2,
                found: self.dim(),
            });
        }
        let p = self.params_at(t, use_b, use_d)?;
        expected_min_bivariate(
            p.mean[0],
            p.mean[1],
            p.cov[(0, 0)],
            p.cov[(1, 1)],
            p.cov[(0, 1)],
        )
    }
}
