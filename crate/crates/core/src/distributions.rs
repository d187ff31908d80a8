//! Primitive scalar random variables.
//!
//! Every cycle coordinate of a model is an affine combination of independent
//! primitives, so these are the only places where distributional facts enter
//! the analytic path. Each primitive knows its raw moments in closed form and
//! can draw exact variates.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Highest raw moment order [`Primitive::raw_moment`] will compute.
pub const MAX_MOMENT_ORDER: u32 = 12;

/// A scalar distribution with all moments finite.
///
/// Exponentials are parametrized by their mean, not their rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Primitive {
    Exponential { mean: f64 },
    Gamma { shape: f64, scale: f64 },
    Uniform { lo: f64, hi: f64 },
    Deterministic { value: f64 },
}

impl Primitive {
    pub fn exponential(mean: f64) -> Result<Self> {
        let p = Primitive::Exponential { mean };
        p.validate()?;
        Ok(p)
    }

    pub fn gamma(shape: f64, scale: f64) -> Result<Self> {
        let p = Primitive::Gamma { shape, scale };
        p.validate()?;
        Ok(p)
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        let p = Primitive::Uniform { lo, hi };
        p.validate()?;
        Ok(p)
    }

    pub fn deterministic(value: f64) -> Result<Self> {
        let p = Primitive::Deterministic { value };
        p.validate()?;
        Ok(p)
    }

    /// Checks the parameter constraints. Values deserialized from a model
    /// file bypass the constructors, so model validation calls this too.
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "{name} must be a positive finite number, got {v}"
                )))
            }
        };
        match *self {
            Primitive::Exponential { mean } => positive("exponential mean", mean),
            Primitive::Gamma { shape, scale } => {
                positive("gamma shape", shape)?;
                positive("gamma scale", scale)
            }
            Primitive::Uniform { lo, hi } => {
                if lo.is_finite() && hi.is_finite() && hi > lo {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!(
                        "uniform bounds need finite lo < hi, got [{lo}, {hi}]"
                    )))
                }
            }
            Primitive::Deterministic { value } => {
                if value.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!(
                        "deterministic value must be finite, got {value}"
                    )))
                }
            }
        }
    }

    /// Exact `E[U^k]`.
    pub fn raw_moment(&self, k: u32) -> Result<f64> {
        if k > MAX_MOMENT_ORDER {
            return Err(Error::UnsupportedOrder {
                order: k,
                max: MAX_MOMENT_ORDER,
            });
        }
        if k == 0 {
            return Ok(1.0);
        }
        let value = match *self {
            // k! * mean^k
            Primitive::Exponential { mean } => (1..=k).map(|i| i as f64 * mean).product(),
            // scale^k * shape (shape + 1) ... (shape + k - 1)
            Primitive::Gamma { shape, scale } => {
                (0..k).map(|i| (shape + i as f64) * scale).product()
            }
            // (hi^{k+1} - lo^{k+1}) / ((k+1)(hi-lo)), expanded to avoid the
            // cancellation in the numerator.
            Primitive::Uniform { lo, hi } => {
                let sum: f64 = (0..=k)
                    .map(|j| lo.powi(j as i32) * hi.powi((k - j) as i32))
                    .sum();
                sum / (k + 1) as f64
            }
            Primitive::Deterministic { value } => value.powi(k as i32),
        };
        Ok(value)
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Primitive::Exponential { mean } => mean,
            Primitive::Gamma { shape, scale } => shape * scale,
            Primitive::Uniform { lo, hi } => 0.5 * (lo + hi),
            Primitive::Deterministic { value } => value,
        }
    }

    /// True when the variate is almost surely constant.
    pub fn is_degenerate(&self) -> bool {
        matches!(self, Primitive::Deterministic { .. })
    }

    /// True when the support lies in `[0, inf)`.
    pub fn is_nonnegative(&self) -> bool {
        match *self {
            Primitive::Exponential { .. } | Primitive::Gamma { .. } => true,
            Primitive::Uniform { lo, .. } => lo >= 0.0,
            Primitive::Deterministic { value } => value >= 0.0,
        }
    }

    /// Builds a reusable sampler. Prefer this over [`Primitive::sample`] in
    /// hot loops: the gamma sampler has nontrivial setup cost.
    pub fn sampler(&self) -> Sampler {
        match *self {
            Primitive::Exponential { mean } => Sampler::Exponential(mean),
            Primitive::Gamma { shape, scale } => Sampler::Gamma(
                Gamma::new(shape, scale).expect("gamma parameters validated at construction"),
            ),
            Primitive::Uniform { lo, hi } => Sampler::Uniform { lo, width: hi - lo },
            Primitive::Deterministic { value } => Sampler::Constant(value),
        }
    }

    /// Draws one exact variate.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sampler().sample(rng)
    }
}

/// Prepared exact sampler for a [`Primitive`].
#[derive(Debug, Clone)]
pub enum Sampler {
    Exponential(f64),
    Gamma(Gamma<f64>),
    Uniform { lo: f64, width: f64 },
    Constant(f64),
}

impl Sampler {
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::Exponential(mean) => {
                let e: f64 = Exp1.sample(rng);
                mean * e
            }
            Sampler::Gamma(g) => g.sample(rng),
            Sampler::Uniform { lo, width } => lo + width * rng.random::<f64>(),
            Sampler::Constant(v) => *v,
        }
    }
}
