//! Error of the Gaussian expected-minimum approximation against simulation.

use serde::{Deserialize, Serialize};

use super::{simulate, SimConfig};
use crate::asymptotics::summarize;
use crate::error::{Error, Result};
use crate::gaussian::{GaussianApprox, PdThreshold};
use crate::model::ModelSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub t: f64,
    /// Simulated `E min(R_1(t), R_2(t))`.
    pub m_hat: f64,
    pub se_m_hat: f64,
    /// Approximation with covariance `C t`.
    pub m_tilde_plain: f64,
    /// Approximation with covariance `C t + D`; `None` where that matrix is
    /// not a valid covariance.
    pub m_tilde_refined: Option<f64>,
    pub err_plain: f64,
    pub err_refined: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareTable {
    pub use_b: bool,
    pub threshold: Option<PdThreshold>,
    pub rows: Vec<CompareRow>,
}

/// Simulates the model and evaluates both approximations on the grid.
/// `use_b` applies to both curves.
pub fn compare(spec: &ModelSpec, cfg: &SimConfig, use_b: bool) -> Result<CompareTable> {
    if spec.dim() != 2 {
        return Err(Error::UnsupportedDimension {
            expected: 2,
            found: spec.dim(),
        });
    }
    let summary = summarize(&spec.cycle_moments()?)?;
    let approx = GaussianApprox::new(&summary);
    let est = simulate(spec, cfg)?;
    let rows = est
        .points
        .iter()
        .map(|p| {
            let plain = approx.expected_min(p.t, use_b, false)?;
            let refined = match approx.expected_min(p.t, use_b, true) {
                Ok(v) => Some(v),
                Err(Error::NotPositiveDefinite { .. }) => None,
                Err(e) => return Err(e),
            };
            Ok(CompareRow {
                t: p.t,
                m_hat: p.min_mean,
                se_m_hat: p.se_min,
                m_tilde_plain: plain,
                m_tilde_refined: refined,
                err_plain: plain - p.min_mean,
                err_refined: refined.map(|r| r - p.min_mean),
            })
        })
        .collect::<Result<_>>()?;
    Ok(CompareTable {
        use_b,
        threshold: approx.threshold,
        rows,
    })
}
