//! Mean and covariance asymptotics for renewal-reward processes with
//! multivariate rewards.
//!
//! A model is a sequence of independent cycles `(T_n, X_1n, ..., X_Ln)`
//! whose coordinates may depend on each other within a cycle. The cumulative
//! reward `R(t)` satisfies
//!
//! ```text
//! E R(t)   = a t + b + o(1)
//! Cov R(t) = C t + D + o(1)
//! ```
//!
//! This crate computes `a`, `b`, `C` and `D` exactly from the model, builds
//! the normal approximation `N(a t + b, C t + D)`, and checks everything
//! against a deterministic parallel Monte Carlo simulator.
//!
//! ```
//! use rrcov::{asymptotics, CycleBuilder, Delay, ModelSpec, Primitive};
//!
//! let (cycle, names) = CycleBuilder::new()
//!     .component("u", Primitive::exponential(1.0)?)
//!     .time(0.0, &[("u", 1.0)])
//!     .reward("count", 1.0, &[])
//!     .build()?;
//! let spec = ModelSpec::new(cycle, names, Delay::Ordinary, false)?;
//! let summary = asymptotics::summarize(&spec.cycle_moments()?)?;
//! assert_eq!(summary.a, vec![1.0]);
//! assert_eq!(summary.c[(0, 0)], 1.0);
//! # Ok::<(), rrcov::Error>(())
//! ```
//!
//! The guide in `book/` walks through each piece.

pub mod asymptotics;
pub mod distributions;
mod error;
pub mod gaussian;
pub mod linalg;
pub mod model;
pub mod simulate;

pub use asymptotics::{summarize, AsymptoticSummary};
pub use distributions::Primitive;
pub use error::{Error, Result};
pub use gaussian::{expected_min_bivariate, pd_threshold, GaussianApprox, PdThreshold};
pub use linalg::Matrix;
pub use model::{CycleBuilder, CycleMoments, CycleSpec, Delay, ModelSpec};
pub use simulate::{compare, simulate, CompareTable, SimConfig, SimEstimate};

// Compile and run the guide's code listings as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/models.md")]
    mod models {}
    #[doc = include_str!("../../../book/src/moments.md")]
    mod moments {}
    #[doc = include_str!("../../../book/src/constants.md")]
    mod constants {}
    #[doc = include_str!("../../../book/src/approximation.md")]
    mod approximation {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
}
