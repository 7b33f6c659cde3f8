//! Differentially private estimation of U-statistic parameters.
//!
//! Given a dataset `X_1, ..., X_n` and a symmetric kernel `h` of degree `k`,
//! the estimators here release a private approximation of
//! `theta = E h(X_1, ..., X_k)`:
//!
//! * [`coinpress`]: iterative interval shrinking over any subset family,
//!   including the naive disjoint-chunk estimator;
//! * [`hajek`]: reweighting by local Hájek projections with smooth-sensitivity
//!   noise, tight for degenerate and sub-Gaussian kernels;
//! * [`boosting`]: median of chunk estimates to drive the failure probability down.
//!
//! [`applications`] builds a private uniformity tester and a private triangle
//! density estimator for random geometric graphs on top of these.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the `*64` aliases
//! fix the scalar to `f64`.

pub mod applications;
pub mod boosting;
pub mod coinpress;
pub mod dp;
pub mod error;
pub mod hajek;
pub mod report;
pub mod rng;
pub mod scalar;
pub mod ustat;

pub use error::{Error, Result};
pub use report::{BottomReason, Diagnostics, EstimateReport, Outcome};
pub use rng::{seeded, substream, StdStream};
pub use scalar::Real;

pub type EstimateReport64 = EstimateReport<f64>;
pub type Diagnostics64 = Diagnostics<f64>;
pub type HajekParams64 = hajek::HajekParams<f64>;
pub type HajekState64 = hajek::HajekState<f64>;
pub type TailBounds64 = coinpress::TailBounds<f64>;
pub type IntervalState64 = coinpress::IntervalState<f64>;
pub type VarianceProfile64 = ustat::VarianceProfile<f64>;
pub type TestDecision64 = applications::TestDecision<f64>;
pub type TriangleOutcome64 = applications::TriangleOutcome<f64>;
