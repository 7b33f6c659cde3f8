//! Private mean via local Hájek projections and smooth sensitivity.
//!
//! Indices whose local projection strays too far from the overall mean are
//! down-weighted, which caps how much one point can move the reweighted
//! mean. The noise is then calibrated to a smooth upper bound on that local
//! sensitivity rather than to the global worst case.

pub mod pipeline;
pub mod source;
pub mod state;

pub use pipeline::{degenerate_xi, subgaussian_pipeline, subgaussian_xi, PipelineConfig};
pub use source::{MaterializedSource, ProjectionSource};
pub use state::{
    compute_l, compute_weights, hajek_state, private_mean_local_hajek, release_hajek, smooth_bound_g,
    smooth_sensitivity, HajekParams, HajekState,
};
