//! Noise mechanisms, sensitivity oracles and privacy accounting.

pub mod budget;
pub mod noise;
pub mod release;
pub mod sensitivity;

pub use budget::{Composition, LedgerEntry, ParallelScope, PrivacyBudget};
pub use noise::{
    laplace, laplace_cdf, quartic_cdf, quartic_density, quartic_draw, quartic_noise, quartic_quantile, NoiseLaw,
    NoiseSample, QUARTIC_ACCEPTANCE,
};
pub use release::{
    global_sensitivity_release, smooth_sensitivity_release, smooth_sensitivity_release_scaled, SMOOTH_NOISE_MULTIPLIER,
};
pub use sensitivity::{all_datasets, brute_force_global_sensitivity, brute_force_local_sensitivity};
