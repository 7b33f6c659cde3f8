//! Kernels, datasets, subset families, U-statistic evaluation and the
//! variance calculus of conditional variances.

pub mod binom;
pub mod dataset;
pub mod evaluate;
pub mod family;
pub mod kernel;
pub mod variance;
pub mod zetas;

pub use binom::binomial;
pub use dataset::Dataset;
pub use evaluate::{evaluate_ustat, kernel_values, local_projection, projections};
pub use family::{
    all_tuples, all_tuples_with_cap, check_family_regularity, disjoint_chunks, subsample_family, FamilyKind,
    Regularity, SubsetFamily, Violation, DEFAULT_ENUMERATION_CAP,
};
pub use kernel::{FnKernel, Kernel, Tail};
pub use variance::{
    hoeffding_deltas, negative_deltas, variance_leading_term, variance_of_ustat, variance_via_deltas,
    zetas_from_deltas, VarianceProfile,
};
pub use zetas::{empirical_zeta, ZetaEstimate};
