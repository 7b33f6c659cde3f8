//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point type the estimators are generic over: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Lossy literal conversion; every `f64` is representable (possibly rounded) in both impls.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_count(x: usize) -> Self {
        Self::from_usize(x).expect("count representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("real converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

const SUM_BLOCK: usize = 4096;

/// Parallel sum of `f(0) + ... + f(len-1)` with a reduction order that does
/// not depend on thread scheduling, so repeated runs agree bitwise.
pub(crate) fn block_sum<T, F>(len: usize, f: F) -> T
where
    T: Real,
    F: Fn(usize) -> T + Sync,
{
    use rayon::prelude::*;
    let blocks = len.div_ceil(SUM_BLOCK);
    let partial: Vec<T> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let end = len.min((b + 1) * SUM_BLOCK);
            (b * SUM_BLOCK..end).fold(T::zero(), |acc, i| acc + f(i))
        })
        .collect();
    partial.into_iter().fold(T::zero(), |a, b| a + b)
}
