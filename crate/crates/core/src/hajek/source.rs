use crate::error::Result;
use crate::scalar::{block_sum, Real};
use crate::ustat::{kernel_values, projections, Dataset, FamilyKind, Kernel, Regularity, SubsetFamily};

/// What the reweighting needs from a kernel evaluated over a subset family.
///
/// The generic implementation stores every kernel value; kernels with
/// structure (such as collision counts) can answer the same questions from
/// sufficient statistics.
pub trait ProjectionSource<T: Real>: Sync {
    fn n(&self) -> usize;
    fn degree(&self) -> usize;
    fn kind(&self) -> FamilyKind;
    fn regularity(&self) -> Regularity;
    /// `A_n`, the mean over the family.
    fn mean(&self) -> T;
    /// `ĥ(i)` for every index. Only called on regular families.
    fn projections(&self) -> Vec<T>;
    /// `(1/M) sum_S [h(X_S) w(S) + a_n (1 - w(S))]` with `w(S) = min_{i in S} weights[i]`.
    fn reweighted_mean(&self, weights: &[T], a_n: T) -> T;
}

/// Kernel values held in memory next to their family.
#[derive(Debug, Clone)]
pub struct MaterializedSource<'a, T> {
    values: Vec<T>,
    family: &'a SubsetFamily,
}

impl<'a, T: Real> MaterializedSource<'a, T> {
    pub fn new<X: Sync, K: Kernel<X, T> + ?Sized>(h: &K, d: &Dataset<X>, family: &'a SubsetFamily) -> Result<Self> {
        Ok(Self { values: kernel_values(h, d, family)?, family })
    }

    pub fn from_values(values: Vec<T>, family: &'a SubsetFamily) -> Result<Self> {
        if values.len() != family.len() {
            return Err(crate::error::Error::ShapeMismatch(format!(
                "{} values for {} subsets",
                values.len(),
                family.len()
            )));
        }
        Ok(Self { values, family })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn family(&self) -> &SubsetFamily {
        self.family
    }

    fn subset_weight(&self, s: usize, weights: &[T]) -> T {
        self.family.subset(s).iter().map(|&i| weights[i as usize]).fold(T::one(), |a, b| if b < a { b } else { a })
    }

    /// `g(X_S)` for every subset.
    pub fn reweighted_values(&self, weights: &[T], a_n: T) -> Vec<T> {
        (0..self.values.len())
            .map(|s| {
                let w = self.subset_weight(s, weights);
                self.values[s] * w + a_n * (T::one() - w)
            })
            .collect()
    }
}

impl<T: Real> ProjectionSource<T> for MaterializedSource<'_, T> {
    fn n(&self) -> usize {
        self.family.n()
    }

    fn degree(&self) -> usize {
        self.family.k()
    }

    fn kind(&self) -> FamilyKind {
        self.family.kind()
    }

    fn regularity(&self) -> Regularity {
        self.family.regularity()
    }

    fn mean(&self) -> T {
        block_sum(self.values.len(), |s| self.values[s]) / T::from_count(self.values.len())
    }

    fn projections(&self) -> Vec<T> {
        projections(&self.values, self.family).expect("regular family has no empty index")
    }

    fn reweighted_mean(&self, weights: &[T], a_n: T) -> T {
        let total = block_sum(self.values.len(), |s| {
            let w = self.subset_weight(s, weights);
            if w == T::one() {
                self.values[s]
            } else {
                self.values[s] * w + a_n * (T::one() - w)
            }
        });
        total / T::from_count(self.values.len())
    }
}
