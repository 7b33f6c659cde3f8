//! Pair of datasets on which any private estimator of a degree-k equality
//! U-statistic must pay for the gap between them.

use log::warn;
use upriv::ustat::{binomial, Dataset, FnKernel};

#[derive(Debug, Clone, PartialEq)]
pub struct AdversarialFixture {
    pub n: usize,
    pub k: usize,
    pub eps: f64,
    /// Number of leading ones in `d0`.
    pub b: usize,
    /// Extra ones in `d1`, `ceil(1/eps)`.
    pub extra: usize,
    pub d0: Dataset<i64>,
    pub d1: Dataset<i64>,
}

/// `D0` is 1 on the first `b` indices and `i` at index `i` elsewhere; `D1`
/// also sets the next `ceil(1/eps)` indices to 1, where
/// `b = ceil(k + k^(1/(2k-2)) n^(1 - 1/(2k-2)) - 1/eps)`.
pub fn adversarial_fixture(n: usize, k: usize, eps: f64) -> AdversarialFixture {
    assert!(k >= 2, "the construction needs k >= 2");
    assert!(eps > 0.0);
    let p = 1.0 / (2.0 * k as f64 - 2.0);
    let b = (k as f64 + (k as f64).powf(p) * (n as f64).powf(1.0 - p) - 1.0 / eps).ceil().max(0.0) as usize;
    let extra = (1.0 / eps).ceil() as usize;
    assert!(b + extra <= n, "fixture does not fit: b = {b}, extra = {extra}, n = {n}");
    if (b as f64) < 2.0 * k as f64 / eps {
        warn!("b = {b} is below 2k/eps = {}", 2.0 * k as f64 / eps);
    }
    let d0: Vec<i64> = (1..=n).map(|i| if i <= b { 1 } else { i as i64 }).collect();
    let d1: Vec<i64> = (1..=n).map(|i| if i <= b + extra { 1 } else { i as i64 }).collect();
    AdversarialFixture { n, k, eps, b, extra, d0: Dataset::new(d0), d1: Dataset::new(d1) }
}

/// `1(x_1 = ... = x_k)`.
pub fn equality_kernel(k: usize) -> FnKernel<impl Fn(&[&i64]) -> f64 + Clone + Sync> {
    FnKernel::bounded(k, 1.0, |a: &[&i64]| if a.iter().all(|x| **x == *a[0]) { 1.0 } else { 0.0 })
}

impl AdversarialFixture {
    /// `[C(b + extra, k) - C(b, k)] / C(n, k)`.
    pub fn gap(&self) -> f64 {
        let c = |m: usize| binomial(m as u64, self.k as u64).expect("small") as f64;
        (c(self.b + self.extra) - c(self.b)) / c(self.n)
    }

    /// `C(b + 1/eps - 1, k - 1) / C(n - 1, k - 1)`.
    pub fn xi(&self) -> f64 {
        let top = binomial((self.b + self.extra - 1) as u64, (self.k - 1) as u64).expect("small") as f64;
        top / binomial((self.n - 1) as u64, (self.k - 1) as u64).expect("small") as f64
    }

    /// `(k / (3 n eps)) xi`.
    pub fn required_gap(&self) -> f64 {
        self.k as f64 / (3.0 * self.n as f64 * self.eps) * self.xi()
    }
}
