use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::Distribution;

use crate::boosting::{median_of_means, BoostPlan};
use crate::dp::budget::PrivacyBudget;
use crate::dp::release::SMOOTH_NOISE_MULTIPLIER;
use crate::error::{invalid, Error, Result};
use crate::hajek::{private_mean_local_hajek, HajekParams, ProjectionSource};
use crate::report::{EstimateReport, Outcome};
use crate::scalar::Real;
use crate::ustat::{Dataset, FamilyKind, FnKernel, Regularity};

/// Distribution on `{1, ..., m}` with `p_i = (1 + a_i) / m`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedUniform {
    a: Vec<f64>,
}

impl PerturbedUniform {
    pub fn new(a: Vec<f64>) -> Result<Self> {
        if a.len() < 2 {
            return Err(invalid("need at least two atoms"));
        }
        if a.iter().any(|x| !(-1.0..=1.0).contains(x)) {
            return Err(invalid("perturbations must lie in [-1, 1]"));
        }
        let s: f64 = a.iter().sum();
        if s.abs() > 1e-9 * a.len() as f64 {
            return Err(invalid(format!("perturbations must sum to zero, got {s}")));
        }
        Ok(Self { a })
    }

    pub fn uniform(m: usize) -> Self {
        Self { a: vec![0.0; m] }
    }

    /// `a_i = +s, -s, +s, ...`; needs an even `m`.
    pub fn alternating(m: usize, s: f64) -> Result<Self> {
        if m % 2 != 0 {
            return Err(invalid("alternating perturbation needs an even number of atoms"));
        }
        Self::new((0..m).map(|i| if i % 2 == 0 { s } else { -s }).collect())
    }

    pub fn m(&self) -> usize {
        self.a.len()
    }

    pub fn perturbation(&self) -> &[f64] {
        &self.a
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let m = self.m() as f64;
        self.a.iter().map(|a| (1.0 + a) / m).collect()
    }

    /// `||a||^2 / m`, the squared distance scale the test separates on.
    pub fn delta_squared(&self) -> f64 {
        self.a.iter().map(|a| a * a).sum::<f64>() / self.m() as f64
    }
}

/// `n` independent labels in `1..=m`.
pub fn sample_multinomial<R: Rng + ?Sized>(dist: &PerturbedUniform, n: usize, rng: &mut R) -> Dataset<u32> {
    let w = WeightedIndex::new(dist.probabilities()).expect("valid probabilities");
    Dataset::new((0..n).map(|_| w.sample(rng) as u32 + 1).collect())
}

/// Collision probability `sum_i p_i^2 = 1/m + ||a||^2/m^2`.
pub fn collision_theta(dist: &PerturbedUniform) -> f64 {
    let m = dist.m() as f64;
    1.0 / m + dist.a.iter().map(|a| a * a).sum::<f64>() / (m * m)
}

/// Exact variance of the collision U-statistic on `n` draws.
pub fn collision_variance(dist: &PerturbedUniform, n: usize) -> f64 {
    let p = dist.probabilities();
    let s2: f64 = p.iter().map(|x| x * x).sum();
    let s3: f64 = p.iter().map(|x| x * x * x).sum();
    let zeta1 = s3 - s2 * s2;
    let zeta2 = s2 - s2 * s2;
    let n = n as f64;
    2.0 / (n * (n - 1.0)) * (2.0 * (n - 2.0) * zeta1 + zeta2)
}

pub fn collision_kernel<T: Real>() -> FnKernel<fn(&[&u32]) -> T> {
    fn eq<T: Real>(a: &[&u32]) -> T {
        if a[0] == a[1] {
            T::one()
        } else {
            T::zero()
        }
    }
    FnKernel::bounded(2, 1.0, eq::<T> as fn(&[&u32]) -> T)
}

/// Collision kernel over all pairs, summarised by category counts.
///
/// Every quantity the reweighting needs depends on a point only through its
/// label, so the work is linear in `n` plus quadratic in the number of
/// distinct labels.
#[derive(Debug, Clone)]
pub struct CollisionSource<T> {
    labels: Vec<u32>,
    /// label -> (count, one index carrying it)
    categories: BTreeMap<u32, (usize, usize)>,
    _scalar: std::marker::PhantomData<T>,
}

impl<T: Real> CollisionSource<T> {
    pub fn new(data: &Dataset<u32>) -> Result<Self> {
        if data.len() < 2 {
            return Err(Error::InsufficientData { needed: 2, available: data.len() });
        }
        let mut categories = BTreeMap::new();
        for (i, &x) in data.points().iter().enumerate() {
            categories.entry(x).or_insert((0, i)).0 += 1;
        }
        Ok(Self { labels: data.points().to_vec(), categories, _scalar: Default::default() })
    }

    fn pairs(&self) -> T {
        let n = T::from_count(self.labels.len());
        n * (n - T::one()) / T::lit(2.0)
    }

    fn choose2(c: usize) -> T {
        T::from_count(c * c.saturating_sub(1) / 2)
    }
}

impl<T: Real> ProjectionSource<T> for CollisionSource<T> {
    fn n(&self) -> usize {
        self.labels.len()
    }

    fn degree(&self) -> usize {
        2
    }

    fn kind(&self) -> FamilyKind {
        FamilyKind::AllTuples
    }

    fn regularity(&self) -> Regularity {
        Regularity::Regular
    }

    fn mean(&self) -> T {
        let hits = self.categories.values().fold(T::zero(), |a, &(c, _)| a + Self::choose2(c));
        hits / self.pairs()
    }

    fn projections(&self) -> Vec<T> {
        let denom = T::from_count(self.labels.len() - 1);
        self.labels.iter().map(|x| T::from_count(self.categories[x].0 - 1) / denom).collect()
    }

    fn reweighted_mean(&self, weights: &[T], a_n: T) -> T {
        // sum_S w(S)(h(S) - A) split into same-label and cross-label pairs.
        let mut cats: Vec<(T, usize)> = self.categories.values().map(|&(c, i)| (weights[i], c)).collect();
        let same = cats.iter().fold(T::zero(), |acc, &(w, c)| acc + Self::choose2(c) * w);
        cats.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite weights"));
        let mut later: usize = cats.iter().map(|&(_, c)| c).sum();
        let mut cross = T::zero();
        for &(w, c) in &cats {
            later -= c;
            cross += w * T::from_count(c) * T::from_count(later);
        }
        a_n + (same * (T::one() - a_n) - a_n * cross) / self.pairs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformityConfig {
    /// Failure probability used inside the concentration radius.
    pub gamma: f64,
    pub noise_multiplier: f64,
}

impl Default for UniformityConfig {
    fn default() -> Self {
        Self { gamma: 0.01, noise_multiplier: SMOOTH_NOISE_MULTIPLIER }
    }
}

/// `6/m + 8 ln(4n/gamma) / n`.
pub fn uniformity_xi(m: usize, n: usize, gamma: f64) -> f64 {
    6.0 / m as f64 + 8.0 * (4.0 * n as f64 / gamma).ln() / n as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestDecision<T> {
    /// True when approximate uniformity is rejected.
    pub reject: bool,
    pub statistic: T,
    pub threshold: T,
    pub report: EstimateReport<T>,
}

fn threshold<T: Real>(m: usize, delta: f64) -> T {
    T::lit((1.0 + 0.75 * delta * delta) / m as f64)
}

fn check_labels(data: &Dataset<u32>, m: usize, delta: f64) -> Result<()> {
    if m < 2 {
        return Err(invalid("need at least two categories"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    if let Some(x) = data.points().iter().find(|&&x| x == 0 || x as usize > m) {
        return Err(invalid(format!("label {x} outside 1..={m}")));
    }
    Ok(())
}

fn private_collision<T: Real, R: Rng + ?Sized>(
    data: &Dataset<u32>,
    m: usize,
    eps: f64,
    cfg: &UniformityConfig,
    budget: &mut PrivacyBudget,
    rng: &mut R,
) -> Result<Outcome<EstimateReport<T>>> {
    let src = CollisionSource::<T>::new(data)?;
    let mut params = HajekParams::new(eps, T::one(), T::lit(uniformity_xi(m, data.len(), cfg.gamma)));
    params.noise_multiplier = cfg.noise_multiplier;
    private_mean_local_hajek(&src, &params, budget, rng)
}

/// Reject approximate uniformity when the private collision rate reaches
/// `(1 + 3 delta^2 / 4) / m`. Spends `eps`.
pub fn uniformity_test<T: Real, R: Rng + ?Sized>(
    data: &Dataset<u32>,
    m: usize,
    delta: f64,
    eps: f64,
    cfg: &UniformityConfig,
    budget: &mut PrivacyBudget,
    rng: &mut R,
) -> Result<Outcome<TestDecision<T>>> {
    check_labels(data, m, delta)?;
    let out = private_collision::<T, R>(data, m, eps, cfg, budget, rng)?;
    Ok(out.map(|report| decide(report, m, delta)))
}

fn decide<T: Real>(report: EstimateReport<T>, m: usize, delta: f64) -> TestDecision<T> {
    let threshold = threshold::<T>(m, delta);
    TestDecision { reject: report.estimate >= threshold, statistic: report.estimate, threshold, report }
}

/// The test with its statistic replaced by the median of private collision
/// rates on disjoint chunks, for failure probability `alpha`. Spends `eps`.
#[allow(clippy::too_many_arguments)]
pub fn uniformity_test_boosted<T: Real>(
    data: &Dataset<u32>,
    m: usize,
    delta: f64,
    eps: f64,
    alpha: f64,
    cfg: &UniformityConfig,
    seed: u64,
    budget: &mut PrivacyBudget,
) -> Result<Outcome<TestDecision<T>>> {
    check_labels(data, m, delta)?;
    let plan = BoostPlan::new(alpha, data.len(), 2)?;
    let out = median_of_means(data, &plan, seed, budget, |chunk, b, rng| {
        private_collision::<T, _>(chunk, m, eps, cfg, b, rng)
    })?;
    Ok(out.map(|report| decide(report, m, delta)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hajek::{hajek_state, MaterializedSource};
    use crate::rng::seeded;
    use crate::ustat::{all_tuples, evaluate_ustat};
    use proptest::prelude::*;

    #[test]
    fn theta_values() {
        assert_eq!(collision_theta(&PerturbedUniform::uniform(10)), 0.1);
        let point = PerturbedUniform::new(vec![1.0, -1.0]).unwrap();
        assert_eq!(collision_theta(&point), 1.0);
        let alt = PerturbedUniform::alternating(50, 0.5).unwrap();
        assert!(collision_theta(&alt) >= (1.0 + 0.25) / 50.0 - 1e-15);
        let p: f64 = alt.probabilities().iter().map(|x| x * x).sum();
        assert!((p - collision_theta(&alt)).abs() < 1e-15);
    }

    #[test]
    fn rejects_invalid_perturbations() {
        assert!(PerturbedUniform::new(vec![0.5, 0.5]).is_err());
        assert!(PerturbedUniform::new(vec![1.5, -1.5]).is_err());
        assert!(PerturbedUniform::alternating(5, 0.1).is_err());
    }

    #[test]
    fn point_mass_sampling() {
        let d = sample_multinomial(&PerturbedUniform::new(vec![1.0, -1.0]).unwrap(), 500, &mut seeded(1));
        assert!(d.points().iter().all(|&x| x == 1));
    }

    #[test]
    fn uniform_frequencies() {
        let (m, n, seeds) = (20, 20_000, 50);
        let p = 1.0 / m as f64;
        let tol = 3.0 * (p * (1.0 - p) / n as f64).sqrt();
        let mut ok = 0;
        for seed in 0..seeds {
            let d = sample_multinomial(&PerturbedUniform::uniform(m), n, &mut seeded(seed));
            let mut counts = vec![0usize; m];
            for &x in d.points() {
                counts[x as usize - 1] += 1;
            }
            ok += counts.iter().filter(|&&c| (c as f64 / n as f64 - p).abs() <= tol).count();
        }
        assert!(ok as f64 >= 0.99 * (m * seeds as usize) as f64, "{ok}");
    }

    #[test]
    fn sampling_golden_sequence() {
        let d = sample_multinomial(&PerturbedUniform::uniform(7), 8, &mut seeded(20240601));
        assert_eq!(d.points(), GOLDEN_LABELS, "{:?}", d.points());
    }

    const GOLDEN_LABELS: &[u32] = &[3, 6, 1, 2, 2, 7, 1, 3];

    #[test]
    fn tiny_input_is_refused() {
        let d = Dataset::new(vec![1u32]);
        let mut b = PrivacyBudget::new(1.0).unwrap();
        let e = uniformity_test::<f64, _>(&d, 3, 0.5, 1.0, &Default::default(), &mut b, &mut seeded(0)).unwrap_err();
        assert!(matches!(e, Error::InsufficientData { .. }));
    }

    #[test]
    fn out_of_range_label_is_refused() {
        let d = Dataset::new(vec![1u32, 4, 2]);
        let mut b = PrivacyBudget::new(1.0).unwrap();
        assert!(uniformity_test::<f64, _>(&d, 3, 0.5, 1.0, &Default::default(), &mut b, &mut seeded(0)).is_err());
    }

    proptest! {
        #[test]
        fn fast_source_matches_materialized(
            xs in prop::collection::vec(1u32..5, 3..25),
            xi in 0.0f64..0.3, eps in 0.2f64..3.0,
        ) {
            let n = xs.len();
            let d = Dataset::new(xs);
            let f = all_tuples(n, 2).unwrap();
            let slow = MaterializedSource::new(&collision_kernel::<f64>(), &d, &f).unwrap();
            let fast = CollisionSource::<f64>::new(&d).unwrap();
            let a: f64 = evaluate_ustat(&collision_kernel::<f64>(), &d, &f).unwrap();
            prop_assert!((fast.mean() - a).abs() < 1e-12);
            let p = HajekParams::new(eps, 1.0, xi);
            let s1 = hajek_state(&slow, &p).unwrap().expect_value("regular");
            let s2 = hajek_state(&fast, &p).unwrap().expect_value("regular");
            prop_assert_eq!(s1.l, s2.l);
            prop_assert_eq!(&s1.bad, &s2.bad);
            prop_assert!((s1.reweighted - s2.reweighted).abs() < 1e-12);
            for (u, v) in s1.projections.iter().zip(&s2.projections) {
                prop_assert!((u - v).abs() < 1e-12);
            }
            // Arbitrary weights, not only the ones the estimator would pick.
            // Weights depend on a point only through its label.
            let w: Vec<f64> = d.points().iter().map(|&x| ((x * 7) % 5) as f64 / 4.0).collect();
            prop_assert!((slow.reweighted_mean(&w, a) - fast.reweighted_mean(&w, a)).abs() < 1e-12);
        }
    }
}
