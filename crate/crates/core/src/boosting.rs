//! Median of independent private estimates on disjoint chunks.
//!
//! If each chunk estimate is within `r` of the target with probability 3/4,
//! the median of `q >= 8 ln(1/alpha)` of them is within `r` with probability
//! `1 - alpha`. The chunks are disjoint, so the privacy cost is that of one
//! chunk.

use rayon::prelude::*;

use crate::dp::budget::PrivacyBudget;
use crate::error::{invalid, Error, Result};
use crate::report::{BottomReason, Diagnostics, EstimateReport, Outcome};
use crate::rng::{substream, StdStream};
use crate::scalar::Real;
use crate::ustat::Dataset;

/// Stream id reserved for chunk estimators.
const CHUNK_STREAM: u32 = 0x6d6f6d;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoostPlan {
    pub alpha: f64,
    /// Number of chunks; always odd.
    pub q: usize,
    pub chunk_size: usize,
}

impl BoostPlan {
    /// Smallest odd integer at least `8 ln(1/alpha)`.
    pub fn chunks_for(alpha: f64) -> usize {
        let q = (8.0 * (1.0 / alpha).ln()).ceil().max(1.0) as usize;
        if q % 2 == 0 {
            q + 1
        } else {
            q
        }
    }

    pub fn new(alpha: f64, n: usize, k: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(invalid(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        let q = Self::chunks_for(alpha);
        let chunk_size = n / q;
        if chunk_size < k.max(1) {
            return Err(Error::InsufficientData { needed: q * k.max(1), available: n });
        }
        Ok(Self { alpha, q, chunk_size })
    }
}

/// Lower median (the `ceil(m/2)`-th order statistic).
pub fn lower_median<T: Real>(values: &[T]) -> T {
    assert!(!values.is_empty(), "median of nothing");
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite estimates"));
    v[(v.len() - 1) / 2]
}

/// Run `estimator` on `plan.q` consecutive chunks, each with its own branch
/// budget and random stream, and return the median estimate.
///
/// Chunks that return bottom are left out of the median unless they are the
/// majority, in which case the result is bottom. The reported radius is the
/// largest chunk radius.
pub fn median_of_means<X, T, F>(
    d: &Dataset<X>,
    plan: &BoostPlan,
    seed: u64,
    budget: &mut PrivacyBudget,
    estimator: F,
) -> Result<Outcome<EstimateReport<T>>>
where
    X: Clone + Send + Sync,
    T: Real,
    F: Fn(&Dataset<X>, &mut PrivacyBudget, &mut StdStream) -> Result<Outcome<EstimateReport<T>>> + Sync,
{
    if d.len() < plan.q * plan.chunk_size {
        return Err(Error::InsufficientData { needed: plan.q * plan.chunk_size, available: d.len() });
    }
    let mut scope = budget.parallel(format!("median of {} chunks", plan.q));
    let chunks: Vec<Dataset<X>> = d.chunks(plan.q, plan.chunk_size).collect();
    let runs: Vec<Result<(Outcome<EstimateReport<T>>, PrivacyBudget)>> = chunks
        .par_iter()
        .enumerate()
        .map(|(c, chunk)| {
            let mut b = scope.branch();
            let mut rng = substream(seed, CHUNK_STREAM, c as u32);
            let out = estimator(chunk, &mut b, &mut rng)?;
            Ok((out, b))
        })
        .collect();
    let mut reports = Vec::with_capacity(plan.q);
    let mut bottoms = 0;
    for run in runs {
        let (out, b) = run?;
        scope.absorb(b);
        match out {
            Outcome::Value(r) => reports.push(r),
            Outcome::Bottom(_) => bottoms += 1,
        }
    }
    budget.commit(scope)?;
    if 2 * bottoms > plan.q {
        return Ok(Outcome::Bottom(BottomReason::MajorityBottom { bottoms, chunks: plan.q }));
    }
    let estimates: Vec<T> = reports.iter().map(|r| r.estimate).collect();
    let estimate = lower_median(&estimates);
    let max_of =
        |f: fn(&EstimateReport<T>) -> T| reports.iter().map(f).fold(T::zero(), |a, b| if b > a { b } else { a });
    Ok(Outcome::Value(EstimateReport {
        estimate,
        radius: max_of(|r| r.radius),
        noise_scale: max_of(|r| r.noise_scale),
        epsilon: reports.first().map_or(0.0, |r| r.epsilon),
        diagnostics: Diagnostics { iterations: Some(plan.q), ..Default::default() },
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn constant_report(v: f64, eps: f64) -> EstimateReport<f64> {
        EstimateReport { estimate: v, radius: 0.0, noise_scale: 0.0, epsilon: eps, diagnostics: Default::default() }
    }

    #[test]
    fn chunk_counts() {
        assert_eq!(BoostPlan::chunks_for(0.05), 25);
        assert_eq!(BoostPlan::chunks_for(0.1), 19);
        assert_eq!(BoostPlan::chunks_for(0.5), 7);
        assert!(BoostPlan::chunks_for(0.9) % 2 == 1);
        let p = BoostPlan::new(0.05, 2000, 2).unwrap();
        assert_eq!((p.q, p.chunk_size), (25, 80));
        assert!(matches!(BoostPlan::new(0.05, 40, 2), Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn median_of_three() {
        assert_eq!(lower_median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(lower_median(&[4.0, 1.0, 3.0, 2.0]), 2.0);
    }

    #[test]
    fn constant_estimator_and_parallel_budget() {
        let d = Dataset::new(vec![0.0; 100]);
        let plan = BoostPlan::new(0.05, 100, 1).unwrap();
        let mut b = PrivacyBudget::new(0.7).unwrap();
        let out = median_of_means(&d, &plan, 1, &mut b, |_, br, _| {
            br.spend("chunk", 0.7)?;
            Ok(Outcome::Value(constant_report(1.25, 0.7)))
        })
        .unwrap()
        .expect_value("values");
        assert_eq!(out.estimate, 1.25);
        assert!((b.spent() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn deterministic_given_seed() {
        let d = Dataset::new((0..200).map(f64::from).collect());
        let plan = BoostPlan::new(0.1, 200, 1).unwrap();
        let run = |seed| {
            let mut b = PrivacyBudget::new(1.0).unwrap();
            median_of_means(&d, &plan, seed, &mut b, |c, br, rng| {
                br.spend("chunk", 1.0)?;
                Ok(Outcome::Value(constant_report(c[0] + rng.random::<f64>(), 1.0)))
            })
            .unwrap()
            .expect_value("values")
            .estimate
        };
        assert_eq!(run(5), run(5));
        assert_ne!(run(5), run(6));
    }

    #[test]
    fn majority_bottom() {
        let d = Dataset::new((0..70).map(f64::from).collect());
        let plan = BoostPlan::new(0.5, 70, 1).unwrap();
        let mut b = PrivacyBudget::new(1.0).unwrap();
        let out = median_of_means(&d, &plan, 0, &mut b, |c, _, _| {
            if c[0] < 40.0 {
                Ok(Outcome::Bottom(BottomReason::NegativeDensityProxy { nu: -1.0 }))
            } else {
                Ok(Outcome::Value(constant_report(c[0], 1.0)))
            }
        })
        .unwrap();
        assert_eq!(out, Outcome::Bottom(BottomReason::MajorityBottom { bottoms: 4, chunks: 7 }));
    }

    #[test]
    fn boosts_coverage() {
        // Each chunk is within r with probability 0.75; the median must be
        // within r with frequency at least 1 - alpha.
        let alpha = 0.05;
        let plan = BoostPlan { alpha, q: BoostPlan::chunks_for(alpha), chunk_size: 1 };
        let d = Dataset::new(vec![0.0; plan.q]);
        let trials = 10_000;
        let mut good = 0;
        for t in 0..trials {
            let mut b = PrivacyBudget::new(1.0).unwrap();
            let est = median_of_means(&d, &plan, t, &mut b, |_, _, rng| {
                let miss = rng.random::<f64>() >= 0.75;
                let v = if miss {
                    if rng.random::<bool>() {
                        5.0
                    } else {
                        -5.0
                    }
                } else {
                    0.0
                };
                Ok(Outcome::Value(constant_report(v, 1.0)))
            })
            .unwrap()
            .expect_value("values")
            .estimate;
            good += (est.abs() <= 1.0) as usize;
        }
        assert!(good as f64 / trials as f64 >= 1.0 - alpha);
    }
}
