//! Iterative clip-and-noise mean estimation over kernel values.
//!
//! Starting from `[-R, R]`, each step clips the values to the current
//! interval widened by a uniform deviation bound, releases their noisy mean
//! and shrinks the interval around it. The noise scale is driven by the
//! family's dependence fraction: one point can move at most `dep * M` of the
//! `M` clipped values.

use log::warn;
use rand::Rng;

use crate::dp::budget::PrivacyBudget;
use crate::dp::noise::laplace;
use crate::error::{invalid, Result};
use crate::report::{Diagnostics, EstimateReport};
use crate::scalar::Real;
use crate::ustat::{all_tuples, disjoint_chunks, kernel_values, subsample_family, Dataset, Kernel, SubsetFamily};

/// Deviation bounds `Q(beta)` (any single kernel value) and `Q_avg(beta)`
/// (the average) around the mean, for sub-Gaussian kernels with proxy `tau`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailBounds<T> {
    /// `m` independent values: `Q = sqrt(2 tau ln(2m/b))`, `Q_avg = sqrt(2 tau ln(2/b) / m)`.
    Chunked { tau: T, m: usize },
    /// Every k-subset of `n` points.
    AllTuples { tau: T, k: usize, n: usize },
    /// `m` uniformly sampled k-subsets of `n` points.
    Subsampled { tau: T, k: usize, n: usize, m: usize },
    /// Constant bounds, independent of the confidence level.
    Fixed { q: T, q_avg: T },
}

impl<T: Real> TailBounds<T> {
    pub fn q(&self, beta: T) -> T {
        let two = T::lit(2.0);
        match *self {
            TailBounds::Chunked { tau, m } => (two * tau * (two * T::from_count(m) / beta).ln()).sqrt(),
            TailBounds::AllTuples { tau, k, n } => {
                (two * tau * T::from_count(k) * (two * T::from_count(n) / beta).ln()).sqrt()
            }
            TailBounds::Subsampled { tau, k, n, .. } => {
                (two * tau * T::from_count(k) * (T::lit(4.0) * T::from_count(n) / beta).ln()).sqrt()
            }
            TailBounds::Fixed { q, .. } => q,
        }
    }

    pub fn q_avg(&self, beta: T) -> T {
        let two = T::lit(2.0);
        match *self {
            TailBounds::Chunked { tau, m } => (two * tau * (two / beta).ln() / T::from_count(m)).sqrt(),
            TailBounds::AllTuples { tau, k, n } => {
                (two * tau * T::from_count(k) * (two / beta).ln() / T::from_count(n)).sqrt()
            }
            TailBounds::Subsampled { tau, k, n, m } => {
                let eff = T::from_count(m.min(n));
                T::lit(4.0) * (tau * T::from_count(k) / eff * (T::lit(4.0) * T::from_count(n) / beta).ln()).sqrt()
            }
            TailBounds::Fixed { q_avg, .. } => q_avg,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalState<T> {
    pub lo: T,
    pub hi: T,
    pub iteration: usize,
}

impl<T: Real> IntervalState<T> {
    pub fn width(&self) -> T {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> T {
        (self.lo + self.hi) / T::lit(2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoinPressConfig {
    /// Constant failure probability of the inner procedure.
    pub gamma: f64,
    /// Multiplier on `log2(R / Q(gamma))` when choosing the number of halving steps.
    pub iteration_constant: f64,
}

impl Default for CoinPressConfig {
    fn default() -> Self {
        Self { gamma: 0.01, iteration_constant: 1.0 }
    }
}

/// What one clip-and-release step produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult<T> {
    pub interval: IntervalState<T>,
    pub release: T,
    /// Sensitivity of the clipped mean.
    pub delta: T,
    pub noise_scale: T,
}

/// Clip `values` in place to `[lo - Q, hi + Q]`, release their mean with
/// Laplace noise calibrated to `dep * (hi - lo + 2Q)` and return the interval
/// of half-width `Q_avg + (Delta/eps) ln(1/beta)` around the release.
#[allow(clippy::too_many_arguments)]
pub fn one_step<T: Real, R: Rng + ?Sized>(
    values: &mut [T],
    dep: T,
    interval: IntervalState<T>,
    eps_step: f64,
    beta: T,
    tb: &TailBounds<T>,
    budget: &mut PrivacyBudget,
    rng: &mut R,
) -> Result<StepResult<T>> {
    if values.is_empty() {
        return Err(invalid("no kernel values to average"));
    }
    let q = tb.q(beta);
    let (lo, hi) = (interval.lo - q, interval.hi + q);
    let mut sum = T::zero();
    for v in values.iter_mut() {
        if *v < lo {
            *v = lo;
        } else if *v > hi {
            *v = hi;
        }
        sum += *v;
    }
    let mean = sum / T::from_count(values.len());
    let delta = dep * (interval.width() + T::lit(2.0) * q);
    let noise_scale = delta / T::lit(eps_step);
    budget.spend(format!("clipped mean, step {}", interval.iteration + 1), eps_step)?;
    let release = if noise_scale > T::zero() { mean + laplace(noise_scale, rng)?.value } else { mean };
    let half = tb.q_avg(beta) + noise_scale * (T::one() / beta).ln();
    Ok(StepResult {
        interval: IntervalState { lo: release - half, hi: release + half, iteration: interval.iteration + 1 },
        release,
        delta,
        noise_scale,
    })
}

/// Copy of `values` clipped to `[lo, hi]`; values inside are returned bitwise.
pub fn clip<T: Real>(values: &[T], lo: T, hi: T) -> Vec<T> {
    values
        .iter()
        .map(|&v| {
            if v < lo {
                lo
            } else if v > hi {
                hi
            } else {
                v
            }
        })
        .collect()
}

/// Number of halving steps: `max(1, ceil(c log2(R / Q(gamma))))`.
pub fn halving_steps<T: Real>(r: T, tb: &TailBounds<T>, cfg: &CoinPressConfig) -> usize {
    let ratio = (r / tb.q(T::lit(cfg.gamma))).as_f64();
    let t = (cfg.iteration_constant * ratio.log2()).ceil();
    if t.is_finite() && t > 1.0 {
        t as usize
    } else {
        1
    }
}

/// Whether `dep <= Q(g) eps / (10 t Q(g/t) ln(t/g))` and `Q_avg(g/t) < Q(g)`,
/// the sample-size conditions under which every halving step contracts.
pub fn contraction_conditions<T: Real>(dep: T, eps: f64, t: usize, tb: &TailBounds<T>, gamma: f64) -> bool {
    let g = T::lit(gamma);
    let tt = T::from_count(t);
    let beta = g / tt;
    let bound = tb.q(g) * T::lit(eps) / (T::lit(10.0) * tt * tb.q(beta) * (tt / g).ln());
    dep <= bound && tb.q_avg(beta) < tb.q(g)
}

/// Private mean of `values` (the kernel values of a family with the given
/// dependence fraction), assuming `|theta| <= r`. Spends exactly `eps`:
/// `t` halving steps at `eps/(2t)` and a final step at `eps/2`.
#[allow(clippy::too_many_arguments)]
pub fn ustat_mean<T: Real, R: Rng + ?Sized>(
    values: &mut [T],
    dep: T,
    r: T,
    eps: f64,
    tb: &TailBounds<T>,
    cfg: &CoinPressConfig,
    budget: &mut PrivacyBudget,
    rng: &mut R,
) -> Result<EstimateReport<T>> {
    if !(r > T::zero()) {
        return Err(invalid("the a priori bound R must be positive"));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(invalid(format!("epsilon must be positive and finite, got {eps}")));
    }
    let gamma = T::lit(cfg.gamma);
    let t = halving_steps(r, tb, cfg);
    let ok = contraction_conditions(dep, eps, t, tb, cfg.gamma);
    if !ok {
        warn!("sample size too small for guaranteed interval contraction (dep = {dep}, t = {t})");
    }
    let mut interval = IntervalState { lo: -r, hi: r, iteration: 0 };
    let mut trace = vec![interval];
    let step_eps = eps / (2.0 * t as f64);
    let step_beta = gamma / T::from_count(t);
    for _ in 0..t {
        interval = one_step(values, dep, interval, step_eps, step_beta, tb, budget, rng)?.interval;
        trace.push(interval);
    }
    let last = one_step(values, dep, interval, eps / 2.0, gamma, tb, budget, rng)?;
    trace.push(last.interval);
    Ok(EstimateReport {
        estimate: last.release,
        radius: last.interval.width() / T::lit(2.0),
        noise_scale: last.noise_scale,
        epsilon: eps,
        diagnostics: Diagnostics {
            iterations: Some(t + 1),
            intervals: trace,
            preconditions_met: Some(ok),
            ..Default::default()
        },
    })
}

fn dep_of<T: Real>(f: &SubsetFamily) -> T {
    let d = f.dep();
    T::lit(*d.numer() as f64) / T::lit(*d.denom() as f64)
}

fn check_size<X, T: Real, K: Kernel<X, T> + ?Sized>(h: &K, d: &Dataset<X>) -> Result<()> {
    if d.len() < h.degree() {
        return Err(crate::error::Error::InsufficientData { needed: h.degree(), available: d.len() });
    }
    Ok(())
}

/// Iterative estimator on `floor(n/k)` disjoint consecutive chunks.
#[allow(clippy::too_many_arguments)]
pub fn naive_estimator<X, T, K, R>(
    h: &K,
    d: &Dataset<X>,
    r: T,
    tau: T,
    eps: f64,
    cfg: &CoinPressConfig,
    budget: &mut PrivacyBudget,
    rng: &mut R,
) -> Result<EstimateReport<T>>
where
    X: Sync,
    T: Real,
    K: Kernel<X, T> + ?Sized,
    R: Rng + ?Sized,
{
    check_size(h, d)?;
    let f = disjoint_chunks(d.len(), h.degree())?;
    let mut values = kernel_values(h, d, &f)?;
    let tb = TailBounds::Chunked { tau, m: f.len() };
    ustat_mean(&mut values, dep_of(&f), r, eps, &tb, cfg, budget, rng)
}

/// Iterative estimator over every k-subset.
#[allow(clippy::too_many_arguments)]
pub fn all_tuples_estimator<X, T, K, R>(
    h: &K,
    d: &Dataset<X>,
    r: T,
    tau: T,
    eps: f64,
    cfg: &CoinPressConfig,
    budget: &mut PrivacyBudget,
    rng: &mut R,
) -> Result<EstimateReport<T>>
where
    X: Sync,
    T: Real,
    K: Kernel<X, T> + ?Sized,
    R: Rng + ?Sized,
{
    check_size(h, d)?;
    let f = all_tuples(d.len(), h.degree())?;
    all_tuples_estimator_on(h, d, &f, r, tau, eps, cfg, budget, rng)
}

/// As [`all_tuples_estimator`] with a prebuilt all-tuples family, so that
/// repeated runs at one size can share it.
#[allow(clippy::too_many_arguments)]
pub fn all_tuples_estimator_on<X, T, K, R>(
    h: &K,
    d: &Dataset<X>,
    f: &SubsetFamily,
    r: T,
    tau: T,
    eps: f64,
    cfg: &CoinPressConfig,
    budget: &mut PrivacyBudget,
    rng: &mut R,
) -> Result<EstimateReport<T>>
where
    X: Sync,
    T: Real,
    K: Kernel<X, T> + ?Sized,
    R: Rng + ?Sized,
{
    let mut values = kernel_values(h, d, f)?;
    let tb = TailBounds::AllTuples { tau, k: f.k(), n: f.n() };
    ustat_mean(&mut values, dep_of(f), r, eps, &tb, cfg, budget, rng)
}

/// Iterative estimator over `m` sampled k-subsets. The family is drawn from
/// `rng` and its dependence fraction is measured, not assumed.
#[allow(clippy::too_many_arguments)]
pub fn subsampled_estimator<X, T, K, R>(
    h: &K,
    d: &Dataset<X>,
    r: T,
    tau: T,
    eps: f64,
    m: usize,
    cfg: &CoinPressConfig,
    budget: &mut PrivacyBudget,
    rng: &mut R,
) -> Result<EstimateReport<T>>
where
    X: Sync,
    T: Real,
    K: Kernel<X, T> + ?Sized,
    R: Rng + ?Sized,
{
    check_size(h, d)?;
    let (n, k) = (d.len(), h.degree());
    let advised = n as f64 / k as f64 * (n as f64).ln();
    if (m as f64) < advised {
        warn!("{m} sampled subsets is below (n/k) ln n = {advised:.0}");
    }
    let f = subsample_family(n, k, m, rng.random())?;
    let mut values = kernel_values(h, d, &f)?;
    let tb = TailBounds::Subsampled { tau, k, n, m };
    ustat_mean(&mut values, dep_of(&f), r, eps, &tb, cfg, budget, rng)
}
