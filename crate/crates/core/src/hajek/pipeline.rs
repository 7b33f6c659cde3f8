use log::warn;
use rand::Rng;

use super::source::MaterializedSource;
use super::state::{private_mean_local_hajek, HajekParams};
use crate::coinpress::{naive_estimator, CoinPressConfig};
use crate::dp::budget::PrivacyBudget;
use crate::dp::release::SMOOTH_NOISE_MULTIPLIER;
use crate::error::{invalid, Error, Result};
use crate::report::{EstimateReport, Outcome};
use crate::scalar::Real;
use crate::ustat::kernel::Clipped;
use crate::ustat::{all_tuples, Dataset, Kernel};

/// Concentration radius for bounded degenerate kernels:
/// `C sqrt((k/n) ln(2n/alpha)) + (8Ck/(3n)) ln(2n/alpha)`.
pub fn degenerate_xi<T: Real>(c: T, k: usize, n: usize, alpha: f64) -> T {
    let (kk, nn) = (T::from_count(k), T::from_count(n));
    let log = (T::lit(2.0) * nn / T::lit(alpha)).ln();
    c * (kk / nn * log).sqrt() + T::lit(8.0) * c * kk / (T::lit(3.0) * nn) * log
}

/// Concentration radius for sub-Gaussian kernels: `sqrt(2 tau ln(2n/alpha))`.
pub fn subgaussian_xi<T: Real>(tau: T, n: usize, alpha: f64) -> T {
    (T::lit(2.0) * tau * (T::lit(2.0) * T::from_count(n) / T::lit(alpha)).ln()).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    /// The kernel is clipped to `coarse ± clip_constant * sqrt(k tau ln(n/alpha))`.
    pub clip_constant: f64,
    pub coinpress: CoinPressConfig,
    pub noise_multiplier: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self { clip_constant: 4.0, coinpress: CoinPressConfig::default(), noise_multiplier: SMOOTH_NOISE_MULTIPLIER }
    }
}

/// Two-stage estimator for sub-Gaussian kernels. The first half of the data
/// gives a coarse private mean at `eps/2`; the kernel is clipped around it and
/// the local Hájek estimator runs on the second half at `eps/2`.
#[allow(clippy::too_many_arguments)]
pub fn subgaussian_pipeline<X, T, K, R>(
    h: &K,
    d: &Dataset<X>,
    r: T,
    tau: T,
    eps: f64,
    alpha: f64,
    cfg: &PipelineConfig,
    budget: &mut PrivacyBudget,
    rng: &mut R,
) -> Result<Outcome<EstimateReport<T>>>
where
    X: Clone + Sync,
    T: Real,
    K: Kernel<X, T>,
    R: Rng + ?Sized,
{
    let (n, k) = (d.len(), h.degree());
    if n < 2 * k {
        return Err(Error::InsufficientData { needed: 2 * k, available: n });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if eps * n as f64 <= (k as f64).sqrt() * (n as f64).ln() {
        warn!("epsilon {eps} is small for n = {n}; the coarse estimate may not localise the mean");
    }
    let half = n / 2;
    let first = Dataset::new(d.points()[..half].to_vec());
    let second = Dataset::new(d.points()[half..].to_vec());

    let coarse = naive_estimator(h, &first, r, tau, eps / 2.0, &cfg.coinpress, budget, rng)?;
    let width = T::lit(cfg.clip_constant) * (T::from_count(k) * tau * (T::from_count(n) / T::lit(alpha)).ln()).sqrt();
    let clipped = Clipped { inner: h, lo: coarse.estimate - width, hi: coarse.estimate + width };

    let f = all_tuples(second.len(), k)?;
    let src = MaterializedSource::new(&clipped, &second, &f)?;
    let mut params = HajekParams::new(eps / 2.0, T::lit(2.0) * width, subgaussian_xi(tau, n, alpha));
    params.noise_multiplier = cfg.noise_multiplier;
    let out = private_mean_local_hajek(&src, &params, budget, rng)?;
    Ok(out.map(|mut rep| {
        rep.epsilon = eps;
        rep.diagnostics.intervals = coarse.diagnostics.intervals;
        rep
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use crate::ustat::FnKernel;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn zero_range_gives_zero_radius() {
        assert_eq!(degenerate_xi(0.0f64, 2, 200, 0.01), 0.0);
    }

    #[test]
    fn degenerate_xi_plug_in() {
        let log = (2.0f64 * 200.0 / 0.01).ln();
        let want = (2.0f64 / 200.0 * log).sqrt() + 8.0 * 2.0 / 600.0 * log;
        assert!((degenerate_xi(1.0f64, 2, 200, 0.01) - want).abs() < 1e-14);
    }

    #[test]
    fn pipeline_spends_eps_and_is_accurate() {
        let h = FnKernel::sub_gaussian(1, 1.0, |a: &[&f64]| *a[0]);
        let normal = Normal::new(0.3, 1.0).unwrap();
        let mut rng = seeded(8);
        let d = Dataset::new((0..2000).map(|_| normal.sample(&mut rng)).collect());
        let mut b = PrivacyBudget::new(1.0).unwrap();
        let rep = subgaussian_pipeline(&h, &d, 10.0, 1.0, 1.0, 0.05, &PipelineConfig::default(), &mut b, &mut rng)
            .unwrap()
            .expect_value("all-tuples family is regular");
        assert!((b.spent() - 1.0).abs() <= 1e-12);
        assert!((rep.estimate - 0.3).abs() < 0.5, "{}", rep.estimate);
    }

    #[test]
    fn clipping_is_inert_inside_the_interval() {
        let h = FnKernel::sub_gaussian(2, 1.0, |a: &[&f64]| (a[0] + a[1]) / 2.0);
        let c = Clipped { inner: &h, lo: -100.0, hi: 100.0 };
        let pts = [0.123456789, -7.25];
        let raw: f64 = h.eval(&[&pts[0], &pts[1]]);
        assert_eq!(c.eval(&[&pts[0], &pts[1]]).to_bits(), raw.to_bits());
    }
}
