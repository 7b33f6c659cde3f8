use std::f64::consts::{PI, SQRT_2};

use rand::Rng;
use rand_distr::{Distribution, Open01};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseLaw {
    Laplace,
    /// Density `(sqrt 2 / pi) / (1 + z^4)`.
    QuarticTail,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSample<T> {
    pub value: T,
    pub scale: T,
    pub law: NoiseLaw,
}

/// Laplace(0, `scale`) by inverting the CDF.
pub fn laplace<T: Real, R: Rng + ?Sized>(scale: T, rng: &mut R) -> Result<NoiseSample<T>> {
    if !(scale > T::zero()) || !scale.is_finite() {
        return Err(Error::NonPositiveScale(scale.as_f64()));
    }
    let u: f64 = Open01.sample(rng);
    let u = u - 0.5;
    let w = -u.signum() * (1.0 - 2.0 * u.abs()).ln();
    Ok(NoiseSample { value: scale * T::lit(w), scale, law: NoiseLaw::Laplace })
}

pub fn laplace_cdf(x: f64, scale: f64) -> f64 {
    if x < 0.0 {
        0.5 * (x / scale).exp()
    } else {
        1.0 - 0.5 * (-x / scale).exp()
    }
}

pub fn quartic_density(z: f64) -> f64 {
    SQRT_2 / PI / (1.0 + z.powi(4))
}

/// Closed-form CDF of the quartic-tail law.
pub fn quartic_cdf(x: f64) -> f64 {
    let r = SQRT_2 * x;
    let log = ((x * x + r + 1.0) / (x * x - r + 1.0)).ln();
    0.5 + (log + 2.0 * (r + 1.0).atan() + 2.0 * (r - 1.0).atan()) / (4.0 * PI)
}

/// Inverse of [`quartic_cdf`] by bisection, for `p` in `(0, 1)`.
pub fn quartic_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "quantile level must lie in (0, 1)");
    let (mut lo, mut hi) = (-1.0, 1.0);
    while quartic_cdf(lo) > p {
        lo *= 2.0;
    }
    while quartic_cdf(hi) < p {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if quartic_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Long-run fraction of Cauchy proposals the quartic sampler accepts:
/// `1 / (1 + 1/sqrt 2)`.
pub const QUARTIC_ACCEPTANCE: f64 = 0.585_786_437_626_904_9;

/// `sup_z (1 + z^2) / (1 + z^4)`, attained at `z^2 = sqrt 2 - 1`.
const ENVELOPE_PEAK: f64 = (1.0 + SQRT_2) / 2.0;

/// One draw and the number of proposals it took.
pub fn quartic_draw<R: Rng + ?Sized>(rng: &mut R) -> (f64, u32) {
    let mut proposals = 0;
    loop {
        proposals += 1;
        let u: f64 = Open01.sample(rng);
        let z = (PI * (u - 0.5)).tan();
        let z2 = z * z;
        let ratio = (1.0 + z2) / (1.0 + z2 * z2) / ENVELOPE_PEAK;
        if rng.random::<f64>() <= ratio {
            return (z, proposals);
        }
    }
}

/// Unit-scale quartic-tail noise by rejection from a standard Cauchy.
pub fn quartic_noise<T: Real, R: Rng + ?Sized>(rng: &mut R) -> NoiseSample<T> {
    let (z, _) = quartic_draw(rng);
    NoiseSample { value: T::lit(z), scale: T::one(), law: NoiseLaw::QuarticTail }
}
