use rand::Rng;

use super::budget::PrivacyBudget;
use super::noise::{laplace, quartic_noise};
use crate::error::{invalid, Result};
use crate::scalar::Real;

/// Multiplier on `ss / eps` that makes the quartic-noise release private.
pub const SMOOTH_NOISE_MULTIPLIER: f64 = 10.0;

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("epsilon must be positive and finite, got {eps}")))
    }
}

/// `value + Lap(gs / eps)`. A zero sensitivity releases `value` untouched.
pub fn global_sensitivity_release<T: Real, R: Rng + ?Sized>(
    value: T,
    gs: T,
    eps: f64,
    budget: &mut PrivacyBudget,
    label: &str,
    rng: &mut R,
) -> Result<T> {
    check_eps(eps)?;
    if gs < T::zero() {
        return Err(invalid("global sensitivity must be non-negative"));
    }
    budget.spend(label, eps)?;
    if gs == T::zero() {
        return Ok(value);
    }
    Ok(value + laplace(gs / T::lit(eps), rng)?.value)
}

/// `value + (10 ss / eps) Z` with `Z` quartic-tail noise.
pub fn smooth_sensitivity_release<T: Real, R: Rng + ?Sized>(
    value: T,
    ss: T,
    eps: f64,
    budget: &mut PrivacyBudget,
    label: &str,
    rng: &mut R,
) -> Result<T> {
    smooth_sensitivity_release_scaled(value, ss, eps, SMOOTH_NOISE_MULTIPLIER, budget, label, rng)
}

/// As [`smooth_sensitivity_release`] with an explicit multiplier on `ss / eps`.
pub fn smooth_sensitivity_release_scaled<T: Real, R: Rng + ?Sized>(
    value: T,
    ss: T,
    eps: f64,
    multiplier: f64,
    budget: &mut PrivacyBudget,
    label: &str,
    rng: &mut R,
) -> Result<T> {
    check_eps(eps)?;
    if ss < T::zero() || multiplier <= 0.0 {
        return Err(invalid("smooth bound and multiplier must be non-negative"));
    }
    budget.spend(label, eps)?;
    if ss == T::zero() {
        return Ok(value);
    }
    let z = quartic_noise::<T, _>(rng).value;
    Ok(value + T::lit(multiplier) * ss / T::lit(eps) * z)
}
