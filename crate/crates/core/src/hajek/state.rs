use rand::Rng;

use super::source::ProjectionSource;
use crate::dp::budget::PrivacyBudget;
use crate::dp::noise::quartic_quantile;
use crate::dp::release::{smooth_sensitivity_release_scaled, SMOOTH_NOISE_MULTIPLIER};
use crate::error::{invalid, Result};
use crate::report::{BottomReason, Diagnostics, EstimateReport, Outcome};
use crate::scalar::Real;
use crate::ustat::{FamilyKind, Regularity};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HajekParams<T> {
    pub eps: f64,
    /// Additive range of the kernel.
    pub c: T,
    /// Concentration radius of the local projections around the mean.
    pub xi: T,
    /// Multiplier on `S / eps` in the final release.
    pub noise_multiplier: f64,
    /// Two-sided confidence used for the reported noise radius.
    pub gamma: f64,
}

impl<T: Real> HajekParams<T> {
    pub fn new(eps: f64, c: T, xi: T) -> Self {
        Self { eps, c, xi, noise_multiplier: SMOOTH_NOISE_MULTIPLIER, gamma: 0.01 }
    }

    fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(invalid(format!("epsilon must be positive and finite, got {}", self.eps)));
        }
        if !(self.c >= T::zero() && self.c.is_finite() && self.xi >= T::zero() && self.xi.is_finite()) {
            return Err(invalid("range and concentration radius must be finite and non-negative"));
        }
        if !(self.noise_multiplier > 0.0) {
            return Err(invalid("noise multiplier must be positive"));
        }
        Ok(())
    }
}

/// Everything computed on the way to the release.
#[derive(Debug, Clone, PartialEq)]
pub struct HajekState<T> {
    pub a_n: T,
    pub projections: Vec<T>,
    pub l: usize,
    pub good: Vec<usize>,
    pub bad: Vec<usize>,
    pub weights: Vec<T>,
    pub reweighted: T,
    pub smooth_bound: T,
}

fn threshold<T: Real>(xi: T, c: T, k: usize, n: usize, t: usize) -> T {
    xi + T::lit(6.0) * T::from_count(k) * c * T::from_count(t) / T::from_count(n)
}

/// Smallest `t >= 1` such that at most `t` of the absolute deviations exceed
/// `xi + 6kCt/n`.
pub fn compute_l<T: Real>(deviations: &[T], xi: T, c: T, k: usize, n: usize) -> usize {
    let mut sorted: Vec<T> = deviations.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    // With deviations in decreasing order, "count above the threshold <= t"
    // holds exactly when the (t+1)-th largest is not above it.
    (1..sorted.len()).find(|&t| sorted[t] <= threshold(xi, c, k, n, t)).unwrap_or(sorted.len().max(1))
}

/// Ramp weights: 1 within `xi + 6kCL/n` of the mean, falling linearly to 0
/// over a further `6Ck/(n eps)`. With `C = 0` the ramp is a step.
pub fn compute_weights<T: Real>(
    signed_deviations: &[T],
    xi: T,
    c: T,
    k: usize,
    n: usize,
    l: usize,
    eps: f64,
) -> Vec<T> {
    let edge = threshold(xi, c, k, n, l);
    let slope =
        if c > T::zero() { Some(T::lit(eps) * T::from_count(n) / (T::lit(6.0) * c * T::from_count(k))) } else { None };
    signed_deviations
        .iter()
        .map(|&d| {
            let dist = d.abs() - edge;
            if dist <= T::zero() {
                return T::one();
            }
            match slope {
                Some(s) => (T::one() - s * dist).max(T::zero()),
                None => T::zero(),
            }
        })
        .collect()
}

/// `g(xi, L, n) = (k/n)(xi + kCL/n)(1 + eps L) + (k^2 C L^2 m / n^2)(eps + k/n) + k^2 C/(n^2 eps)`
/// where `m = min(k, L)`, or `m = 1` when `all_tuples` is set.
pub fn smooth_bound_g<T: Real>(xi: T, l: usize, n: usize, k: usize, c: T, eps: f64, all_tuples: bool) -> T {
    let (kk, nn, ll, e) = (T::from_count(k), T::from_count(n), T::from_count(l), T::lit(eps));
    let m = if all_tuples { T::one() } else { T::from_count(k.min(l)) };
    kk / nn * (xi + kk * c * ll / nn) * (T::one() + e * ll)
        + kk * kk * c * ll * ll * m / (nn * nn) * (e + kk / nn)
        + kk * kk * c / (nn * nn * e)
}

/// `max_{0 <= l <= n} e^{-eps l} g(xi, L + l, n)`.
pub fn smooth_sensitivity<T: Real>(xi: T, l: usize, n: usize, k: usize, c: T, eps: f64, kind: FamilyKind) -> T {
    let all = kind == FamilyKind::AllTuples;
    (0..=n)
        .map(|j| T::lit((-eps * j as f64).exp()) * smooth_bound_g(xi, l + j, n, k, c, eps, all))
        .fold(T::zero(), |a, b| if b > a { b } else { a })
}

/// Run the deterministic part: regularity check, projections, `L`,
/// classification, weights, reweighted mean and smooth bound.
pub fn hajek_state<T: Real, S: ProjectionSource<T> + ?Sized>(
    source: &S,
    params: &HajekParams<T>,
) -> Result<Outcome<HajekState<T>>> {
    params.validate()?;
    if let Regularity::Irregular(v) = source.regularity() {
        return Ok(Outcome::Bottom(BottomReason::IrregularFamily(v)));
    }
    let (n, k) = (source.n(), source.degree());
    let a_n = source.mean();
    let projections = source.projections();
    let signed: Vec<T> = projections.iter().map(|&p| p - a_n).collect();
    let abs: Vec<T> = signed.iter().map(|d| d.abs()).collect();
    let l = compute_l(&abs, params.xi, params.c, k, n);
    let edge = threshold(params.xi, params.c, k, n, l);
    let (good, bad): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| abs[i] <= edge);
    let weights = compute_weights(&signed, params.xi, params.c, k, n, l, params.eps);
    let reweighted = if bad.is_empty() { a_n } else { source.reweighted_mean(&weights, a_n) };
    let smooth_bound = smooth_sensitivity(params.xi, l, n, k, params.c, params.eps, source.kind());
    Ok(Outcome::Value(HajekState { a_n, projections, l, good, bad, weights, reweighted, smooth_bound }))
}

/// Add `multiplier * S / eps` times quartic-tail noise to the reweighted mean.
/// The reported radius covers the noise alone at two-sided level `gamma`.
pub fn release_hajek<T: Real, R: Rng + ?Sized>(
    state: &HajekState<T>,
    params: &HajekParams<T>,
    budget: &mut PrivacyBudget,
    rng: &mut R,
) -> Result<EstimateReport<T>> {
    let estimate = smooth_sensitivity_release_scaled(
        state.reweighted,
        state.smooth_bound,
        params.eps,
        params.noise_multiplier,
        budget,
        "smooth-sensitivity release",
        rng,
    )?;
    let noise_scale = T::lit(params.noise_multiplier) * state.smooth_bound / T::lit(params.eps);
    let radius = noise_scale * T::lit(quartic_quantile(1.0 - params.gamma / 2.0));
    Ok(EstimateReport {
        estimate,
        radius,
        noise_scale,
        epsilon: params.eps,
        diagnostics: Diagnostics {
            l_statistic: Some(state.l),
            bad_count: Some(state.bad.len()),
            smooth_bound: Some(state.smooth_bound),
            ..Default::default()
        },
    })
}

/// Full private mean. Spends `eps` whether or not the family passes the
/// regularity check; an irregular family yields bottom.
pub fn private_mean_local_hajek<T, S, R>(
    source: &S,
    params: &HajekParams<T>,
    budget: &mut PrivacyBudget,
    rng: &mut R,
) -> Result<Outcome<EstimateReport<T>>>
where
    T: Real,
    S: ProjectionSource<T> + ?Sized,
    R: Rng + ?Sized,
{
    match hajek_state(source, params)? {
        Outcome::Value(state) => Ok(Outcome::Value(release_hajek(&state, params, budget, rng)?)),
        Outcome::Bottom(reason) => {
            budget.spend("smooth-sensitivity release (bottom)", params.eps)?;
            log::info!("local Hájek estimator returned bottom: {reason}");
            Ok(Outcome::Bottom(reason))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hajek::MaterializedSource;
    use crate::rng::seeded;
    use crate::ustat::{all_tuples, subsample_family, Dataset, FnKernel, SubsetFamily};
    use proptest::prelude::*;

    fn brute_l(devs: &[f64], xi: f64, c: f64, k: usize, n: usize) -> usize {
        (1..=devs.len().max(1)).find(|&t| devs.iter().filter(|&&d| d > threshold(xi, c, k, n, t)).count() <= t).unwrap()
    }

    #[test]
    fn l_examples() {
        assert_eq!(compute_l(&[0.1, 0.2, 0.0], 0.5, 1.0, 2, 3), 1);
        // 6kC/n = 1 with k = 2, C = 1, n = 12.
        assert_eq!(compute_l(&[0.0, 0.0, 0.0, 10.0], 0.0, 1.0, 2, 12), 1);
        assert_eq!(compute_l(&[5.0, 5.0, 5.0, 5.0], 0.0, 1.0, 2, 12), 4);
    }

    #[test]
    fn weight_ramp() {
        let (xi, c, k, n, l, eps) = (0.1, 1.0, 2, 100, 1, 1.0);
        let edge = xi + 6.0 * 2.0 / 100.0;
        let width = 6.0 * c * k as f64 / (n as f64 * eps);
        let w = compute_weights(&[0.05, -(edge + width), edge + width / 2.0, -edge - 2.0 * width], xi, c, k, n, l, eps);
        assert_eq!(w[0], 1.0);
        assert!(w[1].abs() < 1e-12);
        assert!((w[2] - 0.5).abs() < 1e-12);
        assert_eq!(w[3], 0.0);
    }

    #[test]
    fn zero_range_gives_step_weights() {
        let w = compute_weights(&[0.0, 0.2, -0.3], 0.25, 0.0, 2, 10, 1, 1.0);
        assert_eq!(w, vec![1.0, 1.0, 0.0]);
    }

    #[test]
    fn reweighting_by_hand() {
        let f = all_tuples(3, 2).unwrap();
        // Subsets in order {1,2}, {1,3}, {2,3}.
        let src = MaterializedSource::from_values(vec![1.0f64, 0.0, 0.0], &f).unwrap();
        let a = src.mean();
        assert!((src.reweighted_mean(&[0.0, 1.0, 1.0], a) - 2.0 / 9.0).abs() < 1e-15);
        assert_eq!(src.reweighted_mean(&[1.0; 3], a), a);
        assert!((src.reweighted_mean(&[0.0; 3], a) - a).abs() < 1e-15);
    }

    #[test]
    fn g_plug_in() {
        let g: f64 = smooth_bound_g(1.0, 1, 100, 2, 1.0, 1.0, true);
        let want = (2.0 / 100.0) * (1.0 + 2.0 / 100.0) * 2.0 + (4.0 / 1e4) * (1.0 + 2.0 / 100.0) + 4.0 / 1e4;
        assert!((g - want).abs() < 1e-15);
        assert_eq!(smooth_bound_g(0.0, 3, 100, 2, 0.0, 1.0, false), 0.0);
        // min(k, L) enters only for other families.
        let g2: f64 = smooth_bound_g(1.0, 5, 100, 3, 1.0, 1.0, false);
        let g1: f64 = smooth_bound_g(1.0, 5, 100, 3, 1.0, 1.0, true);
        assert!(g2 > g1);
    }

    #[test]
    fn large_eps_keeps_the_first_term() {
        let s: f64 = smooth_sensitivity(0.3, 2, 50, 2, 1.0, 1e3, FamilyKind::AllTuples);
        assert_eq!(s, smooth_bound_g(0.3, 2, 50, 2, 1.0, 1e3, true));
    }

    #[test]
    fn constant_kernel_is_released_exactly() {
        let f = all_tuples(8, 2).unwrap();
        let d = Dataset::new(vec![0.0; 8]);
        let h = FnKernel::bounded(2, 0.0, |_: &[&f64]| 0.625);
        let src = MaterializedSource::new(&h, &d, &f).unwrap();
        let mut b = PrivacyBudget::new(1.0).unwrap();
        let out = private_mean_local_hajek(&src, &HajekParams::new(1.0, 0.0, 0.0), &mut b, &mut seeded(1))
            .unwrap()
            .expect_value("regular");
        assert_eq!(out.estimate, 0.625);
        assert_eq!(b.spent(), 1.0);
    }

    #[test]
    fn concentrated_data_has_no_bad_indices() {
        let n = 20;
        let f = all_tuples(n, 2).unwrap();
        let d = Dataset::new((0..n).map(|i| (i % 2) as f64).collect());
        let h = FnKernel::bounded(2, 1.0, |a: &[&f64]| (a[0] + a[1]) / 2.0);
        let src = MaterializedSource::new(&h, &d, &f).unwrap();
        let p = HajekParams::new(1.0, 1.0, 0.5);
        let st = hajek_state(&src, &p).unwrap().expect_value("regular");
        assert_eq!(st.l, 1);
        assert!(st.bad.is_empty());
        assert_eq!(st.reweighted, st.a_n);
        assert_eq!(st.smooth_bound, smooth_sensitivity(0.5, 1, n, 2, 1.0, 1.0, FamilyKind::AllTuples));
    }

    #[test]
    fn irregular_family_is_bottom_and_still_charged() {
        let f = SubsetFamily::from_subsets(4, 2, &[vec![0, 1], vec![0, 1], vec![0, 2]]).unwrap();
        let src = MaterializedSource::from_values(vec![0.0, 1.0, 0.0], &f).unwrap();
        let mut b = PrivacyBudget::new(0.5).unwrap();
        let out = private_mean_local_hajek(&src, &HajekParams::new(0.5, 1.0, 0.1), &mut b, &mut seeded(1)).unwrap();
        assert!(out.is_bottom());
        assert_eq!(b.spent(), 0.5);
    }

    #[test]
    fn reweighted_double_counting() {
        let n = 9;
        let f = subsample_family(n, 3, 400, 3).unwrap();
        let d = Dataset::new((0..n).map(|i| (i * i % 5) as f64).collect());
        let h = FnKernel::bounded(3, 4.0, |a: &[&f64]| a.iter().map(|x| **x).fold(0.0, f64::max));
        let src = MaterializedSource::new(&h, &d, &f).unwrap();
        let weights: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
        let a = src.mean();
        let g = src.reweighted_values(&weights, a);
        let tilde = src.reweighted_mean(&weights, a);
        let gproj = crate::ustat::projections(&g, &f).unwrap();
        let lhs: f64 = (0..n).map(|i| f.index_count(i) as f64 * gproj[i]).sum();
        assert!((lhs - 3.0 * f.len() as f64 * tilde).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn l_matches_brute_force(
            devs in prop::collection::vec(0.0f64..3.0, 1..30),
            xi in 0.0f64..1.0, c in 0.0f64..2.0, k in 1usize..4,
        ) {
            let n = devs.len();
            let l = compute_l(&devs, xi, c, k, n);
            prop_assert_eq!(l, brute_l(&devs, xi, c, k, n));
            let over = devs.iter().filter(|&&d| d > threshold(xi, c, k, n, l)).count();
            prop_assert!(over <= l);
        }

        #[test]
        fn state_invariants(
            xs in prop::collection::vec(0u8..3, 4..12),
            xi in 0.0f64..0.5, eps in 0.1f64..3.0,
        ) {
            let n = xs.len();
            let f = all_tuples(n, 2).unwrap();
            let d = Dataset::new(xs.iter().map(|&x| x as f64).collect());
            let h = FnKernel::bounded(2, 1.0, |a: &[&f64]| if a[0] == a[1] { 1.0 } else { 0.0 });
            let src = MaterializedSource::new(&h, &d, &f).unwrap();
            let st = hajek_state(&src, &HajekParams::new(eps, 1.0, xi)).unwrap().expect_value("regular");
            prop_assert!(st.bad.len() <= st.l);
            prop_assert_eq!(st.good.len() + st.bad.len(), n);
            for &i in &st.good {
                prop_assert_eq!(st.weights[i], 1.0);
            }
            for (i, &w) in st.weights.iter().enumerate() {
                prop_assert!((0.0..=1.0).contains(&w));
                if w < 1.0 {
                    prop_assert!(st.bad.contains(&i));
                }
            }
            if st.bad.is_empty() {
                prop_assert_eq!(st.reweighted.to_bits(), st.a_n.to_bits());
            }
            prop_assert!(st.smooth_bound >= 0.0);
        }

        #[test]
        fn g_is_nondecreasing_in_l(
            xi in 0.0f64..2.0, l in 1usize..50, n in 2usize..500, k in 1usize..5,
            c in 0.0f64..3.0, eps in 0.01f64..5.0, all: bool,
        ) {
            prop_assert!(smooth_bound_g(xi, l + 1, n, k, c, eps, all) >= smooth_bound_g(xi, l, n, k, c, eps, all));
        }
    }
}
