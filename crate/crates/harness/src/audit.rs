//! Exhaustive smoothness audit of the Hájek smooth bound and goodness-of-fit
//! checks for the noise samplers.

use std::fmt;

use upriv::dp::{laplace, laplace_cdf, quartic_density, quartic_draw, NoiseLaw};
use upriv::hajek::{hajek_state, HajekParams, MaterializedSource};
use upriv::rng::seeded;
use upriv::ustat::{all_tuples, Dataset, FnKernel};

use crate::quadrature::{integrate, symmetric_cdf};

/// Kernels the smoothness audit knows how to enumerate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuditKernel {
    /// `1(x = y)` scaled by the range `C`.
    Equality,
    /// `h = 0`.
    Constant,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothnessReport {
    pub n: usize,
    pub eps: f64,
    pub xi: f64,
    pub datasets: usize,
    pub pairs: usize,
    /// Smallest `S(D) - |Ã(D) - Ã(D')|` over adjacent pairs.
    pub sensitivity_margin: f64,
    /// Smallest `e^eps S(D) - S(D')` over adjacent pairs.
    pub smoothness_margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Check {
    /// The smooth bound fell below the actual change of the estimate.
    Sensitivity,
    /// The smooth bound grew by more than `e^eps` between neighbours.
    Smoothness,
}

/// The first adjacent pair that broke a check.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditFailure {
    pub check: Check,
    pub d: Vec<u8>,
    pub d_prime: Vec<u8>,
    pub bound: f64,
    pub observed: f64,
}

impl fmt::Display for AuditFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.check {
            Check::Sensitivity => "smooth bound below the change of the estimate",
            Check::Smoothness => "smooth bound grew by more than e^eps",
        };
        write!(
            f,
            "{what}: D = {:?}, D' = {:?}, bound {} < observed {}",
            self.d, self.d_prime, self.bound, self.observed
        )
    }
}

impl std::error::Error for AuditFailure {}

/// Check the smooth bound `S` of the Hájek estimator (degree 2, all pairs,
/// binary data) on every dataset of size `n` and every one-point change.
/// `halve` scales `S` by 1/2 as a negative control.
pub fn smoothness_audit(
    n: usize,
    eps: f64,
    xi: f64,
    c: f64,
    kernel: AuditKernel,
    halve: bool,
) -> Result<SmoothnessReport, AuditFailure> {
    assert!((2..=16).contains(&n), "audit size {n} outside 2..=16");
    let f = all_tuples(n, 2).expect("small family");
    let h = FnKernel::bounded(2, c, move |a: &[&u8]| match kernel {
        AuditKernel::Equality if a[0] == a[1] => c,
        _ => 0.0,
    });
    let params = HajekParams::new(eps, c, xi);
    let scale = if halve { 0.5 } else { 1.0 };
    let decode = |code: usize| -> Vec<u8> { (0..n).map(|i| (code >> i & 1) as u8).collect() };
    let states: Vec<(f64, f64)> = (0..1usize << n)
        .map(|code| {
            let d = Dataset::new(decode(code));
            let src = MaterializedSource::new(&h, &d, &f).expect("shapes agree");
            let s = hajek_state(&src, &params).expect("valid parameters").expect_value("all pairs are regular");
            (s.reweighted, scale * s.smooth_bound)
        })
        .collect();
    let tol = |x: f64| 1e-12 * x.abs().max(1e-300) + 1e-15;
    let mut report = SmoothnessReport {
        n,
        eps,
        xi,
        datasets: states.len(),
        pairs: 0,
        sensitivity_margin: f64::INFINITY,
        smoothness_margin: f64::INFINITY,
    };
    for code in 0..states.len() {
        let (a, s) = states[code];
        for i in 0..n {
            let other = code ^ (1 << i);
            let (a2, s2) = states[other];
            report.pairs += 1;
            let change = (a - a2).abs();
            report.sensitivity_margin = report.sensitivity_margin.min(s - change);
            if s + tol(s) < change {
                return Err(AuditFailure {
                    check: Check::Sensitivity,
                    d: decode(code),
                    d_prime: decode(other),
                    bound: s,
                    observed: change,
                });
            }
            let grown = eps.exp() * s;
            report.smoothness_margin = report.smoothness_margin.min(grown - s2);
            if grown + tol(grown) < s2 {
                return Err(AuditFailure {
                    check: Check::Smoothness,
                    d: decode(code),
                    d_prime: decode(other),
                    bound: grown,
                    observed: s2,
                });
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GofReport {
    pub law: NoiseLaw,
    pub draws: usize,
    /// Largest gap between the empirical and reference CDFs.
    pub gap: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Kolmogorov-Smirnov gap between `draws` samples of `law` at unit scale and
/// the reference CDF at scale `reference_scale` (analytic for Laplace,
/// quadrature of the density for the quartic law). Passes when the gap is at
/// most `1.5 * 1.63 / sqrt(draws)`.
pub fn noise_gof(law: NoiseLaw, draws: usize, seed: u64, reference_scale: f64) -> GofReport {
    assert!(draws > 0 && reference_scale > 0.0);
    let mut rng = seeded(seed);
    let mut xs: Vec<f64> = (0..draws)
        .map(|_| match law {
            NoiseLaw::Laplace => laplace(1.0f64, &mut rng).expect("unit scale").value,
            NoiseLaw::QuarticTail => quartic_draw(&mut rng).0,
        })
        .collect();
    xs.sort_by(|a, b| a.partial_cmp(b).expect("finite draws"));
    let b = reference_scale;
    let density = |x: f64| quartic_density(x / b) / b;
    let mut cdf = match law {
        NoiseLaw::Laplace => 0.0,
        NoiseLaw::QuarticTail => symmetric_cdf(&density, xs[0], 1e-13),
    };
    let m = draws as f64;
    let mut gap: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        match law {
            NoiseLaw::Laplace => cdf = laplace_cdf(x, b),
            NoiseLaw::QuarticTail if i > 0 => cdf += integrate(&density, xs[i - 1], x, 1e-15),
            NoiseLaw::QuarticTail => {}
        }
        gap = gap.max((cdf - i as f64 / m).abs()).max(((i + 1) as f64 / m - cdf).abs());
    }
    let threshold = 1.5 * 1.63 / m.sqrt();
    GofReport { law, draws, gap, threshold, pass: gap <= threshold }
}
