use rayon::prelude::*;

use super::kernel::Kernel;
use crate::error::{invalid, Result};
use crate::rng::{substream, StdStream};
use crate::scalar::Real;

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaEstimate {
    pub value: f64,
    pub std_error: f64,
}

const BLOCKS: u32 = 64;

/// Unbiased Monte Carlo estimate of `zeta_c = cov(h(X_S1), h(X_S2))` with
/// `|S1 ∩ S2| = c`.
///
/// Each trial draws two kernel arguments sharing `c` points and an
/// independent pair of arguments; the trial statistic is the product of the
/// first pair minus the product of the second, whose expectation is
/// `E[h h'] - theta^2`.
pub fn empirical_zeta<X, T, K, F>(h: &K, sampler: F, c: usize, trials: usize, seed: u64) -> Result<ZetaEstimate>
where
    X: Send,
    T: Real,
    K: Kernel<X, T> + ?Sized,
    F: Fn(&mut StdStream) -> X + Sync,
{
    let k = h.degree();
    if c == 0 || c > k {
        return Err(invalid(format!("zeta index must lie in 1..={k}, got {c}")));
    }
    if trials < 2 {
        return Err(invalid("need at least two trials for a standard error"));
    }
    let per_block = trials.div_ceil(BLOCKS as usize);
    let sums: Vec<(f64, f64, usize)> = (0..BLOCKS)
        .into_par_iter()
        .map(|b| {
            let start = b as usize * per_block;
            let end = trials.min(start + per_block);
            let mut rng = substream(seed, c as u32, b);
            let mut pts: Vec<X> = Vec::with_capacity(4 * k);
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in start..end {
                pts.clear();
                // Layout: shared (c) | first extra (k-c) | second extra (k-c) | fresh (2k)
                for _ in 0..(2 * k - c) + 2 * k {
                    pts.push(sampler(&mut rng));
                }
                let first: Vec<&X> = pts[..k].iter().collect();
                let second: Vec<&X> = pts[..c].iter().chain(&pts[k..2 * k - c]).collect();
                let base = 2 * k - c;
                let p: Vec<&X> = pts[base..base + k].iter().collect();
                let q: Vec<&X> = pts[base + k..base + 2 * k].iter().collect();
                let v = h.eval(&first).as_f64() * h.eval(&second).as_f64() - h.eval(&p).as_f64() * h.eval(&q).as_f64();
                s += v;
                s2 += v * v;
            }
            (s, s2, end.saturating_sub(start))
        })
        .collect();
    let (s, s2, count) = sums.iter().fold((0.0, 0.0, 0usize), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    let nf = count as f64;
    let mean = s / nf;
    let var = ((s2 - nf * mean * mean) / (nf - 1.0)).max(0.0);
    Ok(ZetaEstimate { value: mean, std_error: (var / nf).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ustat::kernel::FnKernel;
    use rand::Rng;

    #[test]
    fn constant_kernel_has_no_variance() {
        let h = FnKernel::bounded(2, 0.0, |_: &[&f64]| 3.0f64);
        let z = empirical_zeta(&h, |r| r.random::<f64>(), 1, 1000, 1).unwrap();
        assert_eq!(z.value, 0.0);
        assert_eq!(z.std_error, 0.0);
    }

    #[test]
    fn rejects_out_of_range_index() {
        let h = FnKernel::bounded(2, 0.0, |_: &[&f64]| 3.0f64);
        assert!(empirical_zeta(&h, |r| r.random::<f64>(), 0, 1000, 1).is_err());
        assert!(empirical_zeta(&h, |r| r.random::<f64>(), 3, 1000, 1).is_err());
    }

    #[test]
    fn mean_kernel_of_uniforms() {
        // h(x,y) = (x+y)/2 with x ~ U(0,1): zeta_1 = 1/48, zeta_2 = 1/24.
        let h = FnKernel::sub_gaussian(2, 0.25, |a: &[&f64]| (a[0] + a[1]) / 2.0);
        for (c, want) in [(1, 1.0 / 48.0), (2, 1.0 / 24.0)] {
            let z = empirical_zeta(&h, |r| r.random::<f64>(), c, 200_000, 11).unwrap();
            assert!((z.value - want).abs() < 4.0 * z.std_error, "{c}: {z:?} vs {want}");
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let h = FnKernel::sub_gaussian(2, 0.25, |a: &[&f64]| a[0] * a[1]);
        let a = empirical_zeta(&h, |r| r.random::<f64>(), 1, 5000, 4).unwrap();
        let b = empirical_zeta(&h, |r| r.random::<f64>(), 1, 5000, 4).unwrap();
        assert_eq!(a, b);
    }
}
