//! Exhaustive sensitivity oracles for small finite alphabets.

use crate::scalar::Real;
use crate::ustat::Dataset;

/// `max_{i, a} |f(d) - f(d with X_i := a)|`.
pub fn brute_force_local_sensitivity<X, T, F>(f: F, d: &Dataset<X>, alphabet: &[X]) -> T
where
    X: Clone + PartialEq,
    T: Real,
    F: Fn(&Dataset<X>) -> T,
{
    let base = f(d);
    let mut worst = T::zero();
    for i in 0..d.len() {
        for a in alphabet {
            if *a == d[i] {
                continue;
            }
            let diff = (f(&d.with_replaced(i, a.clone())) - base).abs();
            if diff > worst {
                worst = diff;
            }
        }
    }
    worst
}

/// Every dataset of length `n` over `alphabet`, in odometer order.
pub fn all_datasets<X: Clone>(n: usize, alphabet: &[X]) -> impl Iterator<Item = Dataset<X>> + '_ {
    let base = alphabet.len();
    let count = if base == 0 { 0 } else { base.pow(n as u32) };
    (0..count).map(move |mut code| {
        let mut pts = Vec::with_capacity(n);
        for _ in 0..n {
            pts.push(alphabet[code % base].clone());
            code /= base;
        }
        Dataset::new(pts)
    })
}

/// Largest local sensitivity over all datasets of length `n`.
pub fn brute_force_global_sensitivity<X, T, F>(f: F, n: usize, alphabet: &[X]) -> T
where
    X: Clone + PartialEq,
    T: Real,
    F: Fn(&Dataset<X>) -> T,
{
    all_datasets(n, alphabet).map(|d| brute_force_local_sensitivity(&f, &d, alphabet)).fold(T::zero(), |a, b| {
        if b > a {
            b
        } else {
            a
        }
    })
}
