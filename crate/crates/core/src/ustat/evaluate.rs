use rayon::prelude::*;

use super::dataset::Dataset;
use super::family::SubsetFamily;
use super::kernel::Kernel;
use crate::error::{Error, Result};
use crate::scalar::{block_sum, Real};

fn check_pairing<X, T: Real, K: Kernel<X, T> + ?Sized>(h: &K, d: &Dataset<X>, f: &SubsetFamily) -> Result<()> {
    if f.n() != d.len() {
        return Err(Error::ShapeMismatch(format!("family over {} points paired with {} data points", f.n(), d.len())));
    }
    if f.k() != h.degree() {
        return Err(Error::ShapeMismatch(format!(
            "family of {}-subsets paired with a degree-{} kernel",
            f.k(),
            h.degree()
        )));
    }
    Ok(())
}

/// `h(X_S)` for every subset of the family, in family order.
pub fn kernel_values<X, T, K>(h: &K, d: &Dataset<X>, f: &SubsetFamily) -> Result<Vec<T>>
where
    X: Sync,
    T: Real,
    K: Kernel<X, T> + ?Sized,
{
    check_pairing(h, d, f)?;
    let k = f.k();
    let pts = d.points();
    Ok(f.members()
        .par_chunks(k)
        .map_init(
            || Vec::with_capacity(k),
            |buf: &mut Vec<&X>, s| {
                buf.clear();
                buf.extend(s.iter().map(|&i| &pts[i as usize]));
                h.eval(buf)
            },
        )
        .collect())
}

fn mean<T: Real>(values: &[T]) -> T {
    block_sum(values.len(), |i| values[i]) / T::from_count(values.len())
}

/// `(1/M) sum_S h(X_S)`: the U-statistic for all-tuples families, the
/// incomplete U-statistic otherwise.
pub fn evaluate_ustat<X, T, K>(h: &K, d: &Dataset<X>, f: &SubsetFamily) -> Result<T>
where
    X: Sync,
    T: Real,
    K: Kernel<X, T> + ?Sized,
{
    Ok(mean(&kernel_values(h, d, f)?))
}

/// Average of `h` over the subsets containing index `i`.
pub fn local_projection<X, T, K>(h: &K, d: &Dataset<X>, f: &SubsetFamily, i: usize) -> Result<T>
where
    X: Sync,
    T: Real,
    K: Kernel<X, T> + ?Sized,
{
    check_pairing(h, d, f)?;
    let count = f.index_count(i);
    if count == 0 {
        return Err(Error::EmptyIncidence { index: i });
    }
    let pts = d.points();
    let mut buf = Vec::with_capacity(f.k());
    let mut sum = T::zero();
    for s in f.subsets().filter(|s| s.contains(&(i as u32))) {
        buf.clear();
        buf.extend(s.iter().map(|&j| &pts[j as usize]));
        sum += h.eval(&buf);
    }
    Ok(sum / T::lit(count as f64))
}

/// All local projections from precomputed kernel values, in one pass.
pub fn projections<T: Real>(values: &[T], f: &SubsetFamily) -> Result<Vec<T>> {
    if values.len() != f.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} kernel values for a family of {} subsets",
            values.len(),
            f.len()
        )));
    }
    if let Some(index) = f.index_counts().iter().position(|&c| c == 0) {
        return Err(Error::EmptyIncidence { index });
    }
    let mut sums = vec![T::zero(); f.n()];
    for (s, &v) in f.subsets().zip(values) {
        for &i in s {
            sums[i as usize] += v;
        }
    }
    for (s, &c) in sums.iter_mut().zip(f.index_counts()) {
        *s /= T::lit(c as f64);
    }
    Ok(sums)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ustat::family::{all_tuples, subsample_family};
    use crate::ustat::kernel::FnKernel;
    use proptest::prelude::*;

    fn equality() -> FnKernel<impl Fn(&[&f64]) -> f64 + Clone> {
        FnKernel::bounded(2, 1.0, |a: &[&f64]| if a[0] == a[1] { 1.0 } else { 0.0 })
    }

    #[test]
    fn constant_kernel() {
        let h = FnKernel::bounded(3, 0.0, |_: &[&f64]| 1.0f64);
        let d = Dataset::new(vec![0.3, 9.0, -1.0, 2.0, 5.0]);
        for f in [all_tuples(5, 3).unwrap(), subsample_family(5, 3, 17, 2).unwrap()] {
            assert_eq!(evaluate_ustat(&h, &d, &f).unwrap(), 1.0);
            assert_eq!(local_projection(&h, &d, &f, 2).unwrap(), 1.0);
        }
    }

    #[test]
    fn degree_one_is_the_sample_mean() {
        let h = FnKernel::sub_gaussian(1, 1.0, |a: &[&f64]| *a[0]);
        let d = Dataset::new(vec![1.0, 2.0, 3.0]);
        assert_eq!(evaluate_ustat(&h, &d, &all_tuples(3, 1).unwrap()).unwrap(), 2.0);
    }

    #[test]
    fn equality_kernel_by_hand() {
        let d = Dataset::new(vec![1.0, 1.0, 2.0, 3.0]);
        let f = all_tuples(4, 2).unwrap();
        let u: f64 = evaluate_ustat(&equality(), &d, &f).unwrap();
        assert!((u - 1.0 / 6.0).abs() < 1e-15);
        let p: f64 = local_projection(&equality(), &d, &f, 0).unwrap();
        assert!((p - 1.0 / 3.0).abs() < 1e-15);
        let all = projections(&kernel_values(&equality(), &d, &f).unwrap(), &f).unwrap();
        assert_eq!(all[0], p);
        assert_eq!(all[3], 0.0);
    }

    #[test]
    fn shape_errors() {
        let d = Dataset::new(vec![1.0, 2.0, 3.0]);
        assert!(matches!(
            evaluate_ustat::<_, f64, _>(&equality(), &d, &all_tuples(4, 2).unwrap()),
            Err(Error::ShapeMismatch(_))
        ));
        assert!(matches!(
            evaluate_ustat::<_, f64, _>(&equality(), &d, &all_tuples(3, 3).unwrap()),
            Err(Error::ShapeMismatch(_))
        ));
        let f = SubsetFamily::from_subsets(3, 2, &[vec![0, 1]]).unwrap();
        assert!(matches!(
            local_projection::<_, f64, _>(&equality(), &d, &f, 2),
            Err(Error::EmptyIncidence { index: 2 })
        ));
    }

    #[test]
    fn works_in_single_precision() {
        let h = FnKernel::bounded(2, 1.0, |a: &[&f32]| (a[0] - a[1]).abs().min(1.0));
        let d = Dataset::new(vec![0.0f32, 0.5, 1.0]);
        let u: f32 = evaluate_ustat(&h, &d, &all_tuples(3, 2).unwrap()).unwrap();
        assert!((u - 2.0 / 3.0).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn double_counting(xs in prop::collection::vec(0u8..4, 3..9), k in 1usize..4, m in 1usize..60, seed: u64) {
            let n = xs.len();
            prop_assume!(k <= n);
            let d = Dataset::new(xs.iter().map(|&x| x as f64).collect());
            let h = FnKernel::bounded(k, 1.0, |a: &[&f64]| a.iter().map(|x| **x).sum::<f64>() / 10.0);
            let f = subsample_family(n, k, m, seed).unwrap();
            let vals: Vec<f64> = kernel_values(&h, &d, &f).unwrap();
            let a: f64 = vals.iter().sum::<f64>() / m as f64;
            let lhs: f64 = (0..n)
                .filter(|&i| f.index_count(i) > 0)
                .map(|i| f.index_count(i) as f64 * local_projection(&h, &d, &f, i).unwrap())
                .sum();
            prop_assert!((lhs - k as f64 * m as f64 * a).abs() < 1e-9 * (1.0 + lhs.abs()));
        }

        #[test]
        fn all_tuples_statistic_is_permutation_invariant(
            xs in prop::collection::vec(-3i32..3, 4..8),
            perm_seed: u64,
        ) {
            use rand::seq::SliceRandom;
            let n = xs.len();
            let f = all_tuples(n, 3).unwrap();
            let h = FnKernel::bounded(3, 1.0, |a: &[&f64]| if a[0] + a[1] > *a[2] && a[1] + a[2] > *a[0] && a[0] + a[2] > *a[1] { 1.0 } else { 0.0 });
            let d = Dataset::new(xs.iter().map(|&x| x as f64).collect::<Vec<_>>());
            let mut shuffled = d.points().to_vec();
            shuffled.shuffle(&mut crate::rng::seeded(perm_seed));
            let a: f64 = evaluate_ustat(&h, &d, &f).unwrap();
            let b: f64 = evaluate_ustat(&h, &Dataset::new(shuffled), &f).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
