//! Conditional variances `zeta_c`, Hoeffding component variances `delta_c^2`
//! and the exact variance of a U-statistic.
//!
//! Generic over any field that can absorb binomial coefficients, so the same
//! code runs in `f64` and in exact rationals.

use std::ops::Neg;

use num_traits::{FromPrimitive, Num, ToPrimitive};

use super::binom::binomial;
use crate::error::{invalid, Error, Result};

fn coeff<T: FromPrimitive>(n: usize, k: usize) -> Result<T> {
    binomial(n as u64, k as u64).and_then(T::from_u128).ok_or(Error::CombinatorialOverflow { n, k, cap: u128::MAX })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceProfile<T> {
    /// `zeta_1, ..., zeta_k`.
    pub zetas: Vec<T>,
    /// `delta_1^2, ..., delta_k^2`.
    pub deltas: Vec<T>,
}

impl<T> VarianceProfile<T>
where
    T: Num + Clone + FromPrimitive + Neg<Output = T>,
{
    pub fn from_zetas(zetas: Vec<T>) -> Self {
        let deltas = hoeffding_deltas(&zetas);
        Self { zetas, deltas }
    }

    pub fn from_deltas(deltas: Vec<T>) -> Self {
        let zetas = zetas_from_deltas(&deltas);
        Self { zetas, deltas }
    }

    pub fn degree(&self) -> usize {
        self.zetas.len()
    }
}

/// `delta_c^2 = sum_{i<=c} (-1)^(c-i) C(c,i) zeta_i`.
pub fn hoeffding_deltas<T>(zetas: &[T]) -> Vec<T>
where
    T: Num + Clone + FromPrimitive + Neg<Output = T>,
{
    (1..=zetas.len())
        .map(|c| {
            (1..=c).fold(T::zero(), |acc, i| {
                let term = coeff::<T>(c, i).expect("small binomial") * zetas[i - 1].clone();
                if (c - i) % 2 == 0 {
                    acc + term
                } else {
                    acc - term
                }
            })
        })
        .collect()
}

/// `zeta_c = sum_{i<=c} C(c,i) delta_i^2`.
pub fn zetas_from_deltas<T>(deltas: &[T]) -> Vec<T>
where
    T: Num + Clone + FromPrimitive,
{
    (1..=deltas.len())
        .map(|c| {
            (1..=c).fold(T::zero(), |acc, i| acc + coeff::<T>(c, i).expect("small binomial") * deltas[i - 1].clone())
        })
        .collect()
}

/// Positions `c` (1-based) whose `delta_c^2` is below `-tolerance`. Empirical
/// zetas can produce these; they signal estimation noise, not an error.
pub fn negative_deltas<T: Num + PartialOrd + Clone + Neg<Output = T>>(deltas: &[T], tolerance: T) -> Vec<usize> {
    let floor = -tolerance;
    deltas.iter().enumerate().filter(|(_, d)| **d < floor).map(|(i, _)| i + 1).collect()
}

fn check_degree<T>(zetas: &[T], n: usize, k: usize) -> Result<()> {
    if zetas.len() != k {
        return Err(Error::ShapeMismatch(format!("{} zetas for degree {k}", zetas.len())));
    }
    if k == 0 || n < k {
        return Err(invalid(format!("need 1 <= k <= n, got k={k}, n={n}")));
    }
    Ok(())
}

/// `var(U_n) = C(n,k)^{-1} sum_c C(k,c) C(n-k,k-c) zeta_c`.
pub fn variance_of_ustat<T>(zetas: &[T], n: usize, k: usize) -> Result<T>
where
    T: Num + Clone + FromPrimitive,
{
    check_degree(zetas, n, k)?;
    let total: T = coeff(n, k)?;
    let mut acc = T::zero();
    for c in 1..=k {
        if n - k < k - c {
            continue;
        }
        acc = acc + coeff::<T>(k, c)? * coeff::<T>(n - k, k - c)? * zetas[c - 1].clone();
    }
    Ok(acc / total)
}

/// Same quantity through the Hoeffding decomposition:
/// `sum_c C(k,c)^2 / C(n,c) delta_c^2`.
pub fn variance_via_deltas<T>(deltas: &[T], n: usize, k: usize) -> Result<T>
where
    T: Num + Clone + FromPrimitive,
{
    check_degree(deltas, n, k)?;
    let mut acc = T::zero();
    for c in 1..=k {
        let kc: T = coeff(k, c)?;
        acc = acc + kc.clone() * kc * deltas[c - 1].clone() / coeff::<T>(n, c)?;
    }
    Ok(acc)
}

/// First-order approximation of `var(U_n)`: `k^2 zeta_1 / n`, or for a
/// degenerate kernel `k^2 (k-1)^2 zeta_2 / (2 n (n-1))`.
pub fn variance_leading_term<T>(zetas: &[T], n: usize, k: usize, degenerate: bool) -> Result<T>
where
    T: Num + Clone + FromPrimitive + ToPrimitive + PartialOrd + Neg<Output = T>,
{
    check_degree(zetas, n, k)?;
    if 2 * k > n {
        return Err(invalid(format!("leading term needs k <= n/2, got k={k}, n={n}")));
    }
    let nn = T::from_usize(n).unwrap();
    let kk = T::from_usize(k).unwrap();
    if !degenerate {
        return Ok(kk.clone() * kk * zetas[0].clone() / nn);
    }
    let scale = zetas.iter().cloned().fold(T::one(), |m, z| {
        let a = if z < T::zero() { -z } else { z };
        if a > m {
            a
        } else {
            m
        }
    });
    let tol = T::from_f64(1e-12).unwrap() * scale;
    let z1 = zetas[0].clone();
    if z1 > tol || z1 < -tol.clone() {
        return Err(Error::DegeneracyMismatch { zeta1: z1.to_f64().unwrap_or(f64::NAN) });
    }
    if k < 2 {
        return Ok(T::zero());
    }
    let km1 = kk.clone() - T::one();
    let two = T::one() + T::one();
    Ok(kk.clone() * kk * km1.clone() * km1 * zetas[1].clone() / (two * nn.clone() * (nn - T::one())))
}
