//! Exact binomial coefficients.

/// `C(n, k)` in 128-bit arithmetic, `None` on overflow.
pub fn binomial(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc == C(n, i) here, so acc * (n - i) is divisible by i + 1.
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_values() {
        assert_eq!(binomial(4, 2), Some(6));
        assert_eq!(binomial(5, 5), Some(1));
        assert_eq!(binomial(5, 0), Some(1));
        assert_eq!(binomial(3, 4), Some(0));
        assert_eq!(binomial(2000, 2), Some(1_999_000));
        assert_eq!(binomial(300, 3), Some(4_455_100));
    }

    #[test]
    fn pascal_rule() {
        for n in 1..60u64 {
            for k in 1..n {
                assert_eq!(binomial(n, k).unwrap(), binomial(n - 1, k - 1).unwrap() + binomial(n - 1, k).unwrap());
            }
        }
    }

    #[test]
    fn overflow_is_reported() {
        assert!(binomial(400, 200).is_none());
    }
}
