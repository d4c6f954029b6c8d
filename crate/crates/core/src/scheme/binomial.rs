//! Binomial coefficients with the convention `C(r, k) = 0` outside `0 <= k <= r`.

/// Largest `r` for which [`binomial`] runs in exact integer arithmetic.
pub const EXACT_LIMIT: i64 = 62;

/// Exact `C(r, k)` as an integer, or `None` when it does not fit in `u128`.
pub fn binomial_exact(r: i64, k: i64) -> Option<u128> {
    if k < 0 || r < 0 || k > r {
        return Some(0);
    }
    let k = k.min(r - k) as u128;
    let r = r as u128;
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (r - i) is divisible by (i + 1) after the multiplication
        acc = acc.checked_mul(r - i)? / (i + 1);
    }
    Some(acc)
}

/// `C(r, k)` as a real number.
///
/// Exact for `r <= 62`. Larger arguments are evaluated as a sum of logarithms
/// of the ratios `(r - k + i) / i`, which keeps the relative error near
/// `k * f64::EPSILON`.
pub fn binomial(r: i64, k: i64) -> f64 {
    if k < 0 || r < 0 || k > r {
        return 0.0;
    }
    if r <= EXACT_LIMIT {
        return binomial_exact(r, k).expect("C(62, k) fits in u128") as f64;
    }
    let k = k.min(r - k);
    let log: f64 = (1..=k)
        .map(|i| (((r - k + i) as f64) / (i as f64)).ln())
        .sum();
    log.exp()
}

/// `C(r, k)` for non-negative `usize` arguments.
#[inline]
pub fn choose(r: usize, k: usize) -> f64 {
    binomial(r as i64, k as i64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_values() {
        assert_eq!(binomial(4, 2), 6.0);
        assert_eq!(binomial(2, 5), 0.0);
        assert_eq!(binomial(0, 0), 1.0);
        assert_eq!(binomial(5, -1), 0.0);
        assert_eq!(binomial(-3, 1), 0.0);
        assert_eq!(binomial(62, 31), 465428353255261088.0);
    }

    #[test]
    fn pascal_rule_exact_up_to_limit() {
        for r in 1..=62i64 {
            for k in 0..=r {
                let lhs = binomial_exact(r, k).unwrap();
                let rhs = binomial_exact(r - 1, k - 1).unwrap() + binomial_exact(r - 1, k).unwrap();
                assert_eq!(lhs, rhs, "C({r},{k})");
            }
        }
    }

    #[test]
    fn log_domain_relative_error() {
        // u128 still holds these exactly, so they serve as ground truth
        for r in 63..=120i64 {
            for k in [0, 1, 2, 7, r / 3, r / 2] {
                let exact = binomial_exact(r, k).unwrap() as f64;
                let approx = binomial(r, k);
                let rel = (approx - exact).abs() / exact;
                assert!(rel <= 1e-12, "C({r},{k}): rel err {rel:e}");
            }
        }
    }
}
