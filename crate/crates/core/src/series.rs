//! Taylor coefficients of the coupling operator `(z/2) coth(z/2) = Σ c_k z^{2k}`.
//!
//! Computed exactly from `A(z) · sinh(z/2) = (z/2) cosh(z/2)` by matching powers of `z`.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// `numerator / denominator · z^order`, in lowest terms with positive denominator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalCoefficient {
    pub order: u32,
    pub numerator: BigInt,
    pub denominator: BigInt,
}

impl RationalCoefficient {
    fn from_ratio(order: u32, r: &BigRational) -> Self {
        // BigRational keeps itself reduced with a positive denominator.
        Self {
            order,
            numerator: r.numer().clone(),
            denominator: r.denom().clone(),
        }
    }

    pub fn to_f64(&self) -> f64 {
        BigRational::new(self.numerator.clone(), self.denominator.clone())
            .to_f64()
            .unwrap_or(f64::NAN)
    }

    pub fn is_positive(&self) -> bool {
        self.numerator.is_positive()
    }
}

impl fmt::Display for RationalCoefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.order, self.numerator, self.denominator)
    }
}

fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

fn pow2(n: u32) -> BigInt {
    BigInt::one() << n as usize
}

/// Coefficients `c_0 .. c_K` with `2K = max_order`.
pub fn coth_half_series(max_order: i64) -> Result<Vec<RationalCoefficient>> {
    if max_order < 0 || max_order % 2 != 0 {
        return Err(Error::BadSeriesOrder(max_order));
    }
    let terms = (max_order / 2) as u32 + 1;

    // sinh(z/2) = z Σ s_n z^{2n},   s_n = 1 / (2^{2n+1} (2n+1)!)
    // (z/2) cosh(z/2) = z Σ t_n z^{2n},   t_n = 1 / (2^{2n+1} (2n)!)
    let s: Vec<BigRational> = (0..terms)
        .map(|n| BigRational::new(BigInt::one(), pow2(2 * n + 1) * factorial(2 * n + 1)))
        .collect();
    let t: Vec<BigRational> = (0..terms)
        .map(|n| BigRational::new(BigInt::one(), pow2(2 * n + 1) * factorial(2 * n)))
        .collect();

    let mut c: Vec<BigRational> = Vec::with_capacity(terms as usize);
    for n in 0..terms as usize {
        let mut acc = t[n].clone();
        for k in 0..n {
            acc -= &c[k] * &s[n - k];
        }
        c.push(acc / &s[0]);
    }
    debug_assert!(c[0].is_one() && !c.iter().any(|x| x.denom().is_zero()));

    Ok(c.iter()
        .enumerate()
        .map(|(k, r)| RationalCoefficient::from_ratio(2 * k as u32, r))
        .collect())
}

/// Horner evaluation of the truncated series at `z`.
pub fn partial_sum(coeffs: &[RationalCoefficient], z: f64) -> f64 {
    let z2 = z * z;
    coeffs
        .iter()
        .rev()
        .fold(0.0, |acc, c| acc * z2 + c.to_f64())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ratio(c: &RationalCoefficient) -> (i64, i64) {
        (
            c.numerator.to_i64().unwrap(),
            c.denominator.to_i64().unwrap(),
        )
    }

    fn coth_half(z: f64) -> f64 {
        let w = z / 2.0;
        w / w.tanh()
    }

    #[test]
    fn leading_coefficients() {
        let c = coth_half_series(6).unwrap();
        let got: Vec<_> = c.iter().map(ratio).collect();
        assert_eq!(got, vec![(1, 1), (1, 12), (-1, 720), (1, 30240)]);
        assert_eq!(
            c.iter().map(|x| x.order).collect::<Vec<_>>(),
            vec![0, 2, 4, 6]
        );
    }

    #[test]
    fn matches_bernoulli_numbers() {
        // c_k = B_{2k} / (2k)!, B_8 = -1/30, B_10 = 5/66
        let c = coth_half_series(10).unwrap();
        assert_eq!(ratio(&c[4]), (-1, 1_209_600));
        assert_eq!(ratio(&c[5]), (1, 47_900_160));
    }

    #[test]
    fn signs_alternate() {
        let c = coth_half_series(20).unwrap();
        assert!(c[0].is_positive() && c[1].is_positive());
        for (k, ck) in c.iter().enumerate().skip(2) {
            assert_eq!(ck.is_positive(), k % 2 == 1, "k = {k}");
        }
    }

    #[test]
    fn bad_orders_rejected() {
        assert_eq!(coth_half_series(3), Err(Error::BadSeriesOrder(3)));
        assert_eq!(coth_half_series(-2), Err(Error::BadSeriesOrder(-2)));
        assert_eq!(coth_half_series(0).unwrap().len(), 1);
    }

    #[test]
    fn partial_sums_converge() {
        let c8 = coth_half_series(8).unwrap();
        assert!((partial_sum(&c8, 0.1) - coth_half(0.1)).abs() < 1e-14);
        // tail after c_K is about 2 (z / 2π)^{2K+2}
        let c10 = coth_half_series(10).unwrap();
        for z in [-0.5, -0.2, 0.05, 0.3, 0.5] {
            assert!(
                (partial_sum(&c10, z) - coth_half(z)).abs() < 1e-12,
                "z = {z}"
            );
        }
        let c16 = coth_half_series(16).unwrap();
        for z in [-0.99, -0.5, 0.3, 0.7, 0.99] {
            assert!(
                (partial_sum(&c16, z) - coth_half(z)).abs() < 1e-12,
                "z = {z}"
            );
        }
    }
}
