//! Scalar types usable by the real-arithmetic reference simulator.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, NumAssign, One, Zero};

/// A real-number stand-in: `f32`, `f64`, or exact [`BigRational`].
pub trait Scalar: Num + NumAssign + Clone + PartialOrd + Debug {
    /// `raw · 2^−frac_bits`.
    fn from_scaled(raw: i64, frac_bits: u32) -> Self;

    /// β^steps with β = 0.5.
    fn half_pow(steps: u64) -> Self;

    fn to_f64(&self) -> f64;
}

impl Scalar for f64 {
    fn from_scaled(raw: i64, frac_bits: u32) -> Self {
        raw as f64 * (-(frac_bits as f64)).exp2()
    }

    fn half_pow(steps: u64) -> Self {
        (-(steps.min(2000) as f64)).exp2()
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for f32 {
    fn from_scaled(raw: i64, frac_bits: u32) -> Self {
        raw as f32 * (-(frac_bits as f32)).exp2()
    }

    fn half_pow(steps: u64) -> Self {
        (-(steps.min(200) as f32)).exp2()
    }

    fn to_f64(&self) -> f64 {
        *self as f64
    }
}

impl Scalar for BigRational {
    fn from_scaled(raw: i64, frac_bits: u32) -> Self {
        BigRational::new(BigInt::from(raw), BigInt::one() << frac_bits)
    }

    fn half_pow(steps: u64) -> Self {
        BigRational::new(BigInt::one(), BigInt::one() << steps)
    }

    fn to_f64(&self) -> f64 {
        use num_traits::ToPrimitive;
        if self.is_zero() {
            return 0.0;
        }
        self.numer().to_f64().unwrap_or(f64::NAN) / self.denom().to_f64().unwrap_or(f64::NAN)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_pow_agrees() {
        for n in 0..20 {
            let exact = BigRational::half_pow(n);
            assert_eq!(exact.to_f64(), f64::half_pow(n));
            assert_eq!(f32::half_pow(n) as f64, f64::half_pow(n));
        }
    }

    #[test]
    fn from_scaled_agrees() {
        assert_eq!(f64::from_scaled(-96, 6), -1.5);
        assert_eq!(BigRational::from_scaled(-96, 6).to_f64(), -1.5);
        assert_eq!(f32::from_scaled(3, 1), 1.5);
    }
}
