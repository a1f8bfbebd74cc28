//! Scalar abstraction for probability weights.
//!
//! Operators and estimators are written once against [`Weight`] and used with
//! `f64`/`f32` for sampling and with [`Exact`] where equalities must hold with
//! zero tolerance.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, ToPrimitive, Zero};

/// Exact rational number used for unbiasedness verification.
pub type Exact = BigRational;

pub trait Weight: Num + Clone + PartialOrd + Debug + ToPrimitive + Send + Sync + 'static {
    /// The ratio `num / den` in this scalar type.
    fn ratio(num: u64, den: u64) -> Self;

    /// Exact rational value of `self`. Floats convert without rounding.
    fn to_exact(&self) -> Exact;

    /// Converts a big integer; float types round to nearest.
    fn from_big(value: &BigInt) -> Self;

    fn from_count(count: u64) -> Self {
        Self::ratio(count, 1)
    }
}

impl Weight for f64 {
    fn ratio(num: u64, den: u64) -> Self {
        num as f64 / den as f64
    }

    fn to_exact(&self) -> Exact {
        BigRational::from_float(*self).expect("finite weight")
    }

    fn from_big(value: &BigInt) -> Self {
        value.to_f64().unwrap_or(f64::INFINITY)
    }
}

impl Weight for f32 {
    fn ratio(num: u64, den: u64) -> Self {
        (num as f64 / den as f64) as f32
    }

    fn to_exact(&self) -> Exact {
        BigRational::from_float(*self).expect("finite weight")
    }

    fn from_big(value: &BigInt) -> Self {
        value.to_f32().unwrap_or(f32::INFINITY)
    }
}

impl Weight for BigRational {
    fn ratio(num: u64, den: u64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn to_exact(&self) -> Exact {
        self.clone()
    }

    fn from_big(value: &BigInt) -> Self {
        BigRational::from_integer(value.clone())
    }
}

pub fn pow<T: Weight>(base: &T, exp: usize) -> T {
    let mut acc = T::one();
    for _ in 0..exp {
        acc = acc * base.clone();
    }
    acc
}

/// Binomial coefficient as an exact big integer.
pub fn binomial_big(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Binomial coefficient in `u128`, `None` on overflow.
pub fn binomial_u128(n: u64, k: u64) -> Option<u128> {
    binomial_big(n as usize, k as usize).to_u128()
}

/// `C(n, k)` converted into the weight type.
pub fn binomial<T: Weight>(n: usize, k: usize) -> T {
    T::from_big(&binomial_big(n, k))
}
