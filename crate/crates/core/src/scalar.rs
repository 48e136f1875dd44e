use std::fmt::Debug;
use std::ops::Neg;

use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{Num, ToPrimitive};

/// Field-like scalar used by the closed-form rational functions.
///
/// Implemented for `f32`, `f64`, their complex counterparts and exact
/// [`BigRational`]. Only field operations are required; `re_f64` is used for
/// domain checks.
pub trait Scalar: Clone + Debug + PartialEq + Num + Neg<Output = Self> + Send + Sync {
    fn from_i64(n: i64) -> Self;
    fn from_rational(r: &BigRational) -> Self;
    fn re_f64(&self) -> f64;

    /// Integer power, negative exponents through the inverse.
    fn powi64(&self, n: i64) -> Self {
        let mut base = if n < 0 { Self::one() / self.clone() } else { self.clone() };
        let mut e = n.unsigned_abs();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base.clone();
            }
            base = base.clone() * base;
            e >>= 1;
        }
        acc
    }
}

impl Scalar for f64 {
    fn from_i64(n: i64) -> Self {
        n as f64
    }
    fn from_rational(r: &BigRational) -> Self {
        r.to_f64().unwrap_or(f64::NAN)
    }
    fn re_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for f32 {
    fn from_i64(n: i64) -> Self {
        n as f32
    }
    fn from_rational(r: &BigRational) -> Self {
        r.to_f32().unwrap_or(f32::NAN)
    }
    fn re_f64(&self) -> f64 {
        *self as f64
    }
}

impl Scalar for Complex<f64> {
    fn from_i64(n: i64) -> Self {
        Complex::new(n as f64, 0.0)
    }
    fn from_rational(r: &BigRational) -> Self {
        Complex::new(f64::from_rational(r), 0.0)
    }
    fn re_f64(&self) -> f64 {
        self.re
    }
}

impl Scalar for Complex<f32> {
    fn from_i64(n: i64) -> Self {
        Complex::new(n as f32, 0.0)
    }
    fn from_rational(r: &BigRational) -> Self {
        Complex::new(f32::from_rational(r), 0.0)
    }
    fn re_f64(&self) -> f64 {
        self.re as f64
    }
}

impl Scalar for BigRational {
    fn from_i64(n: i64) -> Self {
        BigRational::from_integer(n.into())
    }
    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }
    fn re_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}
