//! Height zeta machinery for the projective plane viewed as a right-sided
//! equivariant compactification of the group `x -> ax + b`.
//!
//! The numerical core is written against [`Scalar`], so the closed-form
//! local integrals can be evaluated in `f32`/`f64`, complex floats, or exact
//! rationals. Everything transcendental (characters, archimedean integrals)
//! is done in `f64`.

pub mod arith;
pub mod counting;
pub mod error;
pub mod fourier_local;
pub mod geometry;
pub mod heights;
pub mod igusa;
pub mod quad;
pub mod scalar;
pub mod zeta_assembly;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Exact rationals, always reduced with positive denominator.
pub type Rational = num_rational::BigRational;
/// Arbitrary precision integers.
pub type Integer = num_bigint::BigInt;
/// Complex values for transforms and complex exponents.
pub type ComplexVal = num_complex::Complex64;
/// Single precision complex values.
pub type ComplexVal32 = num_complex::Complex32;
