//! Local and global heights on P^2 for the embedding `(x, a) -> (a : x/a : 1)`.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{padic_abs, prime_divisors, LocalPlace, Prime};
use crate::{Error, Rational, Result};

/// A point of `G(Q)`, `a != 0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GroupPoint {
    pub x: Rational,
    pub a: Rational,
}

impl GroupPoint {
    pub fn new(x: Rational, a: Rational) -> Result<Self> {
        if a.is_zero() {
            return Err(Error::Domain("a = 0 is not in G".into()));
        }
        Ok(GroupPoint { x, a })
    }

    pub fn from_ints(x: i64, a: i64) -> Result<Self> {
        Self::new(Rational::from_integer(x.into()), Rational::from_integer(a.into()))
    }

    /// `(x, a)(y, b) = (x + a y, a b)`.
    pub fn mul(&self, other: &GroupPoint) -> GroupPoint {
        GroupPoint { x: &self.x + &self.a * &other.x, a: &self.a * &other.a }
    }

    pub fn inverse(&self) -> GroupPoint {
        let a_inv = self.a.recip();
        GroupPoint { x: -(&self.x * &a_inv), a: a_inv }
    }

    /// Homogeneous coordinates `(a : x/a : 1)`.
    pub fn coordinates(&self) -> [Rational; 3] {
        [self.a.clone(), &self.x / &self.a, Rational::one()]
    }
}

/// Complex coordinates `s = s0 D0 + s2 D2` on `Pic^G`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PicParam {
    pub s0: Complex64,
    pub s2: Complex64,
}

impl PicParam {
    pub fn new(s0: Complex64, s2: Complex64) -> Self {
        PicParam { s0, s2 }
    }

    pub fn real(s0: f64, s2: f64) -> Self {
        PicParam { s0: Complex64::new(s0, 0.0), s2: Complex64::new(s2, 0.0) }
    }

    /// The anticanonical point `kappa = (0, 3)`.
    pub fn anticanonical() -> Self {
        Self::real(0.0, 3.0)
    }

    pub fn sum(&self) -> Complex64 {
        self.s0 + self.s2
    }

    /// Twisting by `|a|^{-it}` shifts `s` along the character direction.
    pub fn twist(&self, t: f64) -> Self {
        let it = Complex64::new(0.0, t);
        PicParam { s0: self.s0 - it, s2: self.s2 + it }
    }
}

/// Reduced integral representative, first nonzero coordinate positive.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PrimitiveTriple {
    pub u0: BigInt,
    pub u1: BigInt,
    pub u2: BigInt,
}

impl PrimitiveTriple {
    pub fn new(u0: BigInt, u1: BigInt, u2: BigInt) -> Result<Self> {
        if u0.is_zero() && u1.is_zero() && u2.is_zero() {
            return Err(Error::Domain("zero triple".into()));
        }
        let g = u0.gcd(&u1).gcd(&u2);
        let (mut u0, mut u1, mut u2) = (u0 / &g, u1 / &g, u2 / &g);
        let lead = [&u0, &u1, &u2].into_iter().find(|u| !u.is_zero()).cloned().expect("nonzero");
        if lead.is_negative() {
            u0 = -u0;
            u1 = -u1;
            u2 = -u2;
        }
        Ok(PrimitiveTriple { u0, u1, u2 })
    }

    pub fn norm_sq(&self) -> BigInt {
        &self.u0 * &self.u0 + &self.u1 * &self.u1 + &self.u2 * &self.u2
    }

    /// Back to the group, defined when `u0 u2 != 0`.
    pub fn to_point(&self) -> Result<GroupPoint> {
        if self.u0.is_zero() || self.u2.is_zero() {
            return Err(Error::Domain("triple lies on the boundary".into()));
        }
        let a = Rational::new(self.u0.clone(), self.u2.clone());
        let x = &a * Rational::new(self.u1.clone(), self.u2.clone());
        GroupPoint::new(x, a)
    }
}

pub fn to_primitive_triple(g: &GroupPoint) -> PrimitiveTriple {
    let c = g.coordinates();
    let l = c.iter().fold(BigInt::one(), |l, q| l.lcm(q.denom()));
    let ints: Vec<BigInt> = c.iter().map(|q| (q * Rational::from_integer(l.clone())).to_integer()).collect();
    PrimitiveTriple::new(ints[0].clone(), ints[1].clone(), ints[2].clone()).expect("u2 = 1 before scaling")
}

/// Exact local heights `(H_{D0,p}, H_{D2,p})`.
pub fn local_height_exact(p: Prime, g: &GroupPoint) -> (Rational, Rational) {
    let c = g.coordinates();
    let m = c.iter().map(|q| padic_abs(q, p)).max().expect("three coordinates");
    let h0 = &m / padic_abs(&g.a, p);
    (h0, m)
}

/// Archimedean heights `(H_{D0,inf}, H_{D2,inf})` with the Euclidean norm.
pub fn archimedean_heights(g: &GroupPoint) -> (f64, f64) {
    let a = g.a.to_f64().unwrap_or(f64::NAN);
    let y = (&g.x / &g.a).to_f64().unwrap_or(f64::NAN);
    let m = (a * a + y * y + 1.0).sqrt();
    (m / a.abs(), m)
}

fn ln_rational(q: &Rational) -> f64 {
    ln_big(q.numer()) - ln_big(q.denom())
}

fn ln_big(n: &BigInt) -> f64 {
    let bits = n.bits();
    if bits < 1000 {
        return n.to_f64().unwrap_or(f64::NAN).abs().ln();
    }
    let shift = bits - 64;
    let top: BigInt = n.abs() >> shift;
    top.to_f64().unwrap_or(f64::NAN).ln() + shift as f64 * std::f64::consts::LN_2
}

/// `H_{D0,v}(g)^{s0} H_{D2,v}(g)^{s2}`.
pub fn local_height(place: LocalPlace, s: &PicParam, g: &GroupPoint) -> Complex64 {
    let (l0, l2) = match place {
        LocalPlace::Finite(p) => {
            let (h0, h2) = local_height_exact(p, g);
            (ln_rational(&h0), ln_rational(&h2))
        }
        LocalPlace::Archimedean => {
            let (h0, h2) = archimedean_heights(g);
            (h0.ln(), h2.ln())
        }
    };
    (s.s0 * l0 + s.s2 * l2).exp()
}

/// Primes at which some local height of `g` can differ from 1.
pub fn bad_primes(g: &GroupPoint) -> Vec<u64> {
    let y = &g.x / &g.a;
    let mut ps: Vec<u64> = [g.a.numer(), g.a.denom(), y.numer(), y.denom()]
        .into_iter()
        .flat_map(prime_divisors)
        .collect();
    ps.sort_unstable();
    ps.dedup();
    ps
}

/// Product of all local heights.
pub fn global_height(s: &PicParam, g: &GroupPoint) -> Complex64 {
    let mut h = local_height(LocalPlace::Archimedean, s, g);
    for p in bad_primes(g) {
        let p = Prime::new(p).expect("factor is prime");
        h *= local_height(LocalPlace::Finite(p), s, g);
    }
    h
}

/// `(u0^2 + u1^2 + u2^2)^{3/2}` on the primitive representative.
pub fn anticanonical_height(g: &GroupPoint) -> f64 {
    let t = to_primitive_triple(g);
    t.norm_sq().to_f64().unwrap_or(f64::INFINITY).powf(1.5)
}
