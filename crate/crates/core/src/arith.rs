//! Rational and p-adic arithmetic, additive characters and zeta factors.

use std::f64::consts::PI;
use std::fmt;

use num_bigint::{BigInt, Sign};
use num_complex::Complex64;
use num_integer::Integer as _;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::{Error, Rational, Result};

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut r = 0;
    while d % 2 == 0 {
        d /= 2;
        r += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..r {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn inv_mod(a: u64, m: u64) -> Option<u64> {
    let (mut r0, mut r1) = (m as i128, (a % m) as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 != 1 {
        return None;
    }
    Some(t0.rem_euclid(m as i128) as u64)
}

/// A rational prime, checked on construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct Prime(u64);

impl Prime {
    pub fn new(p: u64) -> Result<Self> {
        if is_prime(p) {
            Ok(Prime(p))
        } else {
            Err(Error::NotPrime(p))
        }
    }

    pub fn get(self) -> u64 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64
    }

    pub fn ln(self) -> f64 {
        (self.0 as f64).ln()
    }

    /// `p^k` as an integer, `None` on overflow.
    pub fn pow(self, k: u32) -> Option<u64> {
        self.0.checked_pow(k)
    }
}

impl TryFrom<u64> for Prime {
    type Error = Error;
    fn try_from(p: u64) -> Result<Self> {
        Prime::new(p)
    }
}

impl From<Prime> for u64 {
    fn from(p: Prime) -> u64 {
        p.0
    }
}

impl fmt::Display for Prime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Sieve of Eratosthenes.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

/// Prime divisors of a nonzero integer by trial division.
pub fn prime_divisors(n: &BigInt) -> Vec<u64> {
    let mut n = n.abs();
    let mut out = Vec::new();
    if n.is_zero() {
        return out;
    }
    let mut d = 2u64;
    loop {
        let db = BigInt::from(d);
        if &db * &db > n {
            break;
        }
        if (&n % &db).is_zero() {
            out.push(d);
            while (&n % &db).is_zero() {
                n /= &db;
            }
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > BigInt::one() {
        out.push(n.to_u64().expect("prime factor beyond u64"));
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LocalPlace {
    Finite(Prime),
    Archimedean,
}

impl LocalPlace {
    pub fn finite(p: u64) -> Result<Self> {
        Prime::new(p).map(LocalPlace::Finite)
    }
}

fn int_valuation(n: &BigInt, p: u64) -> i64 {
    debug_assert!(!n.is_zero());
    let pb = BigInt::from(p);
    let mut n = n.clone();
    let mut v = 0;
    loop {
        let (q, r) = n.div_rem(&pb);
        if !r.is_zero() {
            return v;
        }
        n = q;
        v += 1;
    }
}

/// `v_p(q)`; `None` stands for `+inf` at `q = 0`.
pub fn padic_valuation(q: &Rational, p: Prime) -> Option<i64> {
    if q.is_zero() {
        return None;
    }
    Some(int_valuation(q.numer(), p.get()) - int_valuation(q.denom(), p.get()))
}

/// `|q|_p = p^{-v_p(q)}`, with `|0|_p = 0`.
pub fn padic_abs(q: &Rational, p: Prime) -> Rational {
    match padic_valuation(q, p) {
        None => Rational::zero(),
        Some(v) => pow_rational(p.get(), -v),
    }
}

/// `p^k` as an exact rational for any integer `k`.
pub fn pow_rational(p: u64, k: i64) -> Rational {
    let base = BigInt::from(p).pow(k.unsigned_abs() as u32);
    if k >= 0 {
        Rational::from_integer(base)
    } else {
        Rational::new(BigInt::one(), base)
    }
}

/// Split `q = p^v * n/m` with `n, m` prime to `p`.
pub fn split_unit(q: &Rational, p: Prime) -> Option<(i64, BigInt, BigInt)> {
    if q.is_zero() {
        return None;
    }
    let pb = BigInt::from(p.get());
    let mut num = q.numer().clone();
    let mut den = q.denom().clone();
    let mut v = 0i64;
    while (&num % &pb).is_zero() {
        num /= &pb;
        v += 1;
    }
    while (&den % &pb).is_zero() {
        den /= &pb;
        v -= 1;
    }
    Some((v, num, den))
}

/// The p-adic fractional part `{q}_p` in `[0, 1)`.
pub fn padic_fractional_part(q: &Rational, p: Prime) -> Rational {
    let k = match padic_valuation(q, p) {
        Some(v) if v < 0 => -v,
        _ => return Rational::zero(),
    };
    let modulus = BigInt::from(p.get()).pow(k as u32);
    let num = q.numer();
    // the denominator is p^k * m with p not dividing m
    let m = q.denom() / &modulus;
    let m_inv = m
        .mod_floor(&modulus)
        .modinv(&modulus)
        .expect("denominator cofactor is a p-adic unit");
    let r = (num * m_inv).mod_floor(&modulus);
    Rational::new(r, modulus)
}

/// `{q}_p * p^depth` as an integer in `[0, p^depth)`. Requires
/// `v_p(q) >= -depth` and `p^depth < 2^64`.
pub fn fractional_residue(q: &Rational, p: Prime, depth: u32) -> u64 {
    let f = padic_fractional_part(q, p);
    if f.is_zero() {
        return 0;
    }
    let scaled = f * Rational::from_integer(BigInt::from(p.get()).pow(depth));
    assert!(scaled.is_integer(), "depth {depth} below the denominator of q");
    scaled.to_integer().to_u64().expect("residue fits u64")
}

/// `e^{2 pi i x}` for `x` in turns.
pub fn cis_turns(x: f64) -> Complex64 {
    let (s, c) = (2.0 * PI * x).sin_cos();
    Complex64::new(c, s)
}

fn rational_turns(r: &Rational) -> f64 {
    // reduce to [0, 1) before leaving exact arithmetic
    let frac = r - r.floor();
    frac.to_f64().unwrap_or(0.0)
}

/// Standard additive character: `e^{2 pi i {q}_p}` at finite places and
/// `e^{-2 pi i q}` at the real place, so the global product is trivial on Q.
pub fn additive_character(q: &Rational, place: LocalPlace) -> Complex64 {
    match place {
        LocalPlace::Finite(p) => cis_turns(rational_turns(&padic_fractional_part(q, p))),
        LocalPlace::Archimedean => cis_turns(-rational_turns(q)),
    }
}

/// `p^{-s}` for complex `s`.
pub fn prime_pow_neg(p: u64, s: Complex64) -> Complex64 {
    (-s * (p as f64).ln()).exp()
}

/// `1 / (1 - p^{-s})`.
pub fn local_zeta(p: Prime, s: Complex64) -> Result<Complex64> {
    let den = Complex64::new(1.0, 0.0) - prime_pow_neg(p.get(), s);
    if den.norm() < 1e-12 {
        return Err(Error::Pole(format!("local zeta at p={p}, s={s}")));
    }
    Ok(den.inv())
}

/// Upper bound for `sum_{p > P} p^{-sigma}`, `sigma > 1`, from
/// `pi(x) < 1.25506 x / ln x` and partial summation.
pub fn prime_tail_bound(cutoff: u64, sigma: f64) -> f64 {
    if sigma <= 1.0 {
        return f64::INFINITY;
    }
    let x = (cutoff.max(2)) as f64;
    1.25506 * sigma * x.powf(1.0 - sigma) / ((sigma - 1.0) * x.ln())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZetaEstimate {
    pub value: Complex64,
    pub error_bound: f64,
}

/// `zeta(s)` as the Euler product over `p <= cutoff`, with a bound on the
/// neglected tail.
pub fn riemann_zeta_truncated(s: Complex64, cutoff: u64) -> Result<ZetaEstimate> {
    if s.re <= 1.0 {
        return Err(Error::Domain(format!("truncated zeta needs Re(s) > 1, got {s}")));
    }
    let mut log_sum = Complex64::new(0.0, 0.0);
    let primes = primes_up_to(cutoff);
    for &p in &primes {
        log_sum -= ln_one_minus(prime_pow_neg(p, s));
    }
    let value = log_sum.exp();
    // |log(1 - z)| <= |z| / (1 - |z|) and |z| <= P^{-sigma}
    let z_max = (cutoff.max(2) as f64 + 1.0).powf(-s.re);
    let log_tail = prime_tail_bound(cutoff, s.re) / (1.0 - z_max);
    let rounding = 4.0 * f64::EPSILON * primes.len() as f64;
    let error_bound = value.norm() * (log_tail + rounding).exp_m1();
    Ok(ZetaEstimate { value, error_bound })
}

/// `ln(1 - z)` without cancellation for small `z`.
pub fn ln_one_minus(z: Complex64) -> Complex64 {
    if z.norm() > 1e-3 {
        return (Complex64::new(1.0, 0.0) - z).ln();
    }
    // -sum z^k / k, enough terms for |z| <= 1e-3
    let mut term = z;
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 1..=6 {
        acc -= term / k as f64;
        term *= z;
    }
    acc
}

const BERNOULLI_EVEN: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

/// Riemann zeta for complex `s != 1` by Euler-Maclaurin summation. Used where
/// the Euler product does not converge (near the line `Re s = 1`).
pub fn zeta(s: Complex64) -> Result<Complex64> {
    let one = Complex64::new(1.0, 0.0);
    if (s - one).norm() < 1e-12 {
        return Err(Error::Pole("zeta at s = 1".into()));
    }
    if s.re < 0.5 {
        // functional equation
        let t = one - s;
        let chi = Complex64::new(2.0, 0.0).powc(s)
            * Complex64::new(PI, 0.0).powc(s - one)
            * (Complex64::new(PI / 2.0, 0.0) * s).sin()
            * gamma(t)?;
        return Ok(chi * zeta(t)?);
    }
    let n = 30 + 2 * s.im.abs().ceil() as u64;
    let nf = n as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 1..n {
        sum += prime_pow_neg(k, s);
    }
    let n_s = prime_pow_neg(n, s);
    sum += n_s * nf / (s - one) + n_s * 0.5;
    // rising factorial s (s+1) ... (s+2k-2) / (2k)! * N^{-s-2k+1}
    let mut term = s * n_s / nf;
    let mut fact = 2.0;
    for (k, b) in BERNOULLI_EVEN.iter().enumerate() {
        let kk = (k + 1) as f64;
        if k > 0 {
            term = term * (s + 2.0 * kk - 3.0) * (s + 2.0 * kk - 2.0) / (nf * nf);
            fact *= (2.0 * kk - 1.0) * (2.0 * kk);
        }
        sum += term * (*b / fact);
    }
    if !(sum.re.is_finite() && sum.im.is_finite()) {
        return Err(Error::NonFinite("zeta"));
    }
    Ok(sum)
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `log Gamma(z)` (principal branch up to multiples of `2 pi i`) for
/// `Re z >= 0.5`.
fn ln_gamma_right(z: Complex64) -> Complex64 {
    let z = z - 1.0;
    let mut x = Complex64::new(LANCZOS[0], 0.0);
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        x += *c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
}

/// Complex Gamma function (Lanczos approximation with reflection).
pub fn gamma(z: Complex64) -> Result<Complex64> {
    if z.re < 0.5 {
        let s = (z * PI).sin();
        if s.norm() < 1e-300 {
            return Err(Error::Pole(format!("gamma at {z}")));
        }
        return Ok(Complex64::new(PI, 0.0) / (s * gamma(1.0 - z)?));
    }
    let g = ln_gamma_right(z).exp();
    if !(g.re.is_finite() && g.im.is_finite()) {
        return Err(Error::NonFinite("gamma"));
    }
    Ok(g)
}

/// Real Gamma for positive arguments.
pub fn gamma_real(x: f64) -> f64 {
    gamma(Complex64::new(x, 0.0)).map(|g| g.re).unwrap_or(f64::NAN)
}

/// Sign helper for the canonical sign convention.
pub fn sign_of(n: &BigInt) -> i32 {
    match n.sign() {
        Sign::Minus => -1,
        Sign::NoSign => 0,
        Sign::Plus => 1,
    }
}
