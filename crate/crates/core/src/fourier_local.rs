//! Local Fourier transforms of the height at finite places.
//!
//! `hhat_p(s, alpha) = int_{G(Q_p)} H_p(s, g)^{-1} conj(psi_p(alpha x)) 1_{Z_p}(alpha a) dg`
//! with `dg = dx da^x`, `dx(Z_p) = 1`, `da^x(Z_p^x) = 1`.
//!
//! The closed forms are rational functions of `q = 1/p`, `X0 = p^{-s0}` and
//! `X2 = p^{-s2}` and are evaluated over any [`Scalar`]. The oracle sums the
//! defining integral shell by shell, sampling characters over residue
//! classes, and bounds the truncated remainder in closed form.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{cis_turns, fractional_residue, inv_mod, padic_valuation, pow_mod, pow_rational, Prime};
use crate::geometry::{builtin_p2_model, VarietyModel};
use crate::heights::PicParam;
use crate::{Error, Rational, Result, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    ClosedForm,
    Oracle,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalTransformResult {
    pub value: Complex64,
    pub method: Method,
    /// only set for oracle results
    pub error_bound: Option<f64>,
}

/// `int_{Z_p^x} conj(psi_p(b x)) db^x`, exactly.
pub fn unit_character_moment(x: &Rational, p: Prime) -> Rational {
    match padic_valuation(x, p) {
        None => Rational::one(),
        Some(v) if v >= 0 => Rational::one(),
        Some(-1) => -Rational::new(BigInt::one(), BigInt::from(p.get() - 1)),
        Some(_) => Rational::zero(),
    }
}

fn modulus(p: Prime, depth: u32) -> Result<u64> {
    match p.pow(depth) {
        Some(n) if n <= 1 << 40 => Ok(n),
        _ => Err(Error::Overflow),
    }
}

/// Average of `conj(psi_p(b x))` over units `b mod p^depth`.
pub fn unit_character_moment_brute(x: &Rational, p: Prime, depth: u32) -> Result<Complex64> {
    monomial_character_moment_brute(x, 1, p, depth)
}

/// Average of `conj(psi_p(a b^d))` over units `b mod p^depth`, with no
/// shortcuts. Negative `d` uses the inverse residue.
pub fn monomial_character_moment_brute(a: &Rational, d: i64, p: Prime, depth: u32) -> Result<Complex64> {
    let need = match padic_valuation(a, p) {
        Some(v) if v < 0 => (-v) as u32,
        _ => 0,
    };
    if depth < need.max(1) {
        return Err(Error::DepthInsufficient { depth, need: need.max(1) });
    }
    let n = modulus(p, depth)?;
    let r = fractional_residue(a, p, depth);
    let pp = p.get();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut count = 0u64;
    for b in 1..n {
        if b % pp == 0 {
            continue;
        }
        let base = if d < 0 { inv_mod(b, n).expect("unit") } else { b };
        let bd = pow_mod(base, d.unsigned_abs(), n);
        let phase = ((r as u128 * bd as u128) % n as u128) as u64;
        sum += cis_turns(-(phase as f64) / n as f64);
        count += 1;
    }
    Ok(sum / count as f64)
}

/// The same average, returning exact zero when `|a|_p > p` and `p` does not
/// divide `d`.
pub fn monomial_character_moment(a: &Rational, d: i64, p: Prime, depth: u32) -> Result<Complex64> {
    let v = match padic_valuation(a, p) {
        None => return Ok(Complex64::new(1.0, 0.0)),
        Some(v) => v,
    };
    if v >= 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    if depth < (-v) as u32 {
        return Err(Error::DepthInsufficient { depth, need: (-v) as u32 });
    }
    if v < -1 && d != 0 && d % p.get() as i64 != 0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    monomial_character_moment_brute(a, d, p, depth)
}

/// The four possible values of the quadratic moment at `|a|_p = p`:
/// `(+-sqrt(p) - 1)/(p - 1)` and `(+-i sqrt(p) - 1)/(p - 1)`.
pub fn quadratic_moment_family(p: Prime) -> [Complex64; 4] {
    let r = (p.as_f64()).sqrt();
    let d = p.as_f64() - 1.0;
    [
        Complex64::new((r - 1.0) / d, 0.0),
        Complex64::new((-r - 1.0) / d, 0.0),
        Complex64::new(-1.0 / d, r / d),
        Complex64::new(-1.0 / d, -r / d),
    ]
}

/// `hhat_p` as a rational function of `q = 1/p`, `x0 = p^{-s0}`,
/// `x2 = p^{-s2}`, for `v = v_p(alpha)`.
pub fn hhat_p_closed_generic<T: Scalar>(v: i64, q: &T, x0: &T, x2: &T) -> T {
    let one = T::one();
    let a = q.clone() * x0.clone();
    let b = x0.clone() * x0.clone() * x2.clone();
    let c = x0.clone() * x2.clone();
    let base = (one.clone() - c) / ((one.clone() - a.clone()) * (one.clone() - b.clone()));
    if v == 0 {
        return base;
    }
    if v < 0 {
        return a.powi64(-v) * base;
    }
    let k = v;
    let h = k / 2;
    let ceil = k - h;
    // r = p^{-(s2 - 2)}
    let r = x2.clone() / (q.clone() * q.clone());
    let mut geo = T::zero();
    let mut rj = one.clone();
    for _ in 0..h {
        rj = rj * r.clone();
        geo = geo + rj.clone();
    }
    let one_a = one.clone() - a.clone();
    let one_b = one.clone() - b.clone();
    let head = one.clone() + a.clone() / one_a.clone() + geo.clone();
    let deep = q.clone() * a.powi64(-(k + 1)) * b.powi64(1 + ceil) / one_b.clone();
    let mixed = geo * a.clone() / one_a.clone();
    let corner = b.powi64(h + 1) / one_b * a.powi64(-k) / one_a;
    head - deep + (one - q.clone()) * (mixed + corner)
}

/// Margins of `Re s` against the cone `s0 > -1, s0 + s2 > 0, 2 s0 + s2 > 0`.
pub fn lambda_margin(s: &PicParam) -> f64 {
    let (a, b) = (s.s0.re, s.s2.re);
    (a + 1.0).min(a + b).min(2.0 * a + b)
}

fn check_lambda(s: &PicParam) -> Result<()> {
    if lambda_margin(s) <= 1e-9 {
        return Err(Error::Domain(format!("s = ({}, {}) is outside the cone of convergence", s.s0, s.s2)));
    }
    Ok(())
}

/// `(1/p, p^{-s0}, p^{-s2})` in complex floats.
pub fn local_vars(s: &PicParam, p: Prime) -> (Complex64, Complex64, Complex64) {
    let lp = p.ln();
    (Complex64::new(1.0 / p.as_f64(), 0.0), (-s.s0 * lp).exp(), (-s.s2 * lp).exp())
}

fn alpha_valuation(alpha: &Rational, p: Prime) -> Result<i64> {
    padic_valuation(alpha, p).ok_or_else(|| Error::Domain("alpha must be nonzero".into()))
}

pub fn hhat_p_closed(s: &PicParam, alpha: &Rational, p: Prime) -> Result<Complex64> {
    check_lambda(s)?;
    let v = alpha_valuation(alpha, p)?;
    let (q, x0, x2) = local_vars(s, p);
    let value = hhat_p_closed_generic(v, &q, &x0, &x2);
    if !(value.re.is_finite() && value.im.is_finite()) {
        return Err(Error::NonFinite("hhat_p_closed"));
    }
    Ok(value)
}

/// Exact value at integer `s`, where every variable is rational.
pub fn hhat_p_closed_exact(s0: i64, s2: i64, v: i64, p: Prime) -> Result<Rational> {
    if (s0 + 1).min(s0 + s2).min(2 * s0 + s2) <= 0 {
        return Err(Error::Domain(format!("s = ({s0}, {s2}) is outside the cone of convergence")));
    }
    let q = pow_rational(p.get(), -1);
    Ok(hhat_p_closed_generic(v, &q, &pow_rational(p.get(), -s0), &pow_rational(p.get(), -s2)))
}

pub fn hhat_p_closed_result(s: &PicParam, alpha: &Rational, p: Prime) -> Result<LocalTransformResult> {
    Ok(LocalTransformResult { value: hhat_p_closed(s, alpha, p)?, method: Method::ClosedForm, error_bound: None })
}

/// `hhat_p(s, alpha, t)`, the transform against `|a|_p^{-it}`.
pub fn hhat_p_twisted(s: &PicParam, alpha: &Rational, t: f64, p: Prime) -> Result<Complex64> {
    hhat_p_closed(&s.twist(t), alpha, p)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// shells `v(x) = i`, `v(a) = j` with `shell_min <= i, j <= shell_max`
    pub shell_min: i64,
    pub shell_max: i64,
    /// characters are sampled on units modulo at most `p^residue_depth`
    pub residue_depth: u32,
    /// largest acceptable tail bound
    pub tolerance: f64,
}

impl OracleConfig {
    pub fn new(shell_min: i64, shell_max: i64, residue_depth: u32, tolerance: f64) -> Result<Self> {
        if shell_min > shell_max || residue_depth == 0 || !(tolerance > 0.0) {
            return Err(Error::Domain("invalid oracle configuration".into()));
        }
        Ok(OracleConfig { shell_min, shell_max, residue_depth, tolerance })
    }

    /// Wide shell window and a residue depth with `p^depth` about `2^18`.
    pub fn default_for(p: Prime) -> Self {
        let depth = ((18.0 * std::f64::consts::LN_2) / p.ln()).floor().max(1.0) as u32;
        OracleConfig { shell_min: -60, shell_max: 60, residue_depth: depth, tolerance: 1e-6 }
    }
}

/// Remainder bounds for the shell sum of
/// `A(i, j) = (1 - 1/p) p^{-i} p^{-j s0} p^{-S max(-j, j - i, 0)}`, using real parts.
struct ShellTail {
    lp: f64,
    p: f64,
    s0: f64,
    s: f64,
}

impl ShellTail {
    fn e(&self, x: f64) -> f64 {
        (self.lp * x).exp()
    }

    fn split(j: i64) -> (i64, i64) {
        let c = (-j).max(0);
        (c, j - c)
    }

    /// sum over i >= i0
    fn row_above(&self, j: i64, i0: i64) -> f64 {
        let (c, b) = Self::split(j);
        let (jf, cf, bf) = (j as f64, c as f64, b as f64);
        let mut total = 0.0;
        if i0 <= b {
            let g = self.s - 1.0;
            total += (1.0 - 1.0 / self.p) * self.e(-jf * (self.s0 + self.s) + (bf + 1.0) * g)
                * (1.0 - self.e((i0 - b - 1) as f64 * g))
                / (self.e(g) - 1.0);
        }
        let i1 = i0.max(b + 1) as f64;
        total + self.e(-jf * self.s0 - self.s * cf - i1)
    }

    /// sum over i <= i1
    fn row_below(&self, j: i64, i1: i64) -> f64 {
        let (c, b) = Self::split(j);
        let (jf, cf, bf) = (j as f64, c as f64, b as f64);
        let g = self.s - 1.0;
        let e = i1.min(b) as f64;
        let mut total = (1.0 - 1.0 / self.p) * self.e(-jf * (self.s0 + self.s) + e * g) / (1.0 - self.e(-g));
        if i1 > b {
            total += self.e(-jf * self.s0 - self.s * cf - (bf + 1.0)) * (1.0 - self.e(-((i1 - b) as f64)));
        }
        total
    }

    /// full column sum over all i
    fn column(&self, j: i64) -> f64 {
        let k1 = 1.0 / self.p + (1.0 - 1.0 / self.p) / (1.0 - self.e(1.0 - self.s));
        let jf = j as f64;
        if j >= 0 {
            k1 * self.e(-jf * (self.s0 + 1.0))
        } else {
            k1 * self.e(jf * (self.s - self.s0 - 2.0))
        }
    }

    /// sum of columns `j >= from`
    fn columns_from(&self, from: i64) -> f64 {
        let mut total = 0.0;
        let mut j = from;
        while j < 0 {
            total += self.column(j);
            j += 1;
        }
        let r = self.s0 + 1.0;
        total + self.column(j) / (1.0 - self.e(-r))
    }

    /// sum of columns `j <= to`
    fn columns_to(&self, to: i64) -> f64 {
        let mut total = 0.0;
        let mut j = to;
        while j >= 0 {
            total += self.column(j);
            j -= 1;
        }
        let rho = self.s - self.s0 - 2.0;
        if rho <= 0.0 {
            return f64::INFINITY;
        }
        total + self.column(j) / (1.0 - self.e(-rho))
    }
}

/// Which integrand the oracle sums.
#[derive(Clone, Debug, PartialEq)]
pub enum OracleKind {
    /// `conj(psi(alpha x)) 1_{Z_p}(alpha a)`
    Character(Rational),
    /// no character and no indicator
    Trivial,
}

fn oracle_core(s: &PicParam, kind: &OracleKind, t: f64, p: Prime, cfg: &OracleConfig) -> Result<LocalTransformResult> {
    if s.s0.re <= -1.0 + 1e-9 || s.sum().re <= 1.0 + 1e-9 {
        return Err(Error::NonConvergentTail { bound: f64::INFINITY, tol: cfg.tolerance });
    }
    let lp = p.ln();
    let pf = p.as_f64();
    let big_s = s.sum();
    let s0 = s.s0 - Complex64::new(0.0, t);

    let (alpha_v, j_floor) = match kind {
        OracleKind::Character(alpha) => {
            let v = alpha_valuation(alpha, p)?;
            (Some(v), Some(-v))
        }
        OracleKind::Trivial => (None, None),
    };
    let j_lo = j_floor.map_or(cfg.shell_min, |f| f.max(cfg.shell_min));
    let j_hi = cfg.shell_max;
    let i_lo = match alpha_v {
        Some(v) => cfg.shell_min.max(-v - cfg.residue_depth as i64),
        None => cfg.shell_min,
    };
    let i_hi = cfg.shell_max;

    // x-shell weights: measure of {v(x) = i} times the sampled character average
    let mut x_weight = Vec::new();
    for i in i_lo..=i_hi {
        let avg = match (kind, alpha_v) {
            (OracleKind::Character(alpha), Some(v)) if v + i < 0 => {
                let depth = (-(v + i)) as u32;
                let shifted = alpha * pow_rational(p.get(), i);
                sample_unit_average(&shifted, p, depth)?
            }
            _ => Complex64::new(1.0, 0.0),
        };
        x_weight.push(avg * (1.0 - 1.0 / pf));
    }

    let mut value = Complex64::new(0.0, 0.0);
    let mut magnitude = 0.0;
    if j_lo <= j_hi {
        for j in j_lo..=j_hi {
            for (k, i) in (i_lo..=i_hi).enumerate() {
                let m = (-j).max(j - i).max(0) as f64;
                let expo = (-(i as f64) - s0 * j as f64 - big_s * m) * lp;
                let term = x_weight[k] * expo.exp();
                magnitude += term.norm();
                value += term;
            }
        }
    }

    let tail = ShellTail { lp, p: pf, s0: s.s0.re, s: big_s.re };
    let mut bound = 0.0;
    if j_lo <= j_hi {
        for j in j_lo..=j_hi {
            bound += tail.row_below(j, i_lo - 1) + tail.row_above(j, i_hi + 1);
        }
    }
    bound += tail.columns_from(j_hi.max(j_lo - 1) + 1);
    match j_floor {
        Some(f) if f < j_lo => {
            for j in f..j_lo.min(j_hi + 1) {
                bound += tail.column(j);
            }
        }
        Some(_) => {}
        None => bound += tail.columns_to(j_lo - 1),
    }
    // floating point summation slack
    bound += 1e-14 * magnitude + f64::MIN_POSITIVE;
    if !bound.is_finite() || bound > cfg.tolerance {
        return Err(Error::NonConvergentTail { bound, tol: cfg.tolerance });
    }
    Ok(LocalTransformResult { value, method: Method::Oracle, error_bound: Some(bound) })
}

/// Average of `conj(psi_p(y u))` over units `u mod p^depth` where
/// `v_p(y) = -depth`. Sampled directly, independent of the closed-form moments.
fn sample_unit_average(y: &Rational, p: Prime, depth: u32) -> Result<Complex64> {
    let n = modulus(p, depth)?;
    let r = fractional_residue(y, p, depth);
    let pp = p.get();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut count = 0u64;
    for u in 1..n {
        if u % pp == 0 {
            continue;
        }
        let phase = ((r as u128 * u as u128) % n as u128) as u64;
        sum += cis_turns(-(phase as f64) / n as f64);
        count += 1;
    }
    Ok(sum / count as f64)
}

/// Shell-sum oracle for `hhat_p(s, alpha)`.
pub fn hhat_p_oracle(s: &PicParam, alpha: &Rational, p: Prime, cfg: &OracleConfig) -> Result<LocalTransformResult> {
    oracle_core(s, &OracleKind::Character(alpha.clone()), 0.0, p, cfg)
}

/// Oracle with `|a|_p^{-it}` inserted in the integrand.
pub fn hhat_p_oracle_twisted(
    s: &PicParam,
    alpha: &Rational,
    t: f64,
    p: Prime,
    cfg: &OracleConfig,
) -> Result<LocalTransformResult> {
    oracle_core(s, &OracleKind::Character(alpha.clone()), t, p, cfg)
}

/// Oracle for `int H_p(s, g)^{-1} dg` with no character.
pub fn trivial_integral_oracle(s: &PicParam, p: Prime, cfg: &OracleConfig) -> Result<LocalTransformResult> {
    oracle_core(s, &OracleKind::Trivial, 0.0, p, cfg)
}

/// `tau_p(G)^{-1} sum_I #X_I(F_p)/p^dim prod_{i in I} (p - 1)/(p^{s_i - kappa_i + 1} - 1)`,
/// written with `y_i = p^{-(s_i - kappa_i + 1)}` so it is a rational
/// function over any scalar.
pub fn trivial_integral_generic<T: Scalar>(model: &VarietyModel, p: Prime, y: &[T]) -> Result<T> {
    let pm1 = T::from_i64(p.get() as i64 - 1);
    let mut total = T::zero();
    let mut open = T::zero();
    for st in &model.strata {
        let count = T::from_rational(&Rational::from_integer(model.stratum_count(st, p.get())));
        if st.divisors.is_empty() {
            open = count.clone();
        }
        let mut term = count;
        for label in &st.divisors {
            let i = model.divisor_index(label).ok_or_else(|| Error::InvalidModel(format!("unknown divisor {label}")))?;
            let yi = y[i].clone();
            term = term * pm1.clone() * yi.clone() / (T::one() - yi);
        }
        total = total + term;
    }
    if open.is_zero() {
        return Err(Error::InvalidModel("model has no open stratum".into()));
    }
    // tau^{-1} / p^dim = 1 / #G(F_p)
    Ok(total / open)
}

/// Strata formula for `model` at complex `s` given per divisor.
pub fn trivial_integral_model(model: &VarietyModel, s: &[Complex64], p: Prime) -> Result<Complex64> {
    if s.len() != model.divisors.len() {
        return Err(Error::Domain("one coordinate per boundary divisor expected".into()));
    }
    let lp = p.ln();
    let mut y = Vec::with_capacity(s.len());
    for (si, k) in s.iter().zip(&model.kappa) {
        let shift = si - *k as f64 + 1.0;
        if shift.re <= 1e-12 {
            return Err(Error::Domain(format!("s - kappa + 1 = {shift} is on or beyond a pole")));
        }
        y.push((-shift * lp).exp());
    }
    trivial_integral_generic(model, p, &y)
}

/// Strata formula on the P^2 model.
pub fn trivial_integral_p(s: &PicParam, p: Prime) -> Result<Complex64> {
    trivial_integral_model(&builtin_p2_model(), &[s.s0, s.s2], p)
}

/// Exact strata formula at integer `s`.
pub fn trivial_integral_exact(model: &VarietyModel, s: &[i64], p: Prime) -> Result<Rational> {
    let mut y = Vec::with_capacity(s.len());
    for (si, k) in s.iter().zip(&model.kappa) {
        let shift = si - k + 1;
        if shift <= 0 {
            return Err(Error::Domain(format!("s - kappa + 1 = {shift} is on or beyond a pole")));
        }
        y.push(pow_rational(p.get(), -shift));
    }
    trivial_integral_generic(model, p, &y)
}
