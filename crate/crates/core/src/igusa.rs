//! Two-variable p-adic oscillatory integrals with monomial phase,
//! `eta(s) = int |x|^{s1} |y|^{s2} psi_p(alpha x^d y^e) Phi(x, y) dx^x dy^x`,
//! evaluated as a sum over valuation shells `v(x) = n`, `v(y) = m`.
//!
//! `dx^x` gives every shell `p^n Z_p^x` mass 1, so
//! `eta = sum p^{-(n s1 + m s2)} eta_{n,m}` with `eta_{n,m}` the average of
//! the phase over the unit torus.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::arith::{cis_turns, fractional_residue, inv_mod, padic_fractional_part, padic_valuation, pow_mod, pow_rational, Prime};
use crate::{Error, Rational, Result};

/// Locally constant test functions with bounded support.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum TestFn {
    /// indicator of `Z_p^2`
    IntegralSquare,
    /// indicator of `(p Z_p)^2`
    MaximalSquare,
    /// indicator of `n_min <= v(x) <= n_max`, `m_min <= v(y) <= m_max`
    Shells { n_min: i64, n_max: Option<i64>, m_min: i64, m_max: Option<i64> },
}

impl TestFn {
    fn bounds(&self) -> (i64, Option<i64>, i64, Option<i64>) {
        match self {
            TestFn::IntegralSquare => (0, None, 0, None),
            TestFn::MaximalSquare => (1, None, 1, None),
            TestFn::Shells { n_min, n_max, m_min, m_max } => (*n_min, *n_max, *m_min, *m_max),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IgusaSpec {
    pub p: Prime,
    pub d: i64,
    pub e: i64,
    pub alpha: Rational,
    pub s1: Complex64,
    pub s2: Complex64,
    pub testfn: TestFn,
}

impl IgusaSpec {
    pub fn new(p: Prime, d: i64, e: i64, alpha: Rational, s1: Complex64, s2: Complex64, testfn: TestFn) -> Result<Self> {
        if d == 0 && e == 0 {
            return Err(Error::Domain("(d, e) = (0, 0) has no phase".into()));
        }
        if padic_valuation(&alpha, p).is_none() {
            return Err(Error::Domain("alpha must be nonzero".into()));
        }
        let (n0, n1, m0, m1) = testfn.bounds();
        if n1.is_some_and(|n1| n1 < n0) || m1.is_some_and(|m1| m1 < m0) {
            return Err(Error::Domain("empty shell range".into()));
        }
        Ok(IgusaSpec { p, d, e, alpha, s1, s2, testfn })
    }

    fn alpha_val(&self) -> i64 {
        padic_valuation(&self.alpha, self.p).expect("alpha nonzero")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaConfig {
    /// shells scanned per variable beyond the support minimum
    pub max_shell: i64,
    /// largest depth `D` for brute-force torus averages (cost `p^{2D}`)
    pub max_depth: u32,
    /// largest acceptable tail bound
    pub tolerance: f64,
}

impl Default for EtaConfig {
    fn default() -> Self {
        EtaConfig { max_shell: 200, max_depth: 6, tolerance: 1e-10 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EtaStats {
    pub shells_scanned: u64,
    pub certified_zero: u64,
    pub trivial_phase: u64,
    pub brute_forced: u64,
    pub unresolved: u64,
    pub max_depth_used: u32,
    /// shells with a nonzero contribution
    pub survivors: Vec<(i64, i64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaResult {
    pub value: Complex64,
    pub tail_bound: f64,
    pub stats: EtaStats,
}

/// Is `(s1, s2)` inside the open cone spanned by `(1,0), (0,1), (d,e)`?
pub fn in_cone(d: i64, e: i64, s1: f64, s2: f64) -> bool {
    let (df, ef) = (d as f64, e as f64);
    match (d.signum(), e.signum()) {
        (-1, -1) => true,
        (-1, 0) => s2 > 0.0,
        (-1, 1) => s2 > 0.0 && ef * s1 - df * s2 > 0.0,
        (0, -1) => s1 > 0.0,
        (1, -1) => s1 > 0.0 && df * s2 - ef * s1 > 0.0,
        _ => s1 > 0.0 && s2 > 0.0,
    }
}

/// What is known about a single shell average.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ShellMoment {
    /// phase integral on the torus, `eta_{n,m} = 1`
    Trivial,
    /// vanishing certified by the Gauss-sum criterion
    Zero,
    Computed { value: Complex64, depth: u32 },
    /// needs a deeper brute force than allowed; `|eta_{n,m}| <= 1`
    Unresolved { depth: u32 },
}

fn certifies_vanishing(p: u64, d: i64, e: i64) -> bool {
    (d != 0 && d % p as i64 != 0) || (e != 0 && e % p as i64 != 0)
}

/// Torus average of `psi_p(c x^d y^e)` by enumerating units modulo `p^D`.
pub fn torus_average(c: &Rational, d: i64, e: i64, p: Prime, depth: u32) -> Result<Complex64> {
    let n = p.pow(depth).filter(|&n| n <= 1 << 24).ok_or(Error::Overflow)?;
    let r = fractional_residue(c, p, depth);
    let units: Vec<u64> = (1..n).filter(|u| u % p.get() != 0).collect();
    let power = |u: u64, k: i64| {
        let b = if k < 0 { inv_mod(u, n).expect("unit") } else { u };
        pow_mod(b, k.unsigned_abs(), n)
    };
    let xs: Vec<u64> = units.iter().map(|&u| power(u, d)).collect();
    let ys: Vec<u64> = units.iter().map(|&u| mul(r, power(u, e), n)).collect();
    let mut sum = Complex64::new(0.0, 0.0);
    for &y in &ys {
        for &x in &xs {
            sum += cis_turns(mul(x, y, n) as f64 / n as f64);
        }
    }
    Ok(sum / (units.len() * units.len()) as f64)
}

fn mul(a: u64, b: u64, n: u64) -> u64 {
    ((a as u128 * b as u128) % n as u128) as u64
}

/// `eta_{n,m}` for the shell `v(x) = n`, `v(y) = m`.
pub fn shell_moment(spec: &IgusaSpec, n: i64, m: i64, max_depth: u32) -> Result<ShellMoment> {
    let w = spec.alpha_val() + n * spec.d + m * spec.e;
    if w >= 0 {
        return Ok(ShellMoment::Trivial);
    }
    if w < -1 && certifies_vanishing(spec.p.get(), spec.d, spec.e) {
        return Ok(ShellMoment::Zero);
    }
    let depth = (-w) as u32;
    if depth > max_depth {
        return Ok(ShellMoment::Unresolved { depth });
    }
    let c = &spec.alpha * pow_rational(spec.p.get(), n * spec.d + m * spec.e);
    Ok(ShellMoment::Computed { value: torus_average(&c, spec.d, spec.e, spec.p, depth)?, depth })
}

pub fn eta_eval(spec: &IgusaSpec) -> Result<EtaResult> {
    eta_eval_with(spec, &EtaConfig::default())
}

/// Geometric sum `sum_{n=a}^{b} p^{-n sigma}`; `b = None` is infinite.
fn geometric(lp: f64, sigma: f64, a: i64, b: Option<i64>) -> f64 {
    match b {
        Some(b) if b < a => 0.0,
        None if sigma <= 0.0 => f64::INFINITY,
        None => (-(a as f64) * sigma * lp).exp() / (1.0 - (-sigma * lp).exp()),
        Some(b) => {
            if sigma.abs() < 1e-12 {
                return (b - a + 1) as f64;
            }
            let len = (b - a + 1) as f64;
            if sigma > 0.0 {
                (-(a as f64) * sigma * lp).exp() * (1.0 - (-len * sigma * lp).exp()) / (1.0 - (-sigma * lp).exp())
            } else {
                (-(b as f64) * sigma * lp).exp() * (1.0 - (len * sigma * lp).exp()) / (1.0 - (sigma * lp).exp())
            }
        }
    }
}

fn div_floor(a: i64, b: i64) -> i64 {
    a.div_euclid(b) - if b < 0 && a.rem_euclid(b) != 0 { 1 } else { 0 }
}

fn div_ceil(a: i64, b: i64) -> i64 {
    -div_floor(-a, b)
}

struct Region {
    v: i64,
    d: i64,
    e: i64,
    certified: bool,
    n0: i64,
    n1: Option<i64>,
}

impl Region {
    /// n-interval of possibly nonzero shells in row m
    fn row(&self, m: i64) -> (i64, Option<i64>) {
        let (mut lo, mut hi) = (self.n0, self.n1);
        if self.certified {
            // v + n d + m e >= -1
            let rhs = -1 - self.v - m * self.e;
            match self.d.signum() {
                1 => lo = lo.max(div_ceil(rhs, self.d)),
                -1 => {
                    let h = div_floor(-rhs, -self.d);
                    hi = Some(hi.map_or(h, |x| x.min(h)));
                }
                _ => {
                    if rhs > 0 {
                        hi = Some(lo - 1);
                    }
                }
            }
        }
        (lo, hi)
    }
}

pub fn eta_eval_with(spec: &IgusaSpec, cfg: &EtaConfig) -> Result<EtaResult> {
    let (sig1, sig2) = (spec.s1.re, spec.s2.re);
    if !in_cone(spec.d, spec.e, sig1, sig2) {
        return Err(Error::Domain(format!(
            "s = ({sig1}, {sig2}) is outside the cone spanned by (1,0), (0,1), ({}, {})",
            spec.d, spec.e
        )));
    }
    let p = spec.p;
    let lp = p.ln();
    let (n0, n1, m0, m1) = spec.testfn.bounds();
    let n_cap = n1.map_or(n0 + cfg.max_shell, |x| x.min(n0 + cfg.max_shell));
    let m_cap = m1.map_or(m0 + cfg.max_shell, |x| x.min(m0 + cfg.max_shell));

    let region = Region {
        v: spec.alpha_val(),
        d: spec.d,
        e: spec.e,
        certified: certifies_vanishing(p.get(), spec.d, spec.e),
        n0,
        n1,
    };
    // rows whose surviving range is finite are scanned to its end
    let row_end = |m: i64| {
        let mut end = n_cap;
        if let Some(h) = region.row(m).1 {
            end = end.max(h.min(n0 + 16 * cfg.max_shell));
        }
        n1.map_or(end, |x| end.min(x))
    };
    let mut stats = EtaStats::default();
    let mut value = Complex64::new(0.0, 0.0);
    let mut tail = 0.0;
    for m in m0..=m_cap {
        for n in n0..=row_end(m) {
            stats.shells_scanned += 1;
            let weight = || (-(spec.s1 * n as f64 + spec.s2 * m as f64) * lp).exp();
            match shell_moment(spec, n, m, cfg.max_depth)? {
                ShellMoment::Zero => stats.certified_zero += 1,
                ShellMoment::Trivial => {
                    stats.trivial_phase += 1;
                    stats.survivors.push((n, m));
                    value += weight();
                }
                ShellMoment::Computed { value: eta, depth } => {
                    stats.brute_forced += 1;
                    stats.max_depth_used = stats.max_depth_used.max(depth);
                    if eta.norm() > 1e-12 {
                        stats.survivors.push((n, m));
                    }
                    value += eta * weight();
                }
                ShellMoment::Unresolved { .. } => {
                    stats.unresolved += 1;
                    tail += weight().norm();
                }
            }
        }
    }

    let row_sum = |m: i64, from: i64| -> f64 {
        let (lo, hi) = region.row(m);
        geometric(lp, sig1, lo.max(from), hi) * (-(m as f64) * sig2 * lp).exp()
    };
    // rows inside the box: columns beyond n_cap
    for m in m0..=m_cap {
        tail += row_sum(m, row_end(m) + 1);
    }
    // rows beyond m_cap
    if m1.map_or(true, |x| x > m_cap) {
        let period = spec.d.abs().max(1);
        let extra = 200.max(20 * period);
        let m_end = m1.map_or(m_cap + extra, |x| x.min(m_cap + extra));
        let mut last = Vec::new();
        for m in m_cap + 1..=m_end {
            let r = row_sum(m, n0);
            last.push((m, r));
            tail += r;
        }
        if m1.map_or(true, |x| x > m_end) {
            let rho = tail_rate(&region, sig1, sig2);
            if !(rho > 0.0) {
                return Err(Error::TailUnbounded(format!("rows decay at rate {rho}")));
            }
            if rho.is_infinite() && last.last().is_some_and(|&(_, r)| r > 0.0) {
                return Err(Error::TailUnbounded("surviving rows extend past the scan".into()));
            }
            // largest row near the end, carried forward to m_end + 1 at rate rho
            let envelope = last
                .iter()
                .rev()
                .take(2 * period as usize)
                .map(|&(m, r)| r * (-((m_end + 1 - m) as f64) * rho * lp).exp())
                .fold(0.0, f64::max);
            tail += envelope / (1.0 - (-rho * lp).exp());
        }
    }
    if !tail.is_finite() {
        return Err(Error::TailUnbounded("surviving shells do not decay".into()));
    }
    if tail > cfg.tolerance {
        return Err(Error::NonConvergentTail { bound: tail, tol: cfg.tolerance });
    }
    Ok(EtaResult { value, tail_bound: tail, stats })
}

/// Asymptotic decay rate in `m` of the row sums of possibly nonzero shells.
fn tail_rate(region: &Region, sig1: f64, sig2: f64) -> f64 {
    let (d, e) = (region.d, region.e);
    if !region.certified {
        return if region.n1.is_some() || sig1 > 0.0 { sig2 } else { f64::NEG_INFINITY };
    }
    if d <= 0 && e < 0 {
        // v + n d + m e < -1 for all n >= n0 once m is large: rows end up empty
        return f64::INFINITY;
    }
    match d.signum() {
        1 => {
            if region.n1.is_none() && sig1 <= 0.0 {
                f64::NEG_INFINITY
            } else if e < 0 {
                sig2 + sig1.max(0.0) * (-e) as f64 / d as f64
            } else {
                sig2
            }
        }
        -1 => {
            if e > 0 && region.n1.is_none() && sig1 <= 0.0 {
                // rows grow like p^{-hi sigma1}, hi ~ m e / |d|; slack for sigma1 = 0
                sig2 + sig1 * e as f64 / (-d) as f64 - 1e-3
            } else {
                sig2
            }
        }
        _ => {
            if region.n1.is_none() && sig1 <= 0.0 && e > 0 {
                f64::NEG_INFINITY
            } else {
                sig2
            }
        }
    }
}

/// Reference value by a flat sum over residues `x, y mod p^level` with
/// `v(x), v(y) < val_cap`, evaluating the phase exactly at each residue.
/// Valid when the integrand is constant on the cells and shells with
/// valuation `>= val_cap` vanish.
pub fn eta_flat_reference(spec: &IgusaSpec, level: u32, val_cap: i64) -> Result<Complex64> {
    let p = spec.p;
    let n = p.pow(level).filter(|&n| n <= 1 << 16).ok_or(Error::Overflow)?;
    let (n0, n1, m0, m1) = spec.testfn.bounds();
    let q = 1.0 - 1.0 / p.as_f64();
    let lp = p.ln();
    let entries = |lo: i64, hi: Option<i64>, k: i64, s: Complex64| {
        let mut out = Vec::new();
        for x in 1..n {
            let v = padic_valuation(&Rational::from_integer(x.into()), p).expect("nonzero");
            if v < lo || hi.is_some_and(|h| v > h) || v >= val_cap {
                continue;
            }
            let xr = Rational::from_integer(x.into());
            let power = if k >= 0 { num_traits::pow::Pow::pow(&xr, k.unsigned_abs() as u32) } else { num_traits::pow::Pow::pow(&xr.recip(), k.unsigned_abs() as u32) };
            let mass = (((v - level as i64) as f64) * lp).exp() / q;
            out.push((power, (-s * v as f64 * lp).exp() * mass));
        }
        out
    };
    let xs = entries(n0, n1, spec.d, spec.s1);
    let ys = entries(m0, m1, spec.e, spec.s2);
    let mut sum = Complex64::new(0.0, 0.0);
    for (ye, wy) in &ys {
        let c = &spec.alpha * ye;
        for (xd, wx) in &xs {
            let phase = padic_fractional_part(&(&c * xd), p);
            let turns = num_traits::ToPrimitive::to_f64(&phase).unwrap_or(0.0);
            sum += cis_turns(turns) * wx * wy;
        }
    }
    Ok(sum)
}

/// Decay exponent `kappa` of `|eta_alpha|` as `|alpha|_p -> 0`, for `d < 0`.
pub fn decay_kappa(d: i64, e: i64, s1: f64, s2: f64) -> Result<f64> {
    if d >= 0 {
        return Err(Error::Domain("decay exponent needs d < 0".into()));
    }
    let mut k = (-s1 / (-d) as f64).max(0.0);
    if e < 0 {
        k = k.max(-s2 / (-e) as f64);
    }
    Ok(k)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub slope: f64,
    pub kappa: f64,
    pub ks: Vec<i64>,
    pub magnitudes: Vec<f64>,
}

/// Replace `alpha` by `p^k alpha` for `k = 1..=k_max` and fit the slope of
/// `log |eta|` against `k log p`.
pub fn eta_decay_fit(spec: &IgusaSpec, k_max: i64) -> Result<DecayFit> {
    if k_max < 6 {
        return Err(Error::DegenerateFit("need at least 6 values of k".into()));
    }
    let kappa = decay_kappa(spec.d, spec.e, spec.s1.re, spec.s2.re)?;
    let lp = spec.p.ln();
    let mut ks = Vec::new();
    let mut magnitudes = Vec::new();
    for k in 1..=k_max {
        let mut sk = spec.clone();
        sk.alpha = &spec.alpha * pow_rational(spec.p.get(), k);
        ks.push(k);
        magnitudes.push(eta_eval(&sk)?.value.norm());
    }
    if magnitudes.iter().all(|&m| m < 1e-14) {
        return Err(Error::DegenerateFit("all |eta| below 1e-14".into()));
    }
    let pts: Vec<(f64, f64)> = ks
        .iter()
        .zip(&magnitudes)
        .filter(|(_, &m)| m > 0.0)
        .map(|(&k, &m)| (k as f64 * lp, m.ln()))
        .collect();
    Ok(DecayFit { slope: least_squares_slope(&pts), kappa, ks, magnitudes })
}

pub fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(p: u64, d: i64, e: i64, alpha: Rational, s: (f64, f64), testfn: TestFn) -> IgusaSpec {
        IgusaSpec::new(
            Prime::new(p).unwrap(),
            d,
            e,
            alpha,
            Complex64::new(s.0, 0.0),
            Complex64::new(s.1, 0.0),
            testfn,
        )
        .unwrap()
    }

    fn one() -> Rational {
        Rational::from_integer(1.into())
    }

    #[test]
    fn unramified_phase_is_geometric() {
        let sp = spec(3, 1, 1, one(), (0.7, 1.2), TestFn::MaximalSquare);
        let r = eta_eval(&sp).unwrap();
        let g = |s: f64| 3f64.powf(-s) / (1.0 - 3f64.powf(-s));
        assert!((r.value.re - g(0.7) * g(1.2)).abs() < 1e-9);
        assert!(r.value.im.abs() < 1e-15);
    }

    #[test]
    fn finite_survivors_closed_value() {
        // n + m <= 1; the two w = -1 shells carry psi(1/2) = -1
        let sp = spec(2, -1, -1, one(), (0.5, 0.8), TestFn::IntegralSquare);
        let r = eta_eval(&sp).unwrap();
        let expect = 1.0 - 2f64.powf(-0.5) - 2f64.powf(-0.8);
        assert!((r.value.re - expect).abs() < 1e-12);
        assert_eq!(r.stats.survivors.len(), 3);
        assert_eq!(r.tail_bound, 0.0);
    }

    #[test]
    fn cone_domain() {
        assert!(in_cone(-1, -1, -5.0, -5.0));
        assert!(!in_cone(-2, 0, 1.0, -0.1));
        assert!(in_cone(-1, 2, -0.3, 1.0));
        assert!(!in_cone(-1, 2, -3.0, 1.0));
        assert!(!in_cone(2, 3, 1.0, 0.0));
        let sp = spec(3, 1, 1, one(), (-0.1, 1.0), TestFn::IntegralSquare);
        assert!(matches!(eta_eval(&sp), Err(Error::Domain(_))));
    }

    #[test]
    fn floor_helpers() {
        assert_eq!(div_floor(-3, 2), -2);
        assert_eq!(div_floor(3, 2), 1);
        assert_eq!(div_ceil(-3, 2), -1);
        assert_eq!(div_ceil(3, 2), 2);
    }
}
