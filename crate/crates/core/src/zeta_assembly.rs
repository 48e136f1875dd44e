//! Global assembly: the archimedean transform by quadrature, the main-term
//! constant from the trivial-character integral, Peyre's product and the
//! spectral terms `Z1`.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{gamma, local_zeta, prime_divisors, prime_tail_bound, primes_up_to, zeta, Prime};
use crate::counting::count_n_parallel;
use crate::fourier_local::{hhat_p_closed, trivial_integral_model};
use crate::geometry::{cone_laplace, peyre_local_factor, SimplicialCone, VarietyModel};
use crate::heights::PicParam;
use crate::igusa::least_squares_slope;
use crate::quad::integrate;
use crate::{Error, Rational, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// truncation of `|x|` for the direct two-dimensional quadrature
    pub x_radius: f64,
    /// largest `|log |a||` the integrand is followed to
    pub log_a_max: f64,
    pub max_segments: usize,
    /// target for the estimated quadrature error, `>= 1e-10`
    pub tolerance: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig { x_radius: 200.0, log_a_max: 600.0, max_segments: 20_000, tolerance: 1e-9 }
    }
}

impl QuadratureConfig {
    pub fn new(x_radius: f64, log_a_max: f64, max_segments: usize, tolerance: f64) -> Result<Self> {
        let cfg = QuadratureConfig { x_radius, log_a_max, max_segments, tolerance };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_radius > 0.0 && self.log_a_max > 0.0) || self.max_segments == 0 {
            return Err(Error::Domain("quadrature radii and segment budget must be positive".into()));
        }
        if !(self.tolerance >= 1e-10) {
            return Err(Error::Domain(format!("tolerance {} is below 1e-10", self.tolerance)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchValue {
    pub value: Complex64,
    pub error: f64,
}

/// `x`-transform at fixed `a`, through the Schwinger representation
/// `M^{-S} = Gamma(S/2)^{-1} int lambda^{S/2 - 1} exp(-lambda M^2) dlambda`:
/// `J(a) = sqrt(pi)/Gamma(S/2) int exp(v (S-1)/2 - c2 e^v - bq e^{-v}) dv`
/// with `c2 = 1 + a^2` and `bq = (pi alpha a)^2`.
struct InnerTransform {
    m: Complex64,
    prefactor: Complex64,
    step: f64,
}

impl InnerTransform {
    fn new(s_sum: Complex64) -> Result<Self> {
        let prefactor = PI.sqrt() / gamma(s_sum / 2.0)?;
        let step = 0.2 / (1.0 + s_sum.im.abs() / 10.0);
        Ok(InnerTransform { m: (s_sum - 1.0) / 2.0, prefactor, step })
    }

    /// `(value, error)`; the trapezoid rule converges geometrically here, so
    /// the error of step `h` is about the square of the `h` vs `2h` gap.
    fn eval(&self, c2: f64, bq: f64) -> Result<(Complex64, f64)> {
        let mr = self.m.re;
        if bq == 0.0 && mr <= 0.0 {
            return Err(Error::Domain("x-integral diverges: Re(s0 + s2) <= 1".into()));
        }
        let peak = ((mr + (mr * mr + 4.0 * c2 * bq).sqrt()) / (2.0 * c2)).ln();
        let phi = |v: f64| v * mr - c2 * v.exp() - bq * (-v).exp();
        let top = phi(peak);
        let mut hi = peak;
        while phi(hi) > top - 50.0 {
            hi += 0.5;
        }
        let mut lo = peak;
        let mut steps = 0;
        while phi(lo) > top - 50.0 {
            lo -= 0.5;
            steps += 1;
            if steps > 40_000 {
                return Err(Error::Domain("x-integral decays too slowly".into()));
            }
        }
        let h = self.step;
        let kl = ((lo - peak) / h).floor() as i64;
        let kr = ((hi - peak) / h).ceil() as i64;
        let mut all = Complex64::new(0.0, 0.0);
        let mut even = Complex64::new(0.0, 0.0);
        for k in kl..=kr {
            let v = peak + k as f64 * h;
            let mut f = Complex64::new((phi(v) - top).exp(), 0.0);
            if self.m.im != 0.0 {
                f *= Complex64::from_polar(1.0, v * self.m.im);
            }
            all += f;
            if k % 2 == 0 {
                even += f;
            }
        }
        let fine = all * h;
        let coarse = even * (2.0 * h);
        let scale = self.prefactor * top.exp();
        let rel = (fine - coarse).norm() / fine.norm().max(1e-300);
        let value = scale * fine;
        Ok((value, value.norm() * (rel * rel + 1e-15)))
    }
}

fn check_arch_domain(s: &PicParam, alpha_zero: bool) -> Result<()> {
    let (a, b) = (s.s0.re, s.s2.re);
    if !(a > -1.0 && b > 0.0 && 2.0 * a + b > 0.0) {
        return Err(Error::Domain(format!("s = ({a}, {b}) is outside s0 > -1, s2 > 0, 2 s0 + s2 > 0")));
    }
    if alpha_zero && !(b > 2.0) {
        return Err(Error::Domain(format!("the trivial character needs Re s2 > 2, got {b}")));
    }
    Ok(())
}

/// `hhat_infty(s, alpha, t)` for several `t` at once,
/// `2 int exp(u (s0 - it + 1)) J(e^u) du` over `u = log a`.
pub fn hhat_infty_many(s: &PicParam, alpha: f64, ts: &[f64], cfg: &QuadratureConfig) -> Result<Vec<ArchValue>> {
    cfg.validate()?;
    check_arch_domain(s, alpha == 0.0)?;
    let inner = InnerTransform::new(s.sum())?;
    let alpha_zero = alpha == 0.0;
    // for alpha = 0 the a-dependence is the exact factor (1 + a^2)^{(1 - S)/2}
    let base = if alpha_zero { Some(inner.eval(1.0, 0.0)?) } else { None };
    let one_minus_s = 1.0 - s.sum();
    let jfun = |u: f64| -> Result<(Complex64, f64)> {
        let a = u.exp();
        match base {
            Some((j1, e1)) => {
                let f = (one_minus_s / 2.0 * (a * a).ln_1p()).exp();
                Ok((j1 * f, e1 * f.norm()))
            }
            None => inner.eval(1.0 + a * a, (PI * alpha * a).powi(2)),
        }
    };
    let sigma0 = s.s0.re;
    let magnitude = |u: f64| -> Result<f64> { Ok(2.0 * (u * (sigma0 + 1.0)).exp() * jfun(u)?.0.norm()) };

    // follow the integrand out to where it is negligible
    let floor = 1e-4 * cfg.tolerance;
    let mut peak = magnitude(0.0)?;
    let mut ends = [0.0f64; 2];
    let mut tail = 0.0;
    for (side, dir) in [(0usize, -1.0f64), (1, 1.0)] {
        let mut u = 0.0;
        let mut prev = magnitude(0.0)?;
        loop {
            u += dir * 0.5;
            if u.abs() > cfg.log_a_max {
                return Err(Error::ToleranceNotMet { estimate: prev, tol: cfg.tolerance });
            }
            let g = magnitude(u)?;
            peak = peak.max(g);
            if g < floor && g < prev {
                let rate = (prev / g.max(1e-300)).ln() / 0.5;
                tail += g / rate.max(1e-3);
                break;
            }
            prev = g;
        }
        ends[side] = u;
    }

    let phases: Vec<Complex64> = ts.iter().map(|&t| Complex64::new(sigma0 + 1.0, s.s0.im - t)).collect();
    let mut inner_err = 0.0f64;
    let mut failure = None;
    let r = integrate(
        |u: f64| {
            let (j, e) = match jfun(u) {
                Ok(v) => v,
                Err(err) => {
                    failure.get_or_insert(err);
                    (Complex64::new(0.0, 0.0), 0.0)
                }
            };
            let w = 2.0 * (u * (sigma0 + 1.0)).exp();
            inner_err = inner_err.max(e * w);
            phases.iter().map(|ph| 2.0 * (u * ph).exp() * j).collect()
        },
        ends[0],
        ends[1],
        0.25 * cfg.tolerance,
        0.25 * cfg.tolerance,
        cfg.max_segments,
    );
    if let Some(err) = failure {
        return Err(err);
    }
    let error = r.error + tail + inner_err * (ends[1] - ends[0]);
    let out: Vec<ArchValue> = r.values.into_iter().map(|value| ArchValue { value, error }).collect();
    let worst = out.iter().map(|v| v.value.norm()).fold(0.0, f64::max);
    if !r.converged || error > cfg.tolerance * worst.max(1.0) {
        return Err(Error::ToleranceNotMet { estimate: error, tol: cfg.tolerance });
    }
    Ok(out)
}

/// `hhat_infty(s, alpha, t) = int_{G(R)} H_inf(s, g)^{-1} conj(psi_inf(alpha x)) |a|^{-it} dg`.
pub fn hhat_infty(s: &PicParam, alpha: &Rational, t: f64, cfg: &QuadratureConfig) -> Result<ArchValue> {
    let a = alpha.to_f64().ok_or(Error::Overflow)?;
    Ok(hhat_infty_many(s, a, &[t], cfg)?[0])
}

/// Closed form at `alpha = 0`:
/// `sqrt(pi) Gamma((s0 + 1)/2) Gamma((s2 - 2)/2) / Gamma((s0 + s2)/2)` at the
/// twisted point.
pub fn hhat_infty_trivial_closed(s: &PicParam, t: f64) -> Result<Complex64> {
    let tw = s.twist(t);
    Ok(PI.sqrt() * gamma((tw.s0 + 1.0) / 2.0)? * gamma((tw.s2 - 2.0) / 2.0)? / gamma(tw.sum() / 2.0)?)
}

/// Direct quadrature over `(x, a)` with `|x| <= x_radius`; slow, used as a
/// cross-check of [`hhat_infty`].
pub fn hhat_infty_direct(s: &PicParam, alpha: f64, t: f64, u_range: (f64, f64), cfg: &QuadratureConfig) -> Result<ArchValue> {
    cfg.validate()?;
    check_arch_domain(s, alpha == 0.0)?;
    let ssum = s.sum();
    let r = cfg.x_radius;
    let sigma = ssum.re;
    if sigma <= 1.0 {
        return Err(Error::Domain("direct quadrature needs Re(s0 + s2) > 1".into()));
    }
    let w = Complex64::new(s.s0.re, s.s0.im - t);
    let mut trunc = 0.0f64;
    let outer = integrate(
        |u: f64| {
            let a = u.exp();
            let a2 = a * a;
            let inner = integrate(
                |x: f64| {
                    let m2 = a2 + x * x / a2 + 1.0;
                    vec![(-ssum / 2.0 * m2.ln()).exp() * (2.0 * PI * alpha * x).cos()]
                },
                0.0,
                r,
                1e-3 * cfg.tolerance,
                1e-3 * cfg.tolerance,
                4000,
            );
            // int_R^inf (x/a)^{-sigma} dx
            let tr = a.powf(sigma) * r.powf(1.0 - sigma) / (sigma - 1.0);
            let weight = 4.0 * (u * w).exp();
            trunc = trunc.max(tr * weight.norm());
            vec![weight * inner.values[0]]
        },
        u_range.0,
        u_range.1,
        0.5 * cfg.tolerance,
        0.5 * cfg.tolerance,
        cfg.max_segments,
    );
    Ok(ArchValue { value: outer.values[0], error: outer.error + trunc * (u_range.1 - u_range.0) })
}

/// Least-squares exponent of `|hhat_infty|` against `alpha`.
pub fn alpha_exponent_fit(s: &PicParam, alphas: &[f64], t: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let mut pts = Vec::new();
    for &a in alphas {
        let v = hhat_infty_many(s, a, &[t], cfg)?[0].value.norm();
        pts.push((a.ln(), v.ln()));
    }
    fit_slope(&pts)
}

/// Least-squares exponent of `|hhat_infty|` against `t`.
pub fn t_exponent_fit(s: &PicParam, alpha: f64, ts: &[f64], cfg: &QuadratureConfig) -> Result<f64> {
    let vals = hhat_infty_many(s, alpha, ts, cfg)?;
    let pts: Vec<(f64, f64)> = ts.iter().zip(&vals).map(|(&t, v)| (t.ln(), v.value.norm().ln())).collect();
    fit_slope(&pts)
}

fn fit_slope(pts: &[(f64, f64)]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = pts.iter().copied().filter(|p| p.0.is_finite() && p.1.is_finite()).collect();
    if pts.len() < 2 || pts.iter().all(|p| p.0 == pts[0].0) {
        return Err(Error::DegenerateFit("need two distinct abscissae".into()));
    }
    Ok(least_squares_slope(&pts))
}

fn require_p2(model: &VarietyModel) -> Result<()> {
    if model.kappa != [0, 3] || model.character_embedding != [1, -1] || model.divisors.len() != 2 {
        return Err(Error::InvalidModel("the main-term assembly is implemented for the P^2 model".into()));
    }
    Ok(())
}

/// Tail of `log prod_{p > P} (1 - p^{-sigma})`.
fn euler_log_tail(cutoff: u64, sigma: f64) -> f64 {
    prime_tail_bound(cutoff, sigma) / (1.0 - (cutoff as f64 + 1.0).powf(-sigma))
}

/// `prod_{p <= P}` of the strata formula divided by its two zeta factors,
/// at the twisted point `(w, S - w)`.
fn regularized_product(model: &VarietyModel, w: Complex64, s_sum: f64, cutoff: u64) -> Result<Complex64> {
    let mut log = Complex64::new(0.0, 0.0);
    for p in primes_up_to(cutoff) {
        let p = Prime::new(p)?;
        let v = trivial_integral_model(model, &[w, s_sum - w], p)?;
        let z = local_zeta(p, w + 1.0)? * local_zeta(p, s_sum - 2.0 - w)?;
        log += (v / z).ln();
    }
    Ok(log.exp())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Z0Value {
    pub s_sum: f64,
    pub value: f64,
    pub error: f64,
    /// bound on `|log|` of the neglected Euler factors
    pub euler_tail: f64,
}

/// `Z0` at `s0 + s2 = S > 3`,
/// `(1/2 pi) int F(w, S - w) dtau`, `w = s0 - i tau`, on the line
/// `s0 = (S - 3)/2` between the two poles.
pub fn z0_value(model: &VarietyModel, s_sum: f64, cutoff: u64, cfg: &QuadratureConfig) -> Result<Z0Value> {
    require_p2(model)?;
    if !(s_sum > 3.0) {
        return Err(Error::Domain(format!("Z0 needs s0 + s2 > 3, got {s_sum}")));
    }
    let s0 = (s_sum - 3.0) / 2.0;
    let scale = s0;
    let dv = 0.1;
    let kmax = ((40.0 / scale).asinh() / dv).ceil() as i64;
    let taus: Vec<f64> = (-kmax..=kmax).map(|k| scale * (k as f64 * dv).sinh()).collect();
    let weights: Vec<f64> = (-kmax..=kmax).map(|k| dv * scale * (k as f64 * dv).cosh()).collect();

    let euler_tail = euler_log_tail(cutoff, s_sum);
    let reg = regularized_product(model, Complex64::new(s0, 0.0), s_sum, cutoff)?;
    let check = regularized_product(model, Complex64::new(s0, -taus[taus.len() - 1]), s_sum, cutoff)?;
    if (reg - check).norm() > 1e-9 * reg.norm() {
        return Err(Error::InvalidModel("regularized Euler factor depends on the twist".into()));
    }
    let arch = hhat_infty_many(&PicParam::real(s0, s_sum - s0), 0.0, &taus, cfg)?;
    let mut value = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    for ((&tau, &wt), a) in taus.iter().zip(&weights).zip(&arch) {
        let w = Complex64::new(s0, -tau);
        let z = zeta(w + 1.0)? * zeta(s_sum - 2.0 - w)? * reg;
        value += wt * z * a.value;
        err += wt * z.norm() * a.error;
    }
    value /= 2.0 * PI;
    err /= 2.0 * PI;
    err += value.norm() * euler_tail.exp_m1();
    Ok(Z0Value { s_sum, value: value.re, error: err, euler_tail })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Z0Constant {
    pub c_euler: f64,
    /// `(h, h Z0(3 + 3h))`
    pub samples: Vec<(f64, f64)>,
    pub euler_tail: f64,
    pub convergence_warning: bool,
}

/// Residue of `Z0(s kappa)` at `s = 1` from `h Z0(3(1 + h))`,
/// `h in {0.04, 0.02, 0.01}`, with two Richardson steps.
pub fn z0_constant(model: &VarietyModel, cutoff: u64, cfg: &QuadratureConfig) -> Result<Z0Constant> {
    require_p2(model)?;
    let hs = [0.04, 0.02, 0.01];
    let samples = hs
        .iter()
        .map(|&h| z0_value(model, 3.0 + 3.0 * h, cutoff, cfg).map(|z| (h, h * z.value)))
        .collect::<Result<Vec<_>>>()?;
    let euler_tail = euler_log_tail(cutoff, 3.0);
    if euler_tail > 1e-2 {
        return Err(Error::CutoffInsufficient { cutoff, tail: euler_tail });
    }
    let r1 = 2.0 * samples[1].1 - samples[0].1;
    let r2 = 2.0 * samples[2].1 - samples[1].1;
    Ok(Z0Constant { c_euler: (4.0 * r2 - r1) / 3.0, samples, euler_tail, convergence_warning: euler_tail > 1e-6 })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeyreProduct {
    pub cone_factor: f64,
    pub tau_infty: f64,
    pub euler_product: f64,
    pub euler_tail: f64,
    /// `(p, (1 - 1/p)^rk #X(F_p)/p^dim)` for the first primes
    pub per_prime: Vec<(u64, f64)>,
    pub value: f64,
}

/// `alpha(X) tau_infty prod_p (1 - 1/p)^rk #X(F_p)/p^dim`.
pub fn peyre_product(model: &VarietyModel, cutoff: u64, cfg: &QuadratureConfig) -> Result<PeyreProduct> {
    require_p2(model)?;
    let kappa_pic: Vec<i64> = model
        .pic_projection
        .iter()
        .map(|row| row.iter().zip(&model.kappa).map(|(a, b)| a * b).sum())
        .collect();
    let cone = SimplicialCone::new(model.effective_cone.clone())?;
    let coords: Vec<f64> = kappa_pic.iter().map(|&k| k as f64).collect();
    let cone_factor = cone_laplace(&cone, &coords)?;
    let tau = hhat_infty_many(&PicParam::real(0.0, 3.0), 0.0, &[0.0], cfg)?[0].value.re;
    let mut log = 0.0;
    let mut per_prime = Vec::new();
    for p in primes_up_to(cutoff) {
        let f = peyre_local_factor(model, Prime::new(p)?);
        let fm1 = (&f - Rational::one()).to_f64().ok_or(Error::Overflow)?;
        log += fm1.ln_1p();
        if p <= 50 {
            per_prime.push((p, f.to_f64().ok_or(Error::Overflow)?));
        }
    }
    let euler_tail = euler_log_tail(cutoff, 3.0);
    if euler_tail > 1e-2 {
        return Err(Error::CutoffInsufficient { cutoff, tail: euler_tail });
    }
    let euler_product = log.exp();
    Ok(PeyreProduct {
        cone_factor,
        tau_infty: tau,
        euler_product,
        euler_tail,
        per_prime,
        value: cone_factor * tau * euler_product,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantReport {
    pub c_euler: f64,
    pub c_peyre: f64,
    pub c_empirical: f64,
    pub count_bound: f64,
    pub prime_cutoff: u64,
    pub euler_vs_peyre: f64,
    pub peyre_vs_empirical: f64,
    pub euler_peyre_agree: bool,
    pub peyre_empirical_agree: bool,
    pub convergence_warning: bool,
    pub residue_samples: Vec<(f64, f64)>,
    pub peyre: PeyreProduct,
}

/// All three routes to the leading constant, with the count at `B = 10^6`.
pub fn peyre_constant(model: &VarietyModel, cutoff: u64, cfg: &QuadratureConfig) -> Result<ConstantReport> {
    peyre_constant_with(model, cutoff, cfg, 1e6, rayon::current_num_threads())
}

pub fn peyre_constant_with(
    model: &VarietyModel,
    cutoff: u64,
    cfg: &QuadratureConfig,
    count_bound: f64,
    threads: usize,
) -> Result<ConstantReport> {
    let z0 = z0_constant(model, cutoff, cfg)?;
    let peyre = peyre_product(model, cutoff, cfg)?;
    let c_empirical = count_n_parallel(count_bound, threads)? as f64 / count_bound;
    let c_peyre = peyre.value;
    let euler_vs_peyre = (z0.c_euler - c_peyre).abs() / c_peyre;
    let peyre_vs_empirical = (c_peyre - c_empirical).abs() / c_empirical;
    Ok(ConstantReport {
        c_euler: z0.c_euler,
        c_peyre,
        c_empirical,
        count_bound,
        prime_cutoff: cutoff,
        euler_vs_peyre,
        peyre_vs_empirical,
        euler_peyre_agree: euler_vs_peyre <= 0.05,
        peyre_empirical_agree: peyre_vs_empirical <= 0.05,
        convergence_warning: z0.convergence_warning || peyre.euler_tail > 1e-6,
        residue_samples: z0.samples,
        peyre,
    })
}

fn check_omega(s: &PicParam) -> Result<()> {
    let (a, b) = (s.s0.re, s.s2.re);
    if !(a > 0.0 && b > 0.0 && 2.0 * a + b > 1.0 && a + b > 1.0) {
        return Err(Error::Domain(format!("s = ({a}, {b}) is outside the Euler product domain")));
    }
    Ok(())
}

/// `prod_{p <= P} hhat_p(s, 1, t)` and a bound on `|log|` of the rest.
fn unit_euler_product(s: &PicParam, t: f64, cutoff: u64) -> Result<(Complex64, f64)> {
    let tw = s.twist(t);
    let one = Rational::one();
    let mut log = Complex64::new(0.0, 0.0);
    for p in primes_up_to(cutoff) {
        log += hhat_p_closed(&tw, &one, Prime::new(p)?)?.ln();
    }
    // |log(1 - z)| <= 2|z| for the three geometric factors of the |alpha|_p = 1 form
    let (a, b) = (s.s0.re, s.s2.re);
    let rho = (a + 1.0).min(2.0 * a + b).min(a + b);
    let tail = 6.0 * prime_tail_bound(cutoff, rho);
    Ok((log.exp(), tail))
}

/// Correction of the unit product for the primes dividing `alpha`.
fn ramified_factor(tw: &PicParam, alpha: &Rational, cutoff: u64) -> Result<Complex64> {
    let one = Rational::one();
    let mut f = Complex64::new(1.0, 0.0);
    let mut ps: Vec<u64> = prime_divisors(alpha.numer()).into_iter().chain(prime_divisors(alpha.denom())).collect();
    ps.sort_unstable();
    ps.dedup();
    for p in ps {
        let p = Prime::new(p)?;
        let v = hhat_p_closed(tw, alpha, p)?;
        f *= if p.get() <= cutoff { v / hhat_p_closed(tw, &one, p)? } else { v };
    }
    Ok(f)
}

/// `prod_p hhat_p(s, alpha, t) hhat_infty(s, alpha, t)`, primes up to `P`
/// and all primes dividing `alpha`.
pub fn z1_term(s: &PicParam, alpha: &Rational, t: f64, cutoff: u64, cfg: &QuadratureConfig) -> Result<Complex64> {
    check_omega(s)?;
    let (unit, _) = unit_euler_product(s, t, cutoff)?;
    let arch = hhat_infty(s, alpha, t, cfg)?;
    Ok(unit * ramified_factor(&s.twist(t), alpha, cutoff)? * arch.value)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Z1Config {
    /// `|beta|, |gamma| <= R` for each `R`, increasing
    pub ranges: Vec<u64>,
    pub t_max: f64,
    pub t_points: usize,
    pub cutoff: u64,
}

impl Default for Z1Config {
    fn default() -> Self {
        Z1Config { ranges: vec![10, 20, 40], t_max: 24.0, t_points: 193, cutoff: 1000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Z1Report {
    pub s0: f64,
    pub s2: f64,
    pub ranges: Vec<u64>,
    pub partial_sums: Vec<Complex64>,
    /// estimated tail beyond each range
    pub tails: Vec<f64>,
    pub beta_exponent: f64,
    pub gamma_exponent: f64,
    pub decay_constant: f64,
    pub cauchy_ok: bool,
    pub euler_tail: f64,
    pub max_imaginary: f64,
    pub terms: usize,
    pub t_step: f64,
    /// fewer than four t-nodes per period of `|alpha|^{-it}` at the largest range
    pub aliasing_warning: bool,
}

/// One term of `Z1` integrated over the `t`-grid:
/// `(1/2 pi) sum_j w_j z1_term(s, alpha, t_j)`.
fn z1_alpha_term(
    s: &PicParam,
    alpha: &Rational,
    ts: &[f64],
    ws: &[f64],
    units: &[Complex64],
    cutoff: u64,
    cfg: &QuadratureConfig,
) -> Result<Complex64> {
    let a = alpha.to_f64().ok_or(Error::Overflow)?;
    let arch = hhat_infty_many(s, a.abs(), ts, cfg)?;
    let mut total = Complex64::new(0.0, 0.0);
    for (((&t, &w), u), h) in ts.iter().zip(ws).zip(units).zip(&arch) {
        total += w * u * ramified_factor(&s.twist(t), alpha, cutoff)? * h.value;
    }
    Ok(total / (2.0 * PI))
}

fn t_grid(cfg: &Z1Config) -> (Vec<f64>, Vec<f64>) {
    let n = cfg.t_points.max(2);
    let dt = 2.0 * cfg.t_max / (n - 1) as f64;
    let ts: Vec<f64> = (0..n).map(|j| -cfg.t_max + j as f64 * dt).collect();
    let ws: Vec<f64> = (0..n).map(|j| if j == 0 || j == n - 1 { dt / 2.0 } else { dt }).collect();
    (ts, ws)
}

/// Partial sums of `Z1` over `alpha = +-beta/gamma`, `gcd = 1`,
/// `beta, gamma <= R`, with tails from the fitted decay in `beta` and `gamma`.
pub fn z1_partial_sum(s: &PicParam, zcfg: &Z1Config, cfg: &QuadratureConfig) -> Result<Z1Report> {
    check_omega(s)?;
    let rmax = *zcfg.ranges.iter().max().ok_or_else(|| Error::Domain("no ranges".into()))?;
    if zcfg.ranges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("ranges must increase".into()));
    }
    let (ts, ws) = t_grid(zcfg);
    let units = ts.iter().map(|&t| unit_euler_product(s, t, zcfg.cutoff)).collect::<Result<Vec<_>>>()?;
    let euler_tail = units.iter().map(|u| u.1).fold(0.0, f64::max);
    let units: Vec<Complex64> = units.into_iter().map(|u| u.0).collect();

    let pairs: Vec<(u64, u64)> =
        (1..=rmax).flat_map(|b| (1..=rmax).map(move |g| (b, g))).filter(|&(b, g)| b.gcd(&g) == 1).collect();
    let terms = pairs
        .par_iter()
        .map(|&(b, g)| {
            let alpha = Rational::new(b.into(), g.into());
            z1_alpha_term(s, &alpha, &ts, &ws, &units, zcfg.cutoff, cfg)
        })
        .collect::<Vec<Result<Complex64>>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    // alpha and -alpha give the same term
    let partial_sums: Vec<Complex64> = zcfg
        .ranges
        .iter()
        .map(|&r| {
            pairs
                .iter()
                .zip(&terms)
                .filter(|((b, g), _)| *b <= r && *g <= r)
                .fold(Complex64::new(0.0, 0.0), |acc, (_, t)| acc + 2.0 * t)
        })
        .collect();

    let along = |pick: fn(&(u64, u64)) -> Option<u64>| -> Result<f64> {
        let pts: Vec<(f64, f64)> = pairs
            .iter()
            .zip(&terms)
            .filter_map(|(pr, t)| pick(pr).filter(|&x| x >= 2).map(|x| ((x as f64).ln(), t.norm().ln())))
            .collect();
        fit_slope(&pts)
    };
    let a = -along(|&(b, g)| (g == 1).then_some(b))?;
    let b = -along(|&(b, g)| (b == 1).then_some(g))?;
    if !(a > 1.0 && b > 1.0) {
        return Err(Error::DecayFitFailed(format!("exponents beta {a}, gamma {b} are not summable")));
    }
    let c = pairs
        .iter()
        .zip(&terms)
        .map(|(&(bb, gg), t)| t.norm() * (bb as f64).powf(a) * (gg as f64).powf(b))
        .fold(0.0, f64::max);
    let tail = |r: f64| {
        2.0 * c
            * (r.powf(1.0 - a) / (a - 1.0) * (1.0 + 1.0 / (b - 1.0))
                + (1.0 + 1.0 / (a - 1.0)) * r.powf(1.0 - b) / (b - 1.0))
    };
    let tails: Vec<f64> = zcfg.ranges.iter().map(|&r| tail(r as f64)).collect();
    let cauchy_ok = partial_sums.windows(2).zip(&tails).all(|(w, &tl)| (w[1] - w[0]).norm() <= tl);
    let max_imaginary = partial_sums.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let t_step = if ts.len() > 1 { ts[1] - ts[0] } else { f64::INFINITY };
    Ok(Z1Report {
        s0: s.s0.re,
        s2: s.s2.re,
        ranges: zcfg.ranges.clone(),
        partial_sums,
        tails,
        beta_exponent: -a,
        gamma_exponent: -b,
        decay_constant: c,
        cauchy_ok,
        euler_tail,
        max_imaginary,
        terms: terms.len(),
        t_step,
        aliasing_warning: t_step * (rmax as f64).ln() > PI / 2.0,
    })
}

/// Exponent of `|z1_term|` in `t` at fixed `alpha`.
pub fn z1_t_exponent(s: &PicParam, alpha: &Rational, ts: &[f64], cutoff: u64, cfg: &QuadratureConfig) -> Result<f64> {
    let mut pts = Vec::new();
    for &t in ts {
        pts.push((t.ln(), z1_term(s, alpha, t, cutoff, cfg)?.norm().ln()));
    }
    fit_slope(&pts)
}

/// Sign-normalized `alpha = beta/gamma` helper for callers.
pub fn split_alpha(alpha: &Rational) -> (u64, u64) {
    (alpha.numer().abs().to_u64().unwrap_or(u64::MAX), alpha.denom().to_u64().unwrap_or(u64::MAX))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::builtin_p2_model;

    #[test]
    fn trivial_character_matches_beta_integral() {
        let cfg = QuadratureConfig::default();
        for (s0, s2, t) in [(0.0, 3.0, 0.0), (0.5, 2.7, 1.5), (1.0, 4.0, -3.0)] {
            let s = PicParam::real(s0, s2);
            let q = hhat_infty_many(&s, 0.0, &[t], &cfg).unwrap()[0];
            let c = hhat_infty_trivial_closed(&s, t).unwrap();
            assert!((q.value - c).norm() < 1e-8, "{s0} {s2} {t}: {} vs {c}", q.value);
        }
        let tau = hhat_infty_many(&PicParam::real(0.0, 3.0), 0.0, &[0.0], &cfg).unwrap()[0];
        assert!((tau.value.re - 2.0 * PI).abs() < 1e-8);
    }

    #[test]
    fn symmetric_alpha_is_real() {
        let cfg = QuadratureConfig::default();
        let v = hhat_infty(&PicParam::real(1.5, 0.5), &Rational::from_integer(3.into()), 0.0, &cfg).unwrap();
        assert!(v.value.im.abs() <= cfg.tolerance);
    }

    #[test]
    fn domain_errors() {
        let cfg = QuadratureConfig::default();
        assert!(QuadratureConfig::new(1.0, 1.0, 10, 1e-12).is_err());
        assert!(matches!(hhat_infty_many(&PicParam::real(-1.5, 1.0), 1.0, &[0.0], &cfg), Err(Error::Domain(_))));
        assert!(matches!(hhat_infty_many(&PicParam::real(1.0, 1.5), 0.0, &[0.0], &cfg), Err(Error::Domain(_))));
    }

    #[test]
    fn peyre_pieces() {
        let cfg = QuadratureConfig::default();
        let r = peyre_product(&builtin_p2_model(), 1000, &cfg).unwrap();
        assert!((r.cone_factor - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.per_prime[0], (2, 7.0 / 8.0));
        let target = 2.0 * PI / (3.0 * 1.2020569031595942);
        assert!((r.value - target).abs() < 1e-5);
    }

    #[test]
    fn z0_residue() {
        let cfg = QuadratureConfig::default();
        let z = z0_constant(&builtin_p2_model(), 1000, &cfg).unwrap();
        let target = 2.0 * PI / (3.0 * 1.2020569031595942);
        assert!((z.c_euler - target).abs() < 1e-3 * target, "{z:?}");
    }
}
