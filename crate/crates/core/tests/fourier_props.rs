use num_complex::Complex64;
use num_traits::{One, ToPrimitive};
use proptest::prelude::*;

use hzeta::arith::{pow_rational, Prime};
use hzeta::fourier_local::{
    hhat_p_closed, hhat_p_closed_exact, hhat_p_closed_generic, hhat_p_oracle, trivial_integral_oracle, trivial_integral_p,
    unit_character_moment, unit_character_moment_brute, OracleConfig,
};
use hzeta::heights::PicParam;
use hzeta::Rational;

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

fn prime() -> impl Strategy<Value = Prime> {
    prop::sample::select(vec![2u64, 3, 5, 7]).prop_map(|p| Prime::new(p).unwrap())
}

/// A p-adic unit built from two integers coprime to p.
fn unit(p: Prime, n: i64, d: i64) -> Rational {
    let pi = p.get() as i64;
    let fix = |x: i64| if x % pi == 0 { x + 1 } else { x };
    q(fix(n), fix(d))
}

fn inside_lambda() -> impl Strategy<Value = (f64, f64)> {
    (-0.6f64..3.0, 0.0f64..4.0).prop_filter("cone", |&(a, b)| (a + 1.0).min(a + b).min(2.0 * a + b) > 0.3)
}

fn well_inside_lambda() -> impl Strategy<Value = (f64, f64)> {
    (0.2f64..2.0, 0.5f64..4.0).prop_filter("cone", |&(a, b)| a + b >= 2.0)
}

proptest! {
    #[test]
    fn closed_form_sees_only_the_valuation(p in prime(), k in -4i64..5, n in -200i64..200, d in 1i64..200, s in inside_lambda()) {
        let s = PicParam::real(s.0, s.1);
        let base = hhat_p_closed(&s, &pow_rational(p.get(), k), p).unwrap();
        let moved = hhat_p_closed(&s, &(pow_rational(p.get(), k) * unit(p, n, d)), p).unwrap();
        prop_assert_eq!(base, moved);
    }

    #[test]
    fn scaling_is_an_identity_of_rational_functions(
        p in prime(),
        k in 1i64..=3,
        x0 in (1i64..50, 2i64..60),
        x2 in (1i64..50, 2i64..60),
    ) {
        // p^{-s0}, p^{-s2} replaced by independent rational unknowns
        let (x0, x2) = (q(x0.0, x0.1), q(x2.0, x2.1));
        let qq = pow_rational(p.get(), -1);
        let a = &qq * &x0;
        prop_assume!(a != Rational::one() && &x0 * &x0 * &x2 != Rational::one());
        let lhs = hhat_p_closed_generic(-k, &qq, &x0, &x2);
        let rhs = num_traits::pow::Pow::pow(&a, k as u32) * hhat_p_closed_generic(0, &qq, &x0, &x2);
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn moment_matches_brute_force(p in prime(), v in -3i64..=3, n in -50i64..50, d in 1i64..50) {
        let x = pow_rational(p.get(), v) * unit(p, n, d);
        let exact = unit_character_moment(&x, p).to_f64().unwrap();
        let depth = ((-v).max(0) + 2) as u32;
        let brute = unit_character_moment_brute(&x, p, depth).unwrap();
        prop_assert!((brute - Complex64::new(exact, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn oracle_agrees_on_random_units(p in prime(), k in -2i64..=3, n in 1i64..30, d in 1i64..30, s in well_inside_lambda()) {
        let alpha = pow_rational(p.get(), k) * unit(p, n, d);
        let s = PicParam::real(s.0, s.1);
        // omitted x-shells contribute about p^{v (s0 + 1) - depth (S - 1)}
        let base = OracleConfig::default_for(p);
        let need = (7.0 * std::f64::consts::LN_10 / p.ln() + k.max(0) as f64 * (s.s0.re + 1.0)) / (s.sum().re - 1.0);
        let depth = base.residue_depth.max(need.ceil() as u32 + 1);
        prop_assume!(p.pow(depth).is_some_and(|n| n <= 1 << 22));
        let cfg = OracleConfig { residue_depth: depth, ..base };
        let closed = hhat_p_closed(&s, &alpha, p).unwrap();
        let oracle = hhat_p_oracle(&s, &alpha, p, &cfg).unwrap();
        let bound = oracle.error_bound.unwrap();
        prop_assert!(bound.is_finite() && bound > 0.0);
        prop_assert!((closed - oracle.value).norm() <= bound + 1e-9);
    }
}

#[test]
fn oracle_refuses_near_the_boundary() {
    let p = Prime::new(2).unwrap();
    let s = PicParam::real(-0.5, 0.9);
    let err = hhat_p_oracle(&s, &Rational::one(), p, &OracleConfig::default_for(p)).unwrap_err();
    assert!(matches!(err, hzeta::Error::NonConvergentTail { .. }), "{err:?}");
}

#[test]
fn exact_scaling_at_integer_points() {
    for p in [2u64, 3, 5] {
        let p = Prime::new(p).unwrap();
        for (s0, s2) in [(1, 2), (2, 3), (0, 5), (3, 0)] {
            let one = hhat_p_closed_exact(s0, s2, 0, p).unwrap();
            for k in 1..=3i64 {
                let scaled = hhat_p_closed_exact(s0, s2, -k, p).unwrap();
                assert_eq!(scaled, pow_rational(p.get(), -k * (s0 + 1)) * &one);
            }
        }
    }
}

#[test]
fn deep_valuation_growth_is_bounded() {
    // |hhat| / (k max(1, p^{-(k/2)(s2 - 2)})) should stay bounded in k
    for p in [2u64, 3, 5] {
        let p = Prime::new(p).unwrap();
        for (s0, s2) in [(0.5, 1.0), (1.0, 2.0), (2.0, 3.0), (0.2, 0.8)] {
            let s = PicParam::real(s0, s2);
            let ratio = |k: i64| {
                let h = hhat_p_closed(&s, &pow_rational(p.get(), k), p).unwrap().norm();
                let env = (-(k as f64 / 2.0) * (s2 - 2.0) * p.ln()).exp().max(1.0);
                h / (k as f64 * env)
            };
            let early = (1..=10).map(ratio).fold(0.0, f64::max);
            let late = (20..=40).map(ratio).fold(0.0, f64::max);
            assert!(late.is_finite() && late <= 2.0 * early, "p={} s=({s0},{s2}): {late} vs {early}", p.get());
        }
    }
}

#[test]
fn strata_formula_matches_the_oracle() {
    for p in [2u64, 3, 5] {
        let p = Prime::new(p).unwrap();
        let cfg = OracleConfig::default_for(p);
        for d0 in [0.5, 1.0, 2.0] {
            for d2 in [0.5, 1.0, 2.0] {
                let s = PicParam::real(d0, 3.0 + d2);
                let closed = trivial_integral_p(&s, p).unwrap();
                let oracle = trivial_integral_oracle(&s, p, &cfg).unwrap().value;
                assert!((closed - oracle).norm() <= 1e-6 * oracle.norm(), "p={} s=({d0},{})", p.get(), 3.0 + d2);
            }
        }
    }
}
