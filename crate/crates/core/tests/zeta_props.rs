use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use hzeta::geometry::builtin_p2_model;
use hzeta::heights::PicParam;
use hzeta::zeta_assembly::{
    hhat_infty, hhat_infty_direct, hhat_infty_many, hhat_infty_trivial_closed, z0_value, z1_partial_sum, z1_t_exponent,
    z1_term, QuadratureConfig, Z1Config,
};
use hzeta::Rational;

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

fn with_tol(tol: f64) -> QuadratureConfig {
    QuadratureConfig { tolerance: tol, ..QuadratureConfig::default() }
}

#[test]
fn tolerance_halving_stays_within_reported_error() {
    for (s0, s2, alpha, t) in [(1.5, 0.5, 1.0, 0.0), (2.0, 1.0, 3.0, 2.0), (0.5, 2.5, 0.5, -1.0), (1.0, 3.0, 0.0, 4.0)] {
        let s = PicParam::real(s0, s2);
        let coarse = hhat_infty_many(&s, alpha, &[t], &with_tol(1e-7)).unwrap()[0];
        let fine = hhat_infty_many(&s, alpha, &[t], &with_tol(5e-8)).unwrap()[0];
        assert!((coarse.value - fine.value).norm() <= coarse.error, "s=({s0},{s2}) alpha={alpha} t={t}");
    }
}

#[test]
fn schwinger_form_matches_direct_quadrature() {
    // the x cutoff must stay well above a^2 over the whole u-range
    let cfg = QuadratureConfig { x_radius: 3000.0, ..with_tol(1e-7) };
    for (s0, s2, alpha) in [(1.5, 1.0, 1.0), (1.0, 1.5, 0.5)] {
        let s = PicParam::real(s0, s2);
        let fast = hhat_infty(&s, &q((alpha * 2.0) as i64, 2), 0.0, &cfg).unwrap();
        let slow = hhat_infty_direct(&s, alpha, 0.0, (-14.0, 3.0), &cfg).unwrap();
        assert!((fast.value - slow.value).norm() <= 1e-5 * fast.value.norm(), "{} vs {}", fast.value, slow.value);
    }
}

#[test]
fn trivial_character_closed_form() {
    let cfg = QuadratureConfig::default();
    let tau = hhat_infty_trivial_closed(&PicParam::real(0.0, 3.0), 0.0).unwrap();
    assert!((tau - Complex64::new(2.0 * PI, 0.0)).norm() < 1e-12);
    for (s0, s2, t) in [(0.3, 2.5, 0.0), (2.0, 5.0, 7.0), (0.0, 2.2, -2.0)] {
        let s = PicParam::real(s0, s2);
        let quad = hhat_infty_many(&s, 0.0, &[t], &cfg).unwrap()[0];
        let closed = hhat_infty_trivial_closed(&s, t).unwrap();
        assert!((quad.value - closed).norm() <= 1e-8 * closed.norm().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sign_of_alpha_does_not_matter(n in 1i64..40, d in 1i64..40, s0 in 0.5f64..2.5, s2 in 0.5f64..2.0, t in -5.0f64..5.0) {
        let cfg = with_tol(1e-8);
        let s = PicParam::real(s0, s2);
        let a = hhat_infty(&s, &q(n, d), t, &cfg).unwrap();
        let b = hhat_infty(&s, &q(-n, d), t, &cfg).unwrap();
        prop_assert!((a.value - b.value).norm() <= a.error + b.error);
    }

    #[test]
    fn real_point_gives_real_transform(n in 1i64..40, d in 1i64..40, s0 in 0.5f64..2.5, s2 in 0.5f64..2.0) {
        let v = hhat_infty(&PicParam::real(s0, s2), &q(n, d), 0.0, &with_tol(1e-8)).unwrap();
        prop_assert!(v.value.im.abs() <= 1e-9 * v.value.norm().max(1e-30) + v.error);
    }
}

#[test]
fn z1_term_is_stable_in_the_prime_cutoff() {
    let s = PicParam::real(3.0, 2.0);
    let cfg = QuadratureConfig::default();
    let a = z1_term(&s, &q(1, 1), 0.0, 1000, &cfg).unwrap();
    let b = z1_term(&s, &q(1, 1), 0.0, 2000, &cfg).unwrap();
    assert!((a - b).norm() <= 1e-4 * a.norm());
    assert!(a.im.abs() <= 1e-10 * a.norm());
}

#[test]
fn z1_probe_is_real_and_dominated_by_z0() {
    let s = PicParam::real(2.2, 1.0);
    let zcfg = Z1Config { ranges: vec![5, 10, 20], t_points: 97, ..Z1Config::default() };
    let rep = z1_partial_sum(&s, &zcfg, &QuadratureConfig::default()).unwrap();
    assert!(rep.max_imaginary <= 1e-9);
    assert!(!rep.aliasing_warning);
    assert!(rep.cauchy_ok);
    let z0 = z0_value(&builtin_p2_model(), 3.2, 10_000, &QuadratureConfig::default()).unwrap();
    let last = rep.partial_sums.last().unwrap();
    assert!(last.norm() < 1e-2 * z0.value.abs(), "{last} vs {}", z0.value);
}

#[test]
fn z1_term_decays_in_t() {
    let s = PicParam::real(2.2, 1.0);
    let slope = z1_t_exponent(&s, &q(1, 1), &[2.0, 4.0, 8.0, 16.0], 500, &QuadratureConfig::default()).unwrap();
    assert!(slope <= -1.9, "slope {slope}");
}

#[test]
fn tolerance_floor_is_enforced() {
    assert!(QuadratureConfig::new(200.0, 600.0, 100, 1e-11).is_err());
    assert!(QuadratureConfig::new(200.0, 600.0, 100, 1e-10).is_ok());
}
