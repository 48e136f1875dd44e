use num_traits::{One, Signed, Zero};
use proptest::prelude::*;

use hzeta::arith::{additive_character, padic_abs, prime_divisors, LocalPlace, Prime};
use hzeta::Rational;

fn rational() -> impl Strategy<Value = Rational> {
    (-1_000_000i64..1_000_000, 1i64..1_000_000)
        .prop_filter("nonzero", |(n, _)| *n != 0)
        .prop_map(|(n, d)| Rational::new(n.into(), d.into()))
}

fn any_rational() -> impl Strategy<Value = Rational> {
    (-1_000_000i64..1_000_000, 1i64..1_000_000).prop_map(|(n, d)| Rational::new(n.into(), d.into()))
}

fn support(q: &Rational) -> Vec<u64> {
    let mut ps: Vec<u64> = prime_divisors(q.numer()).into_iter().chain(prime_divisors(q.denom())).collect();
    ps.sort_unstable();
    ps.dedup();
    ps
}

proptest! {
    #[test]
    fn padic_abs_is_multiplicative(q in rational(), r in rational(), p in prop::sample::select(vec![2u64, 3, 5, 7, 11, 13, 101])) {
        let p = Prime::new(p).unwrap();
        prop_assert_eq!(padic_abs(&(&q * &r), p), padic_abs(&q, p) * padic_abs(&r, p));
    }

    #[test]
    fn product_formula(q in rational()) {
        let mut prod = q.abs();
        for p in support(&q) {
            prod *= padic_abs(&q, Prime::new(p).unwrap());
        }
        prop_assert!(prod.is_one());
    }

    #[test]
    fn characters_are_additive(q in any_rational(), r in any_rational(), p in prop::sample::select(vec![2u64, 3, 5, 7, 97])) {
        for place in [LocalPlace::Archimedean, LocalPlace::Finite(Prime::new(p).unwrap())] {
            let lhs = additive_character(&(&q + &r), place);
            let rhs = additive_character(&q, place) * additive_character(&r, place);
            prop_assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn global_character_is_trivial(q in any_rational()) {
        let mut prod = additive_character(&q, LocalPlace::Archimedean);
        if !q.is_zero() {
            for p in prime_divisors(q.denom()) {
                prod *= additive_character(&q, LocalPlace::Finite(Prime::new(p).unwrap()));
            }
        }
        prop_assert!((prod - num_complex::Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }
}
