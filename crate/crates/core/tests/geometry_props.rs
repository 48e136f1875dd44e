use num_bigint::BigInt;
use proptest::prelude::*;

use hzeta::geometry::{builtin_p2_model, cone_laplace, eval_poly, SimplicialCone, VarietyModel};

/// Points of P^2(F_p) sorted by which of `x0 = 0`, `x2 = 0` they lie on.
fn brute_strata(p: u64) -> [u64; 4] {
    let mut counts = [0u64; 4];
    let mut points = Vec::new();
    for x0 in 0..p {
        for x1 in 0..p {
            for x2 in 0..p {
                if (x0, x1, x2) == (0, 0, 0) {
                    continue;
                }
                // normalize: first nonzero coordinate is 1
                let lead = [x0, x1, x2].into_iter().find(|&c| c != 0).unwrap();
                let inv = (1..p).find(|i| i * lead % p == 1).unwrap();
                points.push((x0 * inv % p, x1 * inv % p, x2 * inv % p));
            }
        }
    }
    points.sort_unstable();
    points.dedup();
    for (x0, _, x2) in points {
        let idx = (x0 == 0) as usize + 2 * (x2 == 0) as usize;
        counts[idx] += 1;
    }
    counts
}

fn stratum_count(model: &VarietyModel, labels: &[&str], p: u64) -> BigInt {
    let st = model
        .strata
        .iter()
        .find(|s| s.divisors.len() == labels.len() && labels.iter().all(|l| s.divisors.iter().any(|d| d == l)))
        .unwrap();
    eval_poly(&st.count, p)
}

#[test]
fn strata_match_brute_force() {
    let model = builtin_p2_model();
    for p in [2u64, 3, 5, 7, 11] {
        let b = brute_strata(p);
        assert_eq!(stratum_count(&model, &[], p), BigInt::from(b[0]));
        assert_eq!(stratum_count(&model, &["D0"], p), BigInt::from(b[1]));
        assert_eq!(stratum_count(&model, &["D2"], p), BigInt::from(b[2]));
        assert_eq!(stratum_count(&model, &["D0", "D2"], p), BigInt::from(b[3]));
        let total: BigInt = model.strata.iter().map(|s| eval_poly(&s.count, p)).sum();
        assert_eq!(total, BigInt::from(p * p + p + 1));
        assert_eq!(eval_poly(&model.total_count, p), total);
    }
}

#[test]
fn character_embedding_is_in_the_kernel() {
    let model = builtin_p2_model();
    for row in &model.pic_projection {
        let image: i64 = row.iter().zip(&model.character_embedding).map(|(a, b)| a * b).sum();
        assert_eq!(image, 0);
    }
    let errors: Vec<_> = model
        .validate()
        .into_iter()
        .filter(|v| v.severity == hzeta::geometry::Severity::Error)
        .collect();
    assert!(errors.is_empty(), "{errors:?}");
}

#[test]
fn broken_embedding_is_reported() {
    let mut model = builtin_p2_model();
    model.character_embedding = vec![1, 0];
    assert!(model.validate().iter().any(|v| v.code == "exact-sequence"));
}

proptest! {
    #[test]
    fn laplace_is_homogeneous(
        s in prop::collection::vec(0.1f64..10.0, 2),
        lambda in 0.1f64..10.0,
        gens in prop::sample::select(vec![vec![vec![1i64, 0], vec![0, 1]], vec![vec![1, 0], vec![1, 2]], vec![vec![2, 1], vec![-1, 3]]]),
    ) {
        let cone = SimplicialCone::new(gens.clone()).unwrap();
        // keep s inside the cone: s = sum c_i g_i with c_i > 0
        let pt: Vec<f64> = (0..2).map(|k| s[0] * gens[0][k] as f64 + s[1] * gens[1][k] as f64).collect();
        let scaled: Vec<f64> = pt.iter().map(|x| lambda * x).collect();
        let a = cone_laplace(&cone, &pt).unwrap();
        let b = cone_laplace(&cone, &scaled).unwrap();
        prop_assert!((b - a / (lambda * lambda)).abs() <= 1e-12 * a.abs().max(1.0) / (lambda * lambda).min(1.0));
    }
}
