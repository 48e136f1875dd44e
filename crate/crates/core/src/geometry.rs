//! Divisor bookkeeping for equivariant compactifications, strata counts,
//! and the Laplace transform of simplicial cones.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::Prime;
use crate::{Error, Rational, Result, Scalar};

/// Which part of the boundary a divisor belongs to, read off from `div(a)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DivisorGroup {
    /// zeros of `a`
    I1,
    /// poles of `a`
    I2,
    /// neither
    I3,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryDivisor {
    pub label: String,
    /// coefficient in `-div(omega)`
    pub d: i64,
    /// `ord_D(x)`, signed
    pub ord_x: i64,
    /// `|ord_D(x)|`
    pub e: u64,
    /// coefficient in `div(a)`
    pub a_mult: i64,
    pub group: DivisorGroup,
}

impl BoundaryDivisor {
    pub fn new(label: &str, d: i64, ord_x: i64, a_mult: i64) -> Self {
        let group = match a_mult.signum() {
            1 => DivisorGroup::I1,
            -1 => DivisorGroup::I2,
            _ => DivisorGroup::I3,
        };
        BoundaryDivisor { label: label.to_string(), d, ord_x, e: ord_x.unsigned_abs(), a_mult, group }
    }
}

/// A point count `#X_I(F_p)` as a polynomial in `p`, coefficients from the
/// constant term up.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stratum {
    pub divisors: Vec<String>,
    pub count: Vec<i64>,
}

pub fn eval_poly(coeffs: &[i64], p: u64) -> BigInt {
    let pb = BigInt::from(p);
    coeffs.iter().rev().fold(BigInt::zero(), |acc, c| acc * &pb + BigInt::from(*c))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarietyModel {
    pub name: String,
    pub dimension: u32,
    pub divisors: Vec<BoundaryDivisor>,
    pub picard_rank: u32,
    pub kappa: Vec<i64>,
    /// class of `div(a)` in the boundary basis
    pub character_embedding: Vec<i64>,
    /// matrix of the projection to `Pic(X)`, one row per generator of `Pic(X)`
    pub pic_projection: Vec<Vec<i64>>,
    /// generators of the effective cone of `Pic(X)`
    pub effective_cone: Vec<Vec<i64>>,
    /// `#X(F_p)` as a polynomial
    pub total_count: Vec<i64>,
    pub strata: Vec<Stratum>,
}

/// P^2 with `(x, a) -> (a : x/a : 1)`; boundary `D0 = {x0 = 0}` and
/// `D2 = {x2 = 0}`.
pub fn builtin_p2_model() -> VarietyModel {
    VarietyModel {
        name: "P2".into(),
        dimension: 2,
        divisors: vec![BoundaryDivisor::new("D0", 0, 1, 1), BoundaryDivisor::new("D2", 3, -2, -1)],
        picard_rank: 1,
        kappa: vec![0, 3],
        character_embedding: vec![1, -1],
        pic_projection: vec![vec![1, 1]],
        effective_cone: vec![vec![1]],
        total_count: vec![1, 1, 1],
        strata: vec![
            Stratum { divisors: vec![], count: vec![0, -1, 1] },
            Stratum { divisors: vec!["D0".into()], count: vec![0, 1] },
            Stratum { divisors: vec!["D2".into()], count: vec![0, 1] },
            Stratum { divisors: vec!["D0".into(), "D2".into()], count: vec![1] },
        ],
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub severity: Severity,
    pub code: String,
    pub message: String,
}

impl Violation {
    fn error(code: &str, message: String) -> Self {
        Violation { severity: Severity::Error, code: code.into(), message }
    }
    fn warning(code: &str, message: String) -> Self {
        Violation { severity: Severity::Warning, code: code.into(), message }
    }
}

impl VarietyModel {
    pub fn divisor_index(&self, label: &str) -> Option<usize> {
        self.divisors.iter().position(|d| d.label == label)
    }

    pub fn stratum_count(&self, stratum: &Stratum, p: u64) -> BigInt {
        eval_poly(&stratum.count, p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidModel(e.to_string()))
    }

    /// Hypothesis checks. Errors make the model unusable; warnings record
    /// known tensions in the stored data.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let n = self.divisors.len();
        for div in &self.divisors {
            if div.a_mult.abs() > 1 {
                out.push(Violation::error(
                    "non-reduced-div-a",
                    format!("div(a) has multiplicity {} along {}", div.a_mult, div.label),
                ));
            }
            let expected = match div.a_mult.signum() {
                1 => DivisorGroup::I1,
                -1 => DivisorGroup::I2,
                _ => DivisorGroup::I3,
            };
            if div.group != expected {
                out.push(Violation::error(
                    "group-mismatch",
                    format!("{} is {:?} but a_mult = {}", div.label, div.group, div.a_mult),
                ));
            }
            if div.e != div.ord_x.unsigned_abs() {
                out.push(Violation::error("pole-order-mismatch", format!("{}: e != |ord(x)|", div.label)));
            }
            if div.group == DivisorGroup::I2 && div.e <= 1 {
                out.push(Violation::error(
                    "pole-order-hypothesis",
                    format!("{} is a pole of a with |ord(x)| = {} <= 1", div.label, div.e),
                ));
            }
            if div.d <= 0 {
                out.push(Violation::warning(
                    "nonpositive-d",
                    format!("{} has d = {} in -div(omega); positivity is expected for bi-invariant forms", div.label, div.d),
                ));
            }
        }
        if self.kappa.len() != n || self.kappa.iter().zip(&self.divisors).any(|(k, d)| *k != d.d) {
            out.push(Violation::error("kappa", "kappa differs from the d-vector".into()));
        }
        if self.character_embedding.len() != n
            || self.character_embedding.iter().zip(&self.divisors).any(|(m, d)| *m != d.a_mult)
        {
            out.push(Violation::error("embedding", "character embedding differs from div(a)".into()));
        }
        for row in &self.pic_projection {
            let image: i64 = row.iter().zip(&self.character_embedding).map(|(r, m)| r * m).sum();
            if row.len() != n || image != 0 {
                out.push(Violation::error("exact-sequence", "div(a) does not vanish in Pic(X)".into()));
            }
        }
        for st in &self.strata {
            if st.divisors.iter().any(|l| self.divisor_index(l).is_none()) {
                out.push(Violation::error("strata-label", format!("unknown divisor in {:?}", st.divisors)));
            }
        }
        for p in [2u64, 3, 5, 7] {
            let sum: BigInt = self.strata.iter().map(|s| self.stratum_count(s, p)).sum();
            if sum != eval_poly(&self.total_count, p) {
                out.push(Violation::error("strata-sum", format!("strata do not partition X(F_{p})")));
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimplicialCone {
    pub generators: Vec<Vec<i64>>,
}

impl SimplicialCone {
    pub fn new(generators: Vec<Vec<i64>>) -> Result<Self> {
        let n = generators.len();
        if n == 0 || generators.iter().any(|g| g.len() != n) {
            return Err(Error::Domain("a simplicial cone needs n generators in dimension n".into()));
        }
        let g: Vec<Vec<Rational>> = generators
            .iter()
            .map(|row| row.iter().map(|&x| Rational::from_integer(x.into())).collect())
            .collect();
        if determinant(g).is_zero() {
            return Err(Error::Domain("cone generators are linearly dependent".into()));
        }
        Ok(SimplicialCone { generators })
    }

    pub fn dimension(&self) -> usize {
        self.generators.len()
    }
}

fn determinant<T: Scalar>(mut m: Vec<Vec<T>>) -> T {
    let n = m.len();
    let mut det = T::one();
    for col in 0..n {
        let Some(pivot) = (col..n).find(|&r| !m[r][col].is_zero()) else {
            return T::zero();
        };
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        det = det * m[col][col].clone();
        for r in col + 1..n {
            let factor = m[r][col].clone() / m[col][col].clone();
            for k in col..n {
                let v = m[col][k].clone() * factor.clone();
                m[r][k] = m[r][k].clone() - v;
            }
        }
    }
    det
}

/// Solve `G^T c = s` for the coordinates of `s` in the generator basis.
fn coordinates<T: Scalar>(g: &[Vec<i64>], s: &[T]) -> Option<Vec<T>> {
    let n = g.len();
    let mut m: Vec<Vec<T>> = (0..n)
        .map(|r| {
            let mut row: Vec<T> = (0..n).map(|c| T::from_i64(g[c][r])).collect();
            row.push(s[r].clone());
            row
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(pivot, col);
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let factor = m[r][col].clone() / m[col][col].clone();
                for k in col..=n {
                    let v = m[col][k].clone() * factor.clone();
                    m[r][k] = m[r][k].clone() - v;
                }
            }
        }
    }
    Some((0..n).map(|r| m[r][n].clone() / m[r][r].clone()).collect())
}

/// `int_{C^dual} e^{-<s, y>} dy = 1 / (|det G| prod c_i)` where
/// `s = sum c_i g_i`. For a unimodular basis `c_i = <s, g_i^*>`.
pub fn cone_laplace<T: Scalar>(cone: &SimplicialCone, s: &[T]) -> Result<T> {
    let n = cone.dimension();
    if s.len() != n {
        return Err(Error::Domain(format!("expected {n} coordinates, got {}", s.len())));
    }
    let coords = coordinates(&cone.generators, s).ok_or_else(|| Error::Domain("singular cone".into()))?;
    if let Some(bad) = coords.iter().find(|c| c.re_f64() <= 0.0) {
        return Err(Error::Domain(format!("coordinate {bad:?} of s is not in the open cone")));
    }
    let g: Vec<Vec<T>> = cone
        .generators
        .iter()
        .map(|row| row.iter().map(|&x| T::from_i64(x)).collect())
        .collect();
    let mut det = determinant(g);
    if det.re_f64() < 0.0 {
        det = -det;
    }
    let prod = coords.into_iter().fold(T::one(), |acc, c| acc * c);
    Ok(T::one() / (det * prod))
}

/// `#G(F_p) / p^dim`, the open stratum density.
pub fn tamagawa_local_density(model: &VarietyModel, p: Prime) -> Rational {
    let open = model
        .strata
        .iter()
        .find(|s| s.divisors.is_empty())
        .map(|s| model.stratum_count(s, p.get()))
        .unwrap_or_else(BigInt::zero);
    Rational::new(open, BigInt::from(p.get()).pow(model.dimension))
}

/// Peyre's local factor `(1 - 1/p)^rk * #X(F_p) / p^dim`.
pub fn peyre_local_factor(model: &VarietyModel, p: Prime) -> Rational {
    let pr = Rational::from_integer(p.get().into());
    let base = (Rational::one() - Rational::one() / pr).powi64(model.picard_rank as i64);
    base * Rational::new(eval_poly(&model.total_count, p.get()), BigInt::from(p.get()).pow(model.dimension))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn p2_data() {
        let m = builtin_p2_model();
        assert_eq!(m.kappa, vec![0, 3]);
        assert_eq!(m.character_embedding, vec![1, -1]);
        let total: BigInt = m.strata.iter().map(|s| m.stratum_count(s, 5)).sum();
        assert_eq!(total, BigInt::from(31));
        let v = m.validate();
        assert!(v.iter().all(|x| x.severity == Severity::Warning), "{v:?}");
        assert!(v.iter().any(|x| x.code == "nonpositive-d"));
    }

    #[test]
    fn validation_failures() {
        let mut m = builtin_p2_model();
        m.divisors[0].a_mult = 2;
        m.character_embedding[0] = 2;
        assert!(m.validate().iter().any(|v| v.code == "non-reduced-div-a"));
        let mut m = builtin_p2_model();
        m.divisors[1] = BoundaryDivisor::new("D2", 3, -1, -1);
        assert!(m.validate().iter().any(|v| v.code == "pole-order-hypothesis"));
    }

    #[test]
    fn json_round_trip() {
        let m = builtin_p2_model();
        let back = VarietyModel::from_json(&m.to_json()).unwrap();
        assert_eq!(m, back);
        assert!(VarietyModel::from_json("{\"name\": 1}").is_err());
    }

    #[test]
    fn laplace_examples() {
        let one = SimplicialCone::new(vec![vec![1]]).unwrap();
        assert_eq!(cone_laplace(&one, &[3.0f64]).unwrap(), 1.0 / 3.0);
        let std2 = SimplicialCone::new(vec![vec![1, 0], vec![0, 1]]).unwrap();
        assert_eq!(cone_laplace(&std2, &[1.0f64, 2.0]).unwrap(), 0.5);
        let exact = cone_laplace(&one, &[Rational::from_integer(3.into())]).unwrap();
        assert_eq!(exact, Rational::new(1.into(), 3.into()));
        let z = cone_laplace(&std2, &[Complex64::new(1.0, 1.0), Complex64::new(2.0, 0.0)]).unwrap();
        assert!((z - Complex64::new(0.25, -0.25)).norm() < 1e-15);
        assert!(cone_laplace(&std2, &[1.0f64, -1.0]).is_err());
        assert!(SimplicialCone::new(vec![vec![1, 2], vec![2, 4]]).is_err());
    }

    #[test]
    fn densities() {
        let m = builtin_p2_model();
        let two = Prime::new(2).unwrap();
        assert_eq!(tamagawa_local_density(&m, two), Rational::new(1.into(), 2.into()));
        assert_eq!(tamagawa_local_density(&m, Prime::new(5).unwrap()), Rational::new(4.into(), 5.into()));
        assert_eq!(peyre_local_factor(&m, two), Rational::new(7.into(), 8.into()));
    }
}
