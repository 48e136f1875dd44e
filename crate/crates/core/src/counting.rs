//! Points of `G(Q)` of bounded anticanonical height.
//!
//! A point is a primitive triple `(u0, u1, u2)` with `u0 > 0`, `u2 != 0` and
//! `(u0^2 + u1^2 + u2^2)^{3/2} <= B`.

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::heights::GroupPoint;
use crate::{Error, Rational, Result};

fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Largest `T` with `T^3 <= B^2`, i.e. the bound on `u0^2 + u1^2 + u2^2`.
/// A relative slack of `1e-12` keeps boundary points such as `B = 2^{3/2}`.
pub fn norm_bound(b: f64) -> u64 {
    if !(b > 0.0) {
        return 0;
    }
    let b2 = b * b * (1.0 + 1e-12);
    let mut t = b2.cbrt().floor() as u64;
    while t > 0 && (t as f64).powi(3) > b2 {
        t -= 1;
    }
    while ((t + 1) as f64).powi(3) <= b2 {
        t += 1;
    }
    t
}

/// All primitive triples counted by `N(B)`, in lexicographic order of
/// `(u0, u2, u1)`.
pub fn enumerate_triples(b: f64) -> impl Iterator<Item = (i64, i64, i64)> {
    let t = norm_bound(b) as i64;
    let r0 = isqrt(t as u64) as i64;
    (1..=r0).flat_map(move |u0| {
        let r2 = isqrt((t - u0 * u0) as u64) as i64;
        (-r2..=r2).filter(|&u2| u2 != 0).flat_map(move |u2| {
            let l = isqrt((t - u0 * u0 - u2 * u2) as u64) as i64;
            let g = u0.gcd(&u2);
            (-l..=l).filter(move |u1| u1.gcd(&g) == 1).map(move |u1| (u0, u1, u2))
        })
    })
}

/// The points themselves, `a = u0/u2`, `x = a u1/u2`.
pub fn enumerate_points(b: f64) -> impl Iterator<Item = GroupPoint> {
    enumerate_triples(b).map(|(u0, u1, u2)| {
        let a = Rational::new(u0.into(), u2.into());
        let x = &a * Rational::new(u1.into(), u2.into());
        GroupPoint { x, a }
    })
}

/// Squarefree divisors of every `n <= limit` with their Moebius signs.
struct MoebiusTable {
    spf: Vec<u32>,
}

impl MoebiusTable {
    fn new(limit: usize) -> Self {
        let mut spf = vec![0u32; limit + 1];
        for i in 2..=limit {
            if spf[i] == 0 {
                let mut j = i;
                while j <= limit {
                    if spf[j] == 0 {
                        spf[j] = i as u32;
                    }
                    j += i;
                }
            }
        }
        MoebiusTable { spf }
    }

    fn signed_divisors(&self, mut n: usize, out: &mut Vec<(u64, i64)>) {
        out.clear();
        out.push((1, 1));
        while n > 1 {
            let p = self.spf[n] as usize;
            while n % p == 0 {
                n /= p;
            }
            for k in 0..out.len() {
                let (d, mu) = out[k];
                out.push((d * p as u64, -mu));
            }
        }
    }
}

fn stripe_count(u0: u64, t: u64, table: &MoebiusTable, divs: &mut Vec<(u64, i64)>) -> Result<u64> {
    let mut total: u64 = 0;
    let r2 = isqrt(t - u0 * u0);
    for u2 in 1..=r2 {
        let l = isqrt(t - u0 * u0 - u2 * u2);
        table.signed_divisors(u0.gcd(&u2) as usize, divs);
        let mut cnt: i64 = 0;
        for &(d, mu) in divs.iter() {
            cnt += mu * (2 * (l / d) as i64 + 1);
        }
        // u2 and -u2
        total = total.checked_add(2 * cnt as u64).ok_or(Error::Overflow)?;
    }
    Ok(total)
}

/// `N(B)` by counting each `(u0, u2)` cell with Moebius inversion over
/// `gcd(u0, u2)`; no point is materialized.
pub fn count_n(b: f64) -> Result<u64> {
    let t = norm_bound(b);
    let r0 = isqrt(t);
    let table = MoebiusTable::new(r0 as usize + 1);
    let mut divs = Vec::new();
    let mut total: u64 = 0;
    for u0 in 1..=r0 {
        let c = stripe_count(u0, t, &table, &mut divs)?;
        total = total.checked_add(c).ok_or(Error::Overflow)?;
    }
    Ok(total)
}

/// `N(B)` with `u0` stripes spread over `threads` workers. The total is an
/// exact integer sum, so it does not depend on the shard plan.
pub fn count_n_parallel(b: f64, threads: usize) -> Result<u64> {
    use rayon::prelude::*;
    let t = norm_bound(b);
    let r0 = isqrt(t);
    let table = MoebiusTable::new(r0 as usize + 1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Domain(e.to_string()))?;
    let parts: Vec<Result<u64>> = pool.install(|| {
        (1..=r0)
            .into_par_iter()
            .map_init(Vec::new, |divs, u0| stripe_count(u0, t, &table, divs))
            .collect()
    });
    let mut total: u64 = 0;
    for p in parts {
        total = total.checked_add(p?).ok_or(Error::Overflow)?;
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountReport {
    pub entries: Vec<(f64, u64)>,
    pub fitted_c: f64,
    /// `(N - c B) / (c B)` per entry
    pub fit_residuals: Vec<f64>,
    /// set when the samples do not span a decade or stay below `B = 1000`
    pub low_confidence: bool,
}

/// Least squares slope of `N(B)` against `B` through the origin.
pub fn fit_constant(samples: &[f64]) -> Result<CountReport> {
    let entries = samples.iter().map(|&b| count_n(b).map(|n| (b, n))).collect::<Result<Vec<_>>>()?;
    fit_counts(entries)
}

pub fn fit_counts(entries: Vec<(f64, u64)>) -> Result<CountReport> {
    if entries.len() < 3 {
        return Err(Error::DegenerateFit(format!("need at least 3 samples, got {}", entries.len())));
    }
    let lo = entries.iter().map(|e| e.0).fold(f64::INFINITY, f64::min);
    let hi = entries.iter().map(|e| e.0).fold(0.0, f64::max);
    if lo == hi {
        return Err(Error::DegenerateFit("all samples share the same B".into()));
    }
    let num: f64 = entries.iter().map(|&(b, n)| b * n as f64).sum();
    let den: f64 = entries.iter().map(|&(b, _)| b * b).sum();
    let fitted_c = num / den;
    if !(fitted_c > 0.0) {
        return Err(Error::DegenerateFit("no points below the largest sample".into()));
    }
    let fit_residuals = entries.iter().map(|&(b, n)| (n as f64 - fitted_c * b) / (fitted_c * b)).collect();
    let low_confidence = hi < 10.0 * lo || hi < 1e3;
    Ok(CountReport { entries, fitted_c, fit_residuals, low_confidence })
}

/// `n` bounds ending at `bmax`, one decade apart.
pub fn decade_samples(bmax: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| bmax / 10f64.powi((n - 1 - i) as i32)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_counts() {
        assert_eq!(count_n(8.0).unwrap(), 6);
        assert_eq!(count_n(2.0).unwrap(), 0);
        assert_eq!(count_n(2f64.powf(1.5)).unwrap(), 2);
        let mut pts: Vec<_> = enumerate_triples(8.0).collect();
        pts.sort();
        assert_eq!(pts, vec![(1, -1, -1), (1, -1, 1), (1, 0, -1), (1, 0, 1), (1, 1, -1), (1, 1, 1)]);
    }

    #[test]
    fn frozen_counts() {
        assert_eq!(count_n(1e3).unwrap(), 1538);
        assert_eq!(count_n(1e4).unwrap(), 16530);
        assert_eq!(count_n(1e5).unwrap(), 170298);
    }

    #[test]
    fn parallel_matches_serial() {
        for b in [10.0, 1e3, 3e4] {
            let s = count_n(b).unwrap();
            assert_eq!(count_n_parallel(b, 1).unwrap(), s);
            assert_eq!(count_n_parallel(b, 4).unwrap(), s);
        }
    }

    #[test]
    fn fits() {
        assert!(fit_constant(&[100.0, 100.0, 100.0]).is_err());
        assert!(fit_constant(&[100.0, 1000.0]).is_err());
        let r = fit_counts(vec![(8.0, 6), (8.0, 6), (9.0, 6)]).unwrap();
        assert!(r.low_confidence);
        assert!((r.fitted_c - 0.7).abs() < 0.1);
    }
}
