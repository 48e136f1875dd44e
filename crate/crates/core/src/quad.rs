//! Adaptive Gauss-Kronrod (7/15) quadrature for vector-valued complex
//! integrands, generic over the float type.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex;
use num_traits::Float;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Clone, Debug)]
pub struct QuadResult<F> {
    pub values: Vec<Complex<F>>,
    /// Sum over subintervals of the Kronrod-Gauss difference, worst component.
    pub error: F,
    pub evaluations: usize,
    pub converged: bool,
}

struct Segment<F> {
    a: F,
    b: F,
    values: Vec<Complex<F>>,
    error: F,
}

impl<F: Float> PartialEq for Segment<F> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<F: Float> Eq for Segment<F> {}
impl<F: Float> PartialOrd for Segment<F> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<F: Float> Ord for Segment<F> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.partial_cmp(&other.error).unwrap_or(Ordering::Equal)
    }
}

fn c<F: Float>(x: f64) -> F {
    F::from(x).unwrap()
}

fn gk15<F, G>(f: &mut G, a: F, b: F, dim: usize) -> Segment<F>
where
    F: Float,
    G: FnMut(F) -> Vec<Complex<F>>,
{
    let half = (b - a) * c(0.5);
    let mid = (a + b) * c(0.5);
    let mut kronrod = vec![Complex::new(F::zero(), F::zero()); dim];
    let mut gauss = vec![Complex::new(F::zero(), F::zero()); dim];
    let centre = f(mid);
    for k in 0..dim {
        kronrod[k] = centre[k] * c::<F>(WGK[7]);
        gauss[k] = centre[k] * c::<F>(WG[3]);
    }
    for j in 0..7 {
        let dx = half * c(XGK[j]);
        let lo = f(mid - dx);
        let hi = f(mid + dx);
        for k in 0..dim {
            let s = lo[k] + hi[k];
            kronrod[k] = kronrod[k] + s * c::<F>(WGK[j]);
            if j % 2 == 1 {
                gauss[k] = gauss[k] + s * c::<F>(WG[j / 2]);
            }
        }
    }
    let mut error = F::zero();
    for k in 0..dim {
        kronrod[k] = kronrod[k] * half;
        gauss[k] = gauss[k] * half;
        error = error.max((kronrod[k] - gauss[k]).norm());
    }
    Segment { a, b, values: kronrod, error }
}

/// Integrate `f` over `[a, b]`, bisecting the worst segment until the total
/// error estimate is below `max(abs_tol, rel_tol * |I|)` (worst component)
/// or `max_segments` is reached.
pub fn integrate<F, G>(mut f: G, a: F, b: F, abs_tol: F, rel_tol: F, max_segments: usize) -> QuadResult<F>
where
    F: Float,
    G: FnMut(F) -> Vec<Complex<F>>,
{
    let dim = f(a + (b - a) * c(0.5)).len();
    let first = gk15(&mut f, a, b, dim);
    let mut evaluations = 16;
    let mut total = first.values.clone();
    let mut err = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    loop {
        let scale = total.iter().fold(F::zero(), |m, v| m.max(v.norm()));
        let target = abs_tol.max(rel_tol * scale);
        let exhausted = heap.len() >= max_segments;
        if err <= target || exhausted {
            return finish(heap, dim, evaluations, target);
        }
        let worst = heap.pop().expect("nonempty");
        let mid = (worst.a + worst.b) * c(0.5);
        if mid <= worst.a || mid >= worst.b {
            // interval at machine resolution, nothing left to refine
            heap.push(worst);
            let mut r = finish(heap, dim, evaluations, target);
            r.converged = false;
            return r;
        }
        let left = gk15(&mut f, worst.a, mid, dim);
        let right = gk15(&mut f, mid, worst.b, dim);
        for k in 0..dim {
            total[k] = total[k] - worst.values[k] + left.values[k] + right.values[k];
        }
        err = err - worst.error + left.error + right.error;
        heap.push(left);
        heap.push(right);
        evaluations += 30;
    }
}

fn finish<F: Float>(heap: BinaryHeap<Segment<F>>, dim: usize, evaluations: usize, target: F) -> QuadResult<F> {
    // exact resummation in a fixed order (by left endpoint) for determinism
    let mut segs = heap.into_vec();
    segs.sort_by(|x, y| x.a.partial_cmp(&y.a).unwrap_or(Ordering::Equal));
    let mut values = vec![Complex::new(F::zero(), F::zero()); dim];
    let mut error = F::zero();
    for s in &segs {
        for k in 0..dim {
            values[k] = values[k] + s.values[k];
        }
        error = error + s.error;
    }
    QuadResult { values, error, evaluations, converged: error <= target }
}

/// Scalar real convenience wrapper.
pub fn integrate_real<F, G>(mut f: G, a: F, b: F, abs_tol: F, rel_tol: F, max_segments: usize) -> (F, F)
where
    F: Float,
    G: FnMut(F) -> F,
{
    let r = integrate(
        |x| vec![Complex::new(f(x), F::zero())],
        a,
        b,
        abs_tol,
        rel_tol,
        max_segments,
    );
    (r.values[0].re, r.error)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let (v, _) = integrate_real(|x: f64| x.powi(5) - 3.0 * x * x, 0.0, 2.0, 1e-14, 1e-14, 10);
        assert!((v - (64.0 / 6.0 - 8.0)).abs() < 1e-12);
    }

    #[test]
    fn oscillatory_vector() {
        let r = integrate(
            |x: f64| vec![Complex::new(0.0, 3.0 * x).exp(), Complex::new(x.cos(), 0.0)],
            0.0,
            10.0,
            1e-13,
            1e-13,
            1000,
        );
        assert!(r.converged);
        let exact = (Complex::new(0.0, 30.0).exp() - 1.0) / Complex::new(0.0, 3.0);
        assert!((r.values[0] - exact).norm() < 1e-12);
        assert!((r.values[1].re - 10f64.sin()).abs() < 1e-12);
    }

    #[test]
    fn single_precision() {
        let (v, _) = integrate_real(|x: f32| x.exp(), 0.0f32, 1.0, 1e-6, 1e-6, 50);
        assert!((v - (1f32.exp() - 1.0)).abs() < 1e-5);
    }

    #[test]
    fn endpoint_singularity() {
        let (v, _) = integrate_real(|x: f64| x.sqrt().recip(), 0.0, 1.0, 1e-9, 1e-9, 2000);
        assert!((v - 2.0).abs() < 1e-6);
    }
}
