//! Adaptive quadrature: Gauss–Kronrod (7/15) on intervals and the
//! Genz–Malik degree-7/5 embedded rule on hyperrectangles, both refined by
//! bisecting the region with the largest error estimate.

use alloc::collections::BinaryHeap;
use core::cmp::Ordering;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("quadrature did not converge: estimate {value} ± {error:e} after {evaluations} evaluations")]
    NonConvergence {
        value: f64,
        error: f64,
        evaluations: usize,
    },
    #[error("integrand returned a non-finite value at {at:?}")]
    NonFinite { at: [f64; 3] },
}

/// An integral estimate with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_evaluations: usize,
}

impl Tolerance {
    pub fn absolute(abs: f64) -> Self {
        Self {
            abs,
            rel: 0.0,
            max_evaluations: 50_000_000,
        }
    }

    fn met(&self, value: f64, error: f64) -> bool {
        error <= self.abs.max(self.rel * value.abs())
    }
}

/// Heap entry ordered by error estimate.
struct Region<R> {
    error: f64,
    value: f64,
    region: R,
}

impl<R> PartialEq for Region<R> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<R> Eq for Region<R> {}
impl<R> PartialOrd for Region<R> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<R> Ord for Region<R> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

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
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
/// Gauss weights for the nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let pair = f(c - x) + f(c + x);
        kronrod += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Integrate `f` over `[a, b]`. Endpoints are never evaluated, so
/// integrable endpoint singularities are handled by refinement.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    tol: Tolerance,
) -> Result<Estimate, QuadratureError> {
    let mut heap = BinaryHeap::new();
    let (value, error) = gk15(&mut f, a, b);
    let mut total = value;
    let mut total_err = error;
    let mut evaluations = 15;
    heap.push(Region {
        error,
        value,
        region: (a, b),
    });
    while !tol.met(total, total_err) {
        if evaluations >= tol.max_evaluations {
            return Err(QuadratureError::NonConvergence {
                value: total,
                error: total_err,
                evaluations,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let (lo, hi) = worst.region;
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        evaluations += 30;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        if !total.is_finite() {
            return Err(QuadratureError::NonFinite { at: [mid, 0.0, 0.0] });
        }
        heap.push(Region { error: e1, value: v1, region: (lo, mid) });
        heap.push(Region { error: e2, value: v2, region: (mid, hi) });
    }
    // re-sum to shed the drift of the running totals
    let value = heap.iter().map(|r| r.value).sum();
    let error = heap.iter().map(|r| r.error).sum();
    Ok(Estimate { value, error, evaluations })
}

const GM_L2: f64 = 0.358_568_582_800_318_1; // sqrt(9/70)
const GM_L4: f64 = 0.948_683_298_050_513_8; // sqrt(9/10)
const GM_L5: f64 = 0.688_247_201_611_685_3; // sqrt(9/19)

struct Box<const D: usize> {
    center: [f64; D],
    half: [f64; D],
    split: usize,
}

/// One application of the Genz–Malik rule: `(degree-7 value, |R7 - R5|,
/// axis with the largest fourth difference)`.
fn genz_malik<const D: usize, F: FnMut(&[f64; D]) -> f64>(
    f: &mut F,
    center: &[f64; D],
    half: &[f64; D],
) -> (f64, f64, usize) {
    let d = D as f64;
    let w1 = (12824.0 - 9120.0 * d + 400.0 * d * d) / 19683.0;
    let w2 = 980.0 / 6561.0;
    let w3 = (1820.0 - 400.0 * d) / 19683.0;
    let w4 = 200.0 / 19683.0;
    let w5 = 6859.0 / 19683.0 / (1u64 << D) as f64;
    let v1 = (729.0 - 950.0 * d + 50.0 * d * d) / 729.0;
    let v2 = 245.0 / 486.0;
    let v3 = (265.0 - 100.0 * d) / 1458.0;
    let v4 = 25.0 / 729.0;
    let ratio = (GM_L2 * GM_L2) / (GM_L4 * GM_L4);

    let f0 = f(center);
    let mut s2 = 0.0;
    let mut s3 = 0.0;
    let mut split = 0;
    let mut widest = -1.0;
    let mut p = *center;
    for i in 0..D {
        p[i] = center[i] - GM_L2 * half[i];
        let a = f(&p);
        p[i] = center[i] + GM_L2 * half[i];
        let b = f(&p);
        p[i] = center[i] - GM_L4 * half[i];
        let c = f(&p);
        p[i] = center[i] + GM_L4 * half[i];
        let e = f(&p);
        p[i] = center[i];
        s2 += a + b;
        s3 += c + e;
        let fourth = (a + b - 2.0 * f0 - ratio * (c + e - 2.0 * f0)).abs();
        if fourth > widest {
            widest = fourth;
            split = i;
        }
    }
    let mut s4 = 0.0;
    for i in 0..D {
        for j in i + 1..D {
            for (si, sj) in [(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)] {
                p[i] = center[i] + si * GM_L4 * half[i];
                p[j] = center[j] + sj * GM_L4 * half[j];
                s4 += f(&p);
            }
            p[i] = center[i];
            p[j] = center[j];
        }
    }
    let mut s5 = 0.0;
    for mask in 0..(1u32 << D) {
        for (i, q) in p.iter_mut().enumerate() {
            let sign = if mask >> i & 1 == 1 { 1.0 } else { -1.0 };
            *q = center[i] + sign * GM_L5 * half[i];
        }
        s5 += f(&p);
    }
    let volume: f64 = half.iter().map(|h| 2.0 * h).product();
    let r7 = volume * (w1 * f0 + w2 * s2 + w3 * s3 + w4 * s4 + w5 * s5);
    let r5 = volume * (v1 * f0 + v2 * s2 + v3 * s3 + v4 * s4);
    (r7, (r7 - r5).abs(), split)
}

/// Integrate `f` over the box `[lower, upper]` (`D ≥ 2`). Rule points are
/// interior, so integrands singular on the boundary are permitted.
pub fn cubature<const D: usize, F: FnMut(&[f64; D]) -> f64>(
    mut f: F,
    lower: [f64; D],
    upper: [f64; D],
    tol: Tolerance,
) -> Result<Estimate, QuadratureError> {
    assert!(D >= 2, "use `integrate` for one dimension");
    let points = 1 + 4 * D + 2 * D * (D - 1) + (1 << D);
    let mut center = [0.0; D];
    let mut half = [0.0; D];
    for i in 0..D {
        center[i] = 0.5 * (lower[i] + upper[i]);
        half[i] = 0.5 * (upper[i] - lower[i]);
    }
    let (value, error, split) = genz_malik(&mut f, &center, &half);
    let mut total = value;
    let mut total_err = error;
    let mut evaluations = points;
    let mut heap = BinaryHeap::new();
    heap.push(Region {
        error,
        value,
        region: Box { center, half, split },
    });
    while !tol.met(total, total_err) {
        if evaluations >= tol.max_evaluations {
            return Err(QuadratureError::NonConvergence {
                value: total,
                error: total_err,
                evaluations,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let Box { center, half, split } = worst.region;
        let mut h = half;
        h[split] *= 0.5;
        total -= worst.value;
        total_err -= worst.error;
        for sign in [-1.0, 1.0] {
            let mut c = center;
            c[split] += sign * h[split];
            let (v, e, s) = genz_malik(&mut f, &c, &h);
            total += v;
            total_err += e;
            heap.push(Region {
                error: e,
                value: v,
                region: Box { center: c, half: h, split: s },
            });
        }
        evaluations += 2 * points;
        if !total.is_finite() {
            let mut at = [0.0; 3];
            for (a, c) in at.iter_mut().zip(center) {
                *a = c;
            }
            return Err(QuadratureError::NonFinite { at });
        }
    }
    let value = heap.iter().map(|r| r.value).sum();
    let error = heap.iter().map(|r| r.error).sum();
    Ok(Estimate { value, error, evaluations })
}
