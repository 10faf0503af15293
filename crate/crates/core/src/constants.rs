//! Analytic constants of the self-intersection asymptotics.
//!
//! `J = ∫_{u+v+w≤1} (1-u-v-w) / (uv+uw+vw)` is singular along the three
//! edges of the simplex where two coordinates vanish. Both evaluators split
//! the simplex into the three regions `R_m = {x_m is the largest}`:
//! cubature collapses each region onto the unit cube with a Duffy-type map,
//! Monte-Carlo samples a density with the same edge singularity.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::{LN_2, PI};

use rand::Rng;
use thiserror::Error;

use crate::estimators::{Band, DiffusionMatrix};
use crate::geometry::BilliardTable;
use crate::quadrature::{self, Estimate, QuadratureError, Tolerance};
use crate::special::{self, DomainError};
use crate::walk::stream_rng;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConstantsError {
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("J methods disagree: cubature {cubature} vs Monte-Carlo {monte_carlo} (combined error {combined:e})")]
    MethodDisagreement {
        cubature: f64,
        monte_carlo: f64,
        combined: f64,
    },
    #[error("target error {target:e} below the {method} floor {floor:e}")]
    TargetTooSmall {
        method: &'static str,
        target: f64,
        floor: f64,
    },
    #[error("diffusion matrix is degenerate (sqrt det = {sqrt_det})")]
    DegenerateMatrix { sqrt_det: f64 },
}

/// `(1-u)²/u · ln(u/(1-u))`, integrated over `[1/2, 1]`.
fn i_integrand(u: f64) -> f64 {
    let w = 1.0 - u;
    w * w / u * libm::log(u / w)
}

/// `π²/12 + 1/4 - (3/2) ln 2`, via the dilogarithm values it is built from.
pub fn integral_i_closed() -> Result<f64, DomainError> {
    let li2_half = special::li2(0.5)?;
    let li2_one = special::li2(1.0)?;
    // ∫ (1-u)²/u ln(u/(1-u)) on [1/2,1] reduces to Li₂(1) - Li₂(1/2) - ln²2/2 + 1/4 - (3/2)ln 2
    Ok(li2_one - li2_half - 0.5 * LN_2 * LN_2 + 0.25 - 1.5 * LN_2)
}

/// `(quadrature, closed form)` for `I`.
pub fn integral_i() -> Result<(Estimate, f64), ConstantsError> {
    let tol = Tolerance {
        abs: 1e-13,
        rel: 0.0,
        max_evaluations: 100_000,
    };
    let quad = quadrature::integrate(i_integrand, 0.5, 1.0, tol)?;
    Ok((quad, integral_i_closed()?))
}

/// `∫_{0≤u≤r≤s≤1} (1-s)/(rs) du dr ds`, by cubature after collapsing
/// `u = r·y`, `r = s·z` onto the unit cube. Exactly 1/2.
pub fn integral_simplex_check() -> Result<Estimate, ConstantsError> {
    let f = |x: &[f64; 3]| {
        let s = x[0];
        let r = s * x[1];
        let jac = r * s;
        if jac == 0.0 {
            return 0.0;
        }
        (1.0 - s) / (r * s) * jac
    };
    let tol = Tolerance {
        abs: 1e-12,
        rel: 0.0,
        max_evaluations: 1_000_000,
    };
    Ok(quadrature::cubature(f, [0.0; 3], [1.0; 3], tol)?)
}

/// Monte-Carlo version of [`integral_simplex_check`] with nested uniform
/// draws `s`, `r | s`, `u | r`.
pub fn integral_simplex_check_mc<R: Rng + ?Sized>(rng: &mut R, samples: u64) -> Band {
    let mut m = Moments::default();
    for _ in 0..samples {
        let s: f64 = rng.random();
        let r = s * rng.random::<f64>();
        let _u = r * rng.random::<f64>();
        // density 1/(rs) cancels the integrand's singular factor
        m.push(1.0 - s);
    }
    m.band()
}

/// The integrand of `J`, taken literally.
pub fn j_integrand(u: f64, v: f64, w: f64) -> f64 {
    let t = u + v + w;
    if t > 1.0 {
        return 0.0;
    }
    (1.0 - t) / (u * v + u * w + v * w)
}

/// Region `R_w ∩ {u ≥ v}` pulled back to the unit cube, times 6 for the
/// three regions and the `u ↔ v` mirror.
fn j_duffy(x: &[f64; 3]) -> f64 {
    let a = 0.5 * (1.0 + x[0]);
    let s = x[1] / a;
    let w = x[2] / (1.0 + s);
    let rho = w * s;
    let (u, v) = (rho * a, rho * (1.0 - a));
    let jac = w * w * s / (2.0 * a * (1.0 + s));
    if jac == 0.0 {
        return 0.0;
    }
    6.0 * j_integrand(u, v, w) * jac
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JMethod {
    Cubature,
    MonteCarlo { seed: u64 },
}

pub const J_CUBATURE_FLOOR: f64 = 1e-6;
pub const J_MC_FLOOR: f64 = 1e-4;

pub fn integral_j_cubature(target_err: f64) -> Result<Band, ConstantsError> {
    if !(target_err >= J_CUBATURE_FLOOR) {
        return Err(ConstantsError::TargetTooSmall {
            method: "cubature",
            target: target_err,
            floor: J_CUBATURE_FLOOR,
        });
    }
    let tol = Tolerance {
        abs: target_err,
        rel: 0.0,
        max_evaluations: 20_000_000,
    };
    let e = quadrature::cubature(j_duffy, [0.0; 3], [1.0; 3], tol)?;
    Ok(Band {
        value: e.value,
        stderr: e.error,
    })
}

/// Running sums of Monte-Carlo weights.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(&mut self, other: &Moments) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.count as f64
    }

    pub fn std_dev(&self) -> f64 {
        let n = self.count as f64;
        let mean = self.mean();
        libm::sqrt(((self.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0))
    }

    pub fn band(&self) -> Band {
        Band {
            value: self.mean(),
            stderr: self.std_dev() / libm::sqrt(self.count as f64),
        }
    }
}

/// Samples per Monte-Carlo chunk; chunk `k` of a run uses RNG stream `k`.
pub const J_MC_CHUNK: u64 = 1 << 16;
/// Weight of the uniform component of the sampling density.
const J_MC_UNIFORM: f64 = 0.1;
/// `6 ln 2 - 3 ln 3`, the integral of `1/(1+s)` over one region's `(a, s)`.
const J_MC_Z: f64 = 6.0 * LN_2 - 3.0 * 1.098_612_288_668_109_8;
/// Normalizer of the edge component `(1-t) / (x_m ρ)` on one region.
const J_MC_H: f64 = J_MC_Z / 2.0;

/// A point of the simplex from the mixture density
/// `α·6 + (1-α)/(3H) · (1-t)/(x_m ρ)`, where `m` is the largest coordinate,
/// `ρ` the sum of the other two and `t` the coordinate sum.
fn j_sample<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    if rng.random::<f64>() < J_MC_UNIFORM {
        let mut e: [f64; 3] = [rng.random(), rng.random(), rng.random()];
        e.sort_unstable_by(f64::total_cmp);
        return [e[0], e[1] - e[0], e[2] - e[1]];
    }
    // with u = ρa, v = ρ(1-a), ρ = ws the edge density is ∝ 1 - w(1+s) in
    // (a, s, w): (a, s) ∝ 1/(1+s) by rejection, then w(1+s) ∝ 2(1-·)
    loop {
        let a: f64 = rng.random();
        let s = 2.0 * rng.random::<f64>();
        if s * a.max(1.0 - a) > 1.0 || rng.random::<f64>() * (1.0 + s) > 1.0 {
            continue;
        }
        let w = (1.0 - libm::sqrt(1.0 - rng.random::<f64>())) / (1.0 + s);
        let rho = w * s;
        let (p, q) = (rho * a, rho * (1.0 - a));
        return match rng.random_range(0..3u32) {
            0 => [p, q, w],
            1 => [w, p, q],
            _ => [q, w, p],
        };
    }
}

/// `f/g` at a sampled point, arranged to stay finite on the edges.
fn j_weight(x: [f64; 3]) -> f64 {
    let m = if x[0] >= x[1] && x[0] >= x[2] {
        0
    } else if x[1] >= x[2] {
        1
    } else {
        2
    };
    let big = x[m];
    let rho = x[(m + 1) % 3] + x[(m + 2) % 3];
    let t = big + rho;
    if t >= 1.0 {
        return 0.0;
    }
    let q = x[0] * x[1] + x[0] * x[2] + x[1] * x[2];
    let br = big * rho;
    // f·x_m·ρ / (1-t), which tends to 1 on the edge
    let shape = if q > 0.0 { br / q } else { 1.0 };
    (1.0 - t) * shape / (6.0 * J_MC_UNIFORM * br + (1.0 - J_MC_UNIFORM) * (1.0 - t) / (3.0 * J_MC_H))
}

/// Weights of chunk `stream` of a Monte-Carlo run.
pub fn j_mc_chunk(seed: u64, stream: u64) -> Moments {
    let mut rng = stream_rng(seed, stream);
    let mut m = Moments::default();
    for _ in 0..J_MC_CHUNK {
        m.push(j_weight(j_sample(&mut rng)));
    }
    m
}

/// Chunks (after the pilot, stream 0) needed to reach `target_err`.
pub fn j_mc_chunks_needed(pilot: &Moments, target_err: f64) -> u64 {
    let r = pilot.std_dev() / target_err;
    let n = r * r * 1.1;
    (libm::ceil(n / J_MC_CHUNK as f64) as u64).max(1)
}

/// Monte-Carlo `J` on one thread. Streams `1..=k` are summed in order, so a
/// parallel run merging the same chunks by index gives identical bits.
pub fn integral_j_mc(seed: u64, target_err: f64) -> Result<Band, ConstantsError> {
    if !(target_err >= J_MC_FLOOR) {
        return Err(ConstantsError::TargetTooSmall {
            method: "monte-carlo",
            target: target_err,
            floor: J_MC_FLOOR,
        });
    }
    let pilot = j_mc_chunk(seed, 0);
    let mut total = Moments::default();
    for k in 1..=j_mc_chunks_needed(&pilot, target_err) {
        total.merge(&j_mc_chunk(seed, k));
    }
    Ok(total.band())
}

pub fn integral_j(method: JMethod, target_err: f64) -> Result<Band, ConstantsError> {
    match method {
        JMethod::Cubature => integral_j_cubature(target_err),
        JMethod::MonteCarlo { seed } => integral_j_mc(seed, target_err),
    }
}

/// `J` from the one-dimensional reduction left after integrating the
/// radial and height variables in closed form:
/// `3 ∫_{1/2}^1 ln((1+a)/(a(2-a))) / (1 - a + a²) da`.
pub fn integral_j_line() -> Result<Estimate, ConstantsError> {
    let f = |a: f64| 3.0 * libm::log((1.0 + a) / (a * (2.0 - a))) / (1.0 - a + a * a);
    Ok(quadrature::integrate(f, 0.5, 1.0, Tolerance::absolute(1e-14))?)
}

/// Both evaluations of `J` and their agreement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JCrossCheck {
    pub cubature: Band,
    pub monte_carlo: Band,
    /// `|J_cub - J_mc| / combined error`.
    pub z: f64,
}

pub fn cross_check_j(cubature: Band, monte_carlo: Band) -> Result<JCrossCheck, ConstantsError> {
    let combined = libm::hypot(cubature.stderr, monte_carlo.stderr);
    let z = (cubature.value - monte_carlo.value).abs() / combined;
    if !(z <= 3.0) {
        return Err(ConstantsError::MethodDisagreement {
            cubature: cubature.value,
            monte_carlo: monte_carlo.value,
            combined,
        });
    }
    Ok(JCrossCheck {
        cubature,
        monte_carlo,
        z,
    })
}

/// Lower bound on `J` for `1 + 2J - π²/6 > 0`.
pub fn j_positivity_threshold() -> f64 {
    (PI * PI / 6.0 - 1.0) / 2.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstantsReport {
    pub c0: Band,
    pub c1: Band,
    pub j: Band,
    pub c: Band,
    pub i_closed: f64,
    pub i_quad: f64,
    pub perimeter_factor: f64,
    pub sqrt_det: f64,
    pub notes: Vec<String>,
}

/// `c₀ = Σ|∂O_i|² / ((Σ|∂O_i|)² π √det Σ²)`, `c₁ = c₀/2` and
/// `c = c₀²(1 + 2J - π²/6)`, with first-order error bands from the
/// stderr of `Σ²` and of `J`.
pub fn theoretical_constants(
    table: &BilliardTable,
    sigma2: &DiffusionMatrix,
    j: Band,
) -> Result<ConstantsReport, ConstantsError> {
    let sqrt_det = sigma2.sqrt_det;
    if !(sqrt_det > 0.0) || !sqrt_det.is_finite() {
        return Err(ConstantsError::DegenerateMatrix { sqrt_det });
    }
    let factor = table.perimeter_factor();
    let c0 = factor / (PI * sqrt_det);
    let c0_err = c0 * sigma2.sqrt_det_stderr() / sqrt_det;
    let shape = 1.0 + 2.0 * j.value - PI * PI / 6.0;
    let c = c0 * c0 * shape;
    let c_err = libm::hypot(2.0 * c0 * shape * c0_err, 2.0 * c0 * c0 * j.stderr);
    let (i_quad, i_closed) = integral_i()?;

    let mut notes = Vec::new();
    notes.push(String::from(
        "obstacle law P(I_0 = i) taken proportional to perimeter",
    ));
    notes.push(alloc::format!("sigma2 method: {}", sigma2.method.as_str()));
    Ok(ConstantsReport {
        c0: Band {
            value: c0,
            stderr: c0_err,
        },
        c1: Band {
            value: c0 / 2.0,
            stderr: c0_err / 2.0,
        },
        j,
        c: Band {
            value: c,
            stderr: c_err,
        },
        i_closed,
        i_quad: i_quad.value,
        perimeter_factor: factor,
        sqrt_det,
        notes,
    })
}
