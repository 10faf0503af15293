//! Ensemble statistics: moments of `V_n`, the diffusion matrix, return
//! probabilities and the asymptotic-constant fits.
//!
//! Everything here is a pure reduction over per-trajectory results; the
//! parallel drivers that produce those results live outside this crate.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::dynamics::DynamicsError;
use crate::selfintersect::check_checkpoints;
use crate::walk::SiteWalk;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimatorError {
    #[error("invalid checkpoints: {0}")]
    InvalidCheckpoints(&'static str),
    #[error("insufficient data: {0}")]
    InsufficientData(&'static str),
    #[error("diffusion matrix estimate is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    DegenerateMatrix { min_eigenvalue: f64 },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

pub type Matrix2 = [[f64; 2]; 2];

/// Mean and unbiased variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, if xs.len() > 1 { ss / (n - 1.0) } else { 0.0 })
}

/// Empirical moments of `V_n` at each checkpoint over `M` trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSummary {
    pub checkpoints: Vec<u64>,
    pub mean_v: Vec<f64>,
    pub var_v: Vec<f64>,
    pub stderr_mean: Vec<f64>,
    pub stderr_var: Vec<f64>,
    pub trajectories: usize,
    pub seed: u64,
    pub table_digest: String,
}

impl EnsembleSummary {
    /// `samples[m][c]` is `V` of trajectory `m` at checkpoint `c`, with
    /// trajectories in stream order (batches are contiguous index ranges).
    pub fn from_samples(
        checkpoints: &[u64],
        samples: &[Vec<u64>],
        seed: u64,
        table_digest: String,
    ) -> Result<Self, EstimatorError> {
        check_checkpoints(checkpoints)?;
        let m = samples.len();
        if m < 2 {
            return Err(EstimatorError::InsufficientData("need at least 2 trajectories"));
        }
        if samples.iter().any(|row| row.len() != checkpoints.len()) {
            return Err(EstimatorError::InsufficientData("ragged sample rows"));
        }
        let batches = libm::sqrt(m as f64) as usize;
        let mut out = Self {
            checkpoints: checkpoints.to_vec(),
            mean_v: Vec::with_capacity(checkpoints.len()),
            var_v: Vec::with_capacity(checkpoints.len()),
            stderr_mean: Vec::with_capacity(checkpoints.len()),
            stderr_var: Vec::with_capacity(checkpoints.len()),
            trajectories: m,
            seed,
            table_digest,
        };
        let mut column = vec![0.0; m];
        for c in 0..checkpoints.len() {
            for (x, row) in column.iter_mut().zip(samples) {
                *x = row[c] as f64;
            }
            let (mean, var) = mean_var(&column);
            out.mean_v.push(mean);
            out.var_v.push(var);
            out.stderr_mean.push(libm::sqrt(var / m as f64));
            out.stderr_var.push(batch_stderr_of_variance(&column, batches, var));
        }
        Ok(out)
    }
}

/// Standard error of the sample variance from `batches` contiguous batch
/// variances; falls back to the Gaussian formula below two usable batches.
fn batch_stderr_of_variance(xs: &[f64], batches: usize, var: f64) -> f64 {
    let m = xs.len();
    if batches < 2 || m / batches < 2 {
        return var * libm::sqrt(2.0 / (m as f64 - 1.0));
    }
    let per_batch: Vec<f64> = (0..batches)
        .map(|b| mean_var(&xs[b * m / batches..(b + 1) * m / batches]).1)
        .collect();
    let (_, spread) = mean_var(&per_batch);
    libm::sqrt(spread / batches as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sigma2Method {
    Empirical,
    GreenKubo,
    /// Supplied by the caller.
    Given,
}

impl Sigma2Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Sigma2Method::Empirical => "empirical",
            Sigma2Method::GreenKubo => "green-kubo",
            Sigma2Method::Given => "given",
        }
    }
}

/// Asymptotic covariance `Σ²` of `S_n / √n`, per collision.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionMatrix {
    pub sigma2: Matrix2,
    pub sqrt_det: f64,
    pub method: Sigma2Method,
    pub stderr: Matrix2,
}

impl DiffusionMatrix {
    /// Symmetrizes `sigma2` and checks positive definiteness.
    pub fn new(sigma2: Matrix2, stderr: Matrix2, method: Sigma2Method) -> Result<Self, EstimatorError> {
        let off = 0.5 * (sigma2[0][1] + sigma2[1][0]);
        let sigma2 = [[sigma2[0][0], off], [off, sigma2[1][1]]];
        let [lo, _] = eigenvalues(&sigma2);
        if !(lo > 0.0) {
            return Err(EstimatorError::DegenerateMatrix { min_eigenvalue: lo });
        }
        let det = sigma2[0][0] * sigma2[1][1] - off * off;
        Ok(Self {
            sigma2,
            sqrt_det: libm::sqrt(det),
            method,
            stderr,
        })
    }

    pub fn given(sigma2: Matrix2) -> Result<Self, EstimatorError> {
        Self::new(sigma2, [[0.0; 2]; 2], Sigma2Method::Given)
    }

    pub fn eigenvalues(&self) -> [f64; 2] {
        eigenvalues(&self.sigma2)
    }

    /// First-order standard error of `√det Σ²`, treating the three distinct
    /// entries as independent.
    pub fn sqrt_det_stderr(&self) -> f64 {
        let [[a, b], [_, d]] = self.sigma2;
        let s = self.sqrt_det;
        let ga = d / (2.0 * s) * self.stderr[0][0];
        let gd = a / (2.0 * s) * self.stderr[1][1];
        let gb = b / s * self.stderr[0][1];
        libm::sqrt(ga * ga + gd * gd + gb * gb)
    }

    /// Exchange the two axes.
    pub fn transposed_axes(&self) -> Self {
        let swap = |m: &Matrix2| [[m[1][1], m[1][0]], [m[0][1], m[0][0]]];
        Self {
            sigma2: swap(&self.sigma2),
            stderr: swap(&self.stderr),
            ..self.clone()
        }
    }
}

/// Ascending eigenvalues of a symmetric 2×2 matrix.
pub fn eigenvalues(m: &Matrix2) -> [f64; 2] {
    let half_tr = 0.5 * (m[0][0] + m[1][1]);
    let half_diff = 0.5 * (m[0][0] - m[1][1]);
    let r = libm::hypot(half_diff, m[0][1]);
    [half_tr - r, half_tr + r]
}

/// `Σ̂² = (1/M) Σ (S_n - S̄_n)(S_n - S̄_n)ᵀ / n` from the displacements of
/// `M ≥ 100` independent trajectories at step `n`, with jackknife errors.
pub fn estimate_sigma2_empirical(
    displacements: &[[i64; 2]],
    n: u64,
) -> Result<DiffusionMatrix, EstimatorError> {
    let m = displacements.len();
    if m < 100 {
        return Err(EstimatorError::InsufficientData("need at least 100 trajectories"));
    }
    if n == 0 {
        return Err(EstimatorError::InsufficientData("step count must be positive"));
    }
    let mf = m as f64;
    let nf = n as f64;
    // centre on the full-sample mean first; the leave-one-out formulas below
    // then operate on small numbers
    let raw_mean = |a: usize| displacements.iter().map(|s| s[a] as f64).sum::<f64>() / mf;
    let mu = [raw_mean(0), raw_mean(1)];
    let pts: Vec<[f64; 2]> = displacements
        .iter()
        .map(|s| [s[0] as f64 - mu[0], s[1] as f64 - mu[1]])
        .collect();
    let mut s1 = [0.0; 2];
    let mut s2 = [0.0; 3];
    for p in &pts {
        s1[0] += p[0];
        s1[1] += p[1];
        s2[0] += p[0] * p[0];
        s2[1] += p[1] * p[1];
        s2[2] += p[0] * p[1];
    }
    let cov = |s1: [f64; 2], s2: [f64; 3], count: f64| -> [f64; 3] {
        let mx = s1[0] / count;
        let my = s1[1] / count;
        [
            (s2[0] / count - mx * mx) / nf,
            (s2[1] / count - my * my) / nf,
            (s2[2] / count - mx * my) / nf,
        ]
    };
    let full = cov(s1, s2, mf);
    let mut loo_sum = [0.0; 3];
    let mut loo_sq = [0.0; 3];
    for p in &pts {
        let est = cov(
            [s1[0] - p[0], s1[1] - p[1]],
            [s2[0] - p[0] * p[0], s2[1] - p[1] * p[1], s2[2] - p[0] * p[1]],
            mf - 1.0,
        );
        for k in 0..3 {
            loo_sum[k] += est[k];
            loo_sq[k] += est[k] * est[k];
        }
    }
    let mut se = [0.0; 3];
    for k in 0..3 {
        let mean = loo_sum[k] / mf;
        let ss = (loo_sq[k] - mf * mean * mean).max(0.0);
        se[k] = libm::sqrt((mf - 1.0) / mf * ss);
    }
    DiffusionMatrix::new(
        [[full[0], full[2]], [full[2], full[1]]],
        [[se[0], se[2]], [se[2], se[1]]],
        Sigma2Method::Empirical,
    )
}

/// Streaming lag sums `Σ_k ξ_k ξ_{k+j}ᵀ`, `j = 0..=L`, in exact integer
/// arithmetic.
#[derive(Debug, Clone)]
struct LagSums {
    ring: Vec<[i64; 2]>,
    head: usize,
    filled: usize,
    count: u64,
    sum: [i64; 2],
    cross: Vec<[[i64; 2]; 2]>,
    pairs: Vec<u64>,
}

impl LagSums {
    fn new(max_lag: usize) -> Self {
        Self {
            ring: vec![[0; 2]; max_lag + 1],
            head: 0,
            filled: 0,
            count: 0,
            sum: [0; 2],
            cross: vec![[[0; 2]; 2]; max_lag + 1],
            pairs: vec![0; max_lag + 1],
        }
    }

    #[inline]
    fn push(&mut self, xi: [i64; 2]) {
        let len = self.ring.len();
        self.ring[self.head] = xi;
        self.filled = (self.filled + 1).min(len);
        for j in 0..self.filled {
            let earlier = self.ring[(self.head + len - j) % len];
            let c = &mut self.cross[j];
            c[0][0] += earlier[0] * xi[0];
            c[0][1] += earlier[0] * xi[1];
            c[1][0] += earlier[1] * xi[0];
            c[1][1] += earlier[1] * xi[1];
            self.pairs[j] += 1;
        }
        self.head = (self.head + 1) % len;
        self.count += 1;
        self.sum[0] += xi[0];
        self.sum[1] += xi[1];
    }

    fn merge(&mut self, other: &Self) {
        self.count += other.count;
        for a in 0..2 {
            self.sum[a] += other.sum[a];
        }
        for (c, o) in self.cross.iter_mut().zip(&other.cross) {
            for a in 0..2 {
                for b in 0..2 {
                    c[a][b] += o[a][b];
                }
            }
        }
        for (p, o) in self.pairs.iter_mut().zip(&other.pairs) {
            *p += o;
        }
    }

    /// Stationary autocovariances `C(j)`.
    fn autocov(&self) -> Vec<Matrix2> {
        let n = self.count as f64;
        let mu = [self.sum[0] as f64 / n, self.sum[1] as f64 / n];
        self.cross
            .iter()
            .zip(&self.pairs)
            .map(|(c, &p)| {
                let p = p as f64;
                let mut out = [[0.0; 2]; 2];
                for a in 0..2 {
                    for b in 0..2 {
                        out[a][b] = c[a][b] as f64 / p - mu[a] * mu[b];
                    }
                }
                out
            })
            .collect()
    }
}

fn green_kubo_sum(autocov: &[Matrix2]) -> Matrix2 {
    let mut s = autocov[0];
    for c in &autocov[1..] {
        for a in 0..2 {
            for b in 0..2 {
                s[a][b] += c[a][b] + c[b][a];
            }
        }
    }
    s
}

fn frobenius(m: &Matrix2) -> f64 {
    libm::sqrt(m.iter().flatten().map(|x| x * x).sum())
}

/// Outcome of a truncated Green–Kubo sum.
#[derive(Debug, Clone, PartialEq)]
pub struct GreenKubo {
    pub matrix: DiffusionMatrix,
    /// `C(j)` for `j = 0..=L`.
    pub autocov: Vec<Matrix2>,
    /// `‖C(L)‖ / ‖C(0)‖`.
    pub tail_ratio: f64,
    /// Set when `tail_ratio > 1e-3`: the cutoff is likely too small.
    pub cutoff_warning: bool,
}

/// `Σ² = C(0) + Σ_{j=1}^{L} (C(j) + C(j)ᵀ)` over the displacement steps
/// `ξ_k = S_{k+1} - S_k` of one long walk after `burn_in` steps. The walk
/// is cut into `batches` consecutive segments; their spread gives the
/// standard error.
pub fn estimate_sigma2_greenkubo<W: SiteWalk>(
    walk: &mut W,
    burn_in: u64,
    max_lag: usize,
    steps: u64,
    batches: usize,
) -> Result<GreenKubo, EstimatorError> {
    if batches < 2 {
        return Err(EstimatorError::InsufficientData("need at least 2 batches"));
    }
    if steps / (batches as u64) <= 2 * max_lag as u64 {
        return Err(EstimatorError::InsufficientData("batches shorter than twice the lag cutoff"));
    }
    let mut prev = walk.origin().cell;
    for _ in 0..burn_in {
        prev = walk.next_site()?.cell;
    }
    let mut per_batch = Vec::with_capacity(batches);
    for b in 0..batches as u64 {
        let len = (b + 1) * steps / batches as u64 - b * steps / batches as u64;
        let mut acc = LagSums::new(max_lag);
        for _ in 0..len {
            let cell = walk.next_site()?.cell;
            acc.push([cell[0] - prev[0], cell[1] - prev[1]]);
            prev = cell;
        }
        per_batch.push(acc);
    }
    let mut pooled = LagSums::new(max_lag);
    for acc in &per_batch {
        pooled.merge(acc);
    }
    let autocov = pooled.autocov();
    let sigma2 = green_kubo_sum(&autocov);

    let estimates: Vec<Matrix2> = per_batch.iter().map(|a| green_kubo_sum(&a.autocov())).collect();
    let mut stderr = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            let xs: Vec<f64> = estimates.iter().map(|m| m[a][b]).collect();
            stderr[a][b] = libm::sqrt(mean_var(&xs).1 / batches as f64);
        }
    }
    let tail_ratio = frobenius(&autocov[max_lag]) / frobenius(&autocov[0]);
    Ok(GreenKubo {
        matrix: DiffusionMatrix::new(sigma2, stderr, Sigma2Method::GreenKubo)?,
        autocov,
        tail_ratio,
        cutoff_warning: tail_ratio > 1e-3,
    })
}

/// Add 1 to `hits[i]` when the walk is back at its initial site at step
/// `ks[i]`.
pub fn record_returns<W: SiteWalk>(
    walk: &mut W,
    ks: &[u64],
    hits: &mut [u64],
) -> Result<(), EstimatorError> {
    let origin = walk.origin();
    let mut n = 0u64;
    for (&k, h) in ks.iter().zip(hits.iter_mut()) {
        let mut site = None;
        while n < k {
            site = Some(walk.next_site()?);
            n += 1;
        }
        if site == Some(origin) {
            *h += 1;
        }
    }
    Ok(())
}

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval `(low, high)` for `hits` successes in `trials`.
pub fn wilson_interval(hits: u64, trials: u64, z: f64) -> (f64, f64) {
    let n = trials as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * libm::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
    let lo = if hits == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if hits == trials { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// Estimated `P((S_k, I_k) = (S_0, I_0))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnCurve {
    pub ks: Vec<u64>,
    pub hits: Vec<u64>,
    pub trials: u64,
    pub p_hat: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
    pub ci_halfwidth: Vec<f64>,
}

impl ReturnCurve {
    pub fn from_counts(ks: &[u64], hits: &[u64], trials: u64) -> Result<Self, EstimatorError> {
        check_checkpoints(ks)?;
        if trials == 0 || hits.len() != ks.len() {
            return Err(EstimatorError::InsufficientData("no trials or mismatched counts"));
        }
        let mut curve = Self {
            ks: ks.to_vec(),
            hits: hits.to_vec(),
            trials,
            p_hat: Vec::new(),
            ci_low: Vec::new(),
            ci_high: Vec::new(),
            ci_halfwidth: Vec::new(),
        };
        for &h in hits {
            let (lo, hi) = wilson_interval(h, trials, Z95);
            curve.p_hat.push(h as f64 / trials as f64);
            curve.ci_low.push(lo);
            curve.ci_high.push(hi);
            curve.ci_halfwidth.push(0.5 * (hi - lo));
        }
        Ok(curve)
    }

    /// `k·p̂(k)` for the lags in `[lo, hi]`.
    pub fn scaled(&self, lo: u64, hi: u64) -> Vec<(u64, f64)> {
        self.ks
            .iter()
            .zip(&self.p_hat)
            .filter(|(&k, _)| (lo..=hi).contains(&k))
            .map(|(&k, &p)| (k, k as f64 * p))
            .collect()
    }

    /// `max / min` of `k·p̂(k)` over `[lo, hi]`.
    pub fn flatness(&self, lo: u64, hi: u64) -> Option<f64> {
        let s = self.scaled(lo, hi);
        let max = s.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
        let min = s.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
        (!s.is_empty() && min > 0.0).then(|| max / min)
    }

    /// Inverse-variance weighted mean of `k·p̂(k)` over `[lo, hi]`: the
    /// implied coefficient of the `1/k` return law.
    pub fn implied_c1(&self, lo: u64, hi: u64) -> Option<Band> {
        let n = self.trials as f64;
        let pts: Vec<(f64, f64)> = self
            .ks
            .iter()
            .zip(&self.p_hat)
            .filter(|(&k, &p)| (lo..=hi).contains(&k) && p > 0.0)
            .map(|(&k, &p)| {
                let k = k as f64;
                (k * p, k * libm::sqrt(p * (1.0 - p) / n))
            })
            .collect();
        weighted_mean(&pts)
    }
}

/// A value with a one-standard-error band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub value: f64,
    pub stderr: f64,
}

impl Band {
    pub fn relative_error(&self, reference: f64) -> f64 {
        (self.value - reference).abs() / reference.abs()
    }
}

/// Inverse-variance weighted mean of `(value, stderr)` pairs; equal weights
/// when any stderr is zero.
pub fn weighted_mean(pts: &[(f64, f64)]) -> Option<Band> {
    if pts.is_empty() {
        return None;
    }
    if pts.iter().any(|p| !(p.1 > 0.0)) {
        let n = pts.len() as f64;
        let value = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let se = libm::sqrt(pts.iter().map(|p| p.1 * p.1).sum::<f64>()) / n;
        return Some(Band { value, stderr: se });
    }
    let wsum: f64 = pts.iter().map(|p| 1.0 / (p.1 * p.1)).sum();
    let value = pts.iter().map(|p| p.0 / (p.1 * p.1)).sum::<f64>() / wsum;
    Some(Band {
        value,
        stderr: libm::sqrt(1.0 / wsum),
    })
}

/// Empirical asymptotic constants.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantsFit {
    /// `E[V_n] / (n log n)` over the top decade.
    pub c0: Band,
    /// `Var(V_n) / n²` over the top decade.
    pub c: Band,
    /// Checkpoints used for the two averages.
    pub top_decade: Vec<u64>,
    /// `Var(V_n) / n²` at every checkpoint.
    pub variance_trend: Vec<(u64, f64)>,
    /// The trend is strictly monotone over all checkpoints.
    pub monotone_drift: bool,
}

pub fn fit_constants(summary: &EnsembleSummary) -> Result<ConstantsFit, EstimatorError> {
    let cps = &summary.checkpoints;
    if cps.len() < 4 {
        return Err(EstimatorError::InsufficientData("need at least 4 checkpoints"));
    }
    let (first, last) = (cps[0] as f64, cps[cps.len() - 1] as f64);
    if last / first < 100.0 || first < 2.0 {
        return Err(EstimatorError::InsufficientData("checkpoints must span two decades above n = 1"));
    }
    let top: Vec<usize> = (0..cps.len()).filter(|&i| cps[i] as f64 >= last / 10.0).collect();
    let mean_pts: Vec<(f64, f64)> = top
        .iter()
        .map(|&i| {
            let n = cps[i] as f64;
            let scale = n * libm::log(n);
            (summary.mean_v[i] / scale, summary.stderr_mean[i] / scale)
        })
        .collect();
    let var_pts: Vec<(f64, f64)> = top
        .iter()
        .map(|&i| {
            let n2 = (cps[i] as f64) * (cps[i] as f64);
            (summary.var_v[i] / n2, summary.stderr_var[i] / n2)
        })
        .collect();
    let variance_trend: Vec<(u64, f64)> = cps
        .iter()
        .zip(&summary.var_v)
        .map(|(&n, &v)| (n, v / ((n as f64) * (n as f64))))
        .collect();
    let up = variance_trend.windows(2).all(|w| w[1].1 > w[0].1);
    let down = variance_trend.windows(2).all(|w| w[1].1 < w[0].1);
    Ok(ConstantsFit {
        c0: weighted_mean(&mean_pts).expect("top decade is nonempty"),
        c: weighted_mean(&var_pts).expect("top decade is nonempty"),
        top_decade: top.iter().map(|&i| cps[i]).collect(),
        variance_trend,
        monotone_drift: up || down,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn planted(checkpoints: &[u64], mean: impl Fn(f64) -> f64, var: impl Fn(f64) -> f64) -> EnsembleSummary {
        EnsembleSummary {
            checkpoints: checkpoints.to_vec(),
            mean_v: checkpoints.iter().map(|&n| mean(n as f64)).collect(),
            var_v: checkpoints.iter().map(|&n| var(n as f64)).collect(),
            stderr_mean: vec![0.0; checkpoints.len()],
            stderr_var: vec![0.0; checkpoints.len()],
            trajectories: 100,
            seed: 0,
            table_digest: "test".to_string(),
        }
    }

    #[test]
    fn fit_recovers_planted_constants() {
        let cps = [100, 1000, 10_000, 20_000, 50_000, 100_000];
        let s = planted(&cps, |n| 3.0 * n * libm::log(n), |n| 7.0 * n * n);
        let fit = fit_constants(&s).unwrap();
        assert!((fit.c0.value - 3.0).abs() < 1e-12);
        assert!((fit.c.value - 7.0).abs() < 1e-12);
        assert_eq!(fit.top_decade, vec![10_000, 20_000, 50_000, 100_000]);
        assert!(!fit.monotone_drift);
    }

    #[test]
    fn fit_flags_drift_and_rejects_short_ranges() {
        let cps = [10, 100, 1000, 10_000];
        let s = planted(&cps, |n| n, |n| n * n * (1.0 + 1.0 / n));
        assert!(fit_constants(&s).unwrap().monotone_drift);
        let short = planted(&[10, 20, 40, 80], |n| n, |n| n);
        assert!(matches!(fit_constants(&short), Err(EstimatorError::InsufficientData(_))));
        let few = planted(&[10, 100, 10_000], |n| n, |n| n);
        assert!(fit_constants(&few).is_err());
    }

    #[test]
    fn identical_trajectories_have_zero_variance() {
        let rows = vec![vec![1, 5, 30]; 2];
        let s = EnsembleSummary::from_samples(&[1, 2, 5], &rows, 0, "x".to_string()).unwrap();
        assert_eq!(s.var_v, vec![0.0; 3]);
        assert_eq!(s.mean_v, vec![1.0, 5.0, 30.0]);
    }

    #[test]
    fn summary_moments() {
        // a permutation of 0..16, so the contiguous batches differ
        let rows: Vec<Vec<u64>> = (0..16u64).map(|i| vec![1, (i * 7) % 16]).collect();
        let s = EnsembleSummary::from_samples(&[1, 4], &rows, 0, String::new()).unwrap();
        assert_eq!(s.mean_v[1], 7.5);
        // unbiased variance of 0..16
        assert!((s.var_v[1] - 22.666_666_666_666_668).abs() < 1e-12);
        assert!((s.stderr_mean[1] - libm::sqrt(22.666_666_666_666_668 / 16.0)).abs() < 1e-12);
        assert!(s.stderr_var[1] > 0.0);
    }

    #[test]
    fn constant_displacements_are_degenerate() {
        let err = estimate_sigma2_empirical(&[[0, 0]; 200], 10).unwrap_err();
        assert!(matches!(err, EstimatorError::DegenerateMatrix { .. }));
        assert!(matches!(
            estimate_sigma2_empirical(&[[1, 0]; 50], 10),
            Err(EstimatorError::InsufficientData(_))
        ));
    }

    #[test]
    fn empirical_sigma2_matches_direct_formula() {
        // a fixed spread of points, checked against the textbook formula
        let pts: Vec<[i64; 2]> = (0..120).map(|i| [(i % 7) - 3, (i % 5) * 2 - (i % 3)]).collect();
        let d = estimate_sigma2_empirical(&pts, 4).unwrap();
        let m = pts.len() as f64;
        let mx = pts.iter().map(|p| p[0] as f64).sum::<f64>() / m;
        let my = pts.iter().map(|p| p[1] as f64).sum::<f64>() / m;
        let sxy = pts.iter().map(|p| (p[0] as f64 - mx) * (p[1] as f64 - my)).sum::<f64>() / m / 4.0;
        let sxx = pts.iter().map(|p| (p[0] as f64 - mx).powi(2)).sum::<f64>() / m / 4.0;
        assert!((d.sigma2[0][1] - sxy).abs() < 1e-12);
        assert!((d.sigma2[0][0] - sxx).abs() < 1e-12);
        assert!(d.stderr[0][0] > 0.0);
        let swapped: Vec<[i64; 2]> = pts.iter().map(|p| [p[1], p[0]]).collect();
        let t = estimate_sigma2_empirical(&swapped, 4).unwrap();
        let tt = d.transposed_axes();
        for a in 0..2 {
            for b in 0..2 {
                assert!((t.sigma2[a][b] - tt.sigma2[a][b]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn wilson_interval_contains_estimate() {
        let (lo, hi) = wilson_interval(30, 1000, Z95);
        assert!(lo < 0.03 && 0.03 < hi);
        let (lo0, hi0) = wilson_interval(0, 100, Z95);
        assert_eq!(lo0, 0.0);
        assert!(hi0 > 0.0 && hi0 < 0.05);
    }

    #[test]
    fn lag_sums_match_direct_autocovariance() {
        let xi: Vec<[i64; 2]> = (0..50i64).map(|i| [(i * 7) % 5 - 2, (i * 3) % 4 - 1]).collect();
        let mut acc = LagSums::new(3);
        for &x in &xi {
            acc.push(x);
        }
        let c = acc.autocov();
        let n = xi.len() as f64;
        let mu0 = xi.iter().map(|x| x[0] as f64).sum::<f64>() / n;
        let mu1 = xi.iter().map(|x| x[1] as f64).sum::<f64>() / n;
        for j in 0..=3 {
            let pairs = (xi.len() - j) as f64;
            let direct = (0..xi.len() - j).map(|k| (xi[k][0] * xi[k + j][1]) as f64).sum::<f64>() / pairs
                - mu0 * mu1;
            assert!((c[j][0][1] - direct).abs() < 1e-12);
        }
    }
}
