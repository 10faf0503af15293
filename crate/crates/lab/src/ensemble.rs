//! Parallel ensemble runs. Each trajectory is a fixed RNG stream and results
//! are reduced in stream order, so output does not depend on the pool size.

use lorentz_core::constants::{j_mc_chunk, j_mc_chunks_needed, ConstantsError, Moments, J_MC_FLOOR};
use lorentz_core::estimators::{estimate_sigma2_empirical, record_returns, ReturnCurve};
use lorentz_core::selfintersect::sweep_checkpoints;
use lorentz_core::walk::WalkSource;
use lorentz_core::{Band, DiffusionMatrix, EnsembleSummary, EstimatorError, VisitCounter};
use rayon::prelude::*;
use rayon::ThreadPool;

use crate::error::LabError;

pub fn pool(workers: usize) -> Result<ThreadPool, LabError> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build()?)
}

/// `V_n` statistics plus the endpoint displacements `S_n - S_0` at the last
/// checkpoint, one per trajectory in stream order.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleRun {
    pub summary: EnsembleSummary,
    pub final_n: u64,
    pub displacements: Vec<[i64; 2]>,
}

impl EnsembleRun {
    pub fn sigma2(&self) -> Result<DiffusionMatrix, EstimatorError> {
        estimate_sigma2_empirical(&self.displacements, self.final_n)
    }
}

/// Trajectory `i` of the ensemble is `source.spawn(seed, i)`.
pub fn run_ensemble<S: WalkSource>(
    pool: &ThreadPool,
    source: &S,
    trajectories: u64,
    checkpoints: &[u64],
    seed: u64,
    digest: String,
) -> Result<EnsembleRun, LabError> {
    if trajectories < 2 {
        return Err(LabError::Config("an ensemble needs at least 2 trajectories".into()));
    }
    let cap = checkpoints.last().copied().unwrap_or(0) as usize;
    let rows: Vec<_> = pool.install(|| {
        (0..trajectories)
            .into_par_iter()
            .map_init(
                || VisitCounter::with_capacity(cap),
                |counter, i| -> Result<_, EstimatorError> {
                    let mut walk = source.spawn(seed, i)?;
                    sweep_checkpoints(&mut walk, checkpoints, counter)
                },
            )
            .collect::<Result<Vec<_>, _>>()
    })?;
    let samples: Vec<Vec<u64>> = rows.iter().map(|r| r.iter().map(|c| c.v).collect()).collect();
    let displacements = rows.iter().map(|r| r[r.len() - 1].displacement).collect();
    Ok(EnsembleRun {
        summary: EnsembleSummary::from_samples(checkpoints, &samples, seed, digest)?,
        final_n: *checkpoints.last().unwrap(),
        displacements,
    })
}

/// Trajectories per work item of [`return_probability`].
const RETURN_BLOCK: u64 = 1024;

/// `p̂(k)` from `trajectories` walks `source.spawn(seed, i)`.
pub fn return_probability<S: WalkSource>(
    pool: &ThreadPool,
    source: &S,
    ks: &[u64],
    trajectories: u64,
    seed: u64,
) -> Result<ReturnCurve, LabError> {
    let blocks = trajectories.div_ceil(RETURN_BLOCK);
    // integer counts: any summation order gives the same totals
    let hits = pool.install(|| {
        (0..blocks)
            .into_par_iter()
            .map(|b| -> Result<Vec<u64>, EstimatorError> {
                let mut hits = vec![0u64; ks.len()];
                for i in b * RETURN_BLOCK..((b + 1) * RETURN_BLOCK).min(trajectories) {
                    record_returns(&mut source.spawn(seed, i)?, ks, &mut hits)?;
                }
                Ok(hits)
            })
            .try_reduce(
                || vec![0u64; ks.len()],
                |mut a, b| {
                    a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                    Ok(a)
                },
            )
    })?;
    Ok(ReturnCurve::from_counts(ks, &hits, trajectories)?)
}

/// Monte-Carlo `J` with chunks spread over the pool. Gives the same bits
/// as the single-threaded `integral_j_mc`.
pub fn integral_j_mc_parallel(pool: &ThreadPool, seed: u64, target_err: f64) -> Result<Band, LabError> {
    if !(target_err >= J_MC_FLOOR) {
        return Err(ConstantsError::TargetTooSmall {
            method: "monte-carlo",
            target: target_err,
            floor: J_MC_FLOOR,
        }
        .into());
    }
    let pilot = j_mc_chunk(seed, 0);
    let k = j_mc_chunks_needed(&pilot, target_err);
    let chunks: Vec<Moments> = pool.install(|| (1..=k).into_par_iter().map(|s| j_mc_chunk(seed, s)).collect());
    let mut total = Moments::default();
    for c in &chunks {
        total.merge(c);
    }
    Ok(total.band())
}
