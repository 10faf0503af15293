//! Self-intersection counting.
//!
//! `V_n` is the number of ordered pairs `(k, ℓ)`, `1 ≤ k, ℓ ≤ n`, whose
//! collisions hit the same obstacle copy. Equivalently it is the sum over
//! sites of the squared visit counts, which [`VisitCounter`] maintains in
//! O(1) per visit: a site seen `m` times before adds `2m + 1`.

use alloc::vec::Vec;

use hashbrown::HashMap;

use crate::dynamics::DynamicsError;
use crate::estimators::EstimatorError;
use crate::walk::SiteWalk;

const CELL_BITS: u32 = 28;
const CELL_BIAS: i64 = 1 << (CELL_BITS - 1);
const CELL_MASK: u64 = (1 << CELL_BITS) - 1;

/// An obstacle copy: 0-based obstacle index and lattice cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Site {
    pub obstacle: usize,
    pub cell: [i64; 2],
}

impl Site {
    pub const fn new(obstacle: usize, cell: [i64; 2]) -> Self {
        Self { obstacle, cell }
    }

    /// Pack into one word: 8 bits of obstacle index, 28 bits per cell
    /// coordinate. Cells must satisfy `-2²⁷ ≤ x, y < 2²⁷`.
    pub fn key(&self) -> Result<SiteKey, DynamicsError> {
        let in_range = |c: i64| (-CELL_BIAS..CELL_BIAS).contains(&c);
        if !(in_range(self.cell[0]) && in_range(self.cell[1])) || self.obstacle > 0xff {
            return Err(DynamicsError::SiteOutOfRange { cell: self.cell });
        }
        let x = (self.cell[0] + CELL_BIAS) as u64;
        let y = (self.cell[1] + CELL_BIAS) as u64;
        Ok(SiteKey(
            ((self.obstacle as u64) << (2 * CELL_BITS)) | (x << CELL_BITS) | y,
        ))
    }
}

/// Packed [`Site`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SiteKey(pub u64);

impl SiteKey {
    pub fn site(self) -> Site {
        let unbias = |bits: u64| (bits & CELL_MASK) as i64 - CELL_BIAS;
        Site {
            obstacle: (self.0 >> (2 * CELL_BITS)) as usize,
            cell: [unbias(self.0 >> CELL_BITS), unbias(self.0)],
        }
    }
}

/// Streaming `V_n`.
#[derive(Debug, Clone, Default)]
pub struct VisitCounter {
    counts: HashMap<SiteKey, u32>,
    v: u64,
    n: u64,
}

impl VisitCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Self {
            counts: HashMap::with_capacity(n),
            ..Self::default()
        }
    }

    /// Record one visit and return the updated `V`.
    #[inline]
    pub fn visit(&mut self, site: SiteKey) -> u64 {
        let m = self.counts.entry(site).or_insert(0);
        self.v += 2 * u64::from(*m) + 1;
        *m += 1;
        self.n += 1;
        self.v
    }

    pub fn value(&self) -> u64 {
        self.v
    }

    pub fn visits(&self) -> u64 {
        self.n
    }

    pub fn distinct_sites(&self) -> usize {
        self.counts.len()
    }

    pub fn count(&self, site: SiteKey) -> u32 {
        self.counts.get(&site).copied().unwrap_or(0)
    }

    /// Forget all visits, keeping the allocation.
    pub fn clear(&mut self) {
        self.counts.clear();
        self.v = 0;
        self.n = 0;
    }
}

/// `Σ_{k,ℓ} 1{site_k = site_ℓ}` by the literal double loop.
pub fn brute_force_v<S: PartialEq>(sites: &[S]) -> u64 {
    let mut v = 0;
    for a in sites {
        for b in sites {
            if a == b {
                v += 1;
            }
        }
    }
    v
}

/// State of a walk at one checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckpointRecord {
    pub n: u64,
    pub v: u64,
    /// `S_n - S_0`.
    pub displacement: [i64; 2],
}

pub(crate) fn check_checkpoints(checkpoints: &[u64]) -> Result<(), EstimatorError> {
    if checkpoints.is_empty() {
        return Err(EstimatorError::InvalidCheckpoints("no checkpoints"));
    }
    if checkpoints[0] == 0 {
        return Err(EstimatorError::InvalidCheckpoints("checkpoints start at 1"));
    }
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(EstimatorError::InvalidCheckpoints(
            "checkpoints must be strictly increasing",
        ));
    }
    Ok(())
}

/// Run `walk` to the last checkpoint, recording `V_n` and the displacement
/// at each one. Uses `counter` as scratch; it is cleared first.
pub fn sweep_checkpoints<W: SiteWalk>(
    walk: &mut W,
    checkpoints: &[u64],
    counter: &mut VisitCounter,
) -> Result<Vec<CheckpointRecord>, EstimatorError> {
    check_checkpoints(checkpoints)?;
    counter.clear();
    let origin = walk.origin();
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut next = checkpoints.iter().copied().peekable();
    let mut n = 0u64;
    while let Some(&target) = next.peek() {
        let site = walk.next_site()?;
        n += 1;
        let v = counter.visit(site.key()?);
        if n == target {
            next.next();
            out.push(CheckpointRecord {
                n,
                v,
                displacement: [site.cell[0] - origin.cell[0], site.cell[1] - origin.cell[1]],
            });
        }
    }
    Ok(out)
}

/// `(n, V_n)` at each checkpoint of a single walk.
pub fn v_series<W: SiteWalk>(
    walk: &mut W,
    checkpoints: &[u64],
) -> Result<Vec<(u64, u64)>, EstimatorError> {
    let cap = checkpoints.last().copied().unwrap_or(0) as usize;
    let mut counter = VisitCounter::with_capacity(cap);
    Ok(sweep_checkpoints(walk, checkpoints, &mut counter)?
        .into_iter()
        .map(|r| (r.n, r.v))
        .collect())
}
