//! Site-sequence sources and seeding.
//!
//! Estimators consume any [`WalkSource`]: the billiard, or the lazy lattice
//! walk whose diffusion matrix and return probabilities are known exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{Billiard, DynamicsError, Trajectory};
use crate::selfintersect::Site;

/// A stream of visited sites `(I_k, S_k)`, `k ≥ 1`.
pub trait SiteWalk {
    /// `(I_0, S_0)`; not part of the emitted sequence.
    fn origin(&self) -> Site;
    fn next_site(&mut self) -> Result<Site, DynamicsError>;
}

/// Factory of independent walks, one per `(seed, stream)` pair.
pub trait WalkSource: Sync {
    type Walk<'a>: SiteWalk
    where
        Self: 'a;

    fn spawn(&self, seed: u64, stream: u64) -> Result<Self::Walk<'_>, DynamicsError>;
}

/// RNG for trajectory `stream` of a run seeded with `seed`. Independent of
/// the order in which streams are created.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Mix a master seed with a purpose tag (SplitMix64 finalizer), so distinct
/// estimators draw from unrelated seeds.
pub fn derive_seed(master: u64, purpose: u64) -> u64 {
    let mut z = master ^ purpose.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl SiteWalk for Trajectory<'_> {
    fn origin(&self) -> Site {
        Trajectory::origin(self)
    }

    #[inline]
    fn next_site(&mut self) -> Result<Site, DynamicsError> {
        self.advance().map(|f| f.to.site())
    }
}

impl WalkSource for Billiard {
    type Walk<'a> = Trajectory<'a>;

    fn spawn(&self, seed: u64, stream: u64) -> Result<Trajectory<'_>, DynamicsError> {
        Trajectory::new(self, seed, stream)
    }
}

/// Lattice walk on `ℤ²` stepping `±e₁`, `±e₂` or holding, each with
/// probability 1/5. Its step covariance is `(2/5)·I` and steps are
/// independent, so `Σ² = (2/5)·I` exactly.
#[derive(Debug, Clone, Copy, Default)]
pub struct LazyLatticeWalk;

impl LazyLatticeWalk {
    pub const SIGMA2_DIAG: f64 = 0.4;
}

#[derive(Debug, Clone)]
pub struct LazyWalker {
    rng: ChaCha8Rng,
    cell: [i64; 2],
}

impl SiteWalk for LazyWalker {
    fn origin(&self) -> Site {
        Site::new(0, [0, 0])
    }

    #[inline]
    fn next_site(&mut self) -> Result<Site, DynamicsError> {
        match self.rng.random_range(0..5u32) {
            0 => self.cell[0] += 1,
            1 => self.cell[0] -= 1,
            2 => self.cell[1] += 1,
            3 => self.cell[1] -= 1,
            _ => {}
        }
        Ok(Site::new(0, self.cell))
    }
}

impl WalkSource for LazyLatticeWalk {
    type Walk<'a> = LazyWalker;

    fn spawn(&self, seed: u64, stream: u64) -> Result<LazyWalker, DynamicsError> {
        Ok(LazyWalker {
            rng: stream_rng(seed, stream),
            cell: [0, 0],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = stream_rng(1, 5).random();
        let b: u64 = stream_rng(1, 5).random();
        let c: u64 = stream_rng(1, 6).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
    }

    #[test]
    fn lazy_walk_moves_by_unit_steps() {
        let mut w = LazyLatticeWalk.spawn(3, 0).unwrap();
        let mut prev = [0i64, 0];
        let mut holds = 0;
        for _ in 0..10_000 {
            let s = w.next_site().unwrap();
            let d = (s.cell[0] - prev[0]).abs() + (s.cell[1] - prev[1]).abs();
            assert!(d <= 1);
            holds += usize::from(d == 0);
            prev = s.cell;
        }
        // hold probability 1/5
        assert!((1700..2300).contains(&holds), "{holds}");
    }
}
