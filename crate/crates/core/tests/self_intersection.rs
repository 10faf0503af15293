use lorentz_core::selfintersect::{brute_force_v, sweep_checkpoints, v_series};
use lorentz_core::walk::{stream_rng, SiteWalk, WalkSource};
use lorentz_core::{Billiard, BilliardTable, DynamicsError, HorizonMode, Site, VisitCounter};
use proptest::prelude::*;
use rand::Rng;

fn canonical() -> Billiard {
    Billiard::new(BilliardTable::canonical(), HorizonMode::Strict).unwrap()
}

fn streamed_v(sites: &[Site]) -> Vec<u64> {
    let mut counter = VisitCounter::new();
    sites.iter().map(|s| counter.visit(s.key().unwrap())).collect()
}

#[test]
fn streamed_count_matches_double_loop_on_billiard_trajectories() {
    let b = canonical();
    for stream in 0..100 {
        let mut walk = b.spawn(31, stream).unwrap();
        let sites: Vec<Site> = (0..2000).map(|_| walk.next_site().unwrap()).collect();
        let streamed = streamed_v(&sites);
        for n in [1, 2, 17, 500, 1999, 2000] {
            assert_eq!(streamed[n - 1], brute_force_v(&sites[..n]), "stream {stream}, n {n}");
        }
    }
}

#[test]
fn adversarial_streams() {
    let same = vec![Site::new(1, [-5, 7]); 2000];
    let distinct: Vec<Site> = (0..2000).map(|i| Site::new(i % 2, [i as i64, -(i as i64)])).collect();
    let periodic: Vec<Site> = (0..2000).map(|i| Site::new(0, [(i % 7) as i64, 0])).collect();
    // same cell, different obstacles are different sites
    let split: Vec<Site> = (0..2000).map(|i| Site::new(i % 3, [0, 0])).collect();
    // cells at the edge of the packed range
    let edge: Vec<Site> = (0..2000)
        .map(|i| Site::new(0, [if i % 2 == 0 { -(1 << 27) } else { (1 << 27) - 1 }, 0]))
        .collect();
    for sites in [&same, &distinct, &periodic, &split, &edge] {
        let streamed = streamed_v(sites);
        for n in [1, 10, 999, 2000] {
            assert_eq!(streamed[n - 1], brute_force_v(&sites[..n]));
        }
    }
    assert_eq!(*streamed_v(&same).last().unwrap(), 2000 * 2000);
    assert_eq!(*streamed_v(&distinct).last().unwrap(), 2000);
}

#[test]
fn counter_memory_stays_below_visit_count() {
    let b = canonical();
    let mut walk = b.spawn(3, 0).unwrap();
    let mut counter = VisitCounter::new();
    for n in 1..=20_000u64 {
        counter.visit(walk.next_site().unwrap().key().unwrap());
        assert!(counter.distinct_sites() as u64 <= n);
    }
    assert_eq!(counter.visits(), 20_000);
}

#[test]
fn v_series_agrees_with_checkpoint_sweep_and_is_monotone() {
    let b = canonical();
    let checkpoints: Vec<u64> = (0..12).map(|k| 1 << k).collect();
    let series = v_series(&mut b.spawn(5, 2).unwrap(), &checkpoints).unwrap();
    assert_eq!(series[0], (1, 1));
    let mut counter = VisitCounter::new();
    let sweep = sweep_checkpoints(&mut b.spawn(5, 2).unwrap(), &checkpoints, &mut counter).unwrap();
    for (s, r) in series.iter().zip(&sweep) {
        assert_eq!(*s, (r.n, r.v));
        assert!(s.1 >= s.0);
    }
    assert!(series.windows(2).all(|w| w[0].1 <= w[1].1));
    assert_eq!(counter.value(), series.last().unwrap().1);
}

#[test]
fn displacement_at_checkpoint_is_cell_of_that_collision() {
    let b = canonical();
    let mut walk = b.spawn(6, 0).unwrap();
    let origin = walk.origin();
    let sites: Vec<Site> = (0..300).map(|_| walk.next_site().unwrap()).collect();
    let mut counter = VisitCounter::new();
    let recs = sweep_checkpoints(&mut b.spawn(6, 0).unwrap(), &[10, 300], &mut counter).unwrap();
    for r in recs {
        let s = sites[r.n as usize - 1];
        assert_eq!(r.displacement, [s.cell[0] - origin.cell[0], s.cell[1] - origin.cell[1]]);
    }
}

/// Replays a fixed list.
struct Replay(Vec<Site>, usize);

impl SiteWalk for Replay {
    fn origin(&self) -> Site {
        Site::new(0, [0, 0])
    }

    fn next_site(&mut self) -> Result<Site, DynamicsError> {
        self.1 += 1;
        Ok(self.0[self.1 - 1])
    }
}

proptest! {
    #[test]
    fn streamed_equals_multiset_square_sum(
        raw in prop::collection::vec((0usize..3, -3i64..3, -3i64..3), 1..500)
    ) {
        let sites: Vec<Site> = raw.iter().map(|&(o, x, y)| Site::new(o, [x, y])).collect();
        let mut hist = std::collections::HashMap::new();
        for s in &sites {
            *hist.entry(*s).or_insert(0u64) += 1;
        }
        let squares: u64 = hist.values().map(|m| m * m).sum();
        let n = sites.len() as u64;
        let series = v_series(&mut Replay(sites.clone(), 0), &[n]).unwrap();
        prop_assert_eq!(series[0].1, squares);
        prop_assert_eq!(squares, brute_force_v(&sites));
    }

    #[test]
    fn keys_round_trip(o in 0usize..256, x in -(1i64 << 27)..(1 << 27), y in -(1i64 << 27)..(1 << 27)) {
        let s = Site::new(o, [x, y]);
        prop_assert_eq!(s.key().unwrap().site(), s);
    }
}

#[test]
fn random_site_lists_over_ten_sites() {
    let mut rng = stream_rng(12, 0);
    let sites: Vec<Site> = (0..500).map(|_| Site::new(0, [rng.random_range(0..10), 0])).collect();
    let mut hist = [0u64; 10];
    for s in &sites {
        hist[s.cell[0] as usize] += 1;
    }
    let expected: u64 = hist.iter().map(|m| m * m).sum();
    assert_eq!(*streamed_v(&sites).last().unwrap(), expected);
    assert_eq!(brute_force_v(&sites), expected);
}
