use std::f64::consts::PI;

use lorentz_core::estimators::{
    estimate_sigma2_empirical, estimate_sigma2_greenkubo, fit_constants, record_returns, ReturnCurve,
};
use lorentz_core::selfintersect::{brute_force_v, sweep_checkpoints};
use lorentz_core::walk::{SiteWalk, WalkSource};
use lorentz_core::{Billiard, BilliardTable, EnsembleSummary, HorizonMode, LazyLatticeWalk, Site, VisitCounter};

fn canonical() -> Billiard {
    Billiard::new(BilliardTable::canonical(), HorizonMode::Strict).unwrap()
}

fn endpoints<S: WalkSource>(source: &S, seed: u64, m: u64, n: u64) -> Vec<[i64; 2]> {
    let mut counter = VisitCounter::new();
    (0..m)
        .map(|i| {
            let mut w = source.spawn(seed, i).unwrap();
            sweep_checkpoints(&mut w, &[n], &mut counter).unwrap()[0].displacement
        })
        .collect()
}

#[test]
fn lazy_walk_sigma2_empirical() {
    let s = estimate_sigma2_empirical(&endpoints(&LazyLatticeWalk, 1, 20_000, 1000), 1000).unwrap();
    for a in 0..2 {
        for b in 0..2 {
            let want = if a == b { LazyLatticeWalk::SIGMA2_DIAG } else { 0.0 };
            assert!((s.sigma2[a][b] - want).abs() < 3.0 * s.stderr[a][b], "{s:?}");
        }
    }
}

#[test]
fn lazy_walk_green_kubo_sees_no_correlation() {
    let mut w = LazyLatticeWalk.spawn(2, 0).unwrap();
    let gk = estimate_sigma2_greenkubo(&mut w, 0, 5, 2_000_000, 40).unwrap();
    for j in 1..=5 {
        for row in gk.autocov[j] {
            for x in row {
                assert!(x.abs() < 0.005, "C({j}) = {:?}", gk.autocov[j]);
            }
        }
    }
    let s = gk.matrix;
    assert!((s.sigma2[0][0] - 0.4).abs() < 3.0 * s.stderr[0][0]);
    assert!((s.sigma2[1][1] - 0.4).abs() < 3.0 * s.stderr[1][1]);
}

#[test]
fn billiard_sigma2_methods_agree_and_correlations_matter() {
    let b = canonical();
    let emp = estimate_sigma2_empirical(&endpoints(&b, 3, 4000, 2000), 2000).unwrap();
    let mut w = b.spawn(4, 0).unwrap();
    let gk = estimate_sigma2_greenkubo(&mut w, 1000, 60, 4_000_000, 40).unwrap();
    assert!(!gk.cutoff_warning, "tail ratio {}", gk.tail_ratio);
    for a in 0..2 {
        let combined = emp.stderr[a][a].hypot(gk.matrix.stderr[a][a]);
        assert!((emp.sigma2[a][a] - gk.matrix.sigma2[a][a]).abs() < 3.0 * combined);
    }
    // C(0) alone misses the correlated part
    let mut w = b.spawn(4, 0).unwrap();
    let naive = estimate_sigma2_greenkubo(&mut w, 1000, 0, 4_000_000, 40).unwrap();
    let diff = (naive.matrix.sigma2[0][0] - gk.matrix.sigma2[0][0]).abs();
    let combined = naive.matrix.stderr[0][0].hypot(gk.matrix.stderr[0][0]);
    assert!(diff > 3.0 * combined, "{diff} vs {combined}");
}

#[test]
fn transposing_samples_transposes_sigma2() {
    let pts = endpoints(&canonical(), 5, 500, 200);
    let swapped: Vec<[i64; 2]> = pts.iter().map(|p| [p[1], p[0]]).collect();
    let a = estimate_sigma2_empirical(&pts, 200).unwrap();
    let b = estimate_sigma2_empirical(&swapped, 200).unwrap();
    assert_eq!(a.transposed_axes().sigma2, b.sigma2);
}

#[test]
fn lazy_walk_return_law() {
    let ks: Vec<u64> = vec![100, 200, 400, 800];
    let mut hits = vec![0; ks.len()];
    let m = 200_000;
    for i in 0..m {
        record_returns(&mut LazyLatticeWalk.spawn(6, i).unwrap(), &ks, &mut hits).unwrap();
    }
    let curve = ReturnCurve::from_counts(&ks, &hits, m).unwrap();
    let c1 = curve.implied_c1(100, 800).unwrap();
    let want = 5.0 / (4.0 * PI);
    assert!((c1.value - want).abs() < 4.0 * c1.stderr + 0.01 * want, "{c1:?}");
    assert!(curve.p_hat.iter().all(|p| (0.0..=1.0).contains(p)));
    assert!(curve.p_hat.windows(2).all(|w| w[0] > w[1]));
}

#[test]
fn billiard_return_plateau_matches_half_c0() {
    // the narrow channels between the two disk families slow mixing; the
    // 1/k law only settles for k of several hundred collisions
    let b = canonical();
    let sigma2 = estimate_sigma2_empirical(&endpoints(&b, 10, 3000, 4000), 4000).unwrap();
    let c1 = BilliardTable::canonical().perimeter_factor() / (2.0 * PI * sigma2.sqrt_det);

    let ks: Vec<u64> = vec![10, 100, 1000, 2000];
    let mut hits = vec![0; ks.len()];
    let m = 8000;
    for i in 0..m {
        record_returns(&mut b.spawn(7, i).unwrap(), &ks, &mut hits).unwrap();
    }
    let curve = ReturnCurve::from_counts(&ks, &hits, m).unwrap();
    assert!(curve.p_hat.windows(2).all(|w| w[0] > w[1]));
    let implied = curve.implied_c1(1000, 2000).unwrap();
    let combined = implied.stderr.hypot(c1 * sigma2.sqrt_det_stderr() / sigma2.sqrt_det);
    assert!((implied.value - c1).abs() < 4.0 * combined, "{implied:?} vs {c1}");
}

/// Reference statistics by the literal double sum over stored sites.
fn reference_summary(m: u64, checkpoints: &[u64]) -> (Vec<f64>, Vec<f64>) {
    let n = *checkpoints.last().unwrap();
    let rows: Vec<Vec<u64>> = (0..m)
        .map(|i| {
            let mut w = LazyLatticeWalk.spawn(8, i).unwrap();
            let sites: Vec<Site> = (0..n).map(|_| w.next_site().unwrap()).collect();
            checkpoints.iter().map(|&c| brute_force_v(&sites[..c as usize])).collect()
        })
        .collect();
    let mut means = Vec::new();
    let mut vars = Vec::new();
    for c in 0..checkpoints.len() {
        let xs: Vec<f64> = rows.iter().map(|r| r[c] as f64).collect();
        let mean = xs.iter().sum::<f64>() / m as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (m as f64 - 1.0);
        means.push(mean);
        vars.push(var);
    }
    (means, vars)
}

#[test]
fn pipeline_oracle_on_the_lazy_walk() {
    let checkpoints = [10, 100, 500, 2000];
    let mut counter = VisitCounter::new();
    let samples: Vec<Vec<u64>> = (0..100)
        .map(|i| {
            let mut w = LazyLatticeWalk.spawn(8, i).unwrap();
            sweep_checkpoints(&mut w, &checkpoints, &mut counter)
                .unwrap()
                .iter()
                .map(|r| r.v)
                .collect()
        })
        .collect();
    let summary = EnsembleSummary::from_samples(&checkpoints, &samples, 8, String::new()).unwrap();
    let (means, vars) = reference_summary(100, &checkpoints);
    assert_eq!(summary.mean_v, means);
    assert_eq!(summary.var_v, vars);
    assert!(summary.mean_v.iter().zip(&checkpoints).all(|(v, &n)| *v >= n as f64));
    let fit = fit_constants(&summary).unwrap();
    assert_eq!(fit.top_decade, vec![500, 2000]);
}

#[test]
fn ensemble_mean_is_exactly_one_at_the_first_step() {
    let b = canonical();
    let mut counter = VisitCounter::new();
    let samples: Vec<Vec<u64>> = (0..50)
        .map(|i| vec![sweep_checkpoints(&mut b.spawn(9, i).unwrap(), &[1], &mut counter).unwrap()[0].v])
        .collect();
    let s = EnsembleSummary::from_samples(&[1], &samples, 9, String::new()).unwrap();
    assert_eq!(s.mean_v, vec![1.0]);
    assert_eq!(s.var_v, vec![0.0]);
}
