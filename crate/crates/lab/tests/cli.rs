use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

use lorentz_core::selfintersect::brute_force_v;
use lorentz_core::walk::{derive_seed, SiteWalk, WalkSource};
use lorentz_core::LazyLatticeWalk;
use lorentz_lab::commands::{self, purpose};
use lorentz_lab::RunConfig;
use tempfile::TempDir;

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lorentz-lab"))
        .args(args)
        .env_remove("LORENTZ_LAB_THREADS")
        .output()
        .unwrap()
}

fn write_config(dir: &Path, json: &str) -> String {
    let p = dir.join("config.json");
    fs::write(&p, json).unwrap();
    p.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn corridor_check_exit_codes() {
    let dir = TempDir::new().unwrap();
    let o = lab(&["corridor-check"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("finite: true"));

    let cfg = write_config(dir.path(), r#"{"table": {"disks": [{"center": [0.5, 0.5], "radius": 0.4}]}}"#);
    let o = lab(&["corridor-check", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("direction (1, 0), gap 0.2000"), "{}", stdout(&o));

    let cfg = write_config(
        dir.path(),
        r#"{"table": {"disks": [{"center": [0.5, 0.5], "radius": 0.4}, {"center": [0.6, 0.5], "radius": 0.2}]}}"#,
    );
    let o = lab(&["corridor-check", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("overlap"));
}

#[test]
fn table_file_relative_to_config() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("table.json"), r#"{"disks": [{"center": [0.5, 0.5], "radius": 0.4}]}"#).unwrap();
    let cfg = write_config(dir.path(), r#"{"table": "table.json"}"#);
    assert_eq!(lab(&["corridor-check", "--config", &cfg]).status.code(), Some(2));
}

#[test]
fn simulate_is_reproducible_and_bounded() {
    let dir = TempDir::new().unwrap();
    let out = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    for name in ["a", "b"] {
        let o = lab(&["simulate", "--seed", "4", "--n", "2000", "--out", &out(name)]);
        assert!(o.status.success());
    }
    let a = fs::read(dir.path().join("a/trajectory.csv")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b/trajectory.csv")).unwrap());

    let bound = lorentz_core::BilliardTable::canonical().horizon().max_free_path_bound.unwrap();
    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "k,obstacle,cell_x,cell_y,free_path,boundary_angle,sin_incidence");
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        let obstacle: usize = f[1].parse().unwrap();
        assert!((1..=2).contains(&obstacle));
        assert!(f[4].parse::<f64>().unwrap() <= bound);
    }

    assert!(lab(&["simulate", "--n", "10", "--out", &out("c")]).status.success());
    let rows = fs::read_to_string(dir.path().join("c/trajectory.csv")).unwrap();
    assert_eq!(rows.lines().count(), 11);
}

#[test]
fn tiny_estimate_writes_all_files_quickly() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"trajectories": 10, "n_max": 100, "returns": {"ks": [10, 50, 100]},
            "greenkubo": {"steps": 100000, "max_lag": 20, "batches": 10}}"#,
    );
    let out = dir.path().join("run");
    let t = Instant::now();
    let o = lab(&["estimate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    let elapsed = t.elapsed();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(elapsed.as_secs_f64() < 1.0, "{elapsed:?}");
    for f in ["ensemble.csv", "returns.csv", "sigma2.csv", "manifest.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let ensemble = fs::read_to_string(out.join("ensemble.csv")).unwrap();
    assert!(ensemble.starts_with("n,mean_V,var_V,stderr_mean,stderr_var\n"));
    // checkpoint n = 1 always has V = 1
    assert!(ensemble.lines().nth(1).unwrap().starts_with("1,1.0000000000000000e0,0.0000000000000000e0"));
}

#[test]
fn manifest_digest_follows_the_table() {
    let dir = TempDir::new().unwrap();
    let run = |name: &str, table: &str| {
        let cfg = dir.path().join(format!("{name}.json"));
        fs::write(
            &cfg,
            format!(r#"{{"trajectories": 4, "n_max": 16, "greenkubo": {{"steps": 100000, "max_lag": 20, "batches": 10}}, {table}}}"#),
        )
        .unwrap();
        let out = dir.path().join(name);
        assert!(lab(&["estimate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]).status.success());
        let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
        m["table_digest"].as_str().unwrap().to_string()
    };
    let a = run("a", r#""table": {"disks": [{"center": [0, 0], "radius": 0.4}, {"center": [0.5, 0.5], "radius": 0.3}]}"#);
    let b = run("b", r#""table": {"disks": [{"center": [0, 0], "radius": 0.4}, {"center": [0.5, 0.5], "radius": 0.29}]}"#);
    let c = run("c", r#""seed": 3"#);
    assert_ne!(a, b);
    assert_eq!(a, c);
}

#[test]
fn estimate_output_does_not_depend_on_workers() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"trajectories": 64, "n_max": 500, "seed": 11, "returns": {"ks": [10, 100]},
            "greenkubo": {"steps": 50000, "max_lag": 10, "batches": 5}}"#,
    );
    let mut outputs = Vec::new();
    for w in ["1", "8"] {
        let out = dir.path().join(w);
        let o = lab(&["estimate", "--config", &cfg, "--workers", w, "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
        let files: Vec<Vec<u8>> = ["ensemble.csv", "returns.csv", "sigma2.csv", "manifest.json"]
            .iter()
            .map(|f| fs::read(out.join(f)).unwrap())
            .collect();
        outputs.push(files);
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn constants_with_planted_sigma2() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), r#"{"table": {"disks": [{"center": [0.5, 0.5], "radius": 0.45}]}}"#);
    let out = dir.path().join("k");
    let o = lab(&["constants", "--config", &cfg, "--sigma2", "1,0,1", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("constants.csv")).unwrap();
    let get = |name: &str| -> f64 {
        let line = csv.lines().find(|l| l.starts_with(&format!("{name},"))).unwrap();
        line.split(',').nth(1).unwrap().parse().unwrap()
    };
    assert!((get("c0") - 1.0 / PI).abs() < 1e-15);
    assert_eq!(get("c1"), get("c0") / 2.0);
    assert!(get("c") > 0.0);
    assert!(out.join("constants.txt").exists());

    let o = lab(&["constants", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn constants_reads_sigma2_from_an_estimate_run() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"trajectories": 200, "n_max": 1000, "greenkubo": {"steps": 100000, "max_lag": 20, "batches": 10}}"#,
    );
    let run = dir.path().join("run");
    assert!(lab(&["estimate", "--config", &cfg, "--out", run.to_str().unwrap()]).status.success());
    let sigma2 = run.join("sigma2.csv");
    let o = lab(&[
        "constants",
        "--config",
        &cfg,
        "--sigma2-file",
        sigma2.to_str().unwrap(),
        "--out",
        run.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("sigma2 method: empirical"));
}

#[test]
fn baseline_walk_recovers_the_step_covariance() {
    let dir = TempDir::new().unwrap();
    let cfg = RunConfig {
        trajectories: 4000,
        n_max: 1000,
        seed: 2,
        ..RunConfig::default()
    };
    let e = commands::baseline_walk(&cfg, dir.path()).unwrap();
    let s = e.sigma2_empirical.unwrap();
    for a in 0..2 {
        assert!((s.sigma2[a][a] - 0.4).abs() < 3.0 * s.stderr[a][a], "{s:?}");
    }
    let gk = &e.green_kubo.matrix;
    assert!((gk.sigma2[0][0] - 0.4).abs() < 3.0 * gk.stderr[0][0]);
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["config"]["source"], "lazy-lattice-walk");
}

#[test]
fn pipeline_matches_brute_force_on_the_lazy_walk() {
    let dir = TempDir::new().unwrap();
    let checkpoints = vec![1, 10, 100, 1000, 2000];
    let cfg = RunConfig {
        trajectories: 100,
        n_max: 2000,
        checkpoints: Some(checkpoints.clone()),
        seed: 5,
        ..RunConfig::default()
    };
    let e = commands::baseline_walk(&cfg, dir.path()).unwrap();
    let seed = derive_seed(5, purpose::ENSEMBLE);
    let rows: Vec<Vec<f64>> = (0..100)
        .map(|i| {
            let mut w = LazyLatticeWalk.spawn(seed, i).unwrap();
            let sites: Vec<_> = (0..2000).map(|_| w.next_site().unwrap()).collect();
            checkpoints.iter().map(|&n| brute_force_v(&sites[..n as usize]) as f64).collect()
        })
        .collect();
    for (c, _) in checkpoints.iter().enumerate() {
        let xs: Vec<f64> = rows.iter().map(|r| r[c]).collect();
        let mean = xs.iter().sum::<f64>() / 100.0;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / 99.0;
        assert_eq!(e.ensemble.summary.mean_v[c], mean);
        assert_eq!(e.ensemble.summary.var_v[c], var);
    }
}

#[test]
fn env_var_sets_workers() {
    std::env::set_var("LORENTZ_LAB_THREADS", "3");
    assert_eq!(RunConfig::default().resolve_workers(), 3);
    std::env::remove_var("LORENTZ_LAB_THREADS");
    let cfg = RunConfig {
        workers: Some(2),
        ..RunConfig::default()
    };
    assert_eq!(cfg.resolve_workers(), 2);
}
