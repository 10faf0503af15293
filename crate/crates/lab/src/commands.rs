//! Subcommand bodies. Each writes its files under `out` and returns what it
//! computed, so tests can check results without re-reading files.

use std::fmt::Write as _;
use std::path::Path;

use lorentz_core::constants::{cross_check_j, integral_j_cubature, theoretical_constants, ConstantsReport, JCrossCheck};
use lorentz_core::estimators::{estimate_sigma2_greenkubo, fit_constants, ConstantsFit, GreenKubo, ReturnCurve};
use lorentz_core::walk::{derive_seed, WalkSource};
use lorentz_core::{Billiard, DiffusionMatrix, FiniteHorizonReport, LazyLatticeWalk, Trajectory};
use serde::Serialize;

use crate::config::{RunConfig, TableSpec};
use crate::ensemble::{integral_j_mc_parallel, pool, return_probability, run_ensemble, EnsembleRun};
use crate::error::LabError;
use crate::output::{self, num, Manifest};

/// Seed tags, so each estimator draws from its own streams.
pub mod purpose {
    pub const ENSEMBLE: u64 = 1;
    pub const RETURNS: u64 = 2;
    pub const GREEN_KUBO: u64 = 3;
    pub const J_MONTE_CARLO: u64 = 4;
}

pub const J_CUBATURE_TARGET: f64 = 1e-6;
pub const J_MC_TARGET: f64 = 1e-4;

pub fn billiard(cfg: &RunConfig, spec: &TableSpec) -> Result<Billiard, LabError> {
    let table = spec.build()?;
    Ok(Billiard::new(table, cfg.horizon_mode())?.with_init(cfg.init.into()))
}

pub fn describe_horizon(r: &FiniteHorizonReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "finite: {}", r.finite);
    let _ = writeln!(s, "directions checked: {}", r.directions_checked);
    match r.max_free_path_bound {
        Some(b) => {
            let _ = writeln!(s, "free path bound: {b:.12}");
        }
        None if r.finite => {
            let _ = writeln!(s, "free path bound: not certified");
        }
        None => {}
    }
    if let Some(c) = &r.open_corridor {
        let _ = writeln!(
            s,
            "corridor: direction ({}, {}), gap {:.12}",
            c.direction[0], c.direction[1], c.gap_width
        );
    }
    s
}

/// The horizon report; the caller maps `finite` to the exit status.
pub fn corridor_check(cfg: &RunConfig) -> Result<FiniteHorizonReport, LabError> {
    Ok(cfg.table_spec()?.build()?.horizon().clone())
}

/// One trajectory, stream 0, `n_max` collisions.
pub fn simulate(cfg: &RunConfig, out: &Path) -> Result<String, LabError> {
    let spec = cfg.table_spec()?;
    let b = billiard(cfg, &spec)?;
    let mut traj = Trajectory::new(&b, cfg.seed, 0)?;
    let mut csv = String::from("k,obstacle,cell_x,cell_y,free_path,boundary_angle,sin_incidence\n");
    for k in 1..=cfg.n_max {
        let f = traj.advance()?;
        let s = f.to;
        let _ = writeln!(
            csv,
            "{k},{},{},{},{},{},{}",
            s.obstacle + 1,
            s.cell[0],
            s.cell[1],
            num(f.free_path),
            num(s.boundary_angle()),
            num(s.sin_incidence())
        );
    }
    output::write(out, "trajectory.csv", &csv)?;
    let manifest = Manifest {
        command: "simulate",
        version: env!("CARGO_PKG_VERSION"),
        seed: cfg.seed,
        table_digest: spec.digest(),
        config: echo(cfg, &spec),
        files: vec!["trajectory.csv"],
    };
    output::write(out, "manifest.json", &manifest.to_json())?;
    Ok(csv)
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub source: &'static str,
    pub table: Option<TableSpec>,
    pub mode: crate::config::Mode,
    pub cell_cap: Option<usize>,
    pub init: crate::config::InitKind,
    pub trajectories: u64,
    pub n_max: u64,
    pub checkpoints: Option<Vec<u64>>,
    pub return_ks: Vec<u64>,
    pub return_trajectories: u64,
    pub greenkubo: crate::config::GreenKuboConfig,
    pub seeds: SeedEcho,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedEcho {
    pub ensemble: u64,
    pub returns: u64,
    pub green_kubo: u64,
    pub j_monte_carlo: u64,
}

fn echo(cfg: &RunConfig, spec: &TableSpec) -> ConfigEcho {
    ConfigEcho {
        source: "billiard",
        table: Some(spec.clone()),
        mode: cfg.mode,
        cell_cap: cfg.cell_cap,
        init: cfg.init,
        trajectories: cfg.trajectories,
        n_max: cfg.n_max,
        checkpoints: cfg.checkpoints().ok(),
        return_ks: cfg.returns.ks.clone(),
        return_trajectories: cfg.return_trajectories(),
        greenkubo: cfg.greenkubo,
        seeds: SeedEcho {
            ensemble: derive_seed(cfg.seed, purpose::ENSEMBLE),
            returns: derive_seed(cfg.seed, purpose::RETURNS),
            green_kubo: derive_seed(cfg.seed, purpose::GREEN_KUBO),
            j_monte_carlo: derive_seed(cfg.seed, purpose::J_MONTE_CARLO),
        },
    }
}

/// Everything `estimate` and `baseline-walk` compute.
#[derive(Debug, Clone)]
pub struct Estimate {
    pub ensemble: EnsembleRun,
    pub returns: ReturnCurve,
    /// Absent below 100 trajectories.
    pub sigma2_empirical: Option<DiffusionMatrix>,
    pub green_kubo: GreenKubo,
    /// Absent unless checkpoints span two decades.
    pub fit: Option<ConstantsFit>,
}

fn estimate_with<S: WalkSource>(
    cfg: &RunConfig,
    source: &S,
    digest: String,
    mut echo: ConfigEcho,
    command: &'static str,
    out: &Path,
) -> Result<Estimate, LabError> {
    let pool = pool(cfg.resolve_workers())?;
    let checkpoints = cfg.checkpoints()?;
    let seeds = &echo.seeds;
    let ensemble = run_ensemble(&pool, source, cfg.trajectories, &checkpoints, seeds.ensemble, digest.clone())?;
    let returns = return_probability(&pool, source, &cfg.return_ks()?, cfg.return_trajectories(), seeds.returns)?;
    let sigma2_empirical = if cfg.trajectories >= 100 {
        Some(ensemble.sigma2()?)
    } else {
        None
    };
    let gk = cfg.greenkubo;
    let mut walk = source.spawn(seeds.green_kubo, 0)?;
    let green_kubo = estimate_sigma2_greenkubo(&mut walk, gk.burn_in, gk.max_lag, gk.steps, gk.batches)?;
    let fit = fit_constants(&ensemble.summary).ok();

    let mut rows = Vec::new();
    rows.extend(sigma2_empirical.as_ref());
    rows.push(&green_kubo.matrix);
    output::write(out, "ensemble.csv", &output::ensemble_csv(&ensemble.summary))?;
    output::write(out, "returns.csv", &output::returns_csv(&returns))?;
    output::write(out, "sigma2.csv", &output::sigma2_csv(&rows))?;
    echo.checkpoints = Some(checkpoints);
    let manifest = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        seed: cfg.seed,
        table_digest: digest,
        config: echo,
        files: vec!["ensemble.csv", "returns.csv", "sigma2.csv", "manifest.json"],
    };
    output::write(out, "manifest.json", &manifest.to_json())?;
    Ok(Estimate {
        ensemble,
        returns,
        sigma2_empirical,
        green_kubo,
        fit,
    })
}

pub fn estimate(cfg: &RunConfig, out: &Path) -> Result<Estimate, LabError> {
    let spec = cfg.table_spec()?;
    let b = billiard(cfg, &spec)?;
    estimate_with(cfg, &b, spec.digest(), echo(cfg, &spec), "estimate", out)
}

/// Digest used in place of a table for the lattice walk.
pub const LAZY_WALK_DIGEST: &str = "lazy-lattice-walk";

pub fn baseline_walk(cfg: &RunConfig, out: &Path) -> Result<Estimate, LabError> {
    let spec = cfg.table_spec()?;
    let mut e = echo(cfg, &spec);
    e.source = "lazy-lattice-walk";
    e.table = None;
    estimate_with(cfg, &LazyLatticeWalk, LAZY_WALK_DIGEST.into(), e, "baseline-walk", out)
}

pub fn describe_estimate(e: &Estimate) -> String {
    let mut s = String::new();
    let sum = &e.ensemble.summary;
    let last = sum.checkpoints.len() - 1;
    let _ = writeln!(
        s,
        "M = {}, n = {}: mean V = {:.6e}, var V = {:.6e}",
        sum.trajectories, sum.checkpoints[last], sum.mean_v[last], sum.var_v[last]
    );
    let show = |m: &DiffusionMatrix| {
        format!(
            "[[{:.6}, {:.6}], [{:.6}, {:.6}]], sqrt det {:.6}",
            m.sigma2[0][0], m.sigma2[0][1], m.sigma2[1][0], m.sigma2[1][1], m.sqrt_det
        )
    };
    if let Some(m) = &e.sigma2_empirical {
        let _ = writeln!(s, "sigma2 (empirical)   {}", show(m));
    }
    let _ = writeln!(s, "sigma2 (green-kubo)  {}", show(&e.green_kubo.matrix));
    if e.green_kubo.cutoff_warning {
        let _ = writeln!(
            s,
            "warning: green-kubo tail |C(L)|/|C(0)| = {:.2e}, lag cutoff may be too small",
            e.green_kubo.tail_ratio
        );
    }
    if let Some(f) = &e.fit {
        let _ = writeln!(s, "c0 fit  {:.6} +/- {:.2e}", f.c0.value, f.c0.stderr);
        let _ = writeln!(s, "c fit   {:.6} +/- {:.2e}", f.c.value, f.c.stderr);
        if f.monotone_drift {
            let _ = writeln!(s, "note: var V / n^2 drifts monotonically across checkpoints");
        }
    }
    s
}

/// Where `constants` takes `Σ²` from.
#[derive(Debug, Clone, PartialEq)]
pub enum Sigma2Source {
    /// `s11, s12, s22`.
    Literal([f64; 3]),
    /// A `sigma2.csv`; the empirical row if present, else the first row.
    File(std::path::PathBuf),
}

pub fn load_sigma2(src: &Sigma2Source) -> Result<DiffusionMatrix, LabError> {
    match src {
        Sigma2Source::Literal([a, b, d]) => Ok(DiffusionMatrix::given([[*a, *b], [*b, *d]])?),
        Sigma2Source::File(path) => {
            let text = std::fs::read_to_string(path).map_err(LabError::io(path))?;
            let rows = output::parse_sigma2_csv(&text)?;
            let pick = rows
                .iter()
                .find(|r| r.0 == "empirical")
                .or(rows.first())
                .ok_or_else(|| LabError::Config(format!("{}: no sigma2 rows", path.display())))?;
            let method = match pick.0.as_str() {
                "empirical" => lorentz_core::estimators::Sigma2Method::Empirical,
                "green-kubo" => lorentz_core::estimators::Sigma2Method::GreenKubo,
                _ => lorentz_core::estimators::Sigma2Method::Given,
            };
            Ok(DiffusionMatrix::new(pick.1, pick.2, method)?)
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConstantsRun {
    pub report: ConstantsReport,
    pub j_check: JCrossCheck,
}

pub fn constants(cfg: &RunConfig, sigma2: &DiffusionMatrix, out: &Path) -> Result<ConstantsRun, LabError> {
    let spec = cfg.table_spec()?;
    let table = spec.build()?;
    let pool = pool(cfg.resolve_workers())?;
    let cub = integral_j_cubature(J_CUBATURE_TARGET)?;
    let mc = integral_j_mc_parallel(&pool, derive_seed(cfg.seed, purpose::J_MONTE_CARLO), J_MC_TARGET)?;
    let j_check = cross_check_j(cub, mc)?;
    let mut report = theoretical_constants(&table, sigma2, cub)?;
    report.notes.push(format!(
        "J cubature {:.10} vs monte-carlo {:.10} +/- {:.1e}: z = {:.2}",
        cub.value, mc.value, mc.stderr, j_check.z
    ));
    output::write(out, "constants.csv", &output::constants_csv(&report))?;
    output::write(out, "constants.txt", &output::constants_text(&report))?;
    let manifest = Manifest {
        command: "constants",
        version: env!("CARGO_PKG_VERSION"),
        seed: cfg.seed,
        table_digest: spec.digest(),
        config: ConstantsEcho {
            table: spec,
            sigma2: sigma2.sigma2,
            sigma2_stderr: sigma2.stderr,
            sigma2_method: sigma2.method.as_str(),
            j_cubature_target: J_CUBATURE_TARGET,
            j_monte_carlo_target: J_MC_TARGET,
            j_monte_carlo_seed: derive_seed(cfg.seed, purpose::J_MONTE_CARLO),
        },
        files: vec!["constants.csv", "constants.txt", "manifest.json"],
    };
    output::write(out, "manifest.json", &manifest.to_json())?;
    Ok(ConstantsRun { report, j_check })
}

#[derive(Debug, Clone, Serialize)]
struct ConstantsEcho {
    table: TableSpec,
    sigma2: [[f64; 2]; 2],
    sigma2_stderr: [[f64; 2]; 2],
    sigma2_method: &'static str,
    j_cubature_target: f64,
    j_monte_carlo_target: f64,
    j_monte_carlo_seed: u64,
}
