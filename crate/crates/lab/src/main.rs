use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lorentz_lab::commands::{self, Sigma2Source};
use lorentz_lab::config::{InitKind, Mode};
use lorentz_lab::{LabError, RunConfig};

#[derive(Parser)]
#[command(name = "lorentz-lab", version, about = "Periodic Lorentz gas experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON run configuration; unset fields take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (falls back to LORENTZ_LAB_THREADS, then all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    init: Option<InitKind>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
}

#[derive(Subcommand)]
enum Command {
    /// Check the table for open corridors (exit 0 finite, 2 corridor, 1 error).
    CorridorCheck(Common),
    /// Dump one trajectory to trajectory.csv.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Collisions to record (default: n_max from the config).
        #[arg(long)]
        n: Option<u64>,
    },
    /// Ensemble statistics of V_n, return probabilities and sigma2.
    Estimate(Common),
    /// Analytic constants for a given sigma2.
    Constants {
        #[command(flatten)]
        common: Common,
        /// sigma2 entries s11,s12,s22.
        #[arg(long, value_parser = parse_triple, conflicts_with = "sigma2_file")]
        sigma2: Option<[f64; 3]>,
        /// A sigma2.csv written by `estimate`.
        #[arg(long)]
        sigma2_file: Option<PathBuf>,
    },
    /// `estimate` with the lazy lattice walk in place of the billiard.
    BaselineWalk(Common),
}

fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}")))
        .collect::<Result<_, _>>()?;
    v.try_into().map_err(|_| "expected three comma-separated numbers".to_string())
}

fn load(c: &Common) -> Result<RunConfig, LabError> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if c.workers.is_some() {
        cfg.workers = c.workers;
    }
    if c.out.is_some() {
        cfg.out = c.out.clone();
    }
    if let Some(i) = c.init {
        cfg.init = i;
    }
    if let Some(m) = c.mode {
        cfg.mode = m;
    }
    Ok(cfg)
}

fn out_dir(cfg: &RunConfig) -> PathBuf {
    cfg.out.clone().unwrap_or_else(|| PathBuf::from("."))
}

fn run(cli: Cli) -> Result<ExitCode, LabError> {
    match cli.command {
        Command::CorridorCheck(c) => {
            let report = commands::corridor_check(&load(&c)?)?;
            print!("{}", commands::describe_horizon(&report));
            Ok(ExitCode::from(if report.finite { 0 } else { 2 }))
        }
        Command::Simulate { common, n } => {
            let mut cfg = load(&common)?;
            if let Some(n) = n {
                cfg.n_max = n;
            }
            commands::simulate(&cfg, &out_dir(&cfg))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Estimate(c) => {
            let cfg = load(&c)?;
            let e = commands::estimate(&cfg, &out_dir(&cfg))?;
            print!("{}", commands::describe_estimate(&e));
            Ok(ExitCode::SUCCESS)
        }
        Command::BaselineWalk(c) => {
            let cfg = load(&c)?;
            let e = commands::baseline_walk(&cfg, &out_dir(&cfg))?;
            print!("{}", commands::describe_estimate(&e));
            Ok(ExitCode::SUCCESS)
        }
        Command::Constants {
            common,
            sigma2,
            sigma2_file,
        } => {
            let cfg = load(&common)?;
            let src = match (sigma2, sigma2_file) {
                (Some(v), _) => Sigma2Source::Literal(v),
                (None, Some(p)) => Sigma2Source::File(p),
                (None, None) => {
                    return Err(LabError::Config("constants needs --sigma2 or --sigma2-file".into()))
                }
            };
            let sigma2 = commands::load_sigma2(&src)?;
            let run = commands::constants(&cfg, &sigma2, &out_dir(&cfg))?;
            print!("{}", lorentz_lab::output::constants_text(&run.report));
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
