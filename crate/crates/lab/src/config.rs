//! Run configuration: a single JSON document, every field optional.

use std::fs;
use std::path::{Path, PathBuf};

use lorentz_core::{BilliardTable, Disk, HorizonMode, Init};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::LabError;

/// One disk as written in a table file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiskSpec {
    pub center: [f64; 2],
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableSpec {
    pub disks: Vec<DiskSpec>,
}

impl TableSpec {
    pub fn canonical() -> Self {
        Self::from_table(&BilliardTable::canonical())
    }

    pub fn from_table(table: &BilliardTable) -> Self {
        Self {
            disks: table
                .disks()
                .iter()
                .map(|d| DiskSpec {
                    center: d.center,
                    radius: d.radius,
                })
                .collect(),
        }
    }

    pub fn build(&self) -> Result<BilliardTable, LabError> {
        let disks = self.disks.iter().map(|d| Disk::new(d.center, d.radius)).collect();
        Ok(BilliardTable::new(disks)?)
    }

    /// SHA-256 of the disks, each written as three `{:.16e}` numbers.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for d in &self.disks {
            h.update(format!("{:.16e},{:.16e},{:.16e}\n", d.center[0], d.center[1], d.radius));
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Inline disks, or a path to a JSON file holding a [`TableSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TableSource {
    Inline(TableSpec),
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Strict,
    Permissive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum InitKind {
    #[default]
    Stationary,
    UniformQ,
}

impl From<InitKind> for Init {
    fn from(k: InitKind) -> Init {
        match k {
            InitKind::Stationary => Init::Stationary,
            InitKind::UniformQ => Init::UniformQ,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReturnsConfig {
    pub ks: Vec<u64>,
    /// Defaults to the ensemble size.
    pub trajectories: Option<u64>,
}

impl Default for ReturnsConfig {
    fn default() -> Self {
        Self {
            ks: vec![10, 20, 50, 100, 200, 500, 1000],
            trajectories: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GreenKuboConfig {
    pub burn_in: u64,
    pub max_lag: usize,
    pub steps: u64,
    pub batches: usize,
}

impl Default for GreenKuboConfig {
    fn default() -> Self {
        Self {
            burn_in: 1000,
            max_lag: 60,
            steps: 1_000_000,
            batches: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub table: Option<TableSource>,
    pub mode: Mode,
    /// Cell cap for permissive mode.
    pub cell_cap: Option<usize>,
    pub init: InitKind,
    /// Ensemble size `M`.
    pub trajectories: u64,
    pub n_max: u64,
    /// Defaults to powers of two up to `n_max`, then `n_max`.
    pub checkpoints: Option<Vec<u64>>,
    pub seed: u64,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub returns: ReturnsConfig,
    pub greenkubo: GreenKuboConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            table: None,
            mode: Mode::Strict,
            cell_cap: None,
            init: InitKind::Stationary,
            trajectories: 1000,
            n_max: 10_000,
            checkpoints: None,
            seed: 0,
            workers: None,
            out: None,
            returns: ReturnsConfig::default(),
            greenkubo: GreenKuboConfig::default(),
        }
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, LabError> {
    let text = fs::read_to_string(path).map_err(LabError::io(path))?;
    serde_json::from_str(&text).map_err(|source| LabError::Json {
        path: path.to_path_buf(),
        source,
    })
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, LabError> {
        let mut cfg: RunConfig = read_json(path)?;
        // table files are relative to the config file
        if let Some(TableSource::File(p)) = &mut cfg.table {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn table_spec(&self) -> Result<TableSpec, LabError> {
        match &self.table {
            None => Ok(TableSpec::canonical()),
            Some(TableSource::Inline(t)) => Ok(t.clone()),
            Some(TableSource::File(p)) => read_json(p),
        }
    }

    pub fn horizon_mode(&self) -> HorizonMode {
        match (self.mode, self.cell_cap) {
            (Mode::Strict, _) => HorizonMode::Strict,
            (Mode::Permissive, Some(cell_cap)) => HorizonMode::Permissive { cell_cap },
            (Mode::Permissive, None) => HorizonMode::permissive(),
        }
    }

    pub fn checkpoints(&self) -> Result<Vec<u64>, LabError> {
        let cps = match &self.checkpoints {
            Some(c) => c.clone(),
            None => {
                let mut c: Vec<u64> = (0..63).map(|k| 1u64 << k).take_while(|&n| n < self.n_max).collect();
                c.push(self.n_max);
                c
            }
        };
        if cps.is_empty() || cps[0] == 0 || cps.windows(2).any(|w| w[0] >= w[1]) {
            return Err(LabError::Config("checkpoints must be positive, sorted and unique".into()));
        }
        if *cps.last().unwrap() > self.n_max {
            return Err(LabError::Config(format!("checkpoints exceed n_max = {}", self.n_max)));
        }
        Ok(cps)
    }

    pub fn return_ks(&self) -> Result<Vec<u64>, LabError> {
        let ks = &self.returns.ks;
        if ks.is_empty() || ks[0] == 0 || ks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(LabError::Config("return lags must be positive, sorted and unique".into()));
        }
        Ok(ks.clone())
    }

    pub fn return_trajectories(&self) -> u64 {
        self.returns.trajectories.unwrap_or(self.trajectories)
    }

    /// Workers from the config, else `LORENTZ_LAB_THREADS`, else all cores.
    pub fn resolve_workers(&self) -> usize {
        self.workers
            .or_else(|| std::env::var("LORENTZ_LAB_THREADS").ok()?.parse().ok())
            .filter(|&w| w > 0)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }
}
