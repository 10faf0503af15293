//! CSV and manifest files. Numbers are written as `{:.16e}` (17 significant
//! digits) so they read back bit-exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use lorentz_core::constants::ConstantsReport;
use lorentz_core::estimators::ReturnCurve;
use lorentz_core::{DiffusionMatrix, EnsembleSummary};
use serde::Serialize;

use crate::error::LabError;

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn ensemble_csv(s: &EnsembleSummary) -> String {
    let mut out = String::from("n,mean_V,var_V,stderr_mean,stderr_var\n");
    for i in 0..s.checkpoints.len() {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            s.checkpoints[i],
            num(s.mean_v[i]),
            num(s.var_v[i]),
            num(s.stderr_mean[i]),
            num(s.stderr_var[i])
        );
    }
    out
}

pub fn returns_csv(c: &ReturnCurve) -> String {
    let mut out = String::from("k,hits,trials,p_hat,ci_low,ci_high,ci_halfwidth\n");
    for i in 0..c.ks.len() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            c.ks[i],
            c.hits[i],
            c.trials,
            num(c.p_hat[i]),
            num(c.ci_low[i]),
            num(c.ci_high[i]),
            num(c.ci_halfwidth[i])
        );
    }
    out
}

pub const SIGMA2_HEADER: &str = "method,s11,s12,s22,se11,se12,se22,sqrt_det\n";

pub fn sigma2_csv(rows: &[&DiffusionMatrix]) -> String {
    let mut out = String::from(SIGMA2_HEADER);
    for m in rows {
        let (s, e) = (m.sigma2, m.stderr);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            m.method.as_str(),
            num(s[0][0]),
            num(s[0][1]),
            num(s[1][1]),
            num(e[0][0]),
            num(e[0][1]),
            num(e[1][1]),
            num(m.sqrt_det)
        );
    }
    out
}

/// `(method, Σ², stderr)` rows of a `sigma2.csv`.
pub fn parse_sigma2_csv(text: &str) -> Result<Vec<(String, [[f64; 2]; 2], [[f64; 2]; 2])>, LabError> {
    let bad = |line: usize| LabError::Config(format!("sigma2 file: malformed line {line}"));
    let mut lines = text.lines();
    if lines.next().map(|h| format!("{h}\n")) != Some(SIGMA2_HEADER.into()) {
        return Err(bad(1));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 8 {
                return Err(bad(i + 2));
            }
            let x: Vec<f64> = f[1..7].iter().map(|s| s.parse()).collect::<Result<_, _>>().map_err(|_| bad(i + 2))?;
            Ok((
                f[0].to_string(),
                [[x[0], x[1]], [x[1], x[2]]],
                [[x[3], x[4]], [x[4], x[5]]],
            ))
        })
        .collect()
}

pub fn constants_csv(r: &ConstantsReport) -> String {
    let mut out = String::from("quantity,value,stderr\n");
    let rows = [
        ("c0", r.c0.value, r.c0.stderr),
        ("c1", r.c1.value, r.c1.stderr),
        ("J", r.j.value, r.j.stderr),
        ("c", r.c.value, r.c.stderr),
        ("I_closed", r.i_closed, 0.0),
        ("I_quad", r.i_quad, 0.0),
        ("perimeter_factor", r.perimeter_factor, 0.0),
        ("sqrt_det", r.sqrt_det, 0.0),
    ];
    for (name, v, e) in rows {
        let _ = writeln!(out, "{name},{},{}", num(v), num(e));
    }
    out
}

pub fn constants_text(r: &ConstantsReport) -> String {
    let mut out = String::new();
    let band = |b: lorentz_core::Band| format!("{:.10} +/- {:.2e}", b.value, b.stderr);
    let _ = writeln!(out, "c0       {}", band(r.c0));
    let _ = writeln!(out, "c1       {}", band(r.c1));
    let _ = writeln!(out, "J        {}", band(r.j));
    let _ = writeln!(out, "c        {}", band(r.c));
    let _ = writeln!(out, "I        {:.15} (quadrature {:.15})", r.i_closed, r.i_quad);
    let _ = writeln!(out, "perimeter factor {:.15}", r.perimeter_factor);
    let _ = writeln!(out, "sqrt det sigma2  {:.15}", r.sqrt_det);
    for n in &r.notes {
        let _ = writeln!(out, "note: {n}");
    }
    out
}

/// Enough to repeat a run bit-exactly. The worker count is left out: it
/// does not change any output.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest<C: Serialize> {
    pub command: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub table_digest: String,
    pub config: C,
    pub files: Vec<&'static str>,
}

impl<C: Serialize> Manifest<C> {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

pub fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, LabError> {
    fs::create_dir_all(dir).map_err(LabError::io(dir))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(LabError::io(&path))?;
    Ok(path)
}
