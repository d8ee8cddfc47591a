//! `driftcomp sweep`: one run per value of a config key, in parallel.

use std::fs;
use std::path::{Path, PathBuf};

use driftcomp::config::KNOWN_KEYS;
use rayon::prelude::*;
use serde::Serialize;

use crate::output::{read_json, VerdictRecord};
use crate::resolve::Scenario;
use crate::run::{cmd_run, RunOptions};
use crate::CliError;

pub const SUMMARY_HEADER: [&str; 11] =
    ["key", "value", "status", "verdict", "t_final", "u_l2", "v_l2", "u_sup", "v_sup", "extinction_time", "error"];

/// One row of `summary.csv`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub key: String,
    pub value: String,
    /// `ok` or the error code of a failed run.
    pub status: String,
    pub verdict: Option<String>,
    pub t_final: Option<f64>,
    pub u_l2: Option<f64>,
    pub v_l2: Option<f64>,
    pub u_sup: Option<f64>,
    pub v_sup: Option<f64>,
    pub extinction_time: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub summary: PathBuf,
    /// Values whose run was executed (not reused from disk).
    pub executed: Vec<String>,
}

/// Parses one axis value: a TOML literal or a fraction `a/b`.
pub fn parse_axis_value(text: &str) -> Result<String, CliError> {
    let text = text.trim();
    let bad = || CliError::Usage { code: "INVALID_VALUE", message: format!("cannot parse sweep value {text:?}") };
    if let Some((a, b)) = text.split_once('/') {
        let a: f64 = a.trim().parse().map_err(|_| bad())?;
        let b: f64 = b.trim().parse().map_err(|_| bad())?;
        if b == 0.0 {
            return Err(bad());
        }
        return Ok(format!("{:?}", a / b));
    }
    if text.is_empty() {
        return Err(bad());
    }
    Ok(text.to_string())
}

/// Subdirectory name for one axis value.
pub fn run_dir_name(key: &str, value: &str) -> String {
    let safe: String = value.chars().map(|c| if c.is_ascii_alphanumeric() || "._-+".contains(c) { c } else { '_' }).collect();
    format!("{key}={safe}")
}

fn row_from_record(key: &str, value: &str, r: &VerdictRecord) -> SweepRow {
    SweepRow {
        key: key.to_string(),
        value: value.to_string(),
        status: "ok".into(),
        verdict: Some(r.verdict.as_str().to_string()),
        t_final: Some(r.t_final),
        u_l2: Some(r.u_l2),
        v_l2: Some(r.v_l2),
        u_sup: Some(r.u_sup),
        v_sup: Some(r.v_sup),
        extinction_time: r.extinction_time,
        error: None,
    }
}

fn failed_row(key: &str, value: &str, code: &str, message: String) -> SweepRow {
    SweepRow {
        key: key.to_string(),
        value: value.to_string(),
        status: code.to_string(),
        verdict: None,
        t_final: None,
        u_l2: None,
        v_l2: None,
        u_sup: None,
        v_sup: None,
        extinction_time: None,
        error: Some(message),
    }
}

fn error_code(e: &CliError) -> String {
    match e {
        CliError::Config(c) => c.code().to_string(),
        CliError::Numerical(n) => n.code().to_string(),
        CliError::Usage { code, .. } => code.to_string(),
        CliError::ScenarioNotFound(_) => "NOT_FOUND".into(),
        CliError::Verification(_) => "VERIFICATION_FAILED".into(),
        CliError::MalformedSnapshot { .. } => "MALFORMED_SNAPSHOT".into(),
        CliError::Io { .. } => "IO_ERROR".into(),
        CliError::Plot(_) => "PLOT_ERROR".into(),
    }
}

/// A finished run whose config matches the planned one is reused.
fn reusable(dir: &Path, planned: &Scenario) -> Option<VerdictRecord> {
    let config = fs::read_to_string(dir.join("config.toml")).ok()?;
    if config != planned.config_text() {
        return None;
    }
    read_json(&dir.join("verdict.json")).ok()
}

enum Planned {
    Ready(Scenario),
    Invalid(CliError),
}

pub fn cmd_sweep(
    base: &Scenario,
    key: &str,
    values: &[String],
    jobs: usize,
    out: &Path,
    run_opts: &RunOptions,
) -> Result<SweepOutcome, CliError> {
    if !KNOWN_KEYS.contains(&key) {
        return Err(CliError::Usage { code: "UNKNOWN_KEY", message: format!("{key:?} is not a config key") });
    }
    let values: Vec<String> = values.iter().map(|v| parse_axis_value(v)).collect::<Result<_, _>>()?;
    fs::create_dir_all(out).map_err(|e| CliError::io(out.display().to_string(), e))?;
    let plans: Vec<(String, PathBuf, Planned)> = values
        .iter()
        .map(|v| {
            let dir = out.join(run_dir_name(key, v));
            let plan = match base.clone().with_overrides(&[format!("{key}={v}")]) {
                Ok(s) => Planned::Ready(s),
                Err(e) => Planned::Invalid(e),
            };
            (v.clone(), dir, plan)
        })
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Usage { code: "INVALID_JOBS", message: e.to_string() })?;
    let results: Vec<(SweepRow, bool)> = pool.install(|| {
        plans
            .par_iter()
            .map(|(value, dir, plan)| match plan {
                Planned::Invalid(e) => (failed_row(key, value, &error_code(e), e.to_string()), false),
                Planned::Ready(scn) => {
                    if let Some(record) = reusable(dir, scn) {
                        return (row_from_record(key, value, &record), false);
                    }
                    let opts = RunOptions { out_dir: dir.clone(), ..run_opts.clone() };
                    match cmd_run(scn, &opts) {
                        Ok(r) => (row_from_record(key, value, &r.record), true),
                        Err(e) => (failed_row(key, value, &error_code(&e), e.to_string()), true),
                    }
                }
            })
            .collect()
    });
    let executed = values.iter().zip(&results).filter(|(_, r)| r.1).map(|(v, _)| v.clone()).collect();
    let rows: Vec<SweepRow> = results.into_iter().map(|r| r.0).collect();
    let summary = out.join("summary.csv");
    write_summary(&summary, &rows)?;
    Ok(SweepOutcome { rows, summary, executed })
}

fn write_summary(path: &Path, rows: &[SweepRow]) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::Io { context: path.display().to_string(), source: std::io::Error::other(e.to_string()) };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    for row in rows {
        w.serialize(row).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::io(path.display().to_string(), e))
}
