//! File formats: norm series, snapshots, verdict records and manifests.

use std::fs;
use std::path::{Path, PathBuf};

use driftcomp::diagnostics::NormReport;
use driftcomp::model::{Grid, State, Verdict};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const NORMS_HEADER: [&str; 7] = ["t", "u_l1", "u_l2", "u_sup", "v_l1", "v_l2", "v_sup"];
pub const SNAPSHOT_HEADER: [&str; 3] = ["x", "u", "v"];

/// `snapshot_t0010.000.csv` for `t = 10`.
pub fn snapshot_file_name(t: f64) -> String {
    format!("snapshot_t{t:08.3}.csv")
}

/// One row of `norms.csv`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormRow {
    pub t: f64,
    pub u_l1: f64,
    pub u_l2: f64,
    pub u_sup: f64,
    pub v_l1: f64,
    pub v_l2: f64,
    pub v_sup: f64,
}

impl NormRow {
    pub fn of(state: &State<f64>, grid: &Grid<f64>) -> Self {
        let r = NormReport::of(state, grid, &[]);
        Self { t: state.t, u_l1: r.u_l1, u_l2: r.u_l2, u_sup: r.u_sup, v_l1: r.v_l1, v_l2: r.v_l2, v_sup: r.v_sup }
    }
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path.display().to_string(), io),
        other => CliError::MalformedSnapshot { path: path.to_path_buf(), message: format!("{other:?}") },
    }
}

pub fn write_norms(path: &Path, rows: &[NormRow]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path.display().to_string(), e))
}

pub fn read_norms(path: &Path) -> Result<Vec<NormRow>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| csv_error(path, e))).collect()
}

/// Cell-center profile of both species at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotData {
    pub t: f64,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SnapshotRow {
    x: f64,
    u: f64,
    v: f64,
}

pub fn write_snapshot(dir: &Path, state: &State<f64>, grid: &Grid<f64>) -> Result<PathBuf, CliError> {
    let path = dir.join(snapshot_file_name(state.t));
    let mut w = csv::Writer::from_path(&path).map_err(|e| csv_error(&path, e))?;
    for (i, &x) in grid.cell_centers().iter().enumerate() {
        w.serialize(SnapshotRow { x, u: state.u[i], v: state.v[i] }).map_err(|e| csv_error(&path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path.display().to_string(), e))?;
    Ok(path)
}

/// Time encoded in a snapshot file name.
pub fn time_from_file_name(path: &Path) -> Option<f64> {
    let name = path.file_name()?.to_str()?;
    name.strip_prefix("snapshot_t")?.strip_suffix(".csv")?.parse().ok()
}

pub fn read_snapshot(path: &Path) -> Result<SnapshotData, CliError> {
    let malformed = |message: String| CliError::MalformedSnapshot { path: path.to_path_buf(), message };
    let t = time_from_file_name(path).ok_or_else(|| malformed("file name must look like snapshot_t<time>.csv".into()))?;
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = r.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.iter().collect::<Vec<_>>() != SNAPSHOT_HEADER {
        return Err(malformed(format!("header must be x,u,v, found {}", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut data = SnapshotData { t, x: Vec::new(), u: Vec::new(), v: Vec::new() };
    for row in r.deserialize::<SnapshotRow>() {
        let row = row.map_err(|e| csv_error(path, e))?;
        if !(row.x.is_finite() && row.u.is_finite() && row.v.is_finite()) {
            return Err(malformed("non-finite value".into()));
        }
        data.x.push(row.x);
        data.u.push(row.u);
        data.v.push(row.v);
    }
    if data.x.is_empty() {
        return Err(malformed("no data rows".into()));
    }
    Ok(data)
}

/// Contents of `verdict.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub scenario: String,
    pub verdict: Verdict,
    pub expected_verdict: Option<Verdict>,
    pub t_final: f64,
    pub u_sup: f64,
    pub v_sup: f64,
    pub u_l2: f64,
    pub v_l2: f64,
    /// Species whose L2 norm crossed the exclusion threshold, if any.
    pub extinct_species: Option<String>,
    pub extinction_time: Option<f64>,
    pub steps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmittedFile {
    pub path: String,
    pub role: String,
}

/// Contents of `manifest.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub scenario: String,
    /// The executed configuration; reloads to the same bundle.
    pub config: String,
    pub output_dir: String,
    pub files: Vec<EmittedFile>,
    pub steps: usize,
    pub dt_min: Option<f64>,
    pub dt_max: Option<f64>,
    pub wall_clock_seconds: f64,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("records serialize");
    fs::write(path, text + "\n").map_err(|e| CliError::io(path.display().to_string(), e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage { code: "MALFORMED_RECORD", message: format!("{}: {e}", path.display()) })
}
