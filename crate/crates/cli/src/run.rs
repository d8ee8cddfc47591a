//! `driftcomp run`: integrate one scenario and write its artifacts.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use driftcomp::diagnostics::{classify_outcome, extinction_detector};
use driftcomp::integrate::{integrate, ObserverAction, Snapshot};
use driftcomp::model::{Outcome, State, Verdict};
use driftcomp::scenario::realize_state;

use crate::output::{write_json, write_norms, write_snapshot, EmittedFile, NormRow, RunManifest, VerdictRecord};
use crate::plot::render_snapshot;
use crate::resolve::Scenario;
use crate::CliError;

/// Rows of `norms.csv` per unit of simulated time span (plus snapshot rows).
const NORM_SAMPLES: f64 = 1000.0;

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub plot_size: (u32, u32),
    pub plots: bool,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub outcome: Outcome<f64>,
    pub record: VerdictRecord,
    pub manifest: RunManifest,
    pub final_state: State<f64>,
    pub norms: Vec<NormRow>,
}

/// Short parameter summary used in plot titles.
pub fn parameter_summary(s: &Scenario) -> String {
    let m = &s.bundle.model;
    let q = if m.drift_enabled { format!("q = {}", m.drift_q) } else { "no drift".to_string() };
    format!(
        "{q}, d1 = {}, d2 = {}, p_u = {}, p_v = {}, k_v = {}",
        m.disp_u.d, m.disp_v.d, m.disp_u.p, m.disp_v.p, m.disp_v.k
    )
}

/// First time the loser's L2 norm falls below the exclusion level for good.
fn extinction(verdict: Verdict, norms: &[NormRow], threshold: f64) -> (Option<String>, Option<f64>) {
    let (name, series): (&str, Vec<(f64, f64)>) = match verdict {
        Verdict::UWins => ("v", norms.iter().map(|r| (r.t, r.v_l2)).collect()),
        Verdict::VWins => ("u", norms.iter().map(|r| (r.t, r.u_l2)).collect()),
        _ => return (None, None),
    };
    match extinction_detector(&series, threshold) {
        Some(t) => (Some(name.to_string()), Some(t)),
        None => (None, None),
    }
}

fn relative(dir: &Path, path: &Path) -> String {
    path.strip_prefix(dir).unwrap_or(path).display().to_string()
}

pub fn cmd_run(scenario: &Scenario, opts: &RunOptions) -> Result<RunResult, CliError> {
    let started = Instant::now();
    let bundle = &scenario.bundle;
    let cfg = &bundle.model;
    let grid = &cfg.grid;
    let dir = &opts.out_dir;
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display().to_string(), e))?;
    let config_path = dir.join("config.toml");
    fs::write(&config_path, scenario.config_text()).map_err(|e| CliError::io(config_path.display().to_string(), e))?;

    let state0 = realize_state(&bundle.ic_u, &bundle.ic_v, grid).map_err(|e| CliError::Config(e.into()))?;
    let mut ctl = bundle.control.clone();
    ctl.observe_every = 1;
    let interval = ctl.t_end / NORM_SAMPLES;
    let mut norms: Vec<NormRow> = Vec::new();
    let mut snapshots: Vec<PathBuf> = Vec::new();
    let mut io_error: Option<CliError> = None;
    let mut next_sample = 0.0;
    let mut observer = |snap: &Snapshot<'_, f64>| {
        let t = snap.state.t;
        if snap.at_stop || t >= next_sample {
            norms.push(NormRow::of(snap.state, grid));
            while next_sample <= t {
                next_sample += interval.max(f64::MIN_POSITIVE);
                if interval <= 0.0 {
                    break;
                }
            }
        }
        if snap.at_stop {
            match write_snapshot(dir, snap.state, grid) {
                Ok(p) => snapshots.push(p),
                Err(e) => {
                    io_error = Some(e);
                    return ObserverAction::Halt("snapshot write failed".into());
                }
            }
        }
        ObserverAction::Continue
    };
    let result = integrate(state0, cfg, &ctl, &mut [&mut observer]);
    let norms_path = dir.join("norms.csv");
    write_norms(&norms_path, &norms)?;
    if let Some(e) = io_error {
        return Err(e);
    }
    let integration = result?;

    let state = integration.state;
    let mut outcome = classify_outcome(&state, grid, &bundle.thresholds);
    let (extinct_species, extinction_time) = extinction(outcome.verdict, &norms, bundle.thresholds.exclusion);
    outcome.extinction_time = extinction_time;
    let last = NormRow::of(&state, grid);
    let record = VerdictRecord {
        scenario: scenario.id.clone(),
        verdict: outcome.verdict,
        expected_verdict: scenario.expected,
        t_final: state.t,
        u_sup: outcome.u_sup,
        v_sup: outcome.v_sup,
        u_l2: last.u_l2,
        v_l2: last.v_l2,
        extinct_species,
        extinction_time,
        steps: integration.steps,
    };
    let verdict_path = dir.join("verdict.json");
    write_json(&verdict_path, &record)?;

    let mut files = vec![
        EmittedFile { path: relative(dir, &config_path), role: "config".into() },
        EmittedFile { path: relative(dir, &norms_path), role: "norms".into() },
        EmittedFile { path: relative(dir, &verdict_path), role: "verdict".into() },
    ];
    let params = parameter_summary(scenario);
    for snap_path in &snapshots {
        files.push(EmittedFile { path: relative(dir, snap_path), role: "snapshot".into() });
        if opts.plots {
            let png = snap_path.with_extension("png");
            let data = crate::output::read_snapshot(snap_path)?;
            render_snapshot(&png, &data, opts.plot_size, Some(&params))?;
            files.push(EmittedFile { path: relative(dir, &png), role: "plot".into() });
        }
    }
    files.push(EmittedFile { path: "manifest.json".into(), role: "manifest".into() });
    let manifest = RunManifest {
        scenario: scenario.id.clone(),
        config: scenario.config_text(),
        output_dir: dir.display().to_string(),
        files,
        steps: integration.steps,
        dt_min: integration.dt_range.map(|r| r.0),
        dt_max: integration.dt_range.map(|r| r.1),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(RunResult { outcome, record, manifest, final_state: state, norms })
}
