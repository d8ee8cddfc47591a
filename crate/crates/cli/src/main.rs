use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use driftcomp::scenario::preset_registry;
use driftcomp_cli::plot::{cmd_plot, parse_size};
use driftcomp_cli::resolve::{resolve, Scenario};
use driftcomp_cli::run::{cmd_run, RunOptions};
use driftcomp_cli::sweep::cmd_sweep;
use driftcomp_cli::verify::cmd_verify;
use driftcomp_cli::{default_out_dir, CliError};

/// Two-species competition with drift and nonlinear dispersal.
#[derive(Parser)]
#[command(name = "driftcomp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a preset or config file and write norms, snapshots, plots and a verdict.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_parser = parse_size, default_value = "900x600")]
        plot_size: (u32, u32),
    },
    /// One run per value of a config key.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Config key to vary.
        #[arg(long)]
        key: String,
        /// Comma-separated values; fractions like 7/4 are accepted.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_parser = parse_size, default_value = "900x600")]
        plot_size: (u32, u32),
    },
    /// Check the integrator against the oracles on a small grid.
    Verify {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Verify grids larger than 64 cells.
        #[arg(long)]
        force: bool,
    },
    /// Render snapshot CSV files to PNG.
    Plot {
        snapshots: Vec<PathBuf>,
        /// Directory for the images (default: next to each snapshot).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_parser = parse_size, default_value = "900x600")]
        plot_size: (u32, u32),
        /// Parameter text appended to each title.
        #[arg(long)]
        title: Option<String>,
    },
    /// List the built-in presets.
    Presets,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Preset name or path to a TOML config.
    scenario: String,
    /// Override a config key, e.g. --set n_cells=32 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    t_end: Option<f64>,
    /// Comma-separated snapshot times.
    #[arg(long, value_delimiter = ',')]
    snapshots: Option<Vec<f64>>,
}

impl ScenarioArgs {
    fn resolve(&self) -> Result<Scenario, CliError> {
        let mut overrides = self.set.clone();
        if let Some(t) = self.t_end {
            overrides.push(format!("t_end={t:?}"));
        }
        if let Some(times) = &self.snapshots {
            let list: Vec<String> = times.iter().map(|t| format!("{t:?}")).collect();
            overrides.push(format!("snapshots=[{}]", list.join(", ")));
        }
        resolve(&self.scenario, &overrides)
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { scenario, out, plot_size } => {
            let scn = scenario.resolve()?;
            let out_dir = default_out_dir(out, &scn.id);
            let result = cmd_run(&scn, &RunOptions { out_dir, plot_size, plots: true })?;
            println!("{}", serde_json::to_string_pretty(&result.record).expect("records serialize"));
        }
        Command::Sweep { scenario, key, values, jobs, out, plot_size } => {
            let scn = scenario.resolve()?;
            let out_dir = default_out_dir(out, &format!("{}_sweep_{key}", scn.id));
            let run_opts = RunOptions { out_dir: out_dir.clone(), plot_size, plots: true };
            let outcome = cmd_sweep(&scn, &key, &values, jobs, &out_dir, &run_opts)?;
            for row in &outcome.rows {
                println!("{}={}\t{}\t{}", row.key, row.value, row.status, row.verdict.as_deref().unwrap_or("-"));
            }
            println!("summary: {}", outcome.summary.display());
        }
        Command::Verify { scenario, force } => {
            let scn = scenario.resolve()?;
            let report = cmd_verify(&scn.id, &scn.bundle, force)?;
            for c in &report.checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            report.into_result()?;
        }
        Command::Plot { snapshots, out, plot_size, title } => {
            for p in cmd_plot(&snapshots, out.as_deref(), plot_size, title.as_deref())? {
                println!("{}", p.display());
            }
        }
        Command::Presets => {
            for p in preset_registry() {
                println!("{:<22} {:<9} {}", p.name, p.expected_verdict.as_str(), p.description);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
