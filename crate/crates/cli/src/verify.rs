//! `driftcomp verify`: main integrator against the oracles, mass-budget
//! audit and the comparison-ODE bound on `||v||_2^2`.

use driftcomp::config::ConfigBundle;
use driftcomp::diagnostics::{fit_comparison_constants, lq_bound_check_from, lq_norm, mass_budget_residual, BoundCheckConfig};
use driftcomp::integrate::{integrate_stepper, stable_dt, ObserverAction, Scheme, Snapshot, Stepper};
use driftcomp::model::{ModelConfig, State};
use driftcomp::operators::{FluxFormRhs, RhsOperator};
use driftcomp::oracle::{euler_fine_run, fine_euler_dt, independent_rk4_step};
use driftcomp::scenario::realize_state;
use serde::Serialize;

use crate::CliError;

/// Largest grid verified without `--force`.
pub const MAX_CELLS: usize = 64;
/// Steps compared bit for bit against the independent RK4.
pub const BIT_STEPS: usize = 5;
pub const ENDPOINT_TOLERANCE: f64 = 0.02;
pub const MASS_BUDGET_TOLERANCE: f64 = 1e-11;
pub const BOUND_FIT_FRACTION: f64 = 0.1;
pub const BOUND_TOLERANCE: f64 = 0.05;
/// Exponent handed to the bound checker; the `L^2` comparison law does not use it.
const BOUND_ALPHA: f64 = 0.875;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub scenario: String,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> Vec<&CheckResult> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    /// `Err(Verification)` naming each failed check.
    pub fn into_result(self) -> Result<Self, CliError> {
        if self.passed() {
            Ok(self)
        } else {
            Err(CliError::Verification(self.failed().iter().map(|c| format!("{} ({})", c.name, c.detail)).collect()))
        }
    }
}

fn check(name: &'static str, passed: bool, detail: String) -> CheckResult {
    CheckResult { name, passed, detail }
}

fn l2_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Verifies the production operator.
pub fn cmd_verify(scenario: &str, bundle: &ConfigBundle, force: bool) -> Result<VerifyReport, CliError> {
    verify_with_operator(scenario, bundle, force, || FluxFormRhs::new(&bundle.model))
}

/// Verifies an arbitrary operator standing in for the production one. The
/// oracles and the mass budget always use the configuration itself, so a
/// faulty operator shows up as a disagreement.
pub fn verify_with_operator<O, F>(scenario: &str, bundle: &ConfigBundle, force: bool, make_op: F) -> Result<VerifyReport, CliError>
where
    O: RhsOperator<f64>,
    F: Fn() -> O,
{
    let cfg = &bundle.model;
    let n = cfg.grid.n_cells();
    if n > MAX_CELLS && !force {
        return Err(CliError::Usage {
            code: "GRID_TOO_LARGE",
            message: format!("n_cells = {n} exceeds {MAX_CELLS}; pass --force to verify anyway"),
        });
    }
    let state0 = realize_state(&bundle.ic_u, &bundle.ic_v, &cfg.grid).map_err(|e| CliError::Config(e.into()))?;
    let ctl = &bundle.control;
    let tol = ctl.nonneg_clip_tolerance;

    let checks = vec![
        bit_agreement(cfg, &state0, ctl, tol, &make_op),
        endpoint_and_budget(cfg, &state0, ctl, tol, &make_op),
    ];
    let mut flat: Vec<CheckResult> = checks.into_iter().flatten().collect();
    flat.push(bound_check(cfg, &state0, ctl, tol, &make_op));
    Ok(VerifyReport { scenario: scenario.to_string(), checks: flat })
}

fn bit_agreement<O: RhsOperator<f64>>(
    cfg: &ModelConfig<f64>,
    state0: &State<f64>,
    ctl: &driftcomp::integrate::StepControl<f64>,
    tol: f64,
    make_op: &impl Fn() -> O,
) -> Vec<CheckResult> {
    const NAME: &str = "rk4_bit_agreement";
    let mut stepper = Stepper::new(cfg, make_op(), Scheme::Rk4, tol);
    let mut main = state0.clone();
    for step in 0..BIT_STEPS {
        if main.t >= ctl.t_end {
            break;
        }
        let dt = match ctl.fixed_dt {
            Some(dt) => dt,
            None => match stable_dt(&main, cfg, ctl) {
                Ok(dt) => dt.min(ctl.t_end - main.t),
                Err(e) => return vec![check(NAME, false, format!("step {step}: {e}"))],
            },
        };
        let oracle = match independent_rk4_step(cfg, &main, dt, tol) {
            Ok(s) => s,
            Err(e) => return vec![check(NAME, false, format!("oracle step {step}: {e}"))],
        };
        if let Err(e) = stepper.advance(&mut main, dt) {
            return vec![check(NAME, false, format!("step {step}: {e}"))];
        }
        let same = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits());
        if !(same(&main.u, &oracle.u) && same(&main.v, &oracle.v)) {
            let diff = l2_diff(&main.u, &oracle.u).max(l2_diff(&main.v, &oracle.v));
            return vec![check(NAME, false, format!("step {step} differs, l2 difference {diff:e}"))];
        }
    }
    vec![check(NAME, true, format!("first {BIT_STEPS} steps identical"))]
}

/// Main run with a per-step mass audit, then the fine Euler oracle.
fn endpoint_and_budget<O: RhsOperator<f64>>(
    cfg: &ModelConfig<f64>,
    state0: &State<f64>,
    ctl: &driftcomp::integrate::StepControl<f64>,
    tol: f64,
    make_op: &impl Fn() -> O,
) -> Vec<CheckResult> {
    const BUDGET: &str = "mass_budget";
    const ENDPOINT: &str = "oracle_endpoint_l2";
    let mut stepper = Stepper::new(cfg, make_op(), Scheme::Rk4, tol).with_budget();
    let mut previous = state0.clone();
    let mut worst = 0.0f64;
    let mut worst_t = state0.t;
    // Smallest step not shortened to land on a stop time.
    let mut dt_free = f64::INFINITY;
    let mut audit = |snap: &Snapshot<'_, f64>| {
        if snap.step > 0 && !snap.at_stop {
            dt_free = dt_free.min(snap.dt);
        }
        if let Some(budget) = snap.budget {
            let (ru, rv) = mass_budget_residual(&previous, snap.state, budget, &cfg.grid);
            let r = ru.max(rv);
            if !(r <= worst) {
                worst = r;
                worst_t = snap.state.t;
            }
        }
        previous.clone_from(snap.state);
        ObserverAction::Continue
    };
    let mut audit_ctl = ctl.clone();
    audit_ctl.observe_every = 1;
    let main = integrate_stepper(state0.clone(), &mut stepper, cfg, &audit_ctl, &mut [&mut audit]);
    let main = match main {
        Ok(m) => m,
        Err(e) => {
            let msg = format!("main integration failed: {e}");
            return vec![check(BUDGET, false, msg.clone()), check(ENDPOINT, false, msg)];
        }
    };
    let budget = check(
        BUDGET,
        worst <= MASS_BUDGET_TOLERANCE,
        format!("max per-step relative residual {worst:e} at t = {worst_t} (limit {MASS_BUDGET_TOLERANCE:e})"),
    );

    let dt = fine_euler_dt(cfg, state0).min(dt_free / 10.0);
    let endpoint = match euler_fine_run(cfg, state0, ctl.t_end, dt, 0) {
        Ok(run) => {
            let oracle = run.final_state();
            let rel = |a: &[f64], b: &[f64]| {
                let diff = l2_diff(a, b);
                let scale = b.iter().map(|x| x * x).sum::<f64>().sqrt();
                if scale == 0.0 {
                    if diff == 0.0 { 0.0 } else { f64::INFINITY }
                } else {
                    diff / scale
                }
            };
            let (eu, ev) = (rel(&main.state.u, &oracle.u), rel(&main.state.v, &oracle.v));
            check(
                ENDPOINT,
                eu <= ENDPOINT_TOLERANCE && ev <= ENDPOINT_TOLERANCE,
                format!("relative l2 difference u {eu:e}, v {ev:e} (limit {ENDPOINT_TOLERANCE}, oracle dt {dt:e})"),
            )
        }
        Err(e) => check(ENDPOINT, false, format!("oracle failed: {e}")),
    };
    vec![budget, endpoint]
}

/// `(t, ||v||_2)` series of the main run checked against the comparison ODE
/// fitted on its leading tenth.
fn bound_check<O: RhsOperator<f64>>(
    cfg: &ModelConfig<f64>,
    state0: &State<f64>,
    ctl: &driftcomp::integrate::StepControl<f64>,
    tol: f64,
    make_op: &impl Fn() -> O,
) -> CheckResult {
    const NAME: &str = "lq_bound";
    let series = match v_l2_series(cfg, state0, ctl, tol, make_op()) {
        Ok(s) => s,
        Err(e) => return check(NAME, false, format!("main integration failed: {e}")),
    };
    let m_max = cfg.resource.max();
    let (c1, c2, c3, n_fit) = fit_comparison_constants(&series, 2.0, m_max, cfg.grid.length(), BOUND_FIT_FRACTION);
    let bound = BoundCheckConfig { lebesgue_q: 2.0, ode_c1: c1, ode_c2: c2, ode_c3: c3, alpha: BOUND_ALPHA, tolerance: BOUND_TOLERANCE };
    let y0 = series.first().map_or(0.0, |s| s.1 * s.1);
    match lq_bound_check_from(&series, &bound, y0, n_fit) {
        Ok(report) => check(
            NAME,
            report.passed(),
            format!(
                "C1 = {c1:e}, C2 = {c2}, C3 = {c3}; {} violations, max relative excess {:e}",
                report.violations.len(),
                report.max_relative_excess
            ),
        ),
        Err(e) => check(NAME, false, e.to_string()),
    }
}

/// `(t, ||v||_2)` after every accepted step of the main integrator.
pub fn v_l2_series<O: RhsOperator<f64>>(
    cfg: &ModelConfig<f64>,
    state0: &State<f64>,
    ctl: &driftcomp::integrate::StepControl<f64>,
    tol: f64,
    op: O,
) -> Result<Vec<(f64, f64)>, driftcomp::integrate::IntegrateError<f64>> {
    let mut stepper = Stepper::new(cfg, op, Scheme::Rk4, tol);
    let mut series = Vec::new();
    let mut record = |snap: &Snapshot<'_, f64>| {
        let l2 = lq_norm(&snap.state.v, &cfg.grid, 2.0);
        if series.last().map_or(true, |&(t, _)| snap.state.t > t) {
            series.push((snap.state.t, l2));
        }
        ObserverAction::Continue
    };
    let mut rec_ctl = ctl.clone();
    rec_ctl.observe_every = 1;
    integrate_stepper(state0.clone(), &mut stepper, cfg, &rec_ctl, &mut [&mut record])?;
    Ok(series)
}
