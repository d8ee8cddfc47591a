//! Explicit time stepping of the semi-discrete system.
//!
//! The step size comes from the worst-face stability bound of the state about
//! to be advanced. The first Runge-Kutta stage is evaluated at that same
//! state, so the bound costs no extra right-hand-side evaluation.

use thiserror::Error;

use crate::model::{ModelConfig, Species, State};
use crate::operators::{reaction, FluxFormRhs, OperatorError, RhsOperator, RhsSummary};
use crate::scalar::Real;

/// Step-size policy and stopping time.
#[derive(Clone, Debug, PartialEq)]
pub struct StepControl<T> {
    /// Fraction of the stability bound actually used, in `(0, 1]`.
    pub cfl_safety: T,
    pub dt_max: T,
    pub dt_min: T,
    pub t_end: T,
    /// Negative values above `-nonneg_clip_tolerance` are set to zero.
    pub nonneg_clip_tolerance: T,
    /// Use this step instead of the adaptive one.
    pub fixed_dt: Option<T>,
    /// Observers also run every this many steps (0 disables).
    pub observe_every: usize,
    /// Times the integrator lands on exactly and reports to observers.
    pub stops: Vec<T>,
}

impl<T: Real> StepControl<T> {
    pub fn new(t_end: T) -> Self {
        Self {
            cfl_safety: T::lit(0.4),
            dt_max: T::lit(0.05),
            dt_min: T::lit(1e-12),
            t_end,
            nonneg_clip_tolerance: T::lit(1e-12),
            fixed_dt: None,
            observe_every: 0,
            stops: Vec::new(),
        }
    }

    pub fn with_fixed_dt(mut self, dt: T) -> Self {
        self.fixed_dt = Some(dt);
        self
    }

    /// Problems with the control parameters, as human-readable strings.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.cfl_safety > T::zero() && self.cfl_safety <= T::one()) {
            out.push(format!("cfl_safety = {} must lie in (0, 1]", self.cfl_safety));
        }
        if !(self.dt_min > T::zero()) || !(self.dt_max > T::zero()) || self.dt_min > self.dt_max {
            out.push(format!("need 0 < dt_min ({}) <= dt_max ({})", self.dt_min, self.dt_max));
        }
        if !(self.t_end >= T::zero()) || !self.t_end.is_finite() {
            out.push(format!("t_end = {} must be finite and nonnegative", self.t_end));
        }
        if !(self.nonneg_clip_tolerance >= T::zero()) {
            out.push("nonneg_clip_tolerance must be nonnegative".to_string());
        }
        if let Some(dt) = self.fixed_dt {
            if !(dt > T::zero()) {
                out.push(format!("fixed_dt = {dt} must be positive"));
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum IntegrateError<T: Real> {
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error("DT_UNDERFLOW: stable step {dt} fell below dt_min = {dt_min}")]
    DtUnderflow { dt: T, dt_min: T },
    #[error("NEGATIVITY_BLOWUP: {species}[{cell}] = {value} at t = {t}")]
    NegativityBlowup { species: Species, cell: usize, value: T, t: T },
    #[error("NON_POSITIVE_STEP: dt = {dt}")]
    NonPositiveStep { dt: T },
    #[error("HALTED_BY_OBSERVER: {reason}")]
    HaltedByObserver { reason: String, state: Box<State<T>>, steps: usize },
}

impl<T: Real> IntegrateError<T> {
    pub fn code(&self) -> &'static str {
        match self {
            IntegrateError::Operator(OperatorError::SingularCoefficient) => "SINGULAR_COEFFICIENT",
            IntegrateError::DtUnderflow { .. } => "DT_UNDERFLOW",
            IntegrateError::NegativityBlowup { .. } => "NEGATIVITY_BLOWUP",
            IntegrateError::NonPositiveStep { .. } => "NON_POSITIVE_STEP",
            IntegrateError::HaltedByObserver { .. } => "HALTED_BY_OBSERVER",
        }
    }

    /// Halts requested by an observer are not numerical failures.
    pub fn is_numerical_failure(&self) -> bool {
        !matches!(self, IntegrateError::HaltedByObserver { .. })
    }
}

/// Stability-limited step from quantities of one rhs evaluation.
pub fn dt_from_summary<T: Real>(
    summary: &RhsSummary<T>,
    cfg: &ModelConfig<T>,
    ctl: &StepControl<T>,
) -> Result<T, IntegrateError<T>> {
    let guard = T::epsilon();
    let dx = cfg.grid.dx();
    let diffusion = dx * dx / (T::lit(2.0) * summary.max_diffusivity.max(guard));
    let advection = dx / cfg.effective_drift().max(guard);
    let growth = T::one() / summary.reaction_rate.max(guard);
    let dt = ctl.cfl_safety * diffusion.min(advection).min(growth);
    if !(dt >= ctl.dt_min) {
        return Err(IntegrateError::DtUnderflow { dt, dt_min: ctl.dt_min });
    }
    Ok(dt.min(ctl.dt_max))
}

/// Largest stable explicit step for `state`.
pub fn stable_dt<T: Real>(state: &State<T>, cfg: &ModelConfig<T>, ctl: &StepControl<T>) -> Result<T, IntegrateError<T>> {
    let d_max = crate::operators::max_face_diffusivity(&state.u, &cfg.disp_u, &cfg.grid)
        .max(crate::operators::max_face_diffusivity(&state.v, &cfg.disp_v, &cfg.grid));
    let mut reaction_rate = T::zero();
    if cfg.reaction_enabled {
        let two = T::lit(2.0);
        for i in 0..state.n_cells() {
            let (u, v, m) = (state.u[i], state.v[i], cfg.resource.at(i));
            let row_u = (m - two * u - v).abs() + u.abs();
            let row_v = (m - u - two * v).abs() + v.abs();
            reaction_rate = reaction_rate.max(row_u).max(row_v);
        }
    }
    let summary = RhsSummary { max_diffusivity: d_max, reaction_rate, rhs_sup: T::zero() };
    dt_from_summary(&summary, cfg, ctl)
}

/// Time discretization used by [`Stepper`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    /// Classical four-stage Runge-Kutta.
    Rk4,
    ForwardEuler,
}

/// Net mass source of one accepted step as seen by the scheme's own stage
/// quadrature: `dt * sum_s b_s (integral of reaction - downstream outflow)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepBudget<T> {
    pub dt: T,
    pub source_u: T,
    pub source_v: T,
    /// Mass added by clipping small negative values to zero.
    pub clipped_u: T,
    pub clipped_v: T,
}

/// Advances a state one step at a time with a fixed scheme and operator.
pub struct Stepper<'c, T: Real, O: RhsOperator<T> = FluxFormRhs<'c, T>> {
    cfg: &'c ModelConfig<T>,
    op: O,
    scheme: Scheme,
    clip_tol: T,
    record_budget: bool,
    k: [Vec<T>; 8],
    stage_u: Vec<T>,
    stage_v: Vec<T>,
    resource: Vec<T>,
    pending: Option<RhsSummary<T>>,
    budget: Option<StepBudget<T>>,
}

impl<'c, T: Real> Stepper<'c, T> {
    /// Stepper over the standard flux-form operator.
    pub fn for_config(cfg: &'c ModelConfig<T>, scheme: Scheme, clip_tol: T) -> Self {
        Self::new(cfg, FluxFormRhs::new(cfg), scheme, clip_tol)
    }
}

impl<'c, T: Real, O: RhsOperator<T>> Stepper<'c, T, O> {
    pub fn new(cfg: &'c ModelConfig<T>, op: O, scheme: Scheme, clip_tol: T) -> Self {
        let n = op.n_cells();
        Self {
            cfg,
            op,
            scheme,
            clip_tol,
            record_budget: false,
            k: std::array::from_fn(|_| vec![T::zero(); n]),
            stage_u: vec![T::zero(); n],
            stage_v: vec![T::zero(); n],
            resource: cfg.resource.to_profile(n),
            pending: None,
            budget: None,
        }
    }

    /// Also record a [`StepBudget`] for every step.
    pub fn with_budget(mut self) -> Self {
        self.record_budget = true;
        self
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// Budget of the most recent step, if recording is enabled.
    pub fn last_budget(&self) -> Option<&StepBudget<T>> {
        self.budget.as_ref()
    }

    /// Evaluates the first stage at `state`. The next [`Stepper::advance`]
    /// reuses it, so `state` must not change in between.
    pub fn prepare(&mut self, state: &State<T>) -> Result<RhsSummary<T>, IntegrateError<T>> {
        let [k1u, k1v, ..] = &mut self.k;
        let summary = self.op.eval(&state.u, &state.v, k1u, k1v)?;
        self.pending = Some(summary);
        Ok(summary)
    }

    /// One step of size `dt`; `state.t` advances by `dt`.
    pub fn advance(&mut self, state: &mut State<T>, dt: T) -> Result<(), IntegrateError<T>> {
        if !(dt > T::zero()) {
            return Err(IntegrateError::NonPositiveStep { dt });
        }
        if self.pending.take().is_none() {
            self.prepare(state)?;
            self.pending = None;
        }
        let n = state.n_cells();
        let record = self.record_budget;
        let mut source = (T::zero(), T::zero());
        if record {
            source = stage_source(self.cfg, &self.resource, &state.u, &state.v);
        }
        match self.scheme {
            Scheme::ForwardEuler => {
                let [k1u, k1v, ..] = &self.k;
                for i in 0..n {
                    state.u[i] = state.u[i] + dt * k1u[i];
                    state.v[i] = state.v[i] + dt * k1v[i];
                }
            }
            Scheme::Rk4 => {
                let half = dt / T::lit(2.0);
                let two = T::lit(2.0);
                for (stage, step) in [(1usize, half), (2, half), (3, dt)] {
                    let (done, todo) = self.k.split_at_mut(2 * stage);
                    let (prev_u, prev_v) = (&done[2 * stage - 2], &done[2 * stage - 1]);
                    for i in 0..n {
                        self.stage_u[i] = state.u[i] + step * prev_u[i];
                        self.stage_v[i] = state.v[i] + step * prev_v[i];
                    }
                    let (ku, kv) = todo.split_at_mut(1);
                    self.op.eval(&self.stage_u, &self.stage_v, &mut ku[0], &mut kv[0])?;
                    if record {
                        let weight = if stage == 3 { T::one() } else { two };
                        let (a, b) = stage_source(self.cfg, &self.resource, &self.stage_u, &self.stage_v);
                        source = (source.0 + weight * a, source.1 + weight * b);
                    }
                }
                let sixth = dt / T::lit(6.0);
                let [k1u, k1v, k2u, k2v, k3u, k3v, k4u, k4v] = &self.k;
                for i in 0..n {
                    state.u[i] = state.u[i] + sixth * (k1u[i] + two * k2u[i] + two * k3u[i] + k4u[i]);
                    state.v[i] = state.v[i] + sixth * (k1v[i] + two * k2v[i] + two * k3v[i] + k4v[i]);
                }
                source = (source.0 / T::lit(6.0), source.1 / T::lit(6.0));
            }
        }
        state.t = state.t + dt;
        let clipped_u = clip_field(&mut state.u, self.clip_tol, Species::U, state.t)?;
        let clipped_v = clip_field(&mut state.v, self.clip_tol, Species::V, state.t)?;
        if self.record_budget {
            let dx = self.cfg.grid.dx();
            self.budget = Some(StepBudget {
                dt,
                source_u: dt * source.0,
                source_v: dt * source.1,
                clipped_u: clipped_u * dx,
                clipped_v: clipped_v * dx,
            });
        }
        Ok(())
    }
}

/// Net source of mass at a stage state: integral of the reaction minus the
/// downstream outflow, computed from the state alone.
fn stage_source<T: Real>(cfg: &ModelConfig<T>, resource: &[T], u: &[T], v: &[T]) -> (T, T) {
    let dx = cfg.grid.dx();
    let (mut ru, mut rv) = (T::zero(), T::zero());
    if cfg.reaction_enabled {
        for i in 0..u.len() {
            let (a, b) = reaction(u[i], v[i], resource[i]);
            ru = ru + a;
            rv = rv + b;
        }
    }
    let q = cfg.effective_drift();
    let n = u.len();
    (ru * dx - q * u[n - 1], rv * dx - q * v[n - 1])
}

/// Clips values in `[-tol, 0)` to zero and returns the mass added.
fn clip_field<T: Real>(field: &mut [T], tol: T, species: Species, t: T) -> Result<T, IntegrateError<T>> {
    let mut added = T::zero();
    for (cell, x) in field.iter_mut().enumerate() {
        if *x < T::zero() {
            if *x < -tol || x.is_nan() {
                return Err(IntegrateError::NegativityBlowup { species, cell, value: *x, t });
            }
            added = added - *x;
            *x = T::zero();
        } else if x.is_nan() {
            return Err(IntegrateError::NegativityBlowup { species, cell, value: *x, t });
        }
    }
    Ok(added)
}

/// One classical Runge-Kutta step with the default clip tolerance.
pub fn rk4_step<T: Real>(state: &State<T>, dt: T, cfg: &ModelConfig<T>) -> Result<State<T>, IntegrateError<T>> {
    let mut next = state.clone();
    Stepper::for_config(cfg, Scheme::Rk4, T::lit(1e-12)).advance(&mut next, dt)?;
    Ok(next)
}

/// Read-only view handed to observers.
pub struct Snapshot<'a, T> {
    pub state: &'a State<T>,
    pub step: usize,
    /// Size of the step that produced `state` (zero for the initial state).
    pub dt: T,
    /// `max |rhs|` at `state`.
    pub rhs_sup: T,
    /// True when `state.t` is one of the requested stop times or `t_end`.
    pub at_stop: bool,
    /// Budget of the step that produced `state`, when recorded.
    pub budget: Option<&'a StepBudget<T>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ObserverAction {
    Continue,
    Halt(String),
}

pub trait Observer<T> {
    fn observe(&mut self, snapshot: &Snapshot<'_, T>) -> ObserverAction;
}

impl<T, F> Observer<T> for F
where
    F: FnMut(&Snapshot<'_, T>) -> ObserverAction,
{
    fn observe(&mut self, snapshot: &Snapshot<'_, T>) -> ObserverAction {
        self(snapshot)
    }
}

/// Result of a completed integration.
#[derive(Clone, Debug, PartialEq)]
pub struct Integration<T> {
    pub state: State<T>,
    pub steps: usize,
    /// Smallest and largest accepted steps (`None` when no step was taken).
    pub dt_range: Option<(T, T)>,
}

/// Options beyond [`StepControl`] for [`integrate_with`].
#[derive(Clone, Copy, Debug)]
pub struct IntegrateOptions {
    pub scheme: Scheme,
    pub record_budget: bool,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self { scheme: Scheme::Rk4, record_budget: false }
    }
}

/// Integrates from `state0` to `ctl.t_end` with classical RK4.
pub fn integrate<T: Real>(
    state0: State<T>,
    cfg: &ModelConfig<T>,
    ctl: &StepControl<T>,
    observers: &mut [&mut dyn Observer<T>],
) -> Result<Integration<T>, IntegrateError<T>> {
    integrate_with(state0, cfg, ctl, observers, IntegrateOptions::default())
}

pub fn integrate_with<T: Real>(
    state0: State<T>,
    cfg: &ModelConfig<T>,
    ctl: &StepControl<T>,
    observers: &mut [&mut dyn Observer<T>],
    opts: IntegrateOptions,
) -> Result<Integration<T>, IntegrateError<T>> {
    let mut stepper = Stepper::for_config(cfg, opts.scheme, ctl.nonneg_clip_tolerance);
    if opts.record_budget {
        stepper = stepper.with_budget();
    }
    integrate_stepper(state0, &mut stepper, cfg, ctl, observers)
}

/// The shared loop: stability bound, step, observe, until `t_end`.
pub fn integrate_stepper<T: Real, O: RhsOperator<T>>(
    state0: State<T>,
    stepper: &mut Stepper<'_, T, O>,
    cfg: &ModelConfig<T>,
    ctl: &StepControl<T>,
    observers: &mut [&mut dyn Observer<T>],
) -> Result<Integration<T>, IntegrateError<T>> {
    let mut state = state0;
    let mut stops: Vec<T> = ctl.stops.iter().copied().filter(|&s| s > state.t && s < ctl.t_end).collect();
    stops.sort_by(|a, b| a.partial_cmp(b).expect("finite stop times"));
    stops.push(ctl.t_end);
    let mut next_stop = 0usize;
    let mut steps = 0usize;
    let mut last_dt = T::zero();
    let mut dt_range: Option<(T, T)> = None;
    let mut at_stop = true;
    loop {
        let done = state.t >= ctl.t_end;
        let summary = if done && observers.is_empty() { None } else { Some(stepper.prepare(&state)?) };
        let periodic = ctl.observe_every > 0 && steps % ctl.observe_every == 0;
        if let Some(summary) = summary {
            if steps == 0 || periodic || at_stop || done {
                let snap = Snapshot {
                    state: &state,
                    step: steps,
                    dt: last_dt,
                    rhs_sup: summary.rhs_sup,
                    at_stop: at_stop || done,
                    budget: if steps > 0 { stepper.last_budget() } else { None },
                };
                for obs in observers.iter_mut() {
                    if let ObserverAction::Halt(reason) = obs.observe(&snap) {
                        return Err(IntegrateError::HaltedByObserver { reason, state: Box::new(state), steps });
                    }
                }
            }
        }
        if done {
            break;
        }
        let summary = summary.expect("rhs prepared while running");
        let mut dt = match ctl.fixed_dt {
            Some(dt) => dt,
            None => dt_from_summary(&summary, cfg, ctl)?,
        };
        while next_stop < stops.len() && stops[next_stop] <= state.t {
            next_stop += 1;
        }
        let target = stops[next_stop.min(stops.len() - 1)];
        at_stop = false;
        if state.t + dt >= target {
            dt = target - state.t;
            at_stop = true;
        }
        stepper.advance(&mut state, dt)?;
        if at_stop {
            state.t = target;
        }
        steps += 1;
        last_dt = dt;
        // Truncated landing steps do not count toward the accepted range.
        if !at_stop || dt_range.is_none() {
            dt_range = Some(match dt_range {
                None => (dt, dt),
                Some((lo, hi)) => (lo.min(dt), hi.max(dt)),
            });
        }
    }
    Ok(Integration { state, steps, dt_range })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DispersalSpec, Grid, Resource};
    use approx::assert_relative_eq;

    fn cfg(n: usize, drift: bool) -> ModelConfig<f64> {
        ModelConfig {
            grid: Grid::new(1.0, n),
            disp_u: DispersalSpec::linear(0.2),
            disp_v: DispersalSpec::linear(0.3),
            drift_q: 0.5,
            resource: Resource::Uniform(1.0),
            drift_enabled: drift,
            reaction_enabled: true,
        }
    }

    fn logistic(s0: f64, m: f64, t: f64) -> f64 {
        m / (1.0 + ((m - s0) / s0) * (-m * t).exp())
    }

    #[test]
    fn textbook_diffusion_limit() {
        let mut c = cfg(300, false);
        c.disp_u = DispersalSpec::linear(0.0);
        c.reaction_enabled = false;
        let ctl = StepControl::new(1.0);
        let dt = stable_dt(&State::uniform(300, 0.0, 0.5), &c, &ctl).unwrap();
        let dx = 1.0 / 300.0;
        assert_relative_eq!(dt, 0.4 * dx * dx / (2.0 * 0.3), max_relative = 1e-12);
    }

    #[test]
    fn fast_diffusion_limit_on_flat_state() {
        let mut c = cfg(300, false);
        c.disp_v = DispersalSpec::fast(0.3, 1.75, 1e-4);
        c.reaction_enabled = false;
        let ctl = StepControl::new(1.0);
        let dt = stable_dt(&State::uniform(300, 0.2, 0.2), &c, &ctl).unwrap();
        let dx = 1.0 / 300.0;
        let d_max = 0.3 * 10f64.sqrt();
        assert_relative_eq!(d_max, 0.9486832980505138, max_relative = 1e-12);
        assert_relative_eq!(dt, 0.4 * dx * dx / (2.0 * d_max), max_relative = 1e-12);
    }

    #[test]
    fn unregularized_flat_state_underflows() {
        let mut c = cfg(16, false);
        c.disp_v = DispersalSpec::fast(0.3, 1.75, 0.0);
        let err = stable_dt(&State::uniform(16, 0.2, 0.2), &c, &StepControl::new(1.0)).unwrap_err();
        assert_eq!(err.code(), "DT_UNDERFLOW");
    }

    #[test]
    fn fixed_point_is_preserved() {
        let c = cfg(16, false);
        let s = State::uniform(16, 0.0, 1.0);
        let next = rk4_step(&s, 0.01, &c).unwrap();
        assert_eq!(next.u, s.u);
        assert_eq!(next.v, s.v);
        assert_eq!(next.t, 0.01);
    }

    #[test]
    fn single_step_matches_logistic_to_fifth_order() {
        let c = cfg(8, false);
        let s = State::uniform(8, 0.1, 0.1);
        let dt = 0.01;
        let next = rk4_step(&s, dt, &c).unwrap();
        let exact = logistic(0.2, 1.0, dt);
        // u and v stay equal; their sum follows the logistic law.
        let err = (next.u[0] + next.v[0] - exact).abs();
        assert!(err < 1e-11, "err = {err:e}");
    }

    #[test]
    fn negativity_blowup_is_reported() {
        let c = cfg(8, false);
        let mut s = State::uniform(8, 0.1, 0.1);
        s.u[3] = 5.0;
        let err = rk4_step(&s, 1.0, &c).unwrap_err();
        assert_eq!(err.code(), "NEGATIVITY_BLOWUP");
    }

    #[test]
    fn zero_horizon_returns_initial_state() {
        let c = cfg(8, true);
        let s = State::new(0.0, vec![0.1; 8], vec![0.3; 8]);
        let out = integrate(s.clone(), &c, &StepControl::new(0.0), &mut []).unwrap();
        assert_eq!(out.state, s);
        assert_eq!(out.steps, 0);
    }

    #[test]
    fn lands_exactly_on_stops_and_end() {
        let c = cfg(8, true);
        let mut ctl = StepControl::new(0.7);
        ctl.stops = vec![0.25, 0.5];
        let mut seen = Vec::new();
        let mut obs = |snap: &Snapshot<'_, f64>| {
            if snap.at_stop {
                seen.push(snap.state.t);
            }
            ObserverAction::Continue
        };
        let out = integrate(State::uniform(8, 0.1, 0.2), &c, &ctl, &mut [&mut obs]).unwrap();
        assert_eq!(out.state.t, 0.7);
        assert_eq!(seen, vec![0.0, 0.25, 0.5, 0.7]);
    }

    #[test]
    fn observer_can_halt() {
        let c = cfg(8, false);
        let mut ctl = StepControl::new(10.0);
        ctl.observe_every = 1;
        let mut obs = |snap: &Snapshot<'_, f64>| {
            if snap.state.t > 0.1 {
                ObserverAction::Halt("enough".into())
            } else {
                ObserverAction::Continue
            }
        };
        let err = integrate(State::uniform(8, 0.1, 0.2), &c, &ctl, &mut [&mut obs]).unwrap_err();
        match err {
            IntegrateError::HaltedByObserver { reason, state, .. } => {
                assert_eq!(reason, "enough");
                assert!(state.t > 0.1 && state.t < 0.2);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn cadence_does_not_change_trajectory() {
        let c = cfg(12, true);
        let s = State::new(0.0, (0..12).map(|i| 0.1 + 0.05 * i as f64).collect(), vec![0.3; 12]);
        let mut a = StepControl::new(0.3);
        a.observe_every = 1;
        let mut b = a.clone();
        b.observe_every = 7;
        let mut count = 0usize;
        let mut obs = |_: &Snapshot<'_, f64>| {
            count += 1;
            ObserverAction::Continue
        };
        let ra = integrate(s.clone(), &c, &a, &mut [&mut obs]).unwrap();
        let rb = integrate(s, &c, &b, &mut []).unwrap();
        assert_eq!(ra, rb);
        assert!(count > 1);
    }

    #[test]
    fn budget_closes_for_euler_with_constant_field() {
        let mut c = cfg(8, true);
        c.reaction_enabled = false;
        let mut stepper = Stepper::for_config(&c, Scheme::ForwardEuler, 1e-12).with_budget();
        let mut s = State::new(0.0, vec![0.0; 8], vec![0.4; 8]);
        let before: f64 = s.v.iter().sum::<f64>() * c.grid.dx();
        stepper.advance(&mut s, 0.001).unwrap();
        let after: f64 = s.v.iter().sum::<f64>() * c.grid.dx();
        let b = stepper.last_budget().unwrap();
        assert_relative_eq!(b.source_v, -0.5 * 0.4 * 0.001, max_relative = 1e-14);
        assert_relative_eq!(after - before, b.source_v, max_relative = 1e-12);
    }

    #[test]
    fn control_validation() {
        let mut ctl = StepControl::<f64>::new(1.0);
        assert!(ctl.violations().is_empty());
        ctl.cfl_safety = 1.5;
        ctl.dt_min = 1.0;
        ctl.dt_max = 0.1;
        assert_eq!(ctl.violations().len(), 2);
    }
}
