//! Brute-force reference solvers used to cross-check the main integrator.
//!
//! Nothing here shares code with [`crate::operators`] or
//! [`crate::integrate`]: the right-hand side is rebuilt from plain loops over
//! cells and faces. The arithmetic is ordered exactly like the main path, so
//! a single RK4 step from the same state agrees bit for bit.

use crate::integrate::IntegrateError;
use crate::model::{DispersalSpec, ModelConfig, Species, State};
use crate::operators::OperatorError;
use crate::scalar::Real;

/// Which reference scheme produced an [`OracleRun`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleScheme {
    EulerFine,
    Rk4Independent,
}

/// A fixed-step reference trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleRun<T> {
    /// `(t, u, v)` samples, first and last included.
    pub trajectory: Vec<(T, Vec<T>, Vec<T>)>,
    pub scheme: OracleScheme,
    pub dt_fixed: T,
}

impl<T: Real> OracleRun<T> {
    /// Final sample as a [`State`].
    pub fn final_state(&self) -> State<T> {
        let (t, u, v) = self.trajectory.last().expect("trajectory holds the initial sample");
        State::new(*t, u.clone(), v.clone())
    }
}

fn face_coefficient<T: Real>(spec: &DispersalSpec<T>, g: T) -> Result<T, OperatorError> {
    let two = T::lit(2.0);
    let mut c = T::one();
    if spec.k != T::zero() && spec.p != two {
        let base = g * g + spec.epsilon;
        if base == T::zero() {
            return Err(OperatorError::SingularCoefficient);
        }
        c = base.powf((spec.p - two) * T::lit(0.5));
    }
    Ok(spec.d * ((T::one() - spec.k) + spec.k * c))
}

fn naive_species<T: Real>(
    f: &[T],
    spec: &DispersalSpec<T>,
    cfg: &ModelConfig<T>,
) -> Result<Vec<T>, OperatorError> {
    let n = f.len();
    let dx = cfg.grid.dx();
    let q = if cfg.drift_enabled { cfg.drift_q } else { T::zero() };
    let mut flux = vec![T::zero(); n + 1];
    for face in 1..n {
        let g = (f[face] - f[face - 1]) / dx;
        flux[face] = face_coefficient(spec, g)? * g - q * f[face - 1];
    }
    if cfg.drift_enabled {
        // Zero total flux upstream, pure advective outflow downstream.
        let inlet = cfg.drift_q * f[0];
        flux[0] = inlet - inlet;
        flux[n] = T::zero() - cfg.drift_q * f[n - 1];
    }
    let mut out = vec![T::zero(); n];
    for cell in 0..n {
        out[cell] = (flux[cell + 1] - flux[cell]) / dx;
    }
    Ok(out)
}

/// `(du/dt, dv/dt)` from an independent loop implementation.
pub fn naive_rhs<T: Real>(cfg: &ModelConfig<T>, u: &[T], v: &[T]) -> Result<(Vec<T>, Vec<T>), OperatorError> {
    let mut du = naive_species(u, &cfg.disp_u, cfg)?;
    let mut dv = naive_species(v, &cfg.disp_v, cfg)?;
    if cfg.reaction_enabled {
        for i in 0..u.len() {
            let free = cfg.resource.at(i) - u[i] - v[i];
            du[i] = du[i] + u[i] * free;
            dv[i] = dv[i] + v[i] * free;
        }
    }
    Ok((du, dv))
}

fn clip<T: Real>(f: &mut [T], tol: T, species: Species, t: T) -> Result<(), IntegrateError<T>> {
    for (cell, x) in f.iter_mut().enumerate() {
        if x.is_nan() || *x < -tol {
            return Err(IntegrateError::NegativityBlowup { species, cell, value: *x, t });
        }
        if *x < T::zero() {
            *x = T::zero();
        }
    }
    Ok(())
}

fn axpy<T: Real>(y: &[T], a: T, k: &[T]) -> Vec<T> {
    y.iter().zip(k).map(|(&y, &k)| y + a * k).collect()
}

/// One classical RK4 step of size `dt`, clipping like the main path with
/// tolerance `clip_tol`.
pub fn independent_rk4_step<T: Real>(
    cfg: &ModelConfig<T>,
    state: &State<T>,
    dt: T,
    clip_tol: T,
) -> Result<State<T>, IntegrateError<T>> {
    let half = dt / T::lit(2.0);
    let (k1u, k1v) = naive_rhs(cfg, &state.u, &state.v)?;
    let (k2u, k2v) = naive_rhs(cfg, &axpy(&state.u, half, &k1u), &axpy(&state.v, half, &k1v))?;
    let (k3u, k3v) = naive_rhs(cfg, &axpy(&state.u, half, &k2u), &axpy(&state.v, half, &k2v))?;
    let (k4u, k4v) = naive_rhs(cfg, &axpy(&state.u, dt, &k3u), &axpy(&state.v, dt, &k3v))?;
    let sixth = dt / T::lit(6.0);
    let two = T::lit(2.0);
    let n = state.n_cells();
    let mut u = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    for i in 0..n {
        u.push(state.u[i] + sixth * (k1u[i] + two * k2u[i] + two * k3u[i] + k4u[i]));
        v.push(state.v[i] + sixth * (k1v[i] + two * k2v[i] + two * k3v[i] + k4v[i]));
    }
    let t = state.t + dt;
    clip(&mut u, clip_tol, Species::U, t)?;
    clip(&mut v, clip_tol, Species::V, t)?;
    Ok(State::new(t, u, v))
}

/// Forward Euler with a fixed step, sampled every `record_every` steps.
/// The last step is shortened to land on `t_end`.
pub fn euler_fine_run<T: Real>(
    cfg: &ModelConfig<T>,
    ic: &State<T>,
    t_end: T,
    dt_fixed: T,
    record_every: usize,
) -> Result<OracleRun<T>, IntegrateError<T>> {
    if !(dt_fixed > T::zero()) {
        return Err(IntegrateError::NonPositiveStep { dt: dt_fixed });
    }
    let tol = T::lit(1e-12);
    let mut u = ic.u.clone();
    let mut v = ic.v.clone();
    let mut t = ic.t;
    let mut trajectory = vec![(t, u.clone(), v.clone())];
    let mut steps = 0usize;
    while t < t_end {
        let h = if t + dt_fixed >= t_end { t_end - t } else { dt_fixed };
        let (du, dv) = naive_rhs(cfg, &u, &v)?;
        for i in 0..u.len() {
            u[i] = u[i] + h * du[i];
            v[i] = v[i] + h * dv[i];
        }
        t = if h == dt_fixed { t + h } else { t_end };
        clip(&mut u, tol, Species::U, t)?;
        clip(&mut v, tol, Species::V, t)?;
        steps += 1;
        if t >= t_end || (record_every > 0 && steps % record_every == 0) {
            trajectory.push((t, u.clone(), v.clone()));
        }
    }
    Ok(OracleRun { trajectory, scheme: OracleScheme::EulerFine, dt_fixed })
}

/// Fixed-step RK4 run built on [`independent_rk4_step`].
pub fn rk4_independent_run<T: Real>(
    cfg: &ModelConfig<T>,
    ic: &State<T>,
    t_end: T,
    dt_fixed: T,
) -> Result<OracleRun<T>, IntegrateError<T>> {
    if !(dt_fixed > T::zero()) {
        return Err(IntegrateError::NonPositiveStep { dt: dt_fixed });
    }
    let mut state = ic.clone();
    let mut trajectory = vec![(state.t, state.u.clone(), state.v.clone())];
    while state.t < t_end {
        let h = if state.t + dt_fixed >= t_end { t_end - state.t } else { dt_fixed };
        let landing = h != dt_fixed;
        state = independent_rk4_step(cfg, &state, h, T::lit(1e-12))?;
        if landing {
            state.t = t_end;
        }
    }
    trajectory.push((state.t, state.u, state.v));
    Ok(OracleRun { trajectory, scheme: OracleScheme::Rk4Independent, dt_fixed })
}

/// Step for [`euler_fine_run`] that satisfies a CFL bound four times stricter
/// than the adaptive controller's, evaluated on `state`.
pub fn fine_euler_dt<T: Real>(cfg: &ModelConfig<T>, state: &State<T>) -> T {
    let dx = cfg.grid.dx();
    let mut d_max = T::zero();
    for (f, spec) in [(&state.u, &cfg.disp_u), (&state.v, &cfg.disp_v)] {
        // The regularized coefficient peaks at zero gradient.
        d_max = d_max.max(face_coefficient(spec, T::zero()).unwrap_or(T::infinity()));
        for i in 1..f.len() {
            let g = (f[i] - f[i - 1]) / dx;
            d_max = d_max.max(face_coefficient(spec, g).unwrap_or(T::infinity()));
        }
    }
    let tiny = T::epsilon();
    let q = if cfg.drift_enabled { cfg.drift_q } else { T::zero() };
    let bound = (dx * dx / (T::lit(2.0) * d_max.max(tiny))).min(dx / q.max(tiny));
    bound / T::lit(4.0)
}

/// `s(t)` for `s' = s (m - s)`, `s(0) = s0 >= 0`.
pub fn logistic<T: Real>(s0: T, m: T, t: T) -> T {
    if s0 == T::zero() {
        return T::zero();
    }
    let e = (m * t).exp();
    m * s0 * e / (m + s0 * (e - T::one()))
}

/// Spatially uniform `(u, v)` at time `t`: the total follows the logistic law
/// and the ratio `u / v` is conserved.
pub fn homogeneous_competition<T: Real>(u0: T, v0: T, m: T, t: T) -> (T, T) {
    let s0 = u0 + v0;
    if s0 == T::zero() {
        return (T::zero(), T::zero());
    }
    let s = logistic(s0, m, t);
    (s * u0 / s0, s * v0 / s0)
}

/// Dense solution of `Y' = c1 + c2 Y - c3 Y^(1 + 1/q)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonSolution<T> {
    pub times: Vec<T>,
    pub values: Vec<T>,
    /// Positive root of the right-hand side.
    pub equilibrium: T,
}

impl<T: Real> ComparisonSolution<T> {
    /// Linear interpolation, clamped to the solved interval.
    pub fn value_at(&self, t: T) -> T {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.values[0];
        }
        if t >= self.times[n - 1] {
            return self.values[n - 1];
        }
        let j = self.times.partition_point(|&s| s <= t);
        let (t0, t1) = (self.times[j - 1], self.times[j]);
        let w = (t - t0) / (t1 - t0);
        self.values[j - 1] + w * (self.values[j] - self.values[j - 1])
    }
}

fn comparison_rate<T: Real>(c1: T, c2: T, c3: T, q: T, y: T) -> T {
    let y = y.max(T::zero());
    c1 + c2 * y - c3 * y.powf(T::one() + T::one() / q)
}

/// Positive root of `c1 + c2 y - c3 y^(1 + 1/q)` by bisection.
pub fn comparison_equilibrium<T: Real>(c1: T, c2: T, c3: T, q: T) -> T {
    let f = |y: T| comparison_rate(c1, c2, c3, q, y);
    let mut hi = T::one();
    while f(hi) > T::zero() {
        hi = hi * T::lit(2.0);
    }
    let mut lo = T::zero();
    if c1 == T::zero() && c2 == T::zero() {
        return T::zero();
    }
    for _ in 0..200 {
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) * T::lit(0.5)
}

/// Fine-step RK4 solution of the comparison ODE on `[0, t_end]`.
///
/// The step is small against the linearized relaxation rate near both `y0`
/// and the equilibrium, so the discrete solution does not overshoot.
pub fn comparison_ode_solve<T: Real>(c1: T, c2: T, c3: T, q: T, y0: T, t_end: T) -> ComparisonSolution<T> {
    let equilibrium = comparison_equilibrium(c1, c2, c3, q);
    let y_top = y0.max(equilibrium).max(T::one());
    let stiffness = c2.abs() + c3 * (T::one() + T::one() / q) * y_top.powf(T::one() / q);
    let mut h = T::lit(1e-3).min(T::lit(0.05) / stiffness.max(T::epsilon()));
    if t_end > T::zero() {
        h = h.min(t_end / T::lit(100.0));
    }
    let rate = |y: T| comparison_rate(c1, c2, c3, q, y);
    let mut times = vec![T::zero()];
    let mut values = vec![y0];
    let (mut t, mut y) = (T::zero(), y0);
    while t < t_end {
        let dt = if t + h >= t_end { t_end - t } else { h };
        let k1 = rate(y);
        let k2 = rate(y + dt * T::lit(0.5) * k1);
        let k3 = rate(y + dt * T::lit(0.5) * k2);
        let k4 = rate(y + dt * k3);
        y = y + dt / T::lit(6.0) * (k1 + T::lit(2.0) * k2 + T::lit(2.0) * k3 + k4);
        t = if dt == h { t + dt } else { t_end };
        times.push(t);
        values.push(y);
    }
    ComparisonSolution { times, values, equilibrium }
}
