//! Norms, mass budgets, outcome classification and checks of the a-priori
//! bounds that solutions are known to satisfy.

use thiserror::Error;

use crate::integrate::StepBudget;
use crate::model::{Grid, Outcome, State, Verdict};
use crate::scalar::Real;

/// Discrete Lebesgue norm `(sum_i |f_i|^q dx)^(1/q)`; `q = inf` gives the max.
pub fn lq_norm<T: Real>(field: &[T], grid: &Grid<T>, q: T) -> T {
    if q.is_infinite() {
        return sup_norm(field);
    }
    if q == T::one() {
        return field.iter().map(|x| x.abs()).sum::<T>() * grid.dx();
    }
    if q == T::lit(2.0) {
        return (field.iter().map(|&x| x * x).sum::<T>() * grid.dx()).sqrt();
    }
    // Scale by the max so large q cannot overflow.
    let top = sup_norm(field);
    if top == T::zero() {
        return T::zero();
    }
    let sum: T = field.iter().map(|&x| (x.abs() / top).powf(q)).sum();
    top * (sum * grid.dx()).powf(T::one() / q)
}

pub fn sup_norm<T: Real>(field: &[T]) -> T {
    field.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()))
}

/// Total population `sum_i f_i dx`.
pub fn mass<T: Real>(field: &[T], grid: &Grid<T>) -> T {
    field.iter().copied().sum::<T>() * grid.dx()
}

/// Norms of both species at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct NormReport<T> {
    pub t: T,
    pub u_l1: T,
    pub u_l2: T,
    pub u_sup: T,
    pub v_l1: T,
    pub v_l2: T,
    pub v_sup: T,
    /// `(q, ||v||_q)` for each extra requested exponent.
    pub v_lq: Vec<(T, T)>,
}

impl<T: Real> NormReport<T> {
    pub fn of(state: &State<T>, grid: &Grid<T>, extra_q: &[T]) -> Self {
        let one = T::one();
        let two = T::lit(2.0);
        Self {
            t: state.t,
            u_l1: lq_norm(&state.u, grid, one),
            u_l2: lq_norm(&state.u, grid, two),
            u_sup: sup_norm(&state.u),
            v_l1: lq_norm(&state.v, grid, one),
            v_l2: lq_norm(&state.v, grid, two),
            v_sup: sup_norm(&state.v),
            v_lq: extra_q.iter().map(|&q| (q, lq_norm(&state.v, grid, q))).collect(),
        }
    }
}

/// Relative mass-budget residuals `(res_u, res_v)` of one accepted step.
///
/// `budget` is the net source the stepper integrated with its own stage
/// weights, so for a conservative scheme the residual is pure roundoff.
/// Each residual is `|delta mass - source| / max(mass before, mass after,
/// |source|)`, and zero when all three vanish.
pub fn mass_budget_residual<T: Real>(before: &State<T>, after: &State<T>, budget: &StepBudget<T>, grid: &Grid<T>) -> (T, T) {
    let rel = |f0: &[T], f1: &[T], source: T| {
        let (m0, m1) = (mass(f0, grid), mass(f1, grid));
        let scale = m0.abs().max(m1.abs()).max(source.abs());
        if scale == T::zero() {
            T::zero()
        } else {
            ((m1 - m0) - source).abs() / scale
        }
    };
    (rel(&before.u, &after.u, budget.source_u + budget.clipped_u), rel(&before.v, &after.v, budget.source_v + budget.clipped_v))
}

/// Exclusion and survival levels used to classify an end state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thresholds<T> {
    pub exclusion: T,
    pub survival: T,
}

impl<T: Real> Thresholds<T> {
    /// Defaults: exclusion at `1e-3 m`, survival at `1e-1 m`.
    pub fn relative_to(m_ref: T) -> Self {
        Self { exclusion: T::lit(1e-3) * m_ref, survival: T::lit(1e-1) * m_ref }
    }
}

/// Classifies an end state by its sup norms.
///
/// A state at `t = 0` has seen no dynamics and is always `UNDECIDED`.
pub fn classify_outcome<T: Real>(state: &State<T>, grid: &Grid<T>, thresholds: &Thresholds<T>) -> Outcome<T> {
    let u_sup = sup_norm(&state.u);
    let v_sup = sup_norm(&state.v);
    let verdict = if state.t <= T::zero() {
        Verdict::Undecided
    } else {
        verdict_from_norms(u_sup, v_sup, thresholds)
    };
    Outcome {
        verdict,
        t_final: state.t,
        u_sup,
        v_sup,
        v_l2: lq_norm(&state.v, grid, T::lit(2.0)),
        extinction_time: None,
    }
}

/// The sup-norm rule behind [`classify_outcome`].
pub fn verdict_from_norms<T: Real>(u_sup: T, v_sup: T, th: &Thresholds<T>) -> Verdict {
    if v_sup < th.exclusion && u_sup > th.survival {
        Verdict::UWins
    } else if u_sup < th.exclusion && v_sup > th.survival {
        Verdict::VWins
    } else if u_sup > th.survival && v_sup > th.survival {
        Verdict::Coexist
    } else {
        Verdict::Undecided
    }
}

/// One observation for [`steady_state_detector`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RhsSample<T> {
    pub rhs_sup: T,
    pub state_sup: T,
}

/// True iff the last `window` samples all have `rhs_sup / max(state_sup, 1) < tol`.
pub fn steady_state_detector<T: Real>(samples: &[RhsSample<T>], tol: T, window: usize) -> bool {
    let window = window.max(1);
    if samples.len() < window {
        return false;
    }
    samples[samples.len() - window..]
        .iter()
        .all(|s| s.rhs_sup / s.state_sup.max(T::one()) < tol)
}

/// Earliest time at which `(t, ||v||_2)` drops below `threshold` while the
/// series is locally non-increasing (the previous sample is not smaller and
/// the next is not larger). Transient dips are ignored.
pub fn extinction_detector<T: Real>(series: &[(T, T)], threshold: T) -> Option<T> {
    for (i, &(t, y)) in series.iter().enumerate() {
        if y >= threshold {
            continue;
        }
        let falling_in = i == 0 || series[i - 1].1 >= y;
        let staying = i + 1 == series.len() || series[i + 1].1 <= y;
        if falling_in && staying {
            return Some(t);
        }
    }
    None
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum BoundError {
    #[error("CONSTANTS_INFEASIBLE: comparison solution overflowed at t = {t}")]
    ConstantsInfeasible { t: f64 },
    #[error("INVALID_BOUND_CONFIG: {0}")]
    InvalidConfig(String),
}

/// Constants of the comparison law `Y' = C1 + C2 Y - C3 Y^(1 + 1/q)` for
/// `Y = ||v||_q^q`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundCheckConfig<T> {
    pub lebesgue_q: T,
    pub ode_c1: T,
    pub ode_c2: T,
    pub ode_c3: T,
    /// Sublinear exponent of the extinction inequality, in `(0, 1)`.
    pub alpha: T,
    /// Allowed relative excess of the measured value over the envelope.
    pub tolerance: T,
}

impl<T: Real> BoundCheckConfig<T> {
    fn check(&self) -> Result<(), BoundError> {
        let bad = |msg: &str| Err(BoundError::InvalidConfig(msg.to_string()));
        if !(self.lebesgue_q >= T::one()) {
            return bad("lebesgue_q must be >= 1");
        }
        if !(self.ode_c3 > T::zero()) {
            return bad("ode_c3 must be positive");
        }
        if !(self.ode_c1 >= T::zero() && self.ode_c2 >= T::zero()) {
            return bad("ode_c1 and ode_c2 must be nonnegative");
        }
        if !(self.alpha > T::zero() && self.alpha < T::one()) {
            return bad("alpha must lie in (0, 1)");
        }
        Ok(())
    }

    #[inline]
    fn rate(&self, y: T) -> T {
        let y = y.max(T::zero());
        let expo = T::one() + T::one() / self.lebesgue_q;
        self.ode_c1 + self.ode_c2 * y - self.ode_c3 * y.powf(expo)
    }
}

/// A sample where the measured value exceeded the envelope.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundViolation<T> {
    pub t: T,
    pub measured: T,
    pub envelope: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport<T> {
    /// `(t, Y(t))` of the comparison solution at each checked sample.
    pub envelope: Vec<(T, T)>,
    pub violations: Vec<BoundViolation<T>>,
    /// Largest `measured / envelope - 1` over checked samples (may be negative).
    pub max_relative_excess: T,
}

impl<T> BoundReport<T> {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Advances the comparison law from `(t, y)` to `t_target` with fine RK4 steps.
fn envelope_advance<T: Real>(cfg: &BoundCheckConfig<T>, mut t: T, mut y: T, t_target: T) -> Result<T, BoundError> {
    let expo = T::one() + T::one() / cfg.lebesgue_q;
    while t < t_target {
        let stiffness = cfg.ode_c2 + cfg.ode_c3 * expo * y.max(T::one()).powf(T::one() / cfg.lebesgue_q);
        let h = T::lit(1e-3).min(T::lit(0.05) / stiffness.max(T::epsilon())).min(t_target - t);
        let k1 = cfg.rate(y);
        let k2 = cfg.rate(y + h * T::lit(0.5) * k1);
        let k3 = cfg.rate(y + h * T::lit(0.5) * k2);
        let k4 = cfg.rate(y + h * k3);
        y = (y + h / T::lit(6.0) * (k1 + T::lit(2.0) * k2 + T::lit(2.0) * k3 + k4)).max(T::zero());
        t = t + h;
        if !y.is_finite() {
            return Err(BoundError::ConstantsInfeasible { t: t.to_f64_lossy() });
        }
    }
    Ok(y)
}

/// Checks `(t, ||v||_q)` samples against the comparison solution started from
/// `y0 = ||v(0)||_q^q` at the first sample time.
pub fn lq_bound_check<T: Real>(series: &[(T, T)], cfg: &BoundCheckConfig<T>, y0: T) -> Result<BoundReport<T>, BoundError> {
    lq_bound_check_from(series, cfg, y0, 0)
}

/// Like [`lq_bound_check`] but only samples with index `>= first_checked`
/// are compared; the envelope still starts at the first sample.
pub fn lq_bound_check_from<T: Real>(
    series: &[(T, T)],
    cfg: &BoundCheckConfig<T>,
    y0: T,
    first_checked: usize,
) -> Result<BoundReport<T>, BoundError> {
    cfg.check()?;
    let mut report = BoundReport { envelope: Vec::new(), violations: Vec::new(), max_relative_excess: T::neg_infinity() };
    let Some(&(t0, _)) = series.first() else {
        return Ok(report);
    };
    let (mut t, mut y) = (t0, y0);
    for (i, &(ts, norm)) in series.iter().enumerate() {
        y = envelope_advance(cfg, t, y, ts)?;
        t = ts.max(t);
        report.envelope.push((ts, y));
        if i < first_checked {
            continue;
        }
        let measured = norm.powf(cfg.lebesgue_q);
        if y > T::zero() {
            report.max_relative_excess = report.max_relative_excess.max(measured / y - T::one());
        } else if measured > T::zero() {
            report.max_relative_excess = T::infinity();
        }
        if measured > y * (T::one() + cfg.tolerance) {
            report.violations.push(BoundViolation { t: ts, measured, envelope: y });
        }
    }
    Ok(report)
}

/// Comparison constants for `Y = ||v||_q^q` fitted on the leading
/// `fit_fraction` of a `(t, ||v||_q)` series.
///
/// The growth and saturation rates come from the competition law itself:
/// `C2 = q max(m)` bounds the per-capita growth and `C3 = q L^(-1/q)` is the
/// Hölder constant turning `||v||_(q+1)^(q+1)` into `Y^(1 + 1/q)`. `C1` is
/// fitted as the largest excess of the observed growth rate over
/// `C2 Y - C3 Y^(1 + 1/q)` within the fit window, and absorbs transport and
/// discretization effects the continuum law does not see.
pub fn fit_comparison_constants<T: Real>(
    series: &[(T, T)],
    lebesgue_q: T,
    m_max: T,
    length: T,
    fit_fraction: T,
) -> (T, T, T, usize) {
    let c2 = lebesgue_q * m_max.max(T::zero());
    let c3 = lebesgue_q * length.powf(-T::one() / lebesgue_q);
    let n_fit = ((T::from_usize_lossy(series.len()) * fit_fraction).ceil().to_f64_lossy() as usize)
        .clamp(2.min(series.len()), series.len());
    let expo = T::one() + T::one() / lebesgue_q;
    let law = |y: T| c2 * y - c3 * y.powf(expo);
    let mut c1 = T::zero();
    for w in series[..n_fit].windows(2) {
        let (t0, y0) = (w[0].0, w[0].1.powf(lebesgue_q));
        let (t1, y1) = (w[1].0, w[1].1.powf(lebesgue_q));
        if t1 <= t0 {
            continue;
        }
        let slope = (y1 - y0) / (t1 - t0);
        let excess = slope - law(y0).max(law(y1));
        c1 = c1.max(excess);
    }
    (c1, c2, c3, n_fit)
}

/// Outcome of [`fte_inequality_check`].
#[derive(Clone, Debug, PartialEq)]
pub struct FteReport<T> {
    pub checked: usize,
    pub satisfied: usize,
    /// Start times of the intervals where the inequality failed.
    pub violated_at: Vec<T>,
}

impl<T> FteReport<T> {
    pub fn fraction_satisfied(&self) -> f64 {
        if self.checked == 0 {
            1.0
        } else {
            self.satisfied as f64 / self.checked as f64
        }
    }
}

/// Checks `Y' <= C3 + M Y - C~ Y^alpha` for `Y = ||v||_2` on each interval
/// of the series: the difference quotient must not exceed the larger of the
/// right-hand side at the two endpoints by more than `tolerance`.
pub fn fte_inequality_check<T: Real>(
    series: &[(T, T)],
    m: T,
    c3: T,
    c_tilde: T,
    alpha: T,
    tolerance: T,
) -> FteReport<T> {
    let rhs = |y: T| c3 + m * y - c_tilde * y.max(T::zero()).powf(alpha);
    let mut report = FteReport { checked: 0, satisfied: 0, violated_at: Vec::new() };
    for w in series.windows(2) {
        let ((t0, y0), (t1, y1)) = (w[0], w[1]);
        if t1 <= t0 {
            continue;
        }
        report.checked += 1;
        let slope = (y1 - y0) / (t1 - t0);
        if slope <= rhs(y0).max(rhs(y1)) + tolerance {
            report.satisfied += 1;
        } else {
            report.violated_at.push(t0);
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn unit(n: usize) -> Grid<f64> {
        Grid::new(1.0, n)
    }

    #[test]
    fn norms_of_simple_fields() {
        let g = unit(10);
        for q in [1.0, 2.0, 3.5, f64::INFINITY] {
            assert_relative_eq!(lq_norm(&[0.7; 10], &g, q), 0.7, max_relative = 1e-14);
            assert_eq!(lq_norm(&[0.0; 10], &g, q), 0.0);
        }
        let half: Vec<f64> = (0..10).map(|i| if i < 5 { 2.0 } else { 0.0 }).collect();
        assert_relative_eq!(lq_norm(&half, &g, 2.0), 2f64.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn large_exponent_matches_closed_form() {
        // int exp(-64 ((x - 1/2)/w)^2) dx = w sqrt(pi) / 8 on the whole line.
        let g = unit(200);
        let w = 0.05;
        let spike: Vec<f64> = g.cell_centers().iter().map(|x| (-((x - 0.5) / w).powi(2)).exp()).collect();
        let exact = (w * std::f64::consts::PI.sqrt() / 8.0).powf(1.0 / 64.0);
        let n64 = lq_norm(&spike, &g, 64.0);
        assert!((n64 - exact).abs() / exact < 1e-6, "{n64} vs {exact}");
    }

    #[test]
    fn large_exponent_within_five_percent_of_max_for_wide_spike() {
        let g = unit(200);
        let w = 0.2;
        let spike: Vec<f64> = g.cell_centers().iter().map(|x| (-((x - 0.5) / w).powi(2)).exp()).collect();
        let top = sup_norm(&spike);
        let n64 = lq_norm(&spike, &g, 64.0);
        assert!(n64 <= top && (top - n64) / top < 0.05, "{n64} vs {top}");
    }

    #[test]
    fn classification() {
        let g = unit(4);
        let th = Thresholds { exclusion: 1e-3, survival: 1e-1 };
        let s = State::new(1.0, vec![0.9, 0.2, 0.1, 0.0], vec![1e-6; 4]);
        assert_eq!(classify_outcome(&s, &g, &th).verdict, Verdict::UWins);
        let s = State::new(1.0, vec![0.4; 4], vec![0.4; 4]);
        assert_eq!(classify_outcome(&s, &g, &th).verdict, Verdict::Coexist);
        let s = State::new(1.0, vec![1e-5; 4], vec![0.3; 4]);
        assert_eq!(classify_outcome(&s, &g, &th).verdict, Verdict::VWins);
        let s = State::new(1.0, vec![0.05; 4], vec![0.3; 4]);
        assert_eq!(classify_outcome(&s, &g, &th).verdict, Verdict::Undecided);
        let s = State::new(0.0, vec![0.4; 4], vec![0.4; 4]);
        assert_eq!(classify_outcome(&s, &g, &th).verdict, Verdict::Undecided);
    }

    #[test]
    fn steady_state() {
        let zero = RhsSample { rhs_sup: 0.0, state_sup: 1.0 };
        assert!(steady_state_detector(&[zero; 3], 1e-8, 3));
        assert!(!steady_state_detector(&[zero; 2], 1e-8, 3));
        let osc: Vec<_> = (0..6).map(|i| RhsSample { rhs_sup: if i % 2 == 0 { 1e-3 } else { 1e-9 }, state_sup: 1.0 }).collect();
        assert!(!steady_state_detector(&osc, 1e-6, 4));
    }

    #[test]
    fn steady_state_on_logistic_rhs() {
        // s' = s (1 - s) along the logistic solution from s0 = 0.2.
        let s_at = |t: f64| 1.0 / (1.0 + 4.0 * (-t).exp());
        let samples = |t0: f64| -> Vec<RhsSample<f64>> {
            (0..5).map(|i| { let s = s_at(t0 + i as f64); RhsSample { rhs_sup: s * (1.0 - s), state_sup: s } }).collect()
        };
        assert!(!steady_state_detector(&samples(0.0), 1e-6, 5));
        assert!(steady_state_detector(&samples(20.0), 1e-6, 5));
    }

    #[test]
    fn extinction() {
        assert_eq!(extinction_detector(&[(0.0, 0.0), (1.0, 0.0)], 1e-6), Some(0.0));
        assert_eq!(extinction_detector(&[(0.0, 1.0), (1.0, 0.5), (2.0, 1e-9)], 1e-6), Some(2.0));
        // A dip that immediately recovers is a transient.
        assert_eq!(extinction_detector(&[(0.0, 1.0), (1.0, 1e-9), (2.0, 0.5), (3.0, 0.6)], 1e-6), None);
        assert_eq!(extinction_detector(&[(0.0, 1.0), (1.0, 0.9)], 1e-6), None);
    }

    fn bisect_root(c1: f64, c2: f64, c3: f64, q: f64) -> f64 {
        let f = |y: f64| c1 + c2 * y - c3 * y.powf(1.0 + 1.0 / q);
        let (mut lo, mut hi) = (0.0, 1.0);
        while f(hi) > 0.0 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 { lo = mid } else { hi = mid }
        }
        lo
    }

    fn cfg(c1: f64, c2: f64, c3: f64, q: f64) -> BoundCheckConfig<f64> {
        BoundCheckConfig { lebesgue_q: q, ode_c1: c1, ode_c2: c2, ode_c3: c3, alpha: 0.5, tolerance: 1e-9 }
    }

    #[test]
    fn zero_series_never_violates() {
        let series: Vec<_> = (0..20).map(|i| (i as f64 * 0.5, 0.0)).collect();
        let r = lq_bound_check(&series, &cfg(0.3, 2.0, 1.5, 2.0), 0.0).unwrap();
        assert!(r.passed());
    }

    #[test]
    fn envelope_converges_to_equilibrium_root() {
        let root = bisect_root(1.0, 1.0, 1.0, 2.0);
        // Root of 1 + y - y^(3/2) = 0, frozen from the bisection oracle.
        assert_relative_eq!(root, 2.147899035704787, max_relative = 1e-12);
        let series: Vec<_> = (0..=40).map(|i| (i as f64, 0.0)).collect();
        let r = lq_bound_check(&series, &cfg(1.0, 1.0, 1.0, 2.0), 0.0).unwrap();
        let (_, y_end) = *r.envelope.last().unwrap();
        assert_relative_eq!(y_end, root, max_relative = 1e-9);
        assert!(r.envelope.windows(2).all(|w| w[1].1 >= w[0].1));
    }

    #[test]
    fn envelope_itself_is_on_the_boundary() {
        let c = cfg(1.0, 1.0, 1.0, 2.0);
        let times: Vec<_> = (0..=20).map(|i| (i as f64 * 0.25, 0.0)).collect();
        let env = lq_bound_check(&times, &c, 0.3).unwrap().envelope;
        let series: Vec<_> = env.iter().map(|&(t, y)| (t, y.sqrt())).collect();
        let r = lq_bound_check(&series, &c, 0.3).unwrap();
        assert!(r.passed(), "{:?}", r.violations);
        assert!(r.max_relative_excess.abs() < 1e-9);
    }

    #[test]
    fn excess_is_flagged() {
        let c = cfg(0.0, 1.0, 1.0, 2.0);
        let series = vec![(0.0, 0.5), (1.0, 5.0)];
        let r = lq_bound_check(&series, &c, 0.25).unwrap();
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].t, 1.0);
    }

    #[test]
    fn invalid_bound_config() {
        let mut c = cfg(1.0, 1.0, 0.0, 2.0);
        assert!(matches!(lq_bound_check(&[(0.0, 1.0)], &c, 1.0), Err(BoundError::InvalidConfig(_))));
        c.ode_c3 = 1.0;
        c.alpha = 1.5;
        assert!(lq_bound_check(&[(0.0, 1.0)], &c, 1.0).is_err());
    }

    #[test]
    fn fitted_constants_cover_the_window() {
        let series: Vec<_> = (0..100).map(|i| { let t = i as f64 * 0.1; (t, 0.2 + 0.1 * (1.0 - (-t).exp())) }).collect();
        let (c1, c2, c3, n_fit) = fit_comparison_constants(&series, 2.0, 1.0, 1.0, 0.1);
        assert_eq!(n_fit, 10);
        assert_eq!(c2, 2.0);
        assert_eq!(c3, 2.0);
        assert!(c1 >= 0.0);
    }

    #[test]
    fn fte_cases() {
        let zeros: Vec<_> = (0..10).map(|i| (i as f64, 0.0)).collect();
        assert_eq!(fte_inequality_check(&zeros, 1.0, 0.0, 1.0, 0.5, 0.0).fraction_satisfied(), 1.0);
        assert_eq!(fte_inequality_check(&zeros, 1.0, -0.1, 1.0, 0.5, 0.0).fraction_satisfied(), 0.0);

        // Y = (1 - t/T)^(1/(1-alpha)) solves Y' = -C~ Y^alpha with C~ = 1/((1-alpha) T).
        let (alpha, t_star) = (0.875, 2.0);
        let c_tilde = 1.0 / ((1.0 - alpha) * t_star);
        let synth: Vec<_> = (0..200)
            .map(|i| { let t = i as f64 * 0.01; (t, (1.0 - t / t_star).powf(1.0 / (1.0 - alpha))) })
            .collect();
        let r = fte_inequality_check(&synth, 0.0, 0.0, c_tilde, alpha, 1e-12);
        assert_eq!(r.fraction_satisfied(), 1.0);

        let rising: Vec<_> = (0..10).map(|i| (i as f64, 0.1 * (i + 1) as f64)).collect();
        let r = fte_inequality_check(&rising, 0.0, 0.0, 1.0, 0.5, 0.0);
        assert_eq!(r.satisfied, 0);
        assert_eq!(r.violated_at.len(), 9);
    }

    #[test]
    fn zero_budget_has_zero_residual() {
        let g = unit(8);
        let s = State::zeros(8);
        let b = StepBudget { dt: 0.1, ..Default::default() };
        assert_eq!(mass_budget_residual(&s, &s, &b, &g), (0.0, 0.0));
    }

    proptest! {
        #[test]
        fn norm_is_monotone(base in prop::collection::vec(0.0f64..3.0, 16), bump in prop::collection::vec(0.0f64..1.0, 16), q in 1.0f64..12.0) {
            let g = unit(16);
            let bigger: Vec<f64> = base.iter().zip(&bump).map(|(a, b)| a + b).collect();
            prop_assert!(lq_norm(&bigger, &g, q) >= lq_norm(&base, &g, q) * (1.0 - 1e-12));
            prop_assert!(lq_norm(&base, &g, 1.0) <= sup_norm(&base) * g.length() * (1.0 + 1e-12));
        }

        #[test]
        fn verdict_is_scale_invariant(u in 0.0f64..2.0, v in 0.0f64..2.0, s in 0.01f64..100.0) {
            let th = Thresholds { exclusion: 1e-3, survival: 1e-1 };
            let scaled = Thresholds { exclusion: 1e-3 * s, survival: 1e-1 * s };
            prop_assert_eq!(verdict_from_norms(u, v, &th), verdict_from_norms(u * s, v * s, &scaled));
        }
    }
}
