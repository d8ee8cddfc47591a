//! Semi-discrete right-hand side in conservative flux form.
//!
//! Cell `i` covers `[i dx, (i + 1) dx]`; face `i` sits at `x = i dx`, so face
//! `0` is the upstream end and face `n_cells` the downstream end. At each face
//! we keep two nonnegative-orientation components:
//!
//! * `diffusive = d ((1 - k) + k (g^2 + eps)^((p - 2) / 2)) g`, with `g` the
//!   centered face gradient;
//! * `advective = q f_donor`, first-order upwind for rightward drift.
//!
//! The total face flux is `F = diffusive - advective` and the cell update is
//! `(F[i + 1] - F[i]) / dx + reaction`. Interior faces telescope, so the total
//! mass changes only through the two boundary faces.

use thiserror::Error;

use crate::model::{DispersalSpec, Grid, ModelConfig, State};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum OperatorError {
    #[error("SINGULAR_COEFFICIENT: p < 2 with zero gradient and zero regularization")]
    SingularCoefficient,
}

/// `(g^2 + epsilon)^((p - 2) / 2)`.
#[inline]
pub fn regularized_diffusivity<T: Real>(g: T, p: T, epsilon: T) -> Result<T, OperatorError> {
    if p == T::lit(2.0) {
        return Ok(T::one());
    }
    let base = g * g + epsilon;
    if base == T::zero() {
        return Err(OperatorError::SingularCoefficient);
    }
    Ok(base.powf((p - T::lit(2.0)) * T::lit(0.5)))
}

/// `d ((1 - k) + k c(g))`: the secant diffusivity of the mixed law at gradient `g`.
#[inline]
pub fn effective_diffusivity<T: Real>(spec: &DispersalSpec<T>, g: T) -> Result<T, OperatorError> {
    let c = if spec.k == T::zero() {
        T::one()
    } else {
        regularized_diffusivity(g, spec.p, spec.epsilon)?
    };
    Ok(spec.d * ((T::one() - spec.k) + spec.k * c))
}

/// Face gradient between cells holding `left` and `right`.
#[inline]
pub fn gradient_between<T: Real>(left: T, right: T, dx: T) -> T {
    (right - left) / dx
}

/// Diffusive face flux for a face gradient `g`.
#[inline]
pub fn diffusive_face_flux<T: Real>(spec: &DispersalSpec<T>, g: T) -> Result<T, OperatorError> {
    Ok(effective_diffusivity(spec, g)? * g)
}

/// Centered differences at interior faces; boundary entries are `0`.
pub fn face_gradient<T: Real>(field: &[T], grid: &Grid<T>) -> Vec<T> {
    let n = grid.n_cells();
    debug_assert_eq!(field.len(), n);
    let mut out = vec![T::zero(); n + 1];
    for i in 1..n {
        out[i] = gradient_between(field[i - 1], field[i], grid.dx());
    }
    out
}

/// Interior diffusive fluxes; boundary entries are left at `0` for the closure.
pub fn assemble_diffusive_flux<T: Real>(
    field: &[T],
    spec: &DispersalSpec<T>,
    grid: &Grid<T>,
) -> Result<Vec<T>, OperatorError> {
    let gradients = face_gradient(field, grid);
    let n = grid.n_cells();
    let mut out = vec![T::zero(); n + 1];
    for i in 1..n {
        out[i] = diffusive_face_flux(spec, gradients[i])?;
    }
    Ok(out)
}

/// Upwind advective fluxes `q field[i - 1]` at interior faces.
pub fn assemble_advective_flux<T: Real>(field: &[T], drift_q: T, grid: &Grid<T>) -> Vec<T> {
    let n = grid.n_cells();
    let mut out = vec![T::zero(); n + 1];
    for i in 1..n {
        out[i] = drift_q * field[i - 1];
    }
    out
}

/// Diffusive and advective face fluxes of one species.
#[derive(Clone, Debug, PartialEq)]
pub struct SpeciesFluxes<T> {
    pub diffusive: Vec<T>,
    pub advective: Vec<T>,
}

impl<T: Real> SpeciesFluxes<T> {
    #[inline]
    pub fn total_at(&self, face: usize) -> T {
        self.diffusive[face] - self.advective[face]
    }

    pub fn total(&self) -> Vec<T> {
        (0..self.diffusive.len()).map(|i| self.total_at(i)).collect()
    }

    /// Mass leaving through the downstream face per unit time.
    pub fn outflow(&self) -> T {
        -self.total_at(self.diffusive.len() - 1)
    }

    /// Mass entering through the upstream face per unit time.
    pub fn inflow(&self) -> T {
        -self.total_at(0)
    }
}

/// Face fluxes of both species, `n_cells + 1` entries each.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceFluxes<T> {
    pub u: SpeciesFluxes<T>,
    pub v: SpeciesFluxes<T>,
}

/// Interior fluxes of both species with boundary faces still open.
pub fn assemble_interior_fluxes<T: Real>(
    state: &State<T>,
    cfg: &ModelConfig<T>,
) -> Result<FaceFluxes<T>, OperatorError> {
    let q = cfg.effective_drift();
    let species = |field: &[T], spec: &DispersalSpec<T>| -> Result<SpeciesFluxes<T>, OperatorError> {
        Ok(SpeciesFluxes {
            diffusive: assemble_diffusive_flux(field, spec, &cfg.grid)?,
            advective: assemble_advective_flux(field, q, &cfg.grid),
        })
    };
    Ok(FaceFluxes { u: species(&state.u, &cfg.disp_u)?, v: species(&state.v, &cfg.disp_v)? })
}

/// Writes the boundary faces of one species.
///
/// With drift, the upstream face carries a diffusive flux that exactly cancels
/// its advective flux (zero total flux), and the downstream face carries no
/// diffusive flux and an advective outflow `q f_last`. Without drift both
/// faces carry nothing.
#[inline]
fn close_species<T: Real>(diffusive: &mut [T], advective: &mut [T], field: &[T], cfg: &ModelConfig<T>) {
    let last = diffusive.len() - 1;
    if cfg.drift_enabled {
        let q = cfg.drift_q;
        let inlet = q * field[0];
        diffusive[0] = inlet;
        advective[0] = inlet;
        diffusive[last] = T::zero();
        advective[last] = q * field[field.len() - 1];
    } else {
        diffusive[0] = T::zero();
        advective[0] = T::zero();
        diffusive[last] = T::zero();
        advective[last] = T::zero();
    }
}

pub fn apply_boundary_closures<T: Real>(
    mut fluxes: FaceFluxes<T>,
    state: &State<T>,
    cfg: &ModelConfig<T>,
) -> FaceFluxes<T> {
    close_species(&mut fluxes.u.diffusive, &mut fluxes.u.advective, &state.u, cfg);
    close_species(&mut fluxes.v.diffusive, &mut fluxes.v.advective, &state.v, cfg);
    fluxes
}

/// Fully closed face fluxes for `state`.
pub fn face_fluxes<T: Real>(state: &State<T>, cfg: &ModelConfig<T>) -> Result<FaceFluxes<T>, OperatorError> {
    Ok(apply_boundary_closures(assemble_interior_fluxes(state, cfg)?, state, cfg))
}

/// Lotka-Volterra competition with a shared resource.
#[inline]
pub fn reaction<T: Real>(u: T, v: T, m: T) -> (T, T) {
    let free = m - u - v;
    (u * free, v * free)
}

/// Quantities collected during one right-hand-side evaluation that bound
/// the stable explicit step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RhsSummary<T> {
    /// Largest effective diffusivity over interior faces of both species.
    pub max_diffusivity: T,
    /// Row-sum bound of the reaction Jacobian over all cells.
    pub reaction_rate: T,
    /// `max_i max(|du_i|, |dv_i|)`.
    pub rhs_sup: T,
}

/// Anything that can evaluate a semi-discrete right-hand side.
pub trait RhsOperator<T: Real> {
    fn n_cells(&self) -> usize;

    fn eval(&mut self, u: &[T], v: &[T], du: &mut [T], dv: &mut [T]) -> Result<RhsSummary<T>, OperatorError>;
}

/// The conservative flux-form operator for a [`ModelConfig`].
pub struct FluxFormRhs<'a, T> {
    cfg: &'a ModelConfig<T>,
    resource: Vec<T>,
    flux_u: Vec<T>,
    flux_v: Vec<T>,
}

impl<'a, T: Real> FluxFormRhs<'a, T> {
    pub fn new(cfg: &'a ModelConfig<T>) -> Self {
        let n = cfg.grid.n_cells();
        Self {
            cfg,
            resource: cfg.resource.to_profile(n),
            flux_u: vec![T::zero(); n + 1],
            flux_v: vec![T::zero(); n + 1],
        }
    }

    pub fn config(&self) -> &ModelConfig<T> {
        self.cfg
    }
}

/// Fills `flux` with total face fluxes and returns the largest interior
/// effective diffusivity.
#[inline]
fn total_fluxes_into<T: Real>(
    field: &[T],
    spec: &DispersalSpec<T>,
    cfg: &ModelConfig<T>,
    flux: &mut [T],
) -> Result<T, OperatorError> {
    let n = field.len();
    let dx = cfg.grid.dx();
    let q = cfg.effective_drift();
    let mut d_max = T::zero();
    if spec.is_linear() {
        let coef = effective_diffusivity(spec, T::zero())?;
        d_max = coef;
        for i in 1..n {
            let g = gradient_between(field[i - 1], field[i], dx);
            flux[i] = coef * g - q * field[i - 1];
        }
    } else {
        for i in 1..n {
            let g = gradient_between(field[i - 1], field[i], dx);
            let coef = effective_diffusivity(spec, g)?;
            d_max = d_max.max(coef);
            flux[i] = coef * g - q * field[i - 1];
        }
    }
    if cfg.drift_enabled {
        let inlet = cfg.drift_q * field[0];
        flux[0] = inlet - inlet;
        flux[n] = T::zero() - cfg.drift_q * field[n - 1];
    } else {
        flux[0] = T::zero();
        flux[n] = T::zero();
    }
    Ok(d_max)
}

impl<T: Real> RhsOperator<T> for FluxFormRhs<'_, T> {
    fn n_cells(&self) -> usize {
        self.cfg.grid.n_cells()
    }

    fn eval(&mut self, u: &[T], v: &[T], du: &mut [T], dv: &mut [T]) -> Result<RhsSummary<T>, OperatorError> {
        let cfg = self.cfg;
        let dx = cfg.grid.dx();
        let d_u = total_fluxes_into(u, &cfg.disp_u, cfg, &mut self.flux_u)?;
        let d_v = total_fluxes_into(v, &cfg.disp_v, cfg, &mut self.flux_v)?;
        let mut reaction_rate = T::zero();
        let mut rhs_sup = T::zero();
        let two = T::lit(2.0);
        for i in 0..u.len() {
            let mut a = (self.flux_u[i + 1] - self.flux_u[i]) / dx;
            let mut b = (self.flux_v[i + 1] - self.flux_v[i]) / dx;
            if cfg.reaction_enabled {
                let m = self.resource[i];
                let (ru, rv) = reaction(u[i], v[i], m);
                a = a + ru;
                b = b + rv;
                let row_u = (m - two * u[i] - v[i]).abs() + u[i].abs();
                let row_v = (m - u[i] - two * v[i]).abs() + v[i].abs();
                reaction_rate = reaction_rate.max(row_u).max(row_v);
            }
            du[i] = a;
            dv[i] = b;
            rhs_sup = rhs_sup.max(a.abs()).max(b.abs());
        }
        Ok(RhsSummary { max_diffusivity: d_u.max(d_v), reaction_rate, rhs_sup })
    }
}

/// `(du/dt, dv/dt)` for `state`.
pub fn semidiscrete_rhs<T: Real>(state: &State<T>, cfg: &ModelConfig<T>) -> Result<(Vec<T>, Vec<T>), OperatorError> {
    let n = cfg.grid.n_cells();
    let mut du = vec![T::zero(); n];
    let mut dv = vec![T::zero(); n];
    FluxFormRhs::new(cfg).eval(&state.u, &state.v, &mut du, &mut dv)?;
    Ok((du, dv))
}

/// Largest interior effective diffusivity of `field`; infinite if singular.
pub fn max_face_diffusivity<T: Real>(field: &[T], spec: &DispersalSpec<T>, grid: &Grid<T>) -> T {
    let mut d_max = T::zero();
    for i in 1..field.len() {
        let g = gradient_between(field[i - 1], field[i], grid.dx());
        match effective_diffusivity(spec, g) {
            Ok(c) => d_max = d_max.max(c),
            Err(OperatorError::SingularCoefficient) => return T::infinity(),
        }
    }
    d_max
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Resource, State};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg(n: usize, drift: bool) -> ModelConfig<f64> {
        ModelConfig {
            grid: Grid::new(1.0, n),
            disp_u: DispersalSpec::linear(0.2),
            disp_v: DispersalSpec::fast(0.3, 1.75, 1e-4),
            drift_q: 0.5,
            resource: Resource::Uniform(1.0),
            drift_enabled: drift,
            reaction_enabled: true,
        }
    }

    fn random_state(rng: &mut ChaCha8Rng, n: usize) -> State<f64> {
        State::new(0.0, (0..n).map(|_| rng.gen_range(0.0..1.0)).collect(), (0..n).map(|_| rng.gen_range(0.0..1.0)).collect())
    }

    #[test]
    fn coefficient_at_p_two_is_one() {
        assert_eq!(regularized_diffusivity(5.0, 2.0, 1e-4).unwrap(), 1.0);
        assert_eq!(regularized_diffusivity(0.0, 2.0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn coefficient_at_zero_gradient() {
        let c = regularized_diffusivity(0.0, 1.75, 1e-4).unwrap();
        assert_relative_eq!(c, 10f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(c, (1e-4f64).ln().mul_add(-0.125, 0.0).exp(), max_relative = 1e-14);
    }

    #[test]
    fn coefficient_unit_base() {
        assert_eq!(regularized_diffusivity(1.0, 1.4, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn singular_coefficient() {
        assert_eq!(regularized_diffusivity(0.0, 1.75, 0.0), Err(OperatorError::SingularCoefficient));
    }

    #[test]
    fn gradients() {
        let g = Grid::new(1.0, 8);
        assert!(face_gradient(&[0.7; 8], &g).iter().all(|&x| x == 0.0));
        let lin = face_gradient(g.cell_centers(), &g);
        for &x in &lin[1..8] {
            assert_relative_eq!(x, 1.0, max_relative = 1e-13);
        }
        let sq: Vec<f64> = g.cell_centers().iter().map(|x| x * x).collect();
        let grad = face_gradient(&sq, &g);
        for i in 1..8 {
            assert_relative_eq!(grad[i], 2.0 * g.face_position(i), max_relative = 1e-13);
        }
        assert_eq!(grad[0], 0.0);
        assert_eq!(grad[8], 0.0);
    }

    #[test]
    fn diffusive_flux_cases() {
        let g = Grid::new(1.0, 8);
        let spec = DispersalSpec::fast(0.3, 1.75, 1e-4);
        assert!(assemble_diffusive_flux(&[0.3; 8], &spec, &g).unwrap().iter().all(|&x| x == 0.0));

        let flux = assemble_diffusive_flux(g.cell_centers(), &spec, &g).unwrap();
        for &f in &flux[1..8] {
            assert_relative_eq!(f, 0.29999625, max_relative = 1e-7);
        }

        let field: Vec<f64> = g.cell_centers().iter().map(|x: &f64| (3.0 * x).sin()).collect();
        let linear = assemble_diffusive_flux(&field, &DispersalSpec::new(0.3, 0.0, 1.3, 0.0), &g).unwrap();
        let grads = face_gradient(&field, &g);
        for i in 1..8 {
            assert_eq!(linear[i], 0.3 * grads[i]);
        }
    }

    #[test]
    fn advective_flux_cases() {
        let g = Grid::new(1.0, 4);
        assert!(assemble_advective_flux(&[1.0, 2.0, 3.0, 4.0], 0.0, &g).iter().all(|&x| x == 0.0));
        assert_eq!(assemble_advective_flux(&[2.0; 4], 0.5, &g), vec![0.0, 1.0, 1.0, 1.0, 0.0]);
        assert_eq!(assemble_advective_flux(&[1.0, 2.0, 3.0, 4.0], 0.5, &g), vec![0.0, 0.5, 1.0, 1.5, 0.0]);
    }

    #[test]
    fn closures() {
        let c = cfg(8, false);
        let s = State::new(0.0, vec![0.2; 8], vec![0.4; 8]);
        let f = face_fluxes(&s, &c).unwrap();
        for sp in [&f.u, &f.v] {
            assert_eq!(sp.total_at(0), 0.0);
            assert_eq!(sp.total_at(8), 0.0);
        }

        let c = cfg(8, true);
        let f = face_fluxes(&s, &c).unwrap();
        assert_eq!(f.v.total_at(0), 0.0);
        assert_eq!(f.v.diffusive[8], 0.0);
        assert_eq!(f.v.advective[8], 0.5 * 0.4);
        assert_eq!(f.v.outflow(), 0.2);

        let zero = State::zeros(8);
        let f = face_fluxes(&zero, &c).unwrap();
        for sp in [&f.u, &f.v] {
            assert_eq!([sp.diffusive[0], sp.advective[0], sp.diffusive[8], sp.advective[8]], [0.0; 4]);
        }
    }

    #[test]
    fn reaction_values() {
        assert_eq!(reaction(0.5, 0.5, 1.0), (0.0, 0.0));
        let (a, b) = reaction(0.0, 0.3, 1.0);
        assert_eq!(a, 0.0);
        assert_relative_eq!(b, 0.21, max_relative = 1e-15);
        let (a, b) = reaction(0.2, 0.3, 1.0);
        assert_relative_eq!(a, 0.1, max_relative = 1e-15);
        assert_relative_eq!(b, 0.15, max_relative = 1e-15);
    }

    #[test]
    fn homogeneous_state_sees_only_reaction() {
        let c = cfg(16, false);
        let s = State::uniform(16, 0.3, 0.25);
        let (du, dv) = semidiscrete_rhs(&s, &c).unwrap();
        let (ru, rv) = reaction(0.3, 0.25, 1.0);
        assert!(du.iter().all(|&x| x == ru));
        assert!(dv.iter().all(|&x| x == rv));

        let s = State::uniform(16, 0.0, 1.0);
        let (du, dv) = semidiscrete_rhs(&s, &c).unwrap();
        assert!(du.iter().chain(&dv).all(|&x| x == 0.0));
    }

    #[test]
    fn fused_path_matches_composed_operators() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for drift in [false, true] {
            let c = cfg(12, drift);
            let s = random_state(&mut rng, 12);
            let (du, dv) = semidiscrete_rhs(&s, &c).unwrap();
            let f = face_fluxes(&s, &c).unwrap();
            let dx = c.grid.dx();
            for i in 0..12 {
                let (ru, rv) = reaction(s.u[i], s.v[i], 1.0);
                assert_eq!(du[i], (f.u.total_at(i + 1) - f.u.total_at(i)) / dx + ru);
                assert_eq!(dv[i], (f.v.total_at(i + 1) - f.v.total_at(i)) / dx + rv);
            }
        }
    }

    #[test]
    fn summary_reports_diffusivity_cap_on_flat_state() {
        let c = cfg(10, true);
        let mut op = FluxFormRhs::new(&c);
        let s = State::uniform(10, 0.4, 0.4);
        let mut du = vec![0.0; 10];
        let mut dv = vec![0.0; 10];
        let summary = op.eval(&s.u, &s.v, &mut du, &mut dv).unwrap();
        assert_relative_eq!(summary.max_diffusivity, 0.3 * 10f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(summary.max_diffusivity, max_face_diffusivity(&s.v, &c.disp_v, &c.grid), max_relative = 0.0);
    }

    /// Periodic right-hand side built from the face kernels; test-only closure.
    fn periodic_rhs(s: &State<f64>, c: &ModelConfig<f64>) -> (Vec<f64>, Vec<f64>) {
        let n = s.n_cells();
        let dx = c.grid.dx();
        let face = |f: &[f64], spec: &DispersalSpec<f64>, i: usize| {
            let (l, r) = (f[(i + n - 1) % n], f[i % n]);
            diffusive_face_flux(spec, gradient_between(l, r, dx)).unwrap()
        };
        let mut du = vec![0.0; n];
        let mut dv = vec![0.0; n];
        for i in 0..n {
            let (ru, rv) = reaction(s.u[i], s.v[i], c.resource.at(i));
            du[i] = (face(&s.u, &c.disp_u, i + 1) - face(&s.u, &c.disp_u, i)) / dx + ru;
            dv[i] = (face(&s.v, &c.disp_v, i + 1) - face(&s.v, &c.disp_v, i)) / dx + rv;
        }
        (du, dv)
    }

    fn conservation_residual(s: &State<f64>, c: &ModelConfig<f64>) -> (f64, f64, f64) {
        let (du, dv) = semidiscrete_rhs(s, c).unwrap();
        let dx = c.grid.dx();
        let total_u: f64 = du.iter().sum::<f64>() * dx;
        let total_v: f64 = dv.iter().sum::<f64>() * dx;
        let f = face_fluxes(s, c).unwrap();
        let scale = du.iter().chain(&dv).map(|x| x.abs()).sum::<f64>() * dx + f.u.outflow() + f.v.outflow();
        (total_u + f.u.outflow(), total_v + f.v.outflow(), scale.max(f64::MIN_POSITIVE))
    }

    proptest! {
        #[test]
        fn discrete_conservation(values in prop::collection::vec(0.0f64..2.0, 32), drift in any::<bool>()) {
            let mut c = cfg(16, drift);
            c.reaction_enabled = false;
            let s = State::new(0.0, values[..16].to_vec(), values[16..].to_vec());
            let (ru, rv, scale) = conservation_residual(&s, &c);
            prop_assert!(ru.abs() <= 1e-13 * scale);
            prop_assert!(rv.abs() <= 1e-13 * scale);
        }

        #[test]
        fn coefficient_is_monotone(a in -50.0f64..50.0, b in -50.0f64..50.0, p in 1.05f64..1.999, eps in 1e-8f64..1e-1) {
            let (lo, hi) = if a.abs() <= b.abs() { (a, b) } else { (b, a) };
            let c_lo = regularized_diffusivity(lo, p, eps).unwrap();
            let c_hi = regularized_diffusivity(hi, p, eps).unwrap();
            prop_assert!(c_lo >= c_hi);
            prop_assert!(c_hi > 0.0);
        }

        #[test]
        fn p_two_matches_linear_diffusion(values in prop::collection::vec(0.0f64..1.5, 20), eps in 0.0f64..1.0, k in 0.0f64..=1.0) {
            let mut c = cfg(10, true);
            c.disp_v = DispersalSpec::new(0.3, k, 2.0, eps);
            let s = State::new(0.0, values[..10].to_vec(), values[10..].to_vec());
            let (_, dv) = semidiscrete_rhs(&s, &c).unwrap();
            let mut lin = c.clone();
            lin.disp_v = DispersalSpec::linear(0.3);
            let (_, dv_lin) = semidiscrete_rhs(&s, &lin).unwrap();
            for (a, b) in dv.iter().zip(&dv_lin) {
                prop_assert!((a - b).abs() <= 1e-14 * (1.0 + b.abs()));
            }
        }

        #[test]
        fn periodic_shift_equivariance(values in prop::collection::vec(0.0f64..1.0, 24), shift in 1usize..12) {
            let c = cfg(12, false);
            let s = State::new(0.0, values[..12].to_vec(), values[12..].to_vec());
            let rotate = |f: &[f64]| { let mut g = f.to_vec(); g.rotate_right(shift); g };
            let shifted = State::new(0.0, rotate(&s.u), rotate(&s.v));
            let (du, dv) = periodic_rhs(&s, &c);
            let (du_s, dv_s) = periodic_rhs(&shifted, &c);
            prop_assert_eq!(rotate(&du), du_s);
            prop_assert_eq!(rotate(&dv), dv_s);
        }
    }
}
