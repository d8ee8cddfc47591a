//! Domain types: grid, dispersal laws, model configuration, solution state
//! and the classified long-run outcome.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

/// Minimum number of cells; flux stencils need at least two interior faces.
pub const MIN_CELLS: usize = 4;

/// Uniform cell-centered mesh over `[0, L]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<T> {
    length: T,
    n_cells: usize,
    dx: T,
    centers: Vec<T>,
}

impl<T: Real> Grid<T> {
    /// Builds the mesh. Degenerate inputs are accepted here and reported by
    /// [`validate_config`] so that all violations can be listed at once.
    pub fn new(length: T, n_cells: usize) -> Self {
        let dx = length / T::from_usize_lossy(n_cells.max(1));
        let half = T::lit(0.5);
        let centers = (0..n_cells)
            .map(|i| (T::from_usize_lossy(i) + half) * dx)
            .collect();
        Self { length, n_cells, dx, centers }
    }

    pub fn length(&self) -> T {
        self.length
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    /// Number of faces, `n_cells + 1`.
    pub fn n_faces(&self) -> usize {
        self.n_cells + 1
    }

    pub fn dx(&self) -> T {
        self.dx
    }

    pub fn cell_centers(&self) -> &[T] {
        &self.centers
    }

    /// Position of face `i` (face 0 is `x = 0`, face `n_cells` is `x = L`).
    pub fn face_position(&self, i: usize) -> T {
        T::from_usize_lossy(i) * self.dx
    }

    fn violations(&self, out: &mut Vec<ConfigViolation>) {
        if !(self.length > T::zero()) || !self.length.is_finite() {
            out.push(ConfigViolation::NonPositiveLength {
                length: self.length.to_f64_lossy(),
            });
        }
        if self.n_cells < MIN_CELLS {
            out.push(ConfigViolation::GridTooSmall { n_cells: self.n_cells });
        }
    }
}

/// Which of the two competitors a quantity refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Species {
    U,
    V,
}

impl fmt::Display for Species {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Species::U => "u",
            Species::V => "v",
        })
    }
}

/// Dispersal law of one species: a fraction `1 - k` moves by linear
/// diffusion and a fraction `k` by regularized p-Laplacian diffusion, both
/// scaled by the diffusivity `d`.
///
/// The face flux is `d * ((1 - k) + k * (g^2 + epsilon)^((p - 2) / 2)) * g`
/// for a face gradient `g`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DispersalSpec<T> {
    pub d: T,
    pub k: T,
    pub p: T,
    pub epsilon: T,
}

impl<T: Real> DispersalSpec<T> {
    pub fn new(d: T, k: T, p: T, epsilon: T) -> Self {
        Self { d, k, p, epsilon }
    }

    /// Classical Fickian diffusion with coefficient `d`.
    pub fn linear(d: T) -> Self {
        Self { d, k: T::zero(), p: T::lit(2.0), epsilon: T::zero() }
    }

    /// Pure regularized p-Laplacian dispersal (`k = 1`).
    pub fn fast(d: T, p: T, epsilon: T) -> Self {
        Self { d, k: T::one(), p, epsilon }
    }

    /// True when the flux is exactly linear in the gradient.
    pub fn is_linear(&self) -> bool {
        self.k == T::zero() || self.p == T::lit(2.0)
    }

    /// Upper bound of the effective diffusivity over all gradients; infinite
    /// when the coefficient is singular (`p < 2`, `epsilon = 0`, `k > 0`).
    pub fn max_effective_diffusivity(&self) -> T {
        if self.is_linear() {
            return self.d;
        }
        if self.epsilon == T::zero() {
            return T::infinity();
        }
        let cap = self.epsilon.powf((self.p - T::lit(2.0)) * T::lit(0.5));
        self.d * ((T::one() - self.k) + self.k * cap)
    }

    fn violations(&self, species: Species, out: &mut Vec<ConfigViolation>) {
        let p = self.p.to_f64_lossy();
        if !(p > 1.0 && p <= 2.0) {
            out.push(ConfigViolation::POutOfRange { species, p });
        }
        let k = self.k.to_f64_lossy();
        if !(0.0..=1.0).contains(&k) {
            out.push(ConfigViolation::KOutOfRange { species, k });
        }
        let d = self.d.to_f64_lossy();
        if !(d >= 0.0) || !d.is_finite() {
            out.push(ConfigViolation::NegativeCoefficient {
                name: coefficient_name(species, "d"),
                value: d,
            });
        }
        let eps = self.epsilon.to_f64_lossy();
        if !(eps >= 0.0) || !eps.is_finite() {
            out.push(ConfigViolation::NegativeCoefficient {
                name: coefficient_name(species, "epsilon"),
                value: eps,
            });
        }
    }
}

fn coefficient_name(species: Species, what: &str) -> String {
    format!("{what}_{species}")
}

/// Growth rate `m`, uniform or tabulated per cell.
#[derive(Clone, Debug, PartialEq)]
pub enum Resource<T> {
    Uniform(T),
    Profile(Vec<T>),
}

impl<T: Real> Resource<T> {
    #[inline]
    pub fn at(&self, cell: usize) -> T {
        match self {
            Resource::Uniform(m) => *m,
            Resource::Profile(values) => values[cell],
        }
    }

    /// `max_x m(x)`, the reference scale for outcome thresholds.
    pub fn max(&self) -> T {
        match self {
            Resource::Uniform(m) => *m,
            Resource::Profile(values) => values.iter().copied().fold(T::neg_infinity(), T::max),
        }
    }

    /// Per-cell values on a grid with `n_cells` cells.
    pub fn to_profile(&self, n_cells: usize) -> Vec<T> {
        (0..n_cells).map(|i| self.at(i)).collect()
    }
}

/// Full problem definition.
///
/// With `drift_enabled` the left boundary is upstream (zero total flux) and
/// the right boundary is a pure advective outflow. Without drift both ends are
/// no-flux and `drift_q` is ignored. `reaction_enabled = false` switches the
/// competition terms off, leaving pure transport.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig<T> {
    pub grid: Grid<T>,
    pub disp_u: DispersalSpec<T>,
    pub disp_v: DispersalSpec<T>,
    pub drift_q: T,
    pub resource: Resource<T>,
    pub drift_enabled: bool,
    pub reaction_enabled: bool,
}

impl<T: Real> ModelConfig<T> {
    /// Advection speed actually applied (zero without drift).
    #[inline]
    pub fn effective_drift(&self) -> T {
        if self.drift_enabled {
            self.drift_q
        } else {
            T::zero()
        }
    }

    pub fn dispersal(&self, species: Species) -> &DispersalSpec<T> {
        match species {
            Species::U => &self.disp_u,
            Species::V => &self.disp_v,
        }
    }

    /// Every violated invariant, in a stable order. Empty iff valid.
    pub fn violations(&self) -> Vec<ConfigViolation> {
        let mut out = Vec::new();
        self.grid.violations(&mut out);
        self.disp_u.violations(Species::U, &mut out);
        self.disp_v.violations(Species::V, &mut out);
        let q = self.drift_q.to_f64_lossy();
        if !(q >= 0.0) || !q.is_finite() {
            out.push(ConfigViolation::NegativeCoefficient { name: "drift_q".into(), value: q });
        }
        match &self.resource {
            Resource::Uniform(m) => {
                if !m.is_finite() {
                    out.push(ConfigViolation::NonFiniteResource { cell: None });
                }
            }
            Resource::Profile(values) => {
                if values.len() != self.grid.n_cells() {
                    out.push(ConfigViolation::ResourceLengthMismatch {
                        expected: self.grid.n_cells(),
                        found: values.len(),
                    });
                }
                if let Some(cell) = values.iter().position(|m| !m.is_finite()) {
                    out.push(ConfigViolation::NonFiniteResource { cell: Some(cell) });
                }
            }
        }
        out
    }
}

/// A single violated configuration invariant.
#[derive(Clone, Debug, PartialEq, Error)]
pub enum ConfigViolation {
    #[error("P_OUT_OF_RANGE: p_{species} = {p} is outside (1, 2]")]
    POutOfRange { species: Species, p: f64 },
    #[error("K_OUT_OF_RANGE: k_{species} = {k} is outside [0, 1]")]
    KOutOfRange { species: Species, k: f64 },
    #[error("NEGATIVE_COEFFICIENT: {name} = {value} must be finite and nonnegative")]
    NegativeCoefficient { name: String, value: f64 },
    #[error("GRID_TOO_SMALL: n_cells = {n_cells}, need at least {MIN_CELLS}")]
    GridTooSmall { n_cells: usize },
    #[error("NON_POSITIVE_LENGTH: length = {length}")]
    NonPositiveLength { length: f64 },
    #[error("NON_FINITE_RESOURCE: m is not finite{}", cell.map(|c| format!(" at cell {c}")).unwrap_or_default())]
    NonFiniteResource { cell: Option<usize> },
    #[error("RESOURCE_LENGTH_MISMATCH: m has {found} entries, grid has {expected} cells")]
    ResourceLengthMismatch { expected: usize, found: usize },
}

impl ConfigViolation {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            ConfigViolation::POutOfRange { .. } => "P_OUT_OF_RANGE",
            ConfigViolation::KOutOfRange { .. } => "K_OUT_OF_RANGE",
            ConfigViolation::NegativeCoefficient { .. } => "NEGATIVE_COEFFICIENT",
            ConfigViolation::GridTooSmall { .. } => "GRID_TOO_SMALL",
            ConfigViolation::NonPositiveLength { .. } => "NON_POSITIVE_LENGTH",
            ConfigViolation::NonFiniteResource { .. } => "NON_FINITE_RESOURCE",
            ConfigViolation::ResourceLengthMismatch { .. } => "RESOURCE_LENGTH_MISMATCH",
        }
    }
}

/// The complete list of violations found by [`validate_config`].
#[derive(Clone, Debug, PartialEq, Error)]
#[error("invalid configuration: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
pub struct ConfigErrors(pub Vec<ConfigViolation>);

impl ConfigErrors {
    pub fn codes(&self) -> Vec<&'static str> {
        self.0.iter().map(ConfigViolation::code).collect()
    }
}

/// Returns `cfg` unchanged iff every invariant holds.
pub fn validate_config<T: Real>(cfg: ModelConfig<T>) -> Result<ModelConfig<T>, ConfigErrors> {
    let violations = cfg.violations();
    if violations.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigErrors(violations))
    }
}

/// Paired population densities at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct State<T> {
    pub t: T,
    pub u: Vec<T>,
    pub v: Vec<T>,
}

impl<T: Real> State<T> {
    pub fn new(t: T, u: Vec<T>, v: Vec<T>) -> Self {
        debug_assert_eq!(u.len(), v.len());
        Self { t, u, v }
    }

    pub fn zeros(n_cells: usize) -> Self {
        Self { t: T::zero(), u: vec![T::zero(); n_cells], v: vec![T::zero(); n_cells] }
    }

    /// Spatially homogeneous state.
    pub fn uniform(n_cells: usize, u: T, v: T) -> Self {
        Self { t: T::zero(), u: vec![u; n_cells], v: vec![v; n_cells] }
    }

    pub fn n_cells(&self) -> usize {
        self.u.len()
    }

    pub fn field(&self, species: Species) -> &[T] {
        match species {
            Species::U => &self.u,
            Species::V => &self.v,
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        self.u.iter().chain(&self.v).all(|&x| x >= T::zero())
    }
}

/// Classified long-run result.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    UWins,
    VWins,
    Coexist,
    Undecided,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::UWins => "U_WINS",
            Verdict::VWins => "V_WINS",
            Verdict::Coexist => "COEXIST",
            Verdict::Undecided => "UNDECIDED",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Verdict {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "U_WINS" => Ok(Verdict::UWins),
            "V_WINS" => Ok(Verdict::VWins),
            "COEXIST" => Ok(Verdict::Coexist),
            "UNDECIDED" => Ok(Verdict::Undecided),
            other => Err(format!("unknown verdict {other:?}")),
        }
    }
}

/// Verdict plus the norms that support it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome<T> {
    pub verdict: Verdict,
    pub t_final: T,
    pub u_sup: T,
    pub v_sup: T,
    pub v_l2: T,
    pub extinction_time: Option<T>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ModelConfig<f64> {
        ModelConfig {
            grid: Grid::new(1.0, 300),
            disp_u: DispersalSpec::linear(0.2),
            disp_v: DispersalSpec::fast(0.3, 1.75, 1e-4),
            drift_q: 0.5,
            resource: Resource::Uniform(1.0),
            drift_enabled: true,
            reaction_enabled: true,
        }
    }

    #[test]
    fn grid_geometry() {
        let g = Grid::<f64>::new(1.0, 300);
        assert_eq!(g.dx(), 1.0 / 300.0);
        let c = g.cell_centers();
        assert_eq!(c[0], g.dx() / 2.0);
        assert!((c[299] - (1.0 - g.dx() / 2.0)).abs() < 1e-15);
        assert!(c.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(g.n_faces(), 301);
    }

    #[test]
    fn linear_limit_is_accepted() {
        let mut cfg = base();
        cfg.disp_v = DispersalSpec::new(0.2, 0.0, 2.0, 0.0);
        assert!(validate_config(cfg).is_ok());
    }

    #[test]
    fn fast_diffusion_defaults_are_accepted() {
        let cfg = base();
        assert_eq!(validate_config(cfg.clone()), Ok(cfg));
    }

    #[test]
    fn p_above_two_is_rejected() {
        let mut cfg = base();
        cfg.disp_v.p = 2.5;
        let err = validate_config(cfg).unwrap_err();
        assert_eq!(err.codes(), vec!["P_OUT_OF_RANGE"]);
    }

    #[test]
    fn every_violation_is_listed() {
        let mut cfg = base();
        cfg.grid = Grid::new(1.0, 3);
        cfg.disp_u.p = 1.0;
        cfg.disp_u.k = 1.5;
        cfg.disp_v.d = -0.1;
        cfg.drift_q = -1.0;
        let err = validate_config(cfg).unwrap_err();
        assert_eq!(
            err.codes(),
            vec![
                "GRID_TOO_SMALL",
                "P_OUT_OF_RANGE",
                "K_OUT_OF_RANGE",
                "NEGATIVE_COEFFICIENT",
                "NEGATIVE_COEFFICIENT"
            ]
        );
    }

    #[test]
    fn resource_profile_checks() {
        let mut cfg = base();
        cfg.resource = Resource::Profile(vec![1.0; 10]);
        assert_eq!(validate_config(cfg.clone()).unwrap_err().codes(), vec!["RESOURCE_LENGTH_MISMATCH"]);
        let mut m = vec![1.0; 300];
        m[7] = f64::NAN;
        cfg.resource = Resource::Profile(m);
        let err = validate_config(cfg).unwrap_err();
        assert_eq!(err.0, vec![ConfigViolation::NonFiniteResource { cell: Some(7) }]);
    }

    #[test]
    fn validation_is_idempotent() {
        let cfg = base();
        let once = validate_config(cfg.clone()).unwrap();
        let twice = validate_config(once.clone()).unwrap();
        assert_eq!(once, twice);
        assert_eq!(twice, cfg);
    }

    #[test]
    fn effective_diffusivity_cap() {
        let spec = DispersalSpec::fast(0.3, 1.75, 1e-4);
        assert!((spec.max_effective_diffusivity() - 0.3 * 10f64.sqrt()).abs() < 1e-12);
        assert_eq!(DispersalSpec::fast(0.3, 1.75, 0.0).max_effective_diffusivity(), f64::INFINITY);
        assert_eq!(DispersalSpec::new(0.3, 1.0, 2.0, 0.0).max_effective_diffusivity(), 0.3);
    }

    #[test]
    fn verdict_strings() {
        for v in [Verdict::UWins, Verdict::VWins, Verdict::Coexist, Verdict::Undecided] {
            assert_eq!(v.as_str().parse::<Verdict>().unwrap(), v);
        }
    }
}
