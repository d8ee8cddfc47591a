//! Initial-condition families and the registry of named scenarios.
//!
//! Published figures show their initial data only as images, so every preset
//! here uses a parametrized reconstruction: `u` as a Gaussian bump biased
//! upstream, `v` as one biased downstream, both below the carrying capacity
//! `m = 1`. The expected verdict, not the pointwise profile, is what a preset
//! claims to reproduce.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigBundle, ResourceSpec};
use crate::diagnostics::Thresholds;
use crate::integrate::StepControl;
use crate::model::{DispersalSpec, Grid, ModelConfig, Species, State, Verdict};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ScenarioError {
    #[error("NONPOSITIVE_IC: realized {species} field {reason}")]
    NonpositiveIc { species: Species, reason: String },
    #[error("TABLE_LENGTH_MISMATCH: {species} table has {found} entries for {expected} cells")]
    TableLengthMismatch { species: Species, expected: usize, found: usize },
    #[error("INVALID_IC: {0}")]
    InvalidIc(String),
    #[error("NOT_FOUND: no preset named {0:?}")]
    NotFound(String),
}

impl ScenarioError {
    pub fn code(&self) -> &'static str {
        match self {
            ScenarioError::NonpositiveIc { .. } => "NONPOSITIVE_IC",
            ScenarioError::TableLengthMismatch { .. } => "TABLE_LENGTH_MISMATCH",
            ScenarioError::InvalidIc(_) => "INVALID_IC",
            ScenarioError::NotFound(_) => "NOT_FOUND",
        }
    }
}

/// Family tags as they appear in configuration documents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IcFamily {
    GaussianBump,
    Step,
    Constant,
    TwoBumps,
    CustomTable,
}

impl IcFamily {
    pub fn as_str(&self) -> &'static str {
        match self {
            IcFamily::GaussianBump => "gaussian_bump",
            IcFamily::Step => "step",
            IcFamily::Constant => "constant",
            IcFamily::TwoBumps => "two_bumps",
            IcFamily::CustomTable => "custom_table",
        }
    }
}

/// A parametrized initial profile. Positions and widths are absolute.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialConditionSpec<T> {
    /// `amplitude exp(-(x - center)^2 / (2 width^2))`.
    GaussianBump { amplitude: T, center: T, width: T },
    /// `left` for `x < position`, `right` otherwise.
    Step { left: T, right: T, position: T },
    Constant { amplitude: T },
    /// Sum of two Gaussian bumps.
    TwoBumps { amplitudes: [T; 2], centers: [T; 2], widths: [T; 2] },
    /// One value per cell.
    CustomTable { values: Vec<T> },
}

impl<T: Real> InitialConditionSpec<T> {
    pub fn family(&self) -> IcFamily {
        match self {
            InitialConditionSpec::GaussianBump { .. } => IcFamily::GaussianBump,
            InitialConditionSpec::Step { .. } => IcFamily::Step,
            InitialConditionSpec::Constant { .. } => IcFamily::Constant,
            InitialConditionSpec::TwoBumps { .. } => IcFamily::TwoBumps,
            InitialConditionSpec::CustomTable { .. } => IcFamily::CustomTable,
        }
    }

    pub fn gaussian(amplitude: T, center: T, width: T) -> Self {
        InitialConditionSpec::GaussianBump { amplitude, center, width }
    }
}

fn bump<T: Real>(x: T, amplitude: T, center: T, width: T) -> T {
    let z = x - center;
    amplitude * (-(z * z) / (T::lit(2.0) * width * width)).exp()
}

/// Samples `spec` at the cell centers of `grid`.
pub fn realize_ic<T: Real>(spec: &InitialConditionSpec<T>, grid: &Grid<T>, species: Species) -> Result<Vec<T>, ScenarioError> {
    let xs = grid.cell_centers();
    let field: Vec<T> = match spec {
        InitialConditionSpec::GaussianBump { amplitude, center, width } => {
            if !(*width > T::zero()) {
                return Err(ScenarioError::InvalidIc(format!("{species} bump width {width} must be positive")));
            }
            xs.iter().map(|&x| bump(x, *amplitude, *center, *width)).collect()
        }
        InitialConditionSpec::Step { left, right, position } => {
            xs.iter().map(|&x| if x < *position { *left } else { *right }).collect()
        }
        InitialConditionSpec::Constant { amplitude } => vec![*amplitude; xs.len()],
        InitialConditionSpec::TwoBumps { amplitudes, centers, widths } => {
            if !(widths[0] > T::zero() && widths[1] > T::zero()) {
                return Err(ScenarioError::InvalidIc(format!("{species} bump widths must be positive")));
            }
            xs.iter()
                .map(|&x| bump(x, amplitudes[0], centers[0], widths[0]) + bump(x, amplitudes[1], centers[1], widths[1]))
                .collect()
        }
        InitialConditionSpec::CustomTable { values } => {
            if values.len() != grid.n_cells() {
                return Err(ScenarioError::TableLengthMismatch { species, expected: grid.n_cells(), found: values.len() });
            }
            values.clone()
        }
    };
    if let Some(i) = field.iter().position(|x| !x.is_finite() || *x < T::zero()) {
        return Err(ScenarioError::NonpositiveIc { species, reason: format!("has value {} in cell {i}", field[i]) });
    }
    let zero_allowed = matches!(spec, InitialConditionSpec::Constant { amplitude } if *amplitude == T::zero());
    if !zero_allowed && field.iter().all(|&x| x == T::zero()) {
        return Err(ScenarioError::NonpositiveIc { species, reason: "is identically zero".into() });
    }
    Ok(field)
}

/// Realizes both species into a state at `t = 0`.
pub fn realize_state<T: Real>(
    ic_u: &InitialConditionSpec<T>,
    ic_v: &InitialConditionSpec<T>,
    grid: &Grid<T>,
) -> Result<State<T>, ScenarioError> {
    Ok(State::new(T::zero(), realize_ic(ic_u, grid, Species::U)?, realize_ic(ic_v, grid, Species::V)?))
}

/// A named, runnable scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub bundle: ConfigBundle,
    pub expected_verdict: Verdict,
}

impl Preset {
    pub fn cfg(&self) -> &ModelConfig<f64> {
        &self.bundle.model
    }

    pub fn t_end(&self) -> f64 {
        self.bundle.control.t_end
    }

    pub fn ic_u(&self) -> &InitialConditionSpec<f64> {
        &self.bundle.ic_u
    }

    pub fn ic_v(&self) -> &InitialConditionSpec<f64> {
        &self.bundle.ic_v
    }
}

const EPSILON: f64 = 1e-4;
const N_CELLS: usize = 300;

struct Recipe {
    u: DispersalSpec<f64>,
    v: DispersalSpec<f64>,
    resource: ResourceSpec,
    drift: bool,
    ic_u: InitialConditionSpec<f64>,
    ic_v: InitialConditionSpec<f64>,
    t_end: f64,
    snapshots: Vec<f64>,
    n_cells: usize,
}

fn upstream_u(amplitude: f64) -> InitialConditionSpec<f64> {
    InitialConditionSpec::gaussian(amplitude, 0.3, 0.1)
}

fn downstream_v(amplitude: f64) -> InitialConditionSpec<f64> {
    InitialConditionSpec::gaussian(amplitude, 0.7, 0.1)
}

fn fig4(p_v: f64, k_v: f64, t_end: f64, snapshots: Vec<f64>) -> Recipe {
    Recipe {
        u: DispersalSpec::new(0.2, 0.0, 2.0, EPSILON),
        v: DispersalSpec::new(0.3, k_v, p_v, EPSILON),
        resource: ResourceSpec::Uniform { m: 1.0 },
        drift: true,
        ic_u: upstream_u(0.5),
        ic_v: downstream_v(0.5),
        t_end,
        snapshots,
        n_cells: N_CELLS,
    }
}

fn build(r: Recipe) -> ConfigBundle {
    let grid = Grid::new(1.0, r.n_cells);
    let model = ModelConfig {
        resource: r.resource.realize(&grid),
        grid,
        disp_u: r.u,
        disp_v: r.v,
        drift_q: 0.5,
        drift_enabled: r.drift,
        reaction_enabled: true,
    };
    let mut control = StepControl::new(r.t_end);
    control.cfl_safety = 0.9;
    control.stops = r.snapshots;
    ConfigBundle {
        thresholds: Thresholds::relative_to(model.resource.max()),
        model,
        resource: r.resource,
        ic_u: r.ic_u,
        ic_v: r.ic_v,
        control,
    }
}

/// Every registered preset. All pass [`crate::model::validate_config`].
pub fn preset_registry() -> Vec<Preset> {
    vec![
        Preset {
            name: "FIG4_P2",
            description: "Linear diffusion for both species, drift q = 0.5; the faster disperser v excludes u.",
            bundle: build(fig4(2.0, 1.0, 90.0, vec![10.0])),
            expected_verdict: Verdict::VWins,
        },
        Preset {
            name: "FIG4_P74",
            description: "v switches to p = 7/4 fast diffusion with the same data; u is expected to win.",
            bundle: build(fig4(1.75, 1.0, 10.0, vec![1.0])),
            expected_verdict: Verdict::UWins,
        },
        Preset {
            name: "FIG4_P75",
            description: "v switches to p = 7/5 fast diffusion with the same data; u is expected to win.",
            bundle: build(fig4(1.4, 1.0, 20.0, vec![10.0])),
            expected_verdict: Verdict::UWins,
        },
        Preset {
            name: "FIG5_K34",
            description: "A fraction k = 3/4 of v uses p = 7/4 diffusion, the rest diffuses linearly.",
            bundle: build(fig4(1.75, 0.75, 10.0, vec![1.0])),
            expected_verdict: Verdict::UWins,
        },
        Preset {
            name: "FIG6_BOTH_P74",
            description: "Both species use p = 7/4 (d1 = 0.2, d2 = 0.3 assumed); u starts smaller and is expected to win.",
            bundle: build(Recipe {
                u: DispersalSpec::fast(0.2, 1.75, EPSILON),
                ic_u: upstream_u(0.25),
                ..fig4(1.75, 1.0, 40.0, vec![4.2])
            }),
            expected_verdict: Verdict::UWins,
        },
        Preset {
            name: "FIG7_SMALLER_P_WINS",
            description: "d1 = d2 = 0.3, u with p = 7/5 against v with p = 7/4; the smaller p is expected to win.",
            bundle: build(Recipe {
                u: DispersalSpec::fast(0.3, 1.4, EPSILON),
                ..fig4(1.75, 1.0, 30.0, vec![10.0])
            }),
            expected_verdict: Verdict::UWins,
        },
        Preset {
            name: "FIG7_LARGER_P_WINS",
            description: "d1 = d2 = 0.3, u with p = 7/4 against v with p = 7/5; the larger p is expected to win.",
            bundle: build(Recipe {
                u: DispersalSpec::fast(0.3, 1.75, EPSILON),
                ..fig4(1.4, 1.0, 20.0, vec![2.0])
            }),
            expected_verdict: Verdict::UWins,
        },
        Preset {
            name: "NODRIFT_CLASSIC",
            description: "No drift, linear diffusion, resource 1 + 0.9 cos(pi x / L); the slower disperser u wins.",
            bundle: build(Recipe {
                resource: ResourceSpec::Cosine { m: 1.0, amplitude: 0.9 },
                drift: false,
                ic_u: InitialConditionSpec::Constant { amplitude: 0.5 },
                ic_v: InitialConditionSpec::Constant { amplitude: 0.5 },
                n_cells: 100,
                ..fig4(2.0, 1.0, 400.0, vec![100.0, 200.0])
            }),
            expected_verdict: Verdict::UWins,
        },
    ]
}

/// Looks a preset up by exact name.
pub fn find_preset(name: &str) -> Result<Preset, ScenarioError> {
    preset_registry()
        .into_iter()
        .find(|p| p.name == name)
        .ok_or_else(|| ScenarioError::NotFound(name.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_config;
    use proptest::prelude::*;

    fn grid(n: usize) -> Grid<f64> {
        Grid::new(1.0, n)
    }

    #[test]
    fn constant_fills_every_cell() {
        let f = realize_ic(&InitialConditionSpec::Constant { amplitude: 0.5 }, &grid(7), Species::U).unwrap();
        assert_eq!(f, vec![0.5; 7]);
    }

    #[test]
    fn zero_constant_is_allowed() {
        let f = realize_ic(&InitialConditionSpec::Constant { amplitude: 0.0 }, &grid(5), Species::V).unwrap();
        assert!(f.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn centered_bump_is_symmetric() {
        let f = realize_ic(&InitialConditionSpec::gaussian(0.8, 0.5, 0.1), &grid(64), Species::U).unwrap();
        for i in 0..32 {
            assert!((f[i] - f[63 - i]).abs() <= 1e-15, "cell {i}");
        }
    }

    #[test]
    fn table_length_is_checked() {
        let spec = InitialConditionSpec::CustomTable { values: vec![0.1; 9] };
        let err = realize_ic(&spec, &grid(10), Species::V).unwrap_err();
        assert_eq!(err.code(), "TABLE_LENGTH_MISMATCH");
    }

    #[test]
    fn negative_or_vanishing_fields_are_rejected() {
        let neg = InitialConditionSpec::Step { left: 0.5, right: -0.1, position: 0.5 };
        assert_eq!(realize_ic(&neg, &grid(8), Species::U).unwrap_err().code(), "NONPOSITIVE_IC");
        let zero = InitialConditionSpec::gaussian(0.0, 0.5, 0.1);
        assert_eq!(realize_ic(&zero, &grid(8), Species::U).unwrap_err().code(), "NONPOSITIVE_IC");
        let table = InitialConditionSpec::CustomTable { values: vec![f64::NAN, 1.0] };
        assert_eq!(realize_ic(&table, &Grid::new(1.0, 2), Species::V).unwrap_err().code(), "NONPOSITIVE_IC");
        let flat = InitialConditionSpec::gaussian(1.0, 0.5, 0.0);
        assert_eq!(realize_ic(&flat, &grid(8), Species::U).unwrap_err().code(), "INVALID_IC");
    }

    #[test]
    fn step_and_two_bumps() {
        let s = realize_ic(&InitialConditionSpec::Step { left: 1.0, right: 0.2, position: 0.5 }, &grid(4), Species::U).unwrap();
        assert_eq!(s, vec![1.0, 1.0, 0.2, 0.2]);
        let spec = InitialConditionSpec::TwoBumps { amplitudes: [1.0, 0.5], centers: [0.25, 0.75], widths: [0.05, 0.05] };
        let f = realize_ic(&spec, &grid(200), Species::V).unwrap();
        assert!((f[49] - 1.0).abs() < 0.01 && (f[149] - 0.5).abs() < 0.01);
    }

    #[test]
    fn registry_names_are_unique_and_valid() {
        let presets = preset_registry();
        let mut names: Vec<_> = presets.iter().map(|p| p.name).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), presets.len());
        for p in &presets {
            assert!(validate_config(p.cfg().clone()).is_ok(), "{}", p.name);
            assert!(realize_state(p.ic_u(), p.ic_v(), &p.cfg().grid).is_ok(), "{}", p.name);
            assert!(p.bundle.control.violations().is_empty(), "{}", p.name);
        }
    }

    #[test]
    fn figure_four_parameters() {
        let p = find_preset("FIG4_P74").unwrap();
        let c = p.cfg();
        assert_eq!((c.drift_q, c.disp_u.d, c.disp_v.d, c.disp_v.p, c.disp_v.epsilon), (0.5, 0.2, 0.3, 1.75, 1e-4));
        assert_eq!(c.grid.n_cells(), 300);
        assert_eq!(p.expected_verdict, Verdict::UWins);
        assert_eq!(p.t_end(), 10.0);
        assert_eq!(find_preset("FIG4_P2").unwrap().expected_verdict, Verdict::VWins);
        assert_eq!(find_preset("FIG4_P75").unwrap().cfg().disp_v.p, 1.4);
    }

    #[test]
    fn fractional_preset() {
        assert_eq!(find_preset("FIG5_K34").unwrap().cfg().disp_v.k, 0.75);
    }

    #[test]
    fn unknown_preset() {
        assert_eq!(find_preset("FIG9").unwrap_err().code(), "NOT_FOUND");
    }

    fn cell_average(fine: &[f64]) -> Vec<f64> {
        fine.chunks(2).map(|c| 0.5 * (c[0] + c[1])).collect()
    }

    proptest! {
        #[test]
        fn realization_is_grid_consistent(
            amp in 0.05f64..1.0, center in 0.2f64..0.8, width in 0.08f64..0.3, n in 16usize..64,
        ) {
            // Midpoint sampling vs. averaging two children differs by about dx^2 f''/32.
            let spec = InitialConditionSpec::gaussian(amp, center, width);
            let coarse = realize_ic(&spec, &grid(n), Species::U).unwrap();
            let fine = realize_ic(&spec, &grid(2 * n), Species::U).unwrap();
            let dx = 1.0 / n as f64;
            let curvature = amp / (width * width);
            let err = coarse.iter().zip(cell_average(&fine)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            prop_assert!(err <= curvature * dx * dx / 32.0 * 1.1 + 1e-15, "{err}");
        }

        #[test]
        fn realization_is_deterministic(amp in 0.01f64..2.0, center in 0.0f64..1.0, width in 0.01f64..0.5) {
            let spec = InitialConditionSpec::gaussian(amp, center, width);
            prop_assert_eq!(realize_ic(&spec, &grid(33), Species::V).unwrap(), realize_ic(&spec, &grid(33), Species::V).unwrap());
        }
    }
}
