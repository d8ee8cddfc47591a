//! Flat TOML configuration documents.
//!
//! A document binds a model, both initial conditions, the step control and
//! the outcome thresholds. Every key is listed in [`KNOWN_KEYS`]; anything
//! else is rejected. [`dump`] writes every key explicitly, so a dumped
//! document reloads to an identical [`ConfigBundle`].

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::Thresholds;
use crate::integrate::StepControl;
use crate::model::{validate_config, ConfigErrors, DispersalSpec, Grid, ModelConfig, Resource, Species};
use crate::scenario::{realize_ic, IcFamily, InitialConditionSpec, ScenarioError};

/// Keys that must be present.
pub const REQUIRED_KEYS: &[&str] = &["d1", "d2", "m", "drift_q", "t_end"];

/// Every accepted key, in documentation order.
pub const KNOWN_KEYS: &[&str] = &[
    "d1",
    "d2",
    "m",
    "drift_q",
    "t_end",
    "length",
    "n_cells",
    "k_u",
    "p_u",
    "k_v",
    "p_v",
    "epsilon",
    "drift_enabled",
    "reaction_enabled",
    "m_cos_amplitude",
    "cfl_safety",
    "dt_max",
    "dt_min",
    "nonneg_clip_tolerance",
    "fixed_dt",
    "snapshots",
    "exclusion_threshold",
    "survival_threshold",
    "ic_u_family",
    "ic_u_amplitude",
    "ic_u_center",
    "ic_u_width",
    "ic_u_amplitude2",
    "ic_u_center2",
    "ic_u_width2",
    "ic_u_left",
    "ic_u_right",
    "ic_u_position",
    "ic_u_table",
    "ic_v_family",
    "ic_v_amplitude",
    "ic_v_center",
    "ic_v_width",
    "ic_v_amplitude2",
    "ic_v_center2",
    "ic_v_width2",
    "ic_v_left",
    "ic_v_right",
    "ic_v_position",
    "ic_v_table",
];

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ConfigError {
    #[error("PARSE_ERROR at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("UNKNOWN_KEY: {key}{}", hint.as_ref().map(|h| format!(" ({h})")).unwrap_or_default())]
    UnknownKey { key: String, hint: Option<String> },
    #[error("MISSING_KEY: {0}")]
    MissingKey(String),
    #[error("INVALID_VALUE: {key}: {message}")]
    InvalidValue { key: String, message: String },
    #[error(transparent)]
    Model(#[from] ConfigErrors),
    #[error(transparent)]
    InitialCondition(#[from] ScenarioError),
}

impl ConfigError {
    /// Machine-readable code; for model errors, the first violation's code.
    pub fn code(&self) -> &'static str {
        match self {
            ConfigError::Parse { .. } => "PARSE_ERROR",
            ConfigError::UnknownKey { .. } => "UNKNOWN_KEY",
            ConfigError::MissingKey(_) => "MISSING_KEY",
            ConfigError::InvalidValue { .. } => "INVALID_VALUE",
            ConfigError::Model(e) => e.codes().first().copied().unwrap_or("INVALID_CONFIG"),
            ConfigError::InitialCondition(e) => e.code(),
        }
    }
}

/// Growth-rate profile as written in a document: `m (1 + a cos(pi x / L))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ResourceSpec {
    Uniform { m: f64 },
    Cosine { m: f64, amplitude: f64 },
}

impl ResourceSpec {
    pub fn realize(&self, grid: &Grid<f64>) -> Resource<f64> {
        match *self {
            ResourceSpec::Uniform { m } => Resource::Uniform(m),
            ResourceSpec::Cosine { m, amplitude } => {
                let l = grid.length();
                Resource::Profile(
                    grid.cell_centers()
                        .iter()
                        .map(|&x| m * (1.0 + amplitude * (std::f64::consts::PI * x / l).cos()))
                        .collect(),
                )
            }
        }
    }

    fn mean(&self) -> f64 {
        match *self {
            ResourceSpec::Uniform { m } | ResourceSpec::Cosine { m, .. } => m,
        }
    }

    fn amplitude(&self) -> f64 {
        match *self {
            ResourceSpec::Uniform { .. } => 0.0,
            ResourceSpec::Cosine { amplitude, .. } => amplitude,
        }
    }
}

/// Everything a run needs, fully validated.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigBundle {
    pub model: ModelConfig<f64>,
    pub resource: ResourceSpec,
    pub ic_u: InitialConditionSpec<f64>,
    pub ic_v: InitialConditionSpec<f64>,
    pub control: StepControl<f64>,
    pub thresholds: Thresholds<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
struct IcKeys {
    family: Option<String>,
    amplitude: Option<f64>,
    center: Option<f64>,
    width: Option<f64>,
    amplitude2: Option<f64>,
    center2: Option<f64>,
    width2: Option<f64>,
    left: Option<f64>,
    right: Option<f64>,
    position: Option<f64>,
    table: Option<Vec<f64>>,
}

fn default_length() -> f64 {
    1.0
}
fn default_n_cells() -> usize {
    300
}
fn default_p() -> f64 {
    2.0
}
fn default_k_v() -> f64 {
    1.0
}
fn default_epsilon() -> f64 {
    1e-4
}
fn default_true() -> bool {
    true
}
fn default_cfl() -> f64 {
    0.4
}
fn default_dt_max() -> f64 {
    0.05
}
fn default_tiny() -> f64 {
    1e-12
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct RawConfig {
    d1: f64,
    d2: f64,
    m: f64,
    drift_q: f64,
    t_end: f64,
    #[serde(default = "default_length")]
    length: f64,
    #[serde(default = "default_n_cells")]
    n_cells: usize,
    #[serde(default)]
    k_u: f64,
    #[serde(default = "default_p")]
    p_u: f64,
    #[serde(default = "default_k_v")]
    k_v: f64,
    #[serde(default = "default_p")]
    p_v: f64,
    #[serde(default = "default_epsilon")]
    epsilon: f64,
    #[serde(default = "default_true")]
    drift_enabled: bool,
    #[serde(default = "default_true")]
    reaction_enabled: bool,
    #[serde(default)]
    m_cos_amplitude: f64,
    #[serde(default = "default_cfl")]
    cfl_safety: f64,
    #[serde(default = "default_dt_max")]
    dt_max: f64,
    #[serde(default = "default_tiny")]
    dt_min: f64,
    #[serde(default = "default_tiny")]
    nonneg_clip_tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fixed_dt: Option<f64>,
    #[serde(default)]
    snapshots: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    exclusion_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    survival_threshold: Option<f64>,
}

/// A parsed but not yet validated document, as a TOML table.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigDocument {
    table: toml::Table,
}

fn position_of(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |nl| before.len() - nl - 1) + 1;
    (line, column)
}

fn parse_error(text: &str, err: &toml::de::Error) -> ConfigError {
    let (line, column) = err.span().map_or((1, 1), |s| position_of(text, s.start));
    ConfigError::Parse { line, column, message: err.message().trim().to_string() }
}

fn closest_key(key: &str) -> Option<String> {
    KNOWN_KEYS
        .iter()
        .map(|k| (strsim::levenshtein(key, k), *k))
        .filter(|(d, _)| *d <= 2)
        .min()
        .map(|(_, k)| format!("did you mean {k:?}?"))
}

impl ConfigDocument {
    /// Parses TOML text and checks that every key is known.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let table: toml::Table = text.parse().map_err(|e| parse_error(text, &e))?;
        let doc = Self { table };
        doc.check_keys()?;
        Ok(doc)
    }

    fn check_keys(&self) -> Result<(), ConfigError> {
        for key in self.table.keys() {
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(ConfigError::UnknownKey { key: key.clone(), hint: closest_key(key) });
            }
        }
        Ok(())
    }

    /// Applies a `key=value` override. The value is read as a TOML value,
    /// falling back to a bare string.
    pub fn set(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let (key, value) = assignment.split_once('=').ok_or_else(|| ConfigError::InvalidValue {
            key: assignment.to_string(),
            message: "expected key=value".into(),
        })?;
        let key = key.trim();
        if !KNOWN_KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey { key: key.to_string(), hint: closest_key(key) });
        }
        let value = value.trim();
        let parsed = format!("v = {value}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(value.to_string()));
        if let Some(species) = key.strip_suffix("_family") {
            // A new family starts from its own defaults.
            let prefix = format!("{species}_");
            let default = toml::Value::String(IcFamily::GaussianBump.as_str().to_string());
            if self.table.get(key).unwrap_or(&default) != &parsed {
                self.table.retain(|k, _| !k.starts_with(&prefix));
            }
        }
        self.table.insert(key.to_string(), parsed);
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&toml::Value> {
        self.table.get(key)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.table).expect("tables always serialize")
    }

    /// Validates the document into a bundle.
    pub fn into_bundle(self) -> Result<ConfigBundle, ConfigError> {
        for key in REQUIRED_KEYS {
            if !self.table.contains_key(*key) {
                return Err(ConfigError::MissingKey((*key).to_string()));
            }
        }
        if let Some((key, message)) = type_problem(&self.table) {
            return Err(ConfigError::InvalidValue { key, message });
        }
        let mut rest = self.table;
        let ic_u = take_ic_keys(&mut rest, "ic_u_")?;
        let ic_v = take_ic_keys(&mut rest, "ic_v_")?;
        let raw: RawConfig = toml::Value::Table(rest).try_into().map_err(|e: toml::de::Error| {
            ConfigError::InvalidValue { key: "document".into(), message: e.message().trim().to_string() }
        })?;
        build_bundle(raw, ic_u, ic_v)
    }
}

fn take_ic_keys(table: &mut toml::Table, prefix: &str) -> Result<IcKeys, ConfigError> {
    let keys: Vec<String> = table.keys().filter(|k| k.starts_with(prefix)).cloned().collect();
    let mut sub = toml::Table::new();
    for k in keys {
        let v = table.remove(&k).expect("key listed above");
        sub.insert(k[prefix.len()..].to_string(), v);
    }
    toml::Value::Table(sub).try_into().map_err(|e: toml::de::Error| ConfigError::InvalidValue {
        key: format!("{prefix}*"),
        message: e.message().trim().to_string(),
    })
}

fn ic_from_keys(keys: IcKeys, species: Species, length: f64) -> Result<InitialConditionSpec<f64>, ConfigError> {
    let prefix = format!("ic_{species}_");
    let family_name = keys.family.clone().unwrap_or_else(|| IcFamily::GaussianBump.as_str().to_string());
    let family: IcFamily = toml::Value::String(family_name.clone()).try_into().map_err(|_| ConfigError::InvalidValue {
        key: format!("{prefix}family"),
        message: format!("unknown family {family_name:?}"),
    })?;
    let (default_center, default_left, default_right) = match species {
        Species::U => (0.3 * length, 0.5, 0.0),
        Species::V => (0.7 * length, 0.0, 0.5),
    };
    let allowed: &[&str] = match family {
        IcFamily::GaussianBump => &["amplitude", "center", "width"],
        IcFamily::Step => &["left", "right", "position"],
        IcFamily::Constant => &["amplitude"],
        IcFamily::TwoBumps => &["amplitude", "center", "width", "amplitude2", "center2", "width2"],
        IcFamily::CustomTable => &["table"],
    };
    let present = [
        ("amplitude", keys.amplitude.is_some()),
        ("center", keys.center.is_some()),
        ("width", keys.width.is_some()),
        ("amplitude2", keys.amplitude2.is_some()),
        ("center2", keys.center2.is_some()),
        ("width2", keys.width2.is_some()),
        ("left", keys.left.is_some()),
        ("right", keys.right.is_some()),
        ("position", keys.position.is_some()),
        ("table", keys.table.is_some()),
    ];
    for (name, is_set) in present {
        if is_set && !allowed.contains(&name) {
            return Err(ConfigError::UnknownKey {
                key: format!("{prefix}{name}"),
                hint: Some(format!("not a parameter of family {}", family.as_str())),
            });
        }
    }
    let amplitude = keys.amplitude.unwrap_or(0.5);
    let width = keys.width.unwrap_or(0.1 * length);
    Ok(match family {
        IcFamily::GaussianBump => InitialConditionSpec::GaussianBump {
            amplitude,
            center: keys.center.unwrap_or(default_center),
            width,
        },
        IcFamily::Step => InitialConditionSpec::Step {
            left: keys.left.unwrap_or(default_left),
            right: keys.right.unwrap_or(default_right),
            position: keys.position.unwrap_or(0.5 * length),
        },
        IcFamily::Constant => InitialConditionSpec::Constant { amplitude },
        IcFamily::TwoBumps => InitialConditionSpec::TwoBumps {
            amplitudes: [amplitude, keys.amplitude2.unwrap_or(amplitude)],
            centers: [keys.center.unwrap_or(default_center), keys.center2.unwrap_or(0.5 * length)],
            widths: [width, keys.width2.unwrap_or(width)],
        },
        IcFamily::CustomTable => InitialConditionSpec::CustomTable {
            values: keys.table.ok_or_else(|| ConfigError::MissingKey(format!("{prefix}table")))?,
        },
    })
}

fn ic_to_keys(spec: &InitialConditionSpec<f64>) -> IcKeys {
    let mut k = IcKeys { family: Some(spec.family().as_str().to_string()), ..IcKeys::default() };
    match spec {
        InitialConditionSpec::GaussianBump { amplitude, center, width } => {
            (k.amplitude, k.center, k.width) = (Some(*amplitude), Some(*center), Some(*width));
        }
        InitialConditionSpec::Step { left, right, position } => {
            (k.left, k.right, k.position) = (Some(*left), Some(*right), Some(*position));
        }
        InitialConditionSpec::Constant { amplitude } => k.amplitude = Some(*amplitude),
        InitialConditionSpec::TwoBumps { amplitudes, centers, widths } => {
            (k.amplitude, k.center, k.width) = (Some(amplitudes[0]), Some(centers[0]), Some(widths[0]));
            (k.amplitude2, k.center2, k.width2) = (Some(amplitudes[1]), Some(centers[1]), Some(widths[1]));
        }
        InitialConditionSpec::CustomTable { values } => k.table = Some(values.clone()),
    }
    k
}

fn build_bundle(raw: RawConfig, ic_u: IcKeys, ic_v: IcKeys) -> Result<ConfigBundle, ConfigError> {
    if raw.n_cells == 0 {
        return Err(ConfigError::InvalidValue { key: "n_cells".into(), message: "must be positive".into() });
    }
    let grid = Grid::new(raw.length, raw.n_cells);
    let resource = if raw.m_cos_amplitude == 0.0 {
        ResourceSpec::Uniform { m: raw.m }
    } else {
        ResourceSpec::Cosine { m: raw.m, amplitude: raw.m_cos_amplitude }
    };
    let model = validate_config(ModelConfig {
        resource: resource.realize(&grid),
        grid,
        disp_u: DispersalSpec::new(raw.d1, raw.k_u, raw.p_u, raw.epsilon),
        disp_v: DispersalSpec::new(raw.d2, raw.k_v, raw.p_v, raw.epsilon),
        drift_q: raw.drift_q,
        drift_enabled: raw.drift_enabled,
        reaction_enabled: raw.reaction_enabled,
    })?;
    let control = StepControl {
        cfl_safety: raw.cfl_safety,
        dt_max: raw.dt_max,
        dt_min: raw.dt_min,
        t_end: raw.t_end,
        nonneg_clip_tolerance: raw.nonneg_clip_tolerance,
        fixed_dt: raw.fixed_dt,
        observe_every: 0,
        stops: raw.snapshots,
    };
    if let Some(problem) = control.violations().into_iter().next() {
        return Err(ConfigError::InvalidValue { key: "step control".into(), message: problem });
    }
    if let Some(bad) = control.stops.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
        return Err(ConfigError::InvalidValue { key: "snapshots".into(), message: format!("{bad} is not a valid time") });
    }
    let defaults = Thresholds::relative_to(model.resource.max());
    let thresholds = Thresholds {
        exclusion: raw.exclusion_threshold.unwrap_or(defaults.exclusion),
        survival: raw.survival_threshold.unwrap_or(defaults.survival),
    };
    if !(thresholds.exclusion > 0.0 && thresholds.exclusion <= thresholds.survival) {
        return Err(ConfigError::InvalidValue {
            key: "exclusion_threshold".into(),
            message: "need 0 < exclusion_threshold <= survival_threshold".into(),
        });
    }
    let ic_u = ic_from_keys(ic_u, Species::U, raw.length)?;
    let ic_v = ic_from_keys(ic_v, Species::V, raw.length)?;
    realize_ic(&ic_u, &model.grid, Species::U)?;
    realize_ic(&ic_v, &model.grid, Species::V)?;
    Ok(ConfigBundle { model, resource, ic_u, ic_v, control, thresholds })
}

#[derive(Clone, Copy)]
enum Kind {
    Number,
    Count,
    Flag,
    Text,
    Numbers,
}

fn kind_of(key: &str) -> Kind {
    match key {
        "n_cells" => Kind::Count,
        "drift_enabled" | "reaction_enabled" => Kind::Flag,
        "ic_u_family" | "ic_v_family" => Kind::Text,
        "snapshots" | "ic_u_table" | "ic_v_table" => Kind::Numbers,
        _ => Kind::Number,
    }
}

fn is_number(v: &toml::Value) -> bool {
    matches!(v, toml::Value::Float(_) | toml::Value::Integer(_))
}

/// First key whose value has the wrong type, with a description.
fn type_problem(table: &toml::Table) -> Option<(String, String)> {
    for (key, value) in table {
        let (ok, expected) = match kind_of(key) {
            Kind::Number => (is_number(value), "a number"),
            Kind::Count => (matches!(value, toml::Value::Integer(n) if *n >= 0), "a nonnegative integer"),
            Kind::Flag => (value.is_bool(), "true or false"),
            Kind::Text => (value.is_str(), "a string"),
            Kind::Numbers => (value.as_array().is_some_and(|a| a.iter().all(is_number)), "an array of numbers"),
        };
        if !ok {
            return Some((key.clone(), format!("expected {expected}, found {}", value.type_str())));
        }
    }
    None
}

/// Line and column of the value assigned to `key` in a flat document.
fn value_position(text: &str, key: &str) -> (usize, usize) {
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim_start();
        if let Some(rest) = trimmed.strip_prefix(key) {
            let after = rest.trim_start();
            if let Some(value) = after.strip_prefix('=') {
                let column = line.len() - value.trim_start().len() + 1;
                return (i + 1, column);
            }
        }
    }
    (1, 1)
}

/// Parses and validates a document.
pub fn load_config(text: &str) -> Result<ConfigBundle, ConfigError> {
    let doc = ConfigDocument::parse(text)?;
    if let Some((key, problem)) = type_problem(&doc.table) {
        let (line, column) = value_position(text, &key);
        return Err(ConfigError::Parse { line, column, message: format!("{key}: {problem}") });
    }
    doc.into_bundle()
}

/// Reads and loads a document from disk.
pub fn load_config_file(path: &std::path::Path) -> Result<ConfigBundle, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Parse {
        line: 0,
        column: 0,
        message: format!("{}: {e}", path.display()),
    })?;
    load_config(&text)
}

/// Document for `bundle` with every key written out.
pub fn dump_document(bundle: &ConfigBundle) -> ConfigDocument {
    let m = &bundle.model;
    let raw = RawConfig {
        d1: m.disp_u.d,
        d2: m.disp_v.d,
        m: bundle.resource.mean(),
        drift_q: m.drift_q,
        t_end: bundle.control.t_end,
        length: m.grid.length(),
        n_cells: m.grid.n_cells(),
        k_u: m.disp_u.k,
        p_u: m.disp_u.p,
        k_v: m.disp_v.k,
        p_v: m.disp_v.p,
        epsilon: m.disp_v.epsilon,
        drift_enabled: m.drift_enabled,
        reaction_enabled: m.reaction_enabled,
        m_cos_amplitude: bundle.resource.amplitude(),
        cfl_safety: bundle.control.cfl_safety,
        dt_max: bundle.control.dt_max,
        dt_min: bundle.control.dt_min,
        nonneg_clip_tolerance: bundle.control.nonneg_clip_tolerance,
        fixed_dt: bundle.control.fixed_dt,
        snapshots: bundle.control.stops.clone(),
        exclusion_threshold: Some(bundle.thresholds.exclusion),
        survival_threshold: Some(bundle.thresholds.survival),
    };
    let mut table = toml::Table::try_from(&raw).expect("flat config serializes");
    for (prefix, spec) in [("ic_u_", &bundle.ic_u), ("ic_v_", &bundle.ic_v)] {
        let keys = toml::Table::try_from(ic_to_keys(spec)).expect("ic keys serialize");
        for (k, v) in keys {
            table.insert(format!("{prefix}{k}"), v);
        }
    }
    ConfigDocument { table }
}

/// TOML text for `bundle`; [`load_config`] reproduces the bundle exactly.
pub fn dump(bundle: &ConfigBundle) -> String {
    dump_document(bundle).to_toml()
}

impl fmt::Display for ConfigBundle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&dump(self))
    }
}
