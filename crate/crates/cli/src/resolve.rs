//! Turning a scenario argument plus overrides into a validated bundle.

use std::path::Path;

use driftcomp::config::{dump, dump_document, load_config, ConfigBundle};
use driftcomp::model::Verdict;
use driftcomp::scenario::find_preset;

use crate::CliError;

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    /// Preset name or config file stem.
    pub id: String,
    pub bundle: ConfigBundle,
    /// Verdict claimed by the preset, if any.
    pub expected: Option<Verdict>,
}

impl Scenario {
    /// Applies `key=value` overrides in order and revalidates.
    pub fn with_overrides(mut self, overrides: &[String]) -> Result<Self, CliError> {
        if overrides.is_empty() {
            return Ok(self);
        }
        let mut doc = dump_document(&self.bundle);
        for o in overrides {
            doc.set(o)?;
        }
        self.bundle = doc.into_bundle()?;
        Ok(self)
    }

    /// The executed configuration as TOML text.
    pub fn config_text(&self) -> String {
        dump(&self.bundle)
    }
}

/// Resolves a preset name first, then a config file path.
pub fn resolve(spec: &str, overrides: &[String]) -> Result<Scenario, CliError> {
    let base = match find_preset(spec) {
        Ok(p) => Scenario { id: p.name.to_string(), bundle: p.bundle, expected: Some(p.expected_verdict) },
        Err(_) => {
            let path = Path::new(spec);
            let text = std::fs::read_to_string(path).map_err(|_| CliError::ScenarioNotFound(spec.to_string()))?;
            let id = path.file_stem().map_or_else(|| "config".to_string(), |s| s.to_string_lossy().into_owned());
            Scenario { id, bundle: load_config(&text)?, expected: None }
        }
    };
    base.with_overrides(overrides)
}
