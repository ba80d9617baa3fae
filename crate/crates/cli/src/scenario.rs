//! Scenario files.
//!
//! A scenario is a TOML document with optional `[robot]`, `[load]`,
//! `[bounds]`, `[ga]` and `[solver]` tables plus the top-level keys
//! `forces`, `sample_count` and `seed`. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tdcr_core::{ForceBounds, GAConfig, LoadCase, RobotParams, SolverSettings, TendonForceSet};

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    /// Base tensions for `solve` (N).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forces: Option<Vec<f64>>,
    /// Number of random force sets for `sample`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_count: Option<usize>,
    /// Seed of the `sample` force draws.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub robot: RobotParams,
    #[serde(default)]
    pub load: LoadCase,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<ForceBounds>,
    #[serde(default)]
    pub ga: GAConfig,
    #[serde(default)]
    pub solver: SolverSettings,
}

/// 1-based line of byte offset `offset` in `text`.
fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of the `[name]` table header, if present.
fn table_line(text: &str, name: &str) -> Option<usize> {
    let header = format!("[{name}]");
    text.lines()
        .position(|l| l.trim_start().starts_with(&header))
        .map(|i| i + 1)
}

/// Line of a top-level `key = ...` assignment, if present.
fn key_line(text: &str, key: &str) -> Option<usize> {
    text.lines()
        .position(|l| {
            let l = l.trim_start();
            l.strip_prefix(key)
                .is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map(|i| i + 1)
}

impl ScenarioFile {
    pub fn parse(text: &str, path: &Path) -> Result<Self, CliError> {
        let scenario: ScenarioFile = toml::from_str(text).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            line: e.span().map(|s| line_of(text, s.start)),
            message: e.message().to_string(),
        })?;
        scenario.validate(text, path)?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            line: None,
            message: format!("cannot read scenario: {e}"),
        })?;
        Self::parse(&text, path)
    }

    fn validate(&self, text: &str, path: &Path) -> Result<(), CliError> {
        let at = |line: Option<usize>, message: String| CliError::Config {
            path: path.to_path_buf(),
            line,
            message,
        };
        self.robot
            .validate()
            .map_err(|e| at(table_line(text, "robot"), e.to_string()))?;
        self.load
            .validate()
            .map_err(|e| at(table_line(text, "load"), e.to_string()))?;
        self.solver
            .validate()
            .map_err(|e| at(table_line(text, "solver"), e.to_string()))?;
        self.ga
            .validate()
            .map_err(|e| at(table_line(text, "ga"), e.to_string()))?;
        if let Some(bounds) = &self.bounds {
            bounds
                .validate(&self.robot)
                .map_err(|e| at(table_line(text, "bounds"), e.to_string()))?;
        }
        if let Some(forces) = &self.forces {
            TendonForceSet::new(forces.clone())
                .validate(&self.robot)
                .map_err(|e| at(key_line(text, "forces"), e.to_string()))?;
        }
        Ok(())
    }

    pub fn bounds(&self) -> ForceBounds {
        self.bounds
            .clone()
            .unwrap_or_else(|| ForceBounds::default_for(&self.robot))
    }

    /// Overrides both the sampling seed and the GA seed.
    pub fn apply_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
        self.ga.rng_seed = seed;
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes to TOML")
    }

    pub fn missing(&self, path: &Path, what: &str) -> CliError {
        CliError::Config {
            path: PathBuf::from(path),
            line: None,
            message: format!("`{what}` is required for this command"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
sample_count = 5
seed = 3

[robot]
num_segments = 2
disks_per_segment = 10
subsegment_length = 0.02
tendon_pitch_radius = 0.006
tendons_per_segment = 4
backbone_young_modulus = 60e9
backbone_shear_modulus = 23e9
backbone_second_moment = 7.853981633974482e-13
bending_stiffness_coeff = 1.0
disk_mass = 0.002
backbone_mass_per_subsegment = 0.0003
gravity_accel = 9.81

[load]
gravity_on = true
external_force = [0.1, 0.1, -0.1]
external_torque = [-0.1, 0.1, 0.1]

[ga]
population_size = 20
"#;

    fn parse(text: &str) -> Result<ScenarioFile, CliError> {
        ScenarioFile::parse(text, Path::new("test.toml"))
    }

    #[test]
    fn parses_partial_sections() {
        let s = parse(SAMPLE).unwrap();
        assert_eq!(s.sample_count, Some(5));
        assert_eq!(s.ga.population_size, 20);
        assert_eq!(s.ga.tournament_size, 3);
        assert_eq!(s.load, LoadCase::reference_scenario());
        assert_eq!(s.robot, RobotParams::default());
        assert_eq!(s.bounds(), ForceBounds::default_for(&s.robot));
    }

    #[test]
    fn dump_round_trips() {
        let mut s = parse(SAMPLE).unwrap();
        s.forces = Some(vec![1.0, 0.0, 2.5, 0.1, 0.0, 0.0, 3.0, 1e-3]);
        s.bounds = Some(ForceBounds::uniform(8, 0.5, 7.25));
        s.apply_seed(42);
        let again = parse(&s.to_toml()).unwrap();
        assert_eq!(again, s);
    }

    #[test]
    fn unknown_keys_are_rejected_with_a_line() {
        let text = SAMPLE.replace("disk_mass = 0.002", "disk_mas = 0.002");
        match parse(&text) {
            Err(CliError::Config {
                line: Some(line),
                message,
                ..
            }) => {
                assert_eq!(line, 15);
                assert!(message.contains("disk_mas"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_values_point_at_their_table() {
        let text = SAMPLE.replace("disk_mass = 0.002", "disk_mass = -0.002");
        match parse(&text) {
            Err(CliError::Config { line, message, .. }) => {
                assert_eq!(line, Some(5));
                assert!(message.contains("disk_mass"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let text = format!("forces = [1.0, -2.0]\n{SAMPLE}");
        assert!(matches!(
            parse(&text),
            Err(CliError::Config { line: Some(1), .. })
        ));
    }

    #[test]
    fn defaults_round_trip_exactly() {
        let s = ScenarioFile::default();
        let text = s.to_toml();
        assert_eq!(parse(&text).unwrap(), s, "{text}");
    }

    #[test]
    fn empty_file_is_all_defaults() {
        assert_eq!(parse("").unwrap(), ScenarioFile::default());
    }
}
