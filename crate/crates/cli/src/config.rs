//! JSON configuration files. All quantities are SI; unknown keys are
//! rejected by name.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

fn yes() -> bool {
    true
}

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// DC voltages [V].
    pub u: Vec<f64>,
    /// RMS AC voltages [V].
    pub u_ac: Vec<f64>,
    /// [rad/s]
    pub omega: Vec<f64>,
    /// [kg/m^2]
    pub mu: f64,
    /// [m]
    #[serde(default = "default_z_lo")]
    pub z_lo: f64,
    /// [m]
    #[serde(default = "default_z_hi")]
    pub z_hi: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "yes")]
    pub casimir: bool,
    #[serde(default = "yes")]
    pub coulomb: bool,
}

fn default_z_lo() -> f64 {
    1e-9
}

fn default_z_hi() -> f64 {
    1e-3
}

fn default_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub u: f64,
    pub u_ac: f64,
    pub omega: f64,
    pub mu: f64,
    /// Initial gap [m].
    pub z0: f64,
    /// [m/s]
    #[serde(default)]
    pub v0: f64,
    /// [s]
    pub t_end: f64,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_abs_tol")]
    pub abs_tol: f64,
    #[serde(default = "yes")]
    pub casimir: bool,
    #[serde(default = "yes")]
    pub coulomb: bool,
    /// Constant outward pressure [Pa].
    #[serde(default)]
    pub holding_pressure: f64,
    /// Output spacing [s]; 1/32 of a drive period if omitted.
    pub sample_interval: Option<f64>,
    /// [m]
    #[serde(default = "default_floor")]
    pub collapse_floor: f64,
}

fn default_rel_tol() -> f64 {
    1e-9
}

fn default_abs_tol() -> f64 {
    1e-12
}

fn default_floor() -> f64 {
    casimir_core::dynamics::DEFAULT_COLLAPSE_FLOOR
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureConfig {
    pub u: f64,
    pub u_ac: f64,
    pub omega: f64,
    pub mu: f64,
    /// Probe gaps [m]; chosen automatically if omitted.
    #[serde(default)]
    pub probe_gaps: Vec<f64>,
    #[serde(default = "default_measure_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_measure_abs_tol")]
    pub abs_tol: f64,
    #[serde(default = "yes")]
    pub casimir: bool,
    #[serde(default = "yes")]
    pub coulomb: bool,
}

fn default_measure_rel_tol() -> f64 {
    1e-12
}

fn default_measure_abs_tol() -> f64 {
    1e-15
}
