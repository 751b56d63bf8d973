//! JSON experiment configuration. Powers are given in dBm here and converted
//! to watts once, when the system configuration is built.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{SystemConfig, SPEED_OF_LIGHT};
use crate::error::{Error, Result};
use crate::geometry::{arc_user_layout, ScenarioGeometry};
use crate::units::dbm_to_watts;

/// Scenario and optimizer parameters for one experiment.
///
/// `element_area_m2` defaults to `lambda^2 / (4 pi)` and `element_spacing_m`
/// to `lambda / 2` when omitted. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "defaults::carrier")]
    pub carrier_frequency_hz: f64,
    #[serde(default = "defaults::noise")]
    pub noise_power_dbm: f64,
    #[serde(default = "defaults::power")]
    pub transmit_power_dbm: f64,
    #[serde(default = "defaults::directivity")]
    pub directivity: f64,
    #[serde(default = "defaults::max_zenith")]
    pub max_zenith_rad: f64,
    #[serde(default = "defaults::antennas")]
    pub num_antennas: usize,
    #[serde(default = "defaults::groups")]
    pub group_sizes: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub element_area_m2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub element_spacing_m: Option<f64>,
    #[serde(default = "defaults::radius")]
    pub arc_radius_m: f64,
    #[serde(default = "defaults::height")]
    pub array_height_m: f64,
    #[serde(default = "defaults::spread")]
    pub arc_spread_rad: f64,
    #[serde(default = "defaults::threshold")]
    pub convergence_threshold: f64,
    #[serde(default = "defaults::iterations")]
    pub max_iterations: usize,
    /// Boresight draws averaged by the random-orientation benchmark.
    #[serde(default = "defaults::realizations")]
    pub random_realizations: usize,
}

mod defaults {
    use super::PI;
    pub fn carrier() -> f64 {
        2.4e9
    }
    pub fn noise() -> f64 {
        -94.0
    }
    pub fn power() -> f64 {
        15.0
    }
    pub fn directivity() -> f64 {
        5.0
    }
    pub fn max_zenith() -> f64 {
        PI / 3.0
    }
    pub fn antennas() -> usize {
        4
    }
    pub fn groups() -> Vec<usize> {
        vec![2, 2]
    }
    pub fn radius() -> f64 {
        50.0
    }
    pub fn height() -> f64 {
        10.0
    }
    pub fn spread() -> f64 {
        2.0 * PI / 3.0
    }
    pub fn threshold() -> f64 {
        1e-3
    }
    pub fn iterations() -> usize {
        30
    }
    pub fn realizations() -> usize {
        100
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl ExperimentConfig {
    /// Parses JSON text. Errors carry the line and column of the problem.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| {
            Error::InvalidConfig(format!("line {} column {}: {}", e.line(), e.column(), e))
        })?;
        cfg.geometry()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::InvalidConfig(msg) => Error::InvalidConfig(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    /// Validated system configuration in linear units.
    pub fn system(&self) -> Result<SystemConfig> {
        let wavelength = SPEED_OF_LIGHT / self.carrier_frequency_hz;
        let config = SystemConfig {
            carrier_frequency_hz: self.carrier_frequency_hz,
            noise_power_w: dbm_to_watts(self.noise_power_dbm),
            transmit_power_w: dbm_to_watts(self.transmit_power_dbm),
            directivity: self.directivity,
            max_zenith_rad: self.max_zenith_rad,
            num_antennas: self.num_antennas,
            group_sizes: self.group_sizes.clone(),
            element_area_m2: self
                .element_area_m2
                .unwrap_or(wavelength * wavelength / (4.0 * PI)),
            element_spacing_m: self.element_spacing_m.unwrap_or(wavelength / 2.0),
            convergence_threshold: self.convergence_threshold,
            max_iterations: self.max_iterations,
        };
        config.validate()?;
        if self.random_realizations == 0 {
            return Err(Error::InvalidConfig("random_realizations must be at least 1".into()));
        }
        Ok(config)
    }

    /// Array on the origin, users on the arc. Also validates the system.
    pub fn geometry(&self) -> Result<ScenarioGeometry> {
        arc_user_layout(&self.system()?, self.arc_radius_m, self.array_height_m, self.arc_spread_rad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_reproduce_reference_system() {
        let cfg = ExperimentConfig::default();
        let sys = cfg.system().unwrap();
        let reference = SystemConfig::reference();
        assert_eq!(sys.num_antennas, reference.num_antennas);
        assert_eq!(sys.group_sizes, reference.group_sizes);
        assert!((sys.transmit_power_w - 0.031_622_776_6).abs() < 1e-10);
        assert!((sys.element_area_m2 - reference.element_area_m2).abs() < 1e-18);
        assert_eq!(cfg.geometry().unwrap().num_users(), 4);
    }

    #[test]
    fn unknown_keys_are_rejected_with_position() {
        let err = ExperimentConfig::from_json("{\n  \"num_antennas\": 4,\n  \"num_antenas\": 5\n}").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3"), "{msg}");
        assert!(msg.contains("num_antenas"), "{msg}");
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"max_zenith_rad": 2.0}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"group_sizes": []}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"random_realizations": 0}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"arc_spread_rad": 4.0}"#).is_err());
    }

    #[test]
    fn json_round_trip() {
        let mut cfg = ExperimentConfig::default();
        cfg.transmit_power_dbm = 7.5;
        cfg.element_spacing_m = Some(0.1);
        let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(cfg, back);
    }
}
