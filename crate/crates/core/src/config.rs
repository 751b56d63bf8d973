//! Scalar system parameters.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::units::dbm_to_watts;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// All scalar parameters of one multicast system. Powers are linear watts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub carrier_frequency_hz: f64,
    /// Per-user receiver noise power, identical for every user.
    pub noise_power_w: f64,
    pub transmit_power_w: f64,
    /// Cosine-power exponent of the element pattern. Zero selects an
    /// isotropic element with unit gain.
    pub directivity: f64,
    /// Largest allowed angle between a boresight and the +x axis.
    pub max_zenith_rad: f64,
    pub num_antennas: usize,
    /// Number of users in each multicast group; its length is the group count.
    pub group_sizes: Vec<usize>,
    pub element_area_m2: f64,
    pub element_spacing_m: f64,
    pub convergence_threshold: f64,
    pub max_iterations: usize,
}

impl SystemConfig {
    /// The reference operating point: 2.4 GHz, -94 dBm noise, 15 dBm budget,
    /// four half-wavelength spaced elements with p = 5, two groups of two.
    pub fn reference() -> Self {
        let carrier = 2.4e9;
        let wavelength = SPEED_OF_LIGHT / carrier;
        Self {
            carrier_frequency_hz: carrier,
            noise_power_w: dbm_to_watts(-94.0),
            transmit_power_w: dbm_to_watts(15.0),
            directivity: 5.0,
            max_zenith_rad: PI / 3.0,
            num_antennas: 4,
            group_sizes: vec![2, 2],
            element_area_m2: wavelength * wavelength / (4.0 * PI),
            element_spacing_m: wavelength / 2.0,
            convergence_threshold: 1e-3,
            max_iterations: 30,
        }
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency_hz
    }

    pub fn num_groups(&self) -> usize {
        self.group_sizes.len()
    }

    pub fn num_users(&self) -> usize {
        self.group_sizes.iter().sum()
    }

    /// True when the element pattern is isotropic (p = 0).
    pub fn is_isotropic(&self) -> bool {
        self.directivity == 0.0
    }

    /// Peak element gain: 2(2p+1) for a cosine-power pattern, 1 for isotropic.
    pub fn peak_gain(&self) -> f64 {
        peak_gain(self.directivity)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        let positive = [
            ("carrier_frequency_hz", self.carrier_frequency_hz),
            ("noise_power_w", self.noise_power_w),
            ("transmit_power_w", self.transmit_power_w),
            ("element_area_m2", self.element_area_m2),
            ("element_spacing_m", self.element_spacing_m),
            ("convergence_threshold", self.convergence_threshold),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return bad(format!("{name} must be positive and finite, got {value}"));
            }
        }
        if !(self.directivity.is_finite() && self.directivity >= 0.0) {
            return bad(format!("directivity must be >= 0, got {}", self.directivity));
        }
        if !(self.max_zenith_rad > 0.0 && self.max_zenith_rad <= PI / 2.0) {
            return bad(format!(
                "max_zenith_rad must lie in (0, pi/2], got {}",
                self.max_zenith_rad
            ));
        }
        if self.num_antennas == 0 {
            return bad("num_antennas must be at least 1".into());
        }
        if self.group_sizes.is_empty() || self.group_sizes.contains(&0) {
            return bad("every group needs at least one user".into());
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be at least 1".into());
        }
        Ok(())
    }
}

pub(crate) fn peak_gain(p: f64) -> f64 {
    if p == 0.0 {
        1.0
    } else {
        2.0 * (2.0 * p + 1.0)
    }
}
