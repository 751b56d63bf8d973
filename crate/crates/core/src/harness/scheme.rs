//! The optimized scheme and its three benchmarks.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ao::{run_ao, run_beamforming_only};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::geometry::{PointingMatrix, ScenarioGeometry};
use crate::units::to_db;

/// Default number of boresight draws for the random-orientation benchmark.
pub const DEFAULT_REALIZATIONS: usize = 100;

/// Offset mixed into the seed for boresight draws so they do not share a
/// stream with the beamformer initialization.
const ORIENTATION_STREAM: u64 = 0x5EED_0F_B0E5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SchemeId {
    /// Joint beamforming and boresight optimization. `max_zenith` overrides
    /// the configured rotation limit.
    RaOptimized { max_zenith: Option<f64> },
    /// Every boresight fixed at +x; beamforming only.
    FixedDirectional,
    /// Boresights drawn at random; beamforming only, averaged in linear scale.
    RandomOrientation { realizations: usize },
    /// Unit-gain elements; beamforming only.
    Isotropic,
}

impl SchemeId {
    /// The four schemes compared on every sweep.
    pub fn standard(realizations: usize) -> Vec<SchemeId> {
        vec![
            SchemeId::RaOptimized { max_zenith: None },
            SchemeId::FixedDirectional,
            SchemeId::RandomOrientation { realizations },
            SchemeId::Isotropic,
        ]
    }

    /// CSV label. Rotation-limit variants append the limit in whole degrees.
    pub fn label(&self) -> String {
        match self {
            SchemeId::RaOptimized { max_zenith: None } => "ra_optimized".into(),
            SchemeId::RaOptimized {
                max_zenith: Some(limit),
            } => format!("ra_optimized_tmax{}", limit.to_degrees().round() as i64),
            SchemeId::FixedDirectional => "fixed_directional".into(),
            SchemeId::RandomOrientation { .. } => "random_orientation".into(),
            SchemeId::Isotropic => "isotropic".into(),
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for SchemeId {
    type Err = Error;

    /// Accepts the CSV labels. `ra_optimized_tmaxD` takes D in degrees.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ra_optimized" => Ok(SchemeId::RaOptimized { max_zenith: None }),
            "fixed_directional" => Ok(SchemeId::FixedDirectional),
            "random_orientation" => Ok(SchemeId::RandomOrientation {
                realizations: DEFAULT_REALIZATIONS,
            }),
            "isotropic" => Ok(SchemeId::Isotropic),
            other => other
                .strip_prefix("ra_optimized_tmax")
                .and_then(|deg| deg.parse::<f64>().ok())
                .filter(|deg| *deg > 0.0 && *deg <= 90.0)
                .map(|deg| SchemeId::RaOptimized {
                    max_zenith: Some(deg.to_radians()),
                })
                .ok_or_else(|| Error::InvalidConfig(format!("unknown scheme '{other}'"))),
        }
    }
}

/// Result of one scheme at one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeOutcome {
    pub min_sinr: f64,
    /// Outer iterations; for the random benchmark the rounded mean per draw.
    pub iterations: usize,
    pub wall_time: Duration,
}

impl SchemeOutcome {
    pub fn min_sinr_db(&self) -> f64 {
        to_db(self.min_sinr)
    }
}

/// Random boresights with zenith uniform on `[0, max_zenith]` and azimuth
/// uniform on `[0, 2 pi)`.
pub fn random_pointing(rng: &mut impl Rng, num_antennas: usize, max_zenith: f64) -> PointingMatrix {
    let angles: Vec<(f64, f64)> = (0..num_antennas)
        .map(|_| (rng.gen_range(0.0..=max_zenith), rng.gen_range(0.0..2.0 * PI)))
        .collect();
    PointingMatrix::from_angles(&angles)
}

/// Runs `scheme` on the given system. Every scheme starts from the same
/// seeded beamformer.
pub fn run_scheme(
    scheme: SchemeId,
    config: &SystemConfig,
    geometry: &ScenarioGeometry,
    seed: u64,
) -> Result<SchemeOutcome> {
    let start = Instant::now();
    let broadside = PointingMatrix::broadside(config.num_antennas);
    let (min_sinr, iterations) = match scheme {
        SchemeId::RaOptimized { max_zenith: None } => {
            let report = run_ao(config, geometry, seed)?;
            (report.min_sinr, report.iterations)
        }
        SchemeId::RaOptimized {
            max_zenith: Some(limit),
        } => {
            let mut limited = config.clone();
            limited.max_zenith_rad = limit;
            let report = run_ao(&limited, geometry, seed)?;
            (report.min_sinr, report.iterations)
        }
        SchemeId::FixedDirectional => {
            let report = run_beamforming_only(config, geometry, &broadside, seed)?;
            (report.min_sinr, report.iterations)
        }
        SchemeId::RandomOrientation { realizations } => {
            if realizations == 0 {
                return Err(Error::InvalidConfig("realizations must be at least 1".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ORIENTATION_STREAM);
            let mut sum = 0.0;
            let mut iterations = 0usize;
            for _ in 0..realizations {
                let pointing = random_pointing(&mut rng, config.num_antennas, config.max_zenith_rad);
                let report = run_beamforming_only(config, geometry, &pointing, seed)?;
                sum += report.min_sinr;
                iterations += report.iterations;
            }
            let n = realizations as f64;
            (sum / n, (iterations as f64 / n).round() as usize)
        }
        SchemeId::Isotropic => {
            let mut iso = config.clone();
            iso.directivity = 0.0;
            let report = run_beamforming_only(&iso, geometry, &broadside, seed)?;
            (report.min_sinr, report.iterations)
        }
    };
    Ok(SchemeOutcome {
        min_sinr,
        iterations,
        wall_time: start.elapsed(),
    })
}
