//! Max-min SINR multi-group multicast beamforming for arrays of rotatable
//! directional antennas.
//!
//! The optimizer alternates between a conic beamforming subproblem and a
//! successive-convex-approximation update of the per-antenna boresight
//! directions. See [`ao::run_ao`] for the entry point.

pub mod ao;
pub mod config;
pub mod conic;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod objective;
pub mod oracle;
pub mod sca;
pub mod units;

pub use ao::{run_ao, run_beamforming_only, AoOptions, AoReport, Termination};
pub use config::SystemConfig;
pub use conic::{ConicProgram, SolveOutcome, SolveStatus};
pub use error::{Error, Result};
pub use harness::{ExperimentConfig, SchemeId};
pub use geometry::{ChannelMatrix, PointingMatrix, ScenarioGeometry, Vec3};
pub use objective::{AuxiliaryVars, BeamformingMatrix};
pub use sca::SurrogateBundle;
