//! Fixtures shared by the optimizer benchmarks.

use ra_multicast::conic::{build_beamforming_program, build_boresight_program, BeamformingProgram, BoresightProgram};
use ra_multicast::geometry::channel_matrix;
use ra_multicast::harness::ExperimentConfig;
use ra_multicast::objective::optimal_aux;
use ra_multicast::sca::ScaContext;
use ra_multicast::{ao, AuxiliaryVars, BeamformingMatrix, ChannelMatrix, PointingMatrix, ScenarioGeometry, SystemConfig};

/// A scenario together with the optimizer state right after initialization.
pub struct Fixture {
    pub config: SystemConfig,
    pub geometry: ScenarioGeometry,
    pub w: BeamformingMatrix,
    pub f: PointingMatrix,
    pub z: AuxiliaryVars,
    pub h: ChannelMatrix,
}

impl Fixture {
    pub fn new(cfg: &ExperimentConfig, seed: u64) -> Self {
        let config = cfg.system().expect("valid benchmark config");
        let geometry = cfg.geometry().expect("valid benchmark geometry");
        let (w, f, _) = ao::initialize(&config, &geometry, seed).expect("initialization");
        let h = channel_matrix(&geometry, &f, &config).expect("channel");
        let z = optimal_aux(&w, &h, &geometry, &config);
        Self {
            config,
            geometry,
            w,
            f,
            z,
            h,
        }
    }

    /// Default four-antenna, two-group scenario.
    pub fn reference(seed: u64) -> Self {
        Self::new(&ExperimentConfig::default(), seed)
    }

    /// `n` antennas serving three groups of four users.
    pub fn antennas(n: usize, seed: u64) -> Self {
        let mut cfg = ExperimentConfig::default();
        cfg.num_antennas = n;
        cfg.group_sizes = vec![4, 4, 4];
        Self::new(&cfg, seed)
    }

    pub fn beamforming_program(&self) -> BeamformingProgram {
        build_beamforming_program(&self.h, &self.z, &self.geometry, &self.config).expect("beamforming program")
    }

    pub fn boresight_program(&self) -> BoresightProgram {
        let bundle = ScaContext::new(&self.geometry, &self.config)
            .build_surrogates(&self.f, &self.w, &self.z)
            .expect("surrogates");
        build_boresight_program(&bundle, &self.f, &self.config).expect("boresight program")
    }
}
