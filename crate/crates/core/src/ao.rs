//! Alternating optimization of beamformers and boresight directions.
//!
//! Each outer iteration solves the beamforming subproblem at fixed `F`,
//! refreshes the auxiliaries, takes one boresight SCA step (with curvature
//! backtracking) and refreshes the auxiliaries again. A step that would lower
//! the true min-SINR is discarded, so the reported history never decreases.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::SystemConfig;
use crate::conic::{build_beamforming_program, build_boresight_program, solve_with, SolverSettings};
use crate::error::{Error, Result};
use crate::geometry::{channel_matrix, ChannelMatrix, PointingMatrix, ScenarioGeometry};
use crate::objective::{min_sinr, optimal_aux, AuxiliaryVars, BeamformingMatrix};
use crate::sca::{backtrack_curvature, ScaContext, MAX_DOUBLINGS};
use crate::units::to_db;

/// Why the outer loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Threshold,
    MaxIterations,
    SubproblemFailure,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Threshold => "threshold",
            Termination::MaxIterations => "max_iterations",
            Termination::SubproblemFailure => "subproblem_failure",
        }
    }
}

#[derive(Debug, Clone)]
pub struct AoOptions {
    /// Run boresight steps. When false only `W` and `Z` are updated.
    pub optimize_boresight: bool,
    /// Starting pointing matrix; broadside when `None`.
    pub initial_pointing: Option<PointingMatrix>,
    pub solver: SolverSettings,
}

impl Default for AoOptions {
    fn default() -> Self {
        Self {
            optimize_boresight: true,
            initial_pointing: None,
            solver: SolverSettings::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AoReport {
    /// Min-SINR after initialization (index 0) and after every iteration.
    pub history: Vec<f64>,
    pub iteration_times: Vec<Duration>,
    pub beamformer: BeamformingMatrix,
    pub pointing: PointingMatrix,
    pub aux: AuxiliaryVars,
    pub termination: Termination,
    pub iterations: usize,
    /// Boresight doublings summed over all iterations.
    pub doublings: usize,
    /// Boresight steps abandoned after exhausting the doubling budget.
    pub failed_boresight_steps: usize,
    /// Min-SINR of the last iterate before pointing normalization.
    pub pre_normalization_min_sinr: f64,
    /// Min-SINR with normalized pointing and the unchanged beamformer.
    pub normalized_min_sinr: f64,
    /// Reported value: normalized pointing after the final beamforming refresh.
    pub min_sinr: f64,
    pub wall_time: Duration,
}

impl AoReport {
    pub fn history_db(&self) -> Vec<f64> {
        self.history.iter().map(|&v| to_db(v)).collect()
    }

    pub fn min_sinr_db(&self) -> f64 {
        to_db(self.min_sinr)
    }
}

/// Broadside pointing, seeded random beamformer at full power, and the
/// matching auxiliaries.
pub fn initialize(
    config: &SystemConfig,
    geometry: &ScenarioGeometry,
    seed: u64,
) -> Result<(BeamformingMatrix, PointingMatrix, AuxiliaryVars)> {
    config.validate()?;
    geometry.check_against(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = BeamformingMatrix::random(
        &mut rng,
        config.num_antennas,
        config.num_groups(),
        config.transmit_power_w,
    );
    let f = PointingMatrix::broadside(config.num_antennas);
    let h = channel_matrix(geometry, &f, config)?;
    let z = optimal_aux(&w, &h, geometry, config);
    Ok((w, f, z))
}

/// Full joint optimization from the default initialization.
pub fn run_ao(config: &SystemConfig, geometry: &ScenarioGeometry, seed: u64) -> Result<AoReport> {
    run_with(config, geometry, seed, &AoOptions::default())
}

/// Beamforming-only optimization at a fixed pointing matrix.
pub fn run_beamforming_only(
    config: &SystemConfig,
    geometry: &ScenarioGeometry,
    pointing: &PointingMatrix,
    seed: u64,
) -> Result<AoReport> {
    let options = AoOptions {
        optimize_boresight: false,
        initial_pointing: Some(pointing.clone()),
        ..AoOptions::default()
    };
    run_with(config, geometry, seed, &options)
}

struct Driver<'a> {
    config: &'a SystemConfig,
    geometry: &'a ScenarioGeometry,
    settings: &'a SolverSettings,
}

enum StepError {
    /// The conic solver did not return a usable point.
    Solver,
    /// Backtracking ran out of doublings.
    Exhausted,
}

impl Driver<'_> {
    fn channel(&self, f: &PointingMatrix) -> Result<ChannelMatrix> {
        channel_matrix(self.geometry, f, self.config)
    }

    fn beamforming_step(&self, h: &ChannelMatrix, z: &AuxiliaryVars) -> Result<Option<BeamformingMatrix>> {
        let program = build_beamforming_program(h, z, self.geometry, self.config)?;
        let out = solve_with(&program.program, self.settings);
        if !out.status.is_usable() {
            log::debug!("beamforming solve returned {:?}", out.status);
            return Ok(None);
        }
        Ok(Some(program.beamformer(&out.x)))
    }

    fn boresight_step(
        &self,
        f_prev: &PointingMatrix,
        w: &BeamformingMatrix,
        z: &AuxiliaryVars,
    ) -> Result<std::result::Result<(PointingMatrix, usize), StepError>> {
        let ctx = ScaContext::new(self.geometry, self.config);
        let mut bundle = ctx.build_surrogates(f_prev, w, z)?;
        for doublings in 0..=MAX_DOUBLINGS {
            let program = build_boresight_program(&bundle, f_prev, self.config)?;
            let out = solve_with(&program.program, self.settings);
            if !out.status.is_usable() {
                log::debug!("boresight solve returned {:?}", out.status);
                return Ok(Err(StepError::Solver));
            }
            let candidate = program.pointing(&out.x);
            if backtrack_curvature(&ctx, &mut bundle, &candidate, w, z) {
                return Ok(Ok((candidate, doublings)));
            }
        }
        Ok(Err(StepError::Exhausted))
    }
}

/// Scales row `n` of `w` by `||f_n||^p` and refills the power budget. Every
/// product `h_k^T w_j` computed with the normalized pointing then equals the
/// relaxed one times a common factor >= 1, so no SINR decreases.
fn carry_across_normalization(
    w: &BeamformingMatrix,
    relaxed: &PointingMatrix,
    config: &SystemConfig,
) -> BeamformingMatrix {
    let mut out = w.clone();
    for (n, f) in relaxed.columns().iter().enumerate() {
        let norm = f.norm();
        if norm > 0.0 {
            let factor = norm.powf(config.directivity);
            for m in 0..w.num_groups() {
                out.0[(n, m)] *= factor;
            }
        }
    }
    let power = out.power();
    if power > 0.0 {
        out.0 *= num_complex::Complex64::from((config.transmit_power_w / power).sqrt());
    }
    out
}

pub fn run_with(
    config: &SystemConfig,
    geometry: &ScenarioGeometry,
    seed: u64,
    options: &AoOptions,
) -> Result<AoReport> {
    let start = Instant::now();
    let (mut w, broadside, _) = initialize(config, geometry, seed)?;
    let mut f = options.initial_pointing.clone().unwrap_or(broadside);
    if f.num_antennas() != config.num_antennas {
        return Err(Error::DimensionMismatch(format!(
            "initial pointing has {} columns, expected {}",
            f.num_antennas(),
            config.num_antennas
        )));
    }
    let driver = Driver {
        config,
        geometry,
        settings: &options.solver,
    };
    let optimize_f = options.optimize_boresight && !config.is_isotropic();

    let mut h = driver.channel(&f)?;
    let mut z = optimal_aux(&w, &h, geometry, config);
    let mut current = min_sinr(&w, &h, geometry, config);
    let mut history = vec![current];
    let mut iteration_times = Vec::new();
    let mut failures = 0usize;
    let mut doublings = 0usize;
    let mut failed_boresight_steps = 0usize;
    let mut termination = Termination::MaxIterations;

    for iteration in 1..=config.max_iterations {
        let iter_start = Instant::now();
        let previous = current;

        match driver.beamforming_step(&h, &z)? {
            Some(candidate) => {
                failures = 0;
                let value = min_sinr(&candidate, &h, geometry, config);
                if value >= current {
                    w = candidate;
                    current = value;
                }
            }
            None => failures += 1,
        }
        z = optimal_aux(&w, &h, geometry, config);

        if optimize_f && failures < 2 {
            match driver.boresight_step(&f, &w, &z)? {
                Ok((candidate, used)) => {
                    failures = 0;
                    doublings += used;
                    let h_new = driver.channel(&candidate)?;
                    let value = min_sinr(&w, &h_new, geometry, config);
                    if value >= current {
                        f = candidate;
                        h = h_new;
                        current = value;
                    }
                }
                Err(StepError::Exhausted) => {
                    doublings += MAX_DOUBLINGS;
                    failed_boresight_steps += 1;
                    log::warn!("boresight step abandoned after {MAX_DOUBLINGS} doublings");
                }
                Err(StepError::Solver) => failures += 1,
            }
            z = optimal_aux(&w, &h, geometry, config);
        }

        history.push(current);
        iteration_times.push(iter_start.elapsed());
        if failures >= 2 {
            termination = Termination::SubproblemFailure;
            break;
        }
        let increase = (current - previous) / previous.max(1e-12);
        log::debug!("iteration {iteration}: min-SINR {current:.6e} (+{increase:.3e})");
        if increase < config.convergence_threshold {
            termination = Termination::Threshold;
            break;
        }
    }
    let iterations = iteration_times.len();
    let pre_normalization_min_sinr = current;

    let mut normalized_min_sinr = current;
    if optimize_f {
        let relaxed = f.clone();
        f = f.normalized();
        h = driver.channel(&f)?;
        normalized_min_sinr = min_sinr(&w, &h, geometry, config);
        current = normalized_min_sinr;
        let carried = carry_across_normalization(&w, &relaxed, config);
        let value = min_sinr(&carried, &h, geometry, config);
        if value > current {
            w = carried;
            current = value;
        }
        z = optimal_aux(&w, &h, geometry, config);
        if let Some(candidate) = driver.beamforming_step(&h, &z)? {
            let value = min_sinr(&candidate, &h, geometry, config);
            if value >= current {
                w = candidate;
                current = value;
            }
        }
        z = optimal_aux(&w, &h, geometry, config);
    }

    Ok(AoReport {
        history,
        iteration_times,
        beamformer: w,
        pointing: f,
        aux: z,
        termination,
        iterations,
        doublings,
        failed_boresight_steps,
        pre_normalization_min_sinr,
        normalized_min_sinr,
        min_sinr: current,
        wall_time: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{arc_user_layout, e_x, ScenarioGeometry};
    use crate::objective::optimal_aux;
    use crate::Vec3;

    fn default_geometry(config: &SystemConfig) -> ScenarioGeometry {
        arc_user_layout(config, 50.0, 10.0, 2.0 * std::f64::consts::FRAC_PI_3).unwrap()
    }

    #[test]
    fn initialization_contract() {
        let config = SystemConfig::reference();
        let geometry = default_geometry(&config);
        let (w, f, z) = initialize(&config, &geometry, 3).unwrap();
        assert!((w.power() - config.transmit_power_w).abs() < 1e-12);
        assert!(f.columns().iter().all(|c| *c == e_x()));
        let h = channel_matrix(&geometry, &f, &config).unwrap();
        assert_eq!(z, optimal_aux(&w, &h, &geometry, &config));
        let (w2, _, _) = initialize(&config, &geometry, 3).unwrap();
        assert_eq!(w, w2);
    }

    #[test]
    fn single_link_reaches_closed_form() {
        let mut config = SystemConfig::reference();
        config.num_antennas = 1;
        config.group_sizes = vec![1];
        let geometry =
            ScenarioGeometry::new(vec![Vec3::zeros()], vec![Vec3::new(20.0, 0.0, 0.0)], vec![0], 1).unwrap();
        let report = run_ao(&config, &geometry, 1).unwrap();
        let d: f64 = 20.0;
        let expected = config.transmit_power_w * config.element_area_m2 * config.peak_gain()
            / (4.0 * std::f64::consts::PI * d * d * config.noise_power_w);
        assert!((report.min_sinr - expected).abs() / expected < 1e-2, "{} vs {}", report.min_sinr, expected);
    }

    #[test]
    fn history_is_monotone_and_pointing_feasible() {
        let config = SystemConfig::reference();
        let geometry = default_geometry(&config);
        let report = run_ao(&config, &geometry, 11).unwrap();
        for pair in report.history.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-7);
        }
        assert!(report.iterations <= config.max_iterations);
        assert!(report.pointing.max_violation(config.max_zenith_rad) <= 1e-9);
        for c in report.pointing.columns() {
            assert!((c.norm() - 1.0).abs() < 1e-12);
        }
        assert!(report.beamformer.power() <= config.transmit_power_w * (1.0 + 1e-9));
    }

    #[test]
    fn isotropic_matches_beamforming_only() {
        let mut config = SystemConfig::reference();
        config.directivity = 0.0;
        let geometry = default_geometry(&config);
        let full = run_ao(&config, &geometry, 5).unwrap();
        let fixed = run_beamforming_only(&config, &geometry, &PointingMatrix::broadside(4), 5).unwrap();
        assert_eq!(full.history, fixed.history);
        assert_eq!(full.min_sinr, fixed.min_sinr);
    }

    #[test]
    fn normalization_never_loses_ground() {
        let config = SystemConfig::reference();
        let geometry = default_geometry(&config);
        for seed in 0..4 {
            let r = run_ao(&config, &geometry, seed).unwrap();
            assert!(r.min_sinr >= r.pre_normalization_min_sinr * (1.0 - 1e-9), "seed {seed}");
        }
    }

    #[test]
    fn same_seed_same_report() {
        let config = SystemConfig::reference();
        let geometry = default_geometry(&config);
        let a = run_ao(&config, &geometry, 2).unwrap();
        let b = run_ao(&config, &geometry, 2).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.beamformer, b.beamformer);
        assert_eq!(a.pointing, b.pointing);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(12))]

            #[test]
            fn history_is_monotone_and_pointing_feasible(
                seed in 0u64..10_000,
                p in prop::sample::select(vec![1.0, 2.0, 3.5, 5.0]),
                n in 1usize..5,
                limit in 0.2..1.5f64,
                spread in 0.5..3.0f64,
            ) {
                let mut config = SystemConfig::reference();
                config.directivity = p;
                config.num_antennas = n;
                config.max_zenith_rad = limit;
                config.max_iterations = 8;
                let geometry = arc_user_layout(&config, 50.0, 10.0, spread).unwrap();
                let report = run_ao(&config, &geometry, seed).unwrap();
                for w in report.history.windows(2) {
                    prop_assert!(w[1] >= w[0]);
                }
                prop_assert!(report.min_sinr >= report.normalized_min_sinr * (1.0 - 1e-9));
                prop_assert!(report.pointing.max_violation(limit) < 1e-9);
                for col in report.pointing.columns() {
                    prop_assert!((col.norm() - 1.0).abs() < 1e-12);
                }
                prop_assert!(report.beamformer.power() <= config.transmit_power_w * (1.0 + 1e-9));
            }
        }
    }
}
