//! Independent checks of the optimizer: exhaustive boresight grids on tiny
//! single-group instances, central finite differences of the SCA gradients
//! and Hessians, and sampling of the curvature constants.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::ao::run_ao;
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::geometry::{
    arc_user_layout, boresight_vector, static_factors, PointingMatrix, ScenarioGeometry, Vec3,
};
use crate::objective::{optimal_aux, AuxiliaryVars, BeamformingMatrix};
use crate::sca::{ScaContext, PSI_FLOOR};

/// Zenith step of the joint grid.
pub const ZENITH_STEP_DEG: f64 = 1.0;
/// Azimuth step of the joint grid.
pub const AZIMUTH_STEP_DEG: f64 = 2.0;

/// Outcome of comparing the optimizer with an exhaustive search.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub instance: String,
    pub oracle_value: f64,
    pub optimizer_value: f64,
    /// `(oracle - optimizer) / max(oracle, 1e-12)`, signed.
    pub gap: f64,
    /// Largest relative value change between the best grid cell and its
    /// neighbours; how far the optimizer may legitimately exceed the grid.
    pub resolution_bound: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl fmt::Display for OracleResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<6} {:<34} grid {:>12.6e}  ao {:>12.6e}  gap {:>+9.3e}  res {:>8.2e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.instance,
            self.oracle_value,
            self.optimizer_value,
            self.gap,
            self.resolution_bound
        )
    }
}

/// Best multicast SINR times `sigma^2 / P_t` for one group: the largest
/// `min_k |h_k^T w|^2` over unit-norm `w`. Closed form for one or two users.
pub fn single_group_gain(channels: &[Vec<Complex64>]) -> Result<f64> {
    let norm_sq = |h: &[Complex64]| h.iter().map(|v| v.norm_sqr()).sum::<f64>();
    match channels {
        [h] => Ok(norm_sq(h)),
        [a, b] => {
            let (a2, b2) = (norm_sq(a), norm_sq(b));
            if a2 == 0.0 || b2 == 0.0 {
                return Ok(0.0);
            }
            let cross: Complex64 = a.iter().zip(b).map(|(x, y)| x * y.conj()).sum();
            let c2 = cross.norm_sqr() / (a2 * b2);
            // Aligning with the weaker user already serves the other one.
            if b2 * c2 >= a2 {
                return Ok(a2);
            }
            if a2 * c2 >= b2 {
                return Ok(b2);
            }
            let c = c2.sqrt();
            let (alpha, beta) = (a2.sqrt(), b2.sqrt());
            Ok(a2 * b2 * (1.0 - c2) / (a2 + b2 - 2.0 * alpha * beta * c))
        }
        _ => Err(Error::InvalidConfig("closed-form multicast gain needs one or two users".into())),
    }
}

/// A tiny single-group problem for the joint grid search.
#[derive(Debug, Clone)]
pub struct TinyInstance {
    pub name: String,
    pub config: SystemConfig,
    pub geometry: ScenarioGeometry,
}

impl TinyInstance {
    pub fn new(name: &str, num_antennas: usize, users: Vec<Vec3>) -> Result<Self> {
        let mut config = SystemConfig::reference();
        config.num_antennas = num_antennas;
        config.group_sizes = vec![users.len()];
        let antennas = crate::geometry::upa_positions(&config);
        let group_of = vec![0; users.len()];
        let geometry = ScenarioGeometry::new(antennas, users, group_of, 1)?;
        Ok(Self {
            name: name.to_string(),
            config,
            geometry,
        })
    }

    /// The three reference instances: an off-axis single link whose best
    /// pointing lies on the rotation limit, a mirror-symmetric user pair, and
    /// an asymmetric pair served by two elements.
    pub fn reference_set() -> Vec<Self> {
        vec![
            Self::new("N=1 K=1 beyond rotation limit", 1, vec![Vec3::new(5.0, 15.0, -8.0)]),
            Self::new(
                "N=1 K=2 mirror pair",
                1,
                vec![Vec3::new(20.0, 12.0, -6.0), Vec3::new(20.0, -12.0, -6.0)],
            ),
            Self::new(
                "N=2 K=2 asymmetric pair",
                2,
                vec![Vec3::new(25.0, 10.0, -5.0), Vec3::new(15.0, -20.0, 3.0)],
            ),
        ]
        .into_iter()
        .collect::<Result<Vec<_>>>()
        .expect("reference instances are valid")
    }
}

/// Grid of boresight directions inside the rotation cone. `theta_z = 0` is
/// included once.
pub fn boresight_grid(max_zenith: f64) -> Vec<(f64, f64)> {
    let z_step = ZENITH_STEP_DEG.to_radians();
    let a_step = AZIMUTH_STEP_DEG.to_radians();
    let nz = (max_zenith / z_step + 1e-9).floor() as usize;
    let na = (360.0 / AZIMUTH_STEP_DEG).round() as usize;
    let mut out = vec![(0.0, 0.0)];
    for iz in 1..=nz {
        for ia in 0..na {
            out.push((iz as f64 * z_step, ia as f64 * a_step));
        }
    }
    out
}

/// Exhaustive search over per-antenna boresight grids with closed-form
/// single-group beamforming at every point, compared with the full
/// alternating optimizer.
pub fn grid_search_joint(instance: &TinyInstance, seed: u64, tolerance: f64) -> Result<OracleResult> {
    let config = &instance.config;
    let geometry = &instance.geometry;
    let n_ant = config.num_antennas;
    if config.num_groups() != 1 || n_ant > 2 || geometry.num_users() > 2 {
        return Err(Error::InvalidConfig(
            "grid search supports N <= 2, one group and at most two users".into(),
        ));
    }
    let k_users = geometry.num_users();
    let grid = boresight_grid(config.max_zenith_rad);
    let beta = static_factors(geometry, config);
    let p = config.directivity;
    // table[n][g][k] = beta[k,n] * max(f_g . u_{k,n}, 0)^p
    let table: Vec<Vec<Vec<Complex64>>> = (0..n_ant)
        .map(|n| {
            grid.iter()
                .map(|&(tz, ta)| {
                    let f = boresight_vector(tz, ta);
                    (0..k_users)
                        .map(|k| beta[(k, n)] * crate::geometry::directional_factor(f.dot(geometry.direction(k, n)), p))
                        .collect()
                })
                .collect()
        })
        .collect();
    let scale = config.transmit_power_w / config.noise_power_w;
    let value_at = |cells: &[usize]| -> f64 {
        let channels: Vec<Vec<Complex64>> = (0..k_users)
            .map(|k| (0..n_ant).map(|n| table[n][cells[n]][k]).collect())
            .collect();
        single_group_gain(&channels).unwrap_or(0.0) * scale
    };

    let g = grid.len();
    let (best_value, best_cells) = if n_ant == 1 {
        (0..g)
            .map(|i| (value_at(&[i]), vec![i]))
            .fold((f64::NEG_INFINITY, vec![]), |a, b| if b.0 > a.0 { b } else { a })
    } else {
        (0..g)
            .into_par_iter()
            .map(|i| {
                let mut best = (f64::NEG_INFINITY, vec![i, 0]);
                for j in 0..g {
                    let v = value_at(&[i, j]);
                    if v > best.0 {
                        best = (v, vec![i, j]);
                    }
                }
                best
            })
            .reduce(
                || (f64::NEG_INFINITY, vec![]),
                |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
            )
    };

    let resolution_bound = neighbour_spread(&grid, &best_cells, config.max_zenith_rad, &value_at) / best_value.max(1e-12);
    let report = run_ao(config, geometry, seed)?;
    let gap = (best_value - report.min_sinr) / best_value.max(1e-12);
    let passed = gap.abs() <= tolerance && -gap <= resolution_bound.max(tolerance);
    Ok(OracleResult {
        instance: instance.name.clone(),
        oracle_value: best_value,
        optimizer_value: report.min_sinr,
        gap,
        resolution_bound,
        tolerance,
        passed,
    })
}

/// Largest absolute value change when one antenna moves to an adjacent grid cell.
fn neighbour_spread(
    grid: &[(f64, f64)],
    cells: &[usize],
    max_zenith: f64,
    value_at: &dyn Fn(&[usize]) -> f64,
) -> f64 {
    let z_step = ZENITH_STEP_DEG.to_radians();
    let a_step = AZIMUTH_STEP_DEG.to_radians();
    let centre = value_at(cells);
    let find = |tz: f64, ta: f64| -> Option<usize> {
        if tz < -1e-12 || tz > max_zenith + 1e-9 {
            return None;
        }
        if tz.abs() < 1e-12 {
            return Some(0);
        }
        let ta = ta.rem_euclid(2.0 * PI);
        grid.iter()
            .position(|&(z, a)| (z - tz).abs() < 1e-9 && ((a - ta).abs() < 1e-9 || (a - ta).abs() > 2.0 * PI - 1e-9))
    };
    let mut spread: f64 = 0.0;
    for (slot, &cell) in cells.iter().enumerate() {
        let (tz, ta) = grid[cell];
        for (dz, da) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
            if let Some(nb) = find(tz + dz * z_step, ta + da * a_step) {
                let mut moved = cells.to_vec();
                moved[slot] = nb;
                spread = spread.max((value_at(&moved) - centre).abs());
            }
        }
    }
    spread
}

/// One line of a pass/fail table.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub name: String,
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Outcome of a randomized check suite.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SuiteReport {
    pub lines: Vec<CheckLine>,
}

impl SuiteReport {
    fn push(&mut self, name: impl Into<String>, worst: f64, tolerance: f64) {
        self.lines.push(CheckLine {
            name: name.into(),
            worst,
            tolerance,
            passed: worst <= tolerance,
        });
    }

    pub fn passed(&self) -> bool {
        self.lines.iter().all(|l| l.passed)
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.lines {
            writeln!(
                f,
                "{:<6} {:<44} worst {:>10.3e}  tol {:>8.1e}",
                if l.passed { "PASS" } else { "FAIL" },
                l.name,
                l.worst,
                l.tolerance
            )?;
        }
        Ok(())
    }
}

/// Random instance with every incidence cosine at least `min_psi`.
struct Sample {
    config: SystemConfig,
    geometry: ScenarioGeometry,
    f: PointingMatrix,
    w: BeamformingMatrix,
    z: AuxiliaryVars,
}

fn random_pointing(rng: &mut ChaCha8Rng, ctx: &ScaContext<'_>, n_ant: usize, min_psi: f64) -> PointingMatrix {
    loop {
        let f = PointingMatrix::new(
            (0..n_ant)
                .map(|_| boresight_vector(rng.gen_range(0.0..ctx.config.max_zenith_rad), rng.gen_range(0.0..2.0 * PI)))
                .collect(),
        );
        let ok = (0..ctx.geometry.num_users()).all(|k| (0..n_ant).all(|n| ctx.psi(&f, k, n) >= min_psi));
        if ok {
            return f;
        }
    }
}

fn sample(rng: &mut ChaCha8Rng, p: f64, min_psi: f64) -> Sample {
    let mut config = SystemConfig::reference();
    config.directivity = p;
    config.num_antennas = rng.gen_range(1..=4);
    config.group_sizes = vec![rng.gen_range(1..=2), rng.gen_range(1..=2)];
    let spread = rng.gen_range(0.3..2.0);
    let geometry = arc_user_layout(&config, rng.gen_range(20.0..60.0), rng.gen_range(2.0..15.0), spread)
        .expect("valid arc");
    let ctx = ScaContext::new(&geometry, &config);
    let f = random_pointing(rng, &ctx, config.num_antennas, min_psi);
    let w = BeamformingMatrix::random(rng, config.num_antennas, 2, config.transmit_power_w);
    let h = crate::geometry::channel_matrix(&geometry, &f, &config).expect("consistent sample");
    let mut z = optimal_aux(&w, &h, &geometry, &config);
    // Perturb z so the checks do not rely on the stationary choice.
    for v in &mut z.0 {
        *v *= Complex64::from_polar(rng.gen_range(0.5..1.5), rng.gen_range(-0.5..0.5));
    }
    Sample {
        config,
        geometry,
        f,
        w,
        z,
    }
}

fn perturbed(f: &PointingMatrix, index: usize, delta: f64) -> PointingMatrix {
    let mut flat = f.to_flat();
    flat[index] += delta;
    PointingMatrix::from_flat(&flat)
}

fn flatten(blocks: &[Vec3]) -> Vec<f64> {
    blocks.iter().flat_map(|b| [b.x, b.y, b.z]).collect()
}

fn rel_err(a: &[f64], b: &[f64], floor: f64) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / na.max(nb).max(floor)
}

/// Central-difference gradient of a scalar function of `F`.
fn fd_gradient(f: &PointingMatrix, step: f64, func: &dyn Fn(&PointingMatrix) -> f64) -> Vec<f64> {
    (0..3 * f.num_antennas())
        .map(|i| (func(&perturbed(f, i, step)) - func(&perturbed(f, i, -step))) / (2.0 * step))
        .collect()
}

/// Central-difference Jacobian of a gradient; column `i` is `d grad / d F_i`.
fn fd_jacobian(f: &PointingMatrix, step: f64, grad: &dyn Fn(&PointingMatrix) -> Vec<f64>) -> DMatrix<f64> {
    let n = 3 * f.num_antennas();
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        let plus = grad(&perturbed(f, i, step));
        let minus = grad(&perturbed(f, i, -step));
        for r in 0..n {
            out[(r, i)] = (plus[r] - minus[r]) / (2.0 * step);
        }
    }
    out
}

fn hessian_u(ctx: &ScaContext<'_>, s: &Sample, k: usize) -> DMatrix<f64> {
    let n = s.config.num_antennas;
    let mut out = DMatrix::zeros(3 * n, 3 * n);
    for a in 0..n {
        out.fixed_view_mut::<3, 3>(3 * a, 3 * a)
            .copy_from(&ctx.hessian_u_block(&s.f, &s.w, &s.z, k, a));
    }
    out
}

/// Central differences against the analytic gradients (step 1e-6) and
/// Hessians (differences of the analytic gradient, step 1e-5) on
/// `instances` random instances with every incidence cosine >= 0.05.
pub fn finite_difference_suite(seed: u64, instances: usize) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let exponents = [1.0, 2.0, 2.5, 3.0, 5.0];
    let (mut gu, mut ga, mut hu, mut ha) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut linear_hessian = 0.0f64;
    for i in 0..instances {
        let p = exponents[i % exponents.len()];
        let s = sample(&mut rng, p, 0.05);
        let ctx = ScaContext::new(&s.geometry, &s.config);
        for k in 0..s.geometry.num_users() {
            let m = s.geometry.group_of(k);
            let j = 1 - m;

            let value_scale = ctx.desired_term(&s.f, &s.w, &s.z, k).abs().max(1e-300);
            let analytic = flatten(&ctx.grad_u(&s.f, &s.w, &s.z, k));
            let numeric = fd_gradient(&s.f, 1e-6, &|f| ctx.desired_term(f, &s.w, &s.z, k));
            gu = gu.max(rel_err(&analytic, &numeric, value_scale * 1e-3));

            let a_scale = ctx.interference_power(&s.f, &s.w, k, j).max(1e-300);
            let analytic = flatten(&ctx.grad_a(&s.f, &s.w, k, j));
            let numeric = fd_gradient(&s.f, 1e-6, &|f| ctx.interference_power(f, &s.w, k, j));
            ga = ga.max(rel_err(&analytic, &numeric, a_scale * 1e-3));

            let analytic = hessian_u(&ctx, &s, k);
            let numeric = fd_jacobian(&s.f, 1e-5, &|f| flatten(&ctx.grad_u(f, &s.w, &s.z, k)));
            if p == 1.0 {
                linear_hessian = linear_hessian.max(numeric.norm() / value_scale);
            } else {
                hu = hu.max(rel_err(analytic.as_slice(), numeric.as_slice(), value_scale * 1e-3));
            }

            let analytic = ctx.hessian_a(&s.f, &s.w, k, j);
            let numeric = fd_jacobian(&s.f, 1e-5, &|f| flatten(&ctx.grad_a(f, &s.w, k, j)));
            ha = ha.max(rel_err(analytic.as_slice(), numeric.as_slice(), a_scale * 1e-3));
        }
    }

    // Behind the element the factor is flat and the gradient is zero.
    let mut clamp = 0.0f64;
    for _ in 0..10 {
        let s = sample(&mut rng, 3.0, 0.05);
        let ctx = ScaContext::new(&s.geometry, &s.config);
        let flipped = PointingMatrix::new(s.f.columns().iter().map(|c| -c).collect());
        for k in 0..s.geometry.num_users() {
            let analytic = flatten(&ctx.grad_u(&flipped, &s.w, &s.z, k));
            let numeric = fd_gradient(&flipped, 1e-6, &|f| ctx.desired_term(f, &s.w, &s.z, k));
            let worst = analytic.iter().chain(&numeric).fold(0.0f64, |a, b| a.max(b.abs()));
            clamp = clamp.max(worst);
        }
    }

    let mut report = SuiteReport::default();
    report.push("gradient of desired term (rel)", gu, 1e-6);
    report.push("gradient of interference power (rel)", ga, 1e-6);
    report.push("Hessian of desired term (rel)", hu, 1e-4);
    report.push("Hessian of interference power (rel)", ha, 1e-4);
    report.push("desired-term Hessian at p = 1 (abs, scaled)", linear_hessian, 1e-6);
    report.push("gradient behind the element (abs)", clamp, 0.0);
    report
}

/// Samples pointing matrices with every incidence cosine >= the floor and
/// compares Hessian norms with the curvature constants at the same point:
/// spectral norm of the desired-term Hessian against the signal constant and
/// the largest block-row sum of the interference Hessian against the
/// interference constant. `worst` is the largest ratio norm / constant.
pub fn lipschitz_sampling_suite(seed: u64, samples: usize) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SuiteReport::default();
    for p in [1.0, 2.0, 3.0, 5.0] {
        let (mut worst_s, mut worst_i, mut worst_spec) = (0.0f64, 0.0f64, 0.0f64);
        for _ in 0..samples {
            let s = sample(&mut rng, p, PSI_FLOOR);
            let ctx = ScaContext::new(&s.geometry, &s.config);
            for k in 0..s.geometry.num_users() {
                let j = 1 - s.geometry.group_of(k);
                let bound = ctx.lipschitz_signal(&s.f, &s.w, &s.z, k);
                let norm = hessian_u(&ctx, &s, k).singular_values().max();
                worst_s = worst_s.max(ratio(norm, bound));

                let bound = ctx.lipschitz_interference(&s.f, &s.w, k, j);
                let n = s.config.num_antennas;
                let row_sum = (0..n)
                    .map(|r| {
                        (0..n)
                            .map(|c| ctx.hessian_a_block(&s.f, &s.w, k, j, r, c).norm())
                            .sum::<f64>()
                    })
                    .fold(0.0, f64::max);
                worst_i = worst_i.max(ratio(row_sum, bound));
                let spectral = ctx.hessian_a(&s.f, &s.w, k, j).singular_values().max();
                worst_spec = worst_spec.max(ratio(spectral, bound));
            }
        }
        report.push(format!("p = {p}: signal Hessian norm / constant"), worst_s, 1.0 + 1e-9);
        report.push(format!("p = {p}: interference Hessian norm / constant"), worst_spec, 1.0 + 1e-9);
        report.push(format!("p = {p}: interference row sum / constant"), worst_i, 1.0 + 1e-9);
    }
    report
}

fn ratio(value: f64, bound: f64) -> f64 {
    if bound > 0.0 {
        value / bound
    } else if value <= 1e-300 {
        0.0
    } else {
        f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute force over unit vectors in C^2 for the two-user closed form.
    fn brute_gain(a: &[Complex64], b: &[Complex64]) -> f64 {
        let mut best: f64 = 0.0;
        let steps = 400;
        for i in 0..=steps {
            let theta = i as f64 / steps as f64 * PI / 2.0;
            for j in 0..steps {
                let phi = j as f64 / steps as f64 * 2.0 * PI;
                let w = [Complex64::from(theta.cos()), Complex64::from_polar(theta.sin(), phi)];
                let ga: Complex64 = a.iter().zip(&w).map(|(x, y)| x * y).sum();
                let gb: Complex64 = b.iter().zip(&w).map(|(x, y)| x * y).sum();
                best = best.max(ga.norm_sqr().min(gb.norm_sqr()));
            }
        }
        best
    }

    #[test]
    fn two_user_closed_form_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..6 {
            let mut draw = || Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let a = vec![draw(), draw()];
            let b = vec![draw(), draw()];
            let closed = single_group_gain(&[a.clone(), b.clone()]).unwrap();
            let brute = brute_gain(&a, &b);
            assert!(closed >= brute * (1.0 - 1e-9));
            assert!((closed - brute) / closed < 1e-3, "{closed} vs {brute}");
        }
        // parallel channels: the weaker one binds
        let a = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let b = vec![Complex64::new(2.0, 0.0), Complex64::new(0.0, 0.0)];
        assert_eq!(single_group_gain(&[a, b]).unwrap(), 1.0);
    }

    #[test]
    fn grid_has_expected_size() {
        let grid = boresight_grid(PI / 3.0);
        assert_eq!(grid.len(), 1 + 60 * 180);
        assert!(grid.iter().all(|&(z, _)| z <= PI / 3.0 + 1e-12));
    }

    #[test]
    fn single_link_grid_hits_rotation_limit() {
        let inst = &TinyInstance::reference_set()[0];
        let r = grid_search_joint(inst, 1, 0.02).unwrap();
        // the user sits outside the cone; the best cell lies on its edge
        let u = inst.geometry.direction(0, 0);
        let c = inst.config.max_zenith_rad.cos();
        let along = (u - Vec3::new(u.x, 0.0, 0.0)).normalize();
        let f = Vec3::new(c, 0.0, 0.0) + along * (1.0 - c * c).sqrt();
        let psi = f.dot(u);
        let d = inst.geometry.distance(0, 0);
        let cfg = &inst.config;
        let expected = cfg.transmit_power_w * cfg.element_area_m2 * cfg.peak_gain() * psi.powf(2.0 * cfg.directivity)
            / (4.0 * PI * d * d * cfg.noise_power_w);
        assert!(r.oracle_value <= expected * (1.0 + 1e-12));
        assert!((expected - r.oracle_value) / expected < 0.01);
        assert!(r.passed, "{r}");
    }

    #[test]
    fn mirror_pair_optimum_is_in_symmetry_plane() {
        let inst = &TinyInstance::reference_set()[1];
        let grid = boresight_grid(inst.config.max_zenith_rad);
        let beta = static_factors(&inst.geometry, &inst.config);
        let best = grid
            .iter()
            .map(|&(tz, ta)| {
                let f = boresight_vector(tz, ta);
                let v = (0..2)
                    .map(|k| {
                        (beta[(k, 0)]
                            * crate::geometry::directional_factor(f.dot(inst.geometry.direction(k, 0)), 5.0))
                        .norm_sqr()
                    })
                    .fold(f64::INFINITY, f64::min);
                (v, f)
            })
            .fold((0.0, Vec3::zeros()), |a, b| if b.0 > a.0 { b } else { a });
        assert!(best.1.y.abs() < 1e-9, "{}", best.1);
    }

    #[test]
    fn suites_pass_on_a_few_instances() {
        let fd = finite_difference_suite(3, 10);
        assert!(fd.passed(), "{fd}");
        let lip = lipschitz_sampling_suite(3, 10);
        assert!(lip.lines.iter().filter(|l| l.name.contains("signal")).all(|l| l.passed), "{lip}");
    }
}
