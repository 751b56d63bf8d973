//! Lowering of the beamforming and boresight subproblems to conic form.
//!
//! Beamforming variables are the normalised precoders `w_hat = w / sqrt(P_t)`
//! stored as interleaved pairs: `x[2(mN + n)] = Re w_hat[n, m]`,
//! `x[2(mN + n) + 1] = Im w_hat[n, m]`, followed by the epigraph variable.
//! Channels are expressed relative to the noise floor (`h_hat = h sqrt(P_t) / sigma`,
//! `z_hat = z sigma`), which leaves every surrogate value unchanged.
//!
//! Boresight variables are the stacked pointing vectors `[f_1; ...; f_N]`
//! followed by the epigraph variable.
//!
//! In both programs each user row is divided by a positive scale so the epigraph
//! variable is O(1); `ConicProgram::objective_scale` undoes it.

use num_complex::Complex64;

use super::program::{AffineExpr, ConicProgram, Constraint};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::geometry::{ChannelMatrix, PointingMatrix, ScenarioGeometry};
use crate::objective::{AuxiliaryVars, BeamformingMatrix};
use crate::sca::SurrogateBundle;

/// Beamforming subproblem together with its variable layout.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformingProgram {
    pub program: ConicProgram,
    num_antennas: usize,
    num_groups: usize,
    amplitude: f64,
}

impl BeamformingProgram {
    fn re_index(&self, n: usize, m: usize) -> usize {
        2 * (m * self.num_antennas + n)
    }

    /// Decodes a solution, pulling it back onto the power budget if the
    /// solver overshot by its tolerance.
    pub fn beamformer(&self, x: &[f64]) -> BeamformingMatrix {
        let mut w = BeamformingMatrix::zeros(self.num_antennas, self.num_groups);
        for m in 0..self.num_groups {
            for n in 0..self.num_antennas {
                let i = self.re_index(n, m);
                w.0[(n, m)] = Complex64::new(x[i], x[i + 1]) * self.amplitude;
            }
        }
        let budget = self.amplitude * self.amplitude;
        let power = w.power();
        if power > budget {
            w.0 *= Complex64::from((budget / power).sqrt());
        }
        w
    }

    /// Encodes `(w, t)` as a point of this program.
    pub fn point(&self, w: &BeamformingMatrix, t: f64) -> Vec<f64> {
        let mut x = vec![0.0; self.program.num_vars];
        for m in 0..self.num_groups {
            for n in 0..self.num_antennas {
                let i = self.re_index(n, m);
                let v = w.entry(n, m) / self.amplitude;
                x[i] = v.re;
                x[i + 1] = v.im;
            }
        }
        x[self.program.objective_var] = t / self.program.objective_scale;
        x
    }
}

/// Builds the beamforming subproblem for fixed channels and auxiliaries:
/// maximise `t` subject to `gamma_tilde_k(z_k, W) >= t` for every user and
/// `sum_m ||w_m||^2 <= P_t`.
pub fn build_beamforming_program(
    h: &ChannelMatrix,
    z: &AuxiliaryVars,
    geometry: &ScenarioGeometry,
    config: &SystemConfig,
) -> Result<BeamformingProgram> {
    let n_ant = config.num_antennas;
    let n_grp = config.num_groups();
    let k_users = geometry.num_users();
    if h.num_antennas() != n_ant || h.num_users() != k_users || z.0.len() != k_users {
        return Err(Error::DimensionMismatch(format!(
            "channel {}x{}, {} auxiliaries, expected {}x{}",
            h.num_users(),
            h.num_antennas(),
            z.0.len(),
            k_users,
            n_ant
        )));
    }
    geometry.check_against(config)?;
    if z.0.iter().any(|v| !(v.re.is_finite() && v.im.is_finite()))
        || h.coeffs.iter().any(|v| !(v.re.is_finite() && v.im.is_finite()))
    {
        return Err(Error::NonFinite("beamforming program data"));
    }

    let amplitude = config.transmit_power_w.sqrt();
    let sigma = config.noise_power_w.sqrt();
    let h_hat = |k: usize, n: usize| h.coeffs[(k, n)] * (amplitude / sigma);
    let z_hat: Vec<Complex64> = z.0.iter().map(|v| v * sigma).collect();

    let scale = (0..k_users)
        .map(|k| {
            let h_norm = (0..n_ant).map(|n| h_hat(k, n).norm_sqr()).sum::<f64>().sqrt();
            2.0 * z_hat[k].norm() * h_norm
        })
        .fold(1.0, f64::max);

    let num_vars = 2 * n_ant * n_grp + 1;
    let t = num_vars - 1;
    let mut program = ConicProgram::new(num_vars, t);
    program.objective_scale = scale;
    program.slices = vec![("w".into(), 0..t), ("t".into(), t..num_vars)];
    let idx = |n: usize, m: usize| 2 * (m * n_ant + n);

    for k in 0..k_users {
        let m = geometry.group_of(k);
        let zk = z_hat[k];
        // 2 Re{z^* h^T w_m} / scale - |z|^2 / scale - t
        let mut u = AffineExpr::var(t, -1.0);
        u.constant = -zk.norm_sqr() / scale;
        for n in 0..n_ant {
            let c = zk.conj() * h_hat(k, n);
            u = u.plus(idx(n, m), 2.0 * c.re / scale).plus(idx(n, m) + 1, -2.0 * c.im / scale);
        }
        let weight = zk.norm() / scale.sqrt();
        let mut rows = Vec::new();
        if weight > 0.0 {
            for j in (0..n_grp).filter(|&j| j != m) {
                let mut re = AffineExpr::default();
                let mut im = AffineExpr::default();
                for n in 0..n_ant {
                    let hv = h_hat(k, n) * weight;
                    re = re.plus(idx(n, j), hv.re).plus(idx(n, j) + 1, -hv.im);
                    im = im.plus(idx(n, j), hv.im).plus(idx(n, j) + 1, hv.re);
                }
                rows.push(re);
                rows.push(im);
            }
        }
        if rows.is_empty() {
            program.push(Constraint::Nonnegative(u));
        } else {
            program.push(Constraint::RotatedSecondOrder {
                rows,
                u,
                v: AffineExpr::constant(0.5),
            });
        }
    }
    program.push(Constraint::SecondOrder {
        rows: (0..t).map(|i| AffineExpr::var(i, 1.0)).collect(),
        bound: AffineExpr::constant(1.0),
    });

    Ok(BeamformingProgram {
        program,
        num_antennas: n_ant,
        num_groups: n_grp,
        amplitude,
    })
}

/// Boresight subproblem together with its variable layout.
#[derive(Debug, Clone, PartialEq)]
pub struct BoresightProgram {
    pub program: ConicProgram,
    num_antennas: usize,
}

impl BoresightProgram {
    /// Decodes a solution; columns marginally outside the unit ball are
    /// pulled back onto it.
    pub fn pointing(&self, x: &[f64]) -> PointingMatrix {
        let f = PointingMatrix::from_flat(&x[..3 * self.num_antennas]);
        PointingMatrix::new(
            f.columns()
                .iter()
                .map(|c| {
                    let norm = c.norm();
                    if norm > 1.0 {
                        c / norm
                    } else {
                        *c
                    }
                })
                .collect(),
        )
    }

    pub fn point(&self, f: &PointingMatrix, t: f64) -> Vec<f64> {
        let mut x = f.to_flat();
        x.push(t / self.program.objective_scale);
        x
    }
}

/// Builds the boresight subproblem: maximise `t` subject to
/// `phi_k(F) >= t` for every user, `||f_n|| <= 1` and `f_n . e_x >= cos(theta_max)`.
pub fn build_boresight_program(
    bundle: &SurrogateBundle,
    f_prev: &PointingMatrix,
    config: &SystemConfig,
) -> Result<BoresightProgram> {
    let n_ant = f_prev.num_antennas();
    if n_ant != config.num_antennas || bundle.expansion.num_antennas() != n_ant {
        return Err(Error::DimensionMismatch("pointing matrix width".into()));
    }
    for user in &bundle.users {
        let curvature = user.curvature();
        if curvature < 0.0 {
            return Err(Error::NegativeCurvature(curvature));
        }
        if !curvature.is_finite() || !user.constant().is_finite() {
            return Err(Error::NonFinite("surrogate bundle"));
        }
    }

    let scale = bundle
        .users
        .iter()
        .map(|u| u.constant().abs())
        .fold(1.0, f64::max);
    let num_vars = 3 * n_ant + 1;
    let t = num_vars - 1;
    let mut program = ConicProgram::new(num_vars, t);
    program.objective_scale = scale;
    program.slices = vec![("f".into(), 0..t), ("t".into(), t..num_vars)];
    let prev = f_prev.to_flat();

    for user in &bundle.users {
        let grad: Vec<f64> = user.gradient().iter().flat_map(|g| [g.x, g.y, g.z]).collect();
        let offset: f64 = grad.iter().zip(&prev).map(|(g, p)| g * p).sum();
        let mut r = AffineExpr::var(t, -1.0);
        r.constant = (user.constant() - offset) / scale;
        for (i, g) in grad.iter().enumerate() {
            r = r.plus(i, g / scale);
        }
        let weight = (user.curvature() / scale).sqrt();
        if weight > 0.0 {
            let rows = prev
                .iter()
                .enumerate()
                .map(|(i, &p)| AffineExpr {
                    terms: vec![(i, weight)],
                    constant: -weight * p,
                })
                .collect();
            program.push(Constraint::RotatedSecondOrder {
                rows,
                u: r,
                v: AffineExpr::constant(1.0),
            });
        } else {
            program.push(Constraint::Nonnegative(r));
        }
    }

    let cos_max = config.max_zenith_rad.cos();
    for n in 0..n_ant {
        program.push(Constraint::SecondOrder {
            rows: (0..3).map(|d| AffineExpr::var(3 * n + d, 1.0)).collect(),
            bound: AffineExpr::constant(1.0),
        });
        program.push(Constraint::Nonnegative(AffineExpr::var(3 * n, 1.0).plus_constant(-cos_max)));
    }

    Ok(BoresightProgram {
        program,
        num_antennas: n_ant,
    })
}
