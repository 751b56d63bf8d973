//! Ingredients of the successive convex approximation for the boresight
//! block: gradients and Hessians of the desired and interference terms,
//! curvature (Lipschitz) constants, and the per-user concave surrogate.
//!
//! For user `k` in group `m` with fixed `W` and `z_k`:
//!
//! * `x_{k,j}(F) = sum_n beta[k,n] w[n,j] max(f_n . u_{k,n}, 0)^p`
//! * desired term `u_k(F) = 2 Re{z_k^* x_{k,m}(F)}`
//! * interference powers `a_{k,j}(F) = |x_{k,j}(F)|^2`, `j != m`
//!
//! The surrogate is `u_k` minorised and every `a_{k,j}` majorised by a
//! second-order expansion with a proximal term `L/2 ||F - F_i||_F^2`.

use nalgebra::{DMatrix, Matrix3};
use num_complex::Complex64;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::geometry::{static_factors, PointingMatrix, ScenarioGeometry, Vec3};
use crate::objective::{AuxiliaryVars, BeamformingMatrix};

/// Lower clamp on incidence cosines used when evaluating curvature constants.
pub const PSI_FLOOR: f64 = 1e-3;

/// Factor applied to every curvature constant on a rejected step.
pub const BACKTRACK_FACTOR: f64 = 2.0;

/// Maximum number of curvature doublings before a boresight step is abandoned.
pub const MAX_DOUBLINGS: usize = 10;

/// Gradient of `max(f . u, 0)^p` with respect to `f`; zero behind the element.
pub fn grad_directional_factor(f: &Vec3, u: &Vec3, p: f64) -> Vec3 {
    let psi = f.dot(u);
    if p == 0.0 || psi <= 0.0 {
        return Vec3::zeros();
    }
    u * (p * psi.powf(p - 1.0))
}

fn power(psi: f64, exponent: f64) -> f64 {
    if psi <= 0.0 {
        if exponent == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        psi.powf(exponent)
    }
}

/// Geometry, configuration and static channel factors shared by all SCA
/// computations for one scenario.
#[derive(Debug, Clone)]
pub struct ScaContext<'a> {
    pub geometry: &'a ScenarioGeometry,
    pub config: &'a SystemConfig,
    beta: DMatrix<Complex64>,
    psi_floor: f64,
}

impl<'a> ScaContext<'a> {
    pub fn new(geometry: &'a ScenarioGeometry, config: &'a SystemConfig) -> Self {
        Self {
            geometry,
            config,
            beta: static_factors(geometry, config),
            psi_floor: PSI_FLOOR,
        }
    }

    pub fn with_psi_floor(mut self, floor: f64) -> Self {
        self.psi_floor = floor;
        self
    }

    pub fn psi_floor(&self) -> f64 {
        self.psi_floor
    }

    fn p(&self) -> f64 {
        self.config.directivity
    }

    fn num_antennas(&self) -> usize {
        self.geometry.num_antennas()
    }

    /// Incidence cosine `f_n . u_{k,n}`.
    pub fn psi(&self, f: &PointingMatrix, k: usize, n: usize) -> f64 {
        f.column(n).dot(self.geometry.direction(k, n))
    }

    /// `beta[k,n] w[n,j]`.
    pub fn upsilon(&self, w: &BeamformingMatrix, k: usize, j: usize, n: usize) -> Complex64 {
        self.beta[(k, n)] * w.entry(n, j)
    }

    /// `c_{k,n} = 2 Re{z_k^* beta[k,n] w[n,m]}` with `m` the group of `k`.
    pub fn desired_coefficient(
        &self,
        w: &BeamformingMatrix,
        z: &AuxiliaryVars,
        k: usize,
        n: usize,
    ) -> f64 {
        let m = self.geometry.group_of(k);
        2.0 * (z.get(k).conj() * self.upsilon(w, k, m, n)).re
    }

    /// `x_{k,j}(F)`, which equals `h_k(F)^T w_j`.
    pub fn beam_inner(&self, f: &PointingMatrix, w: &BeamformingMatrix, k: usize, j: usize) -> Complex64 {
        let p = self.p();
        (0..self.num_antennas())
            .map(|n| self.upsilon(w, k, j, n) * power(self.psi(f, k, n), p))
            .sum()
    }

    /// `u_k(F)`.
    pub fn desired_term(
        &self,
        f: &PointingMatrix,
        w: &BeamformingMatrix,
        z: &AuxiliaryVars,
        k: usize,
    ) -> f64 {
        let m = self.geometry.group_of(k);
        2.0 * (z.get(k).conj() * self.beam_inner(f, w, k, m)).re
    }

    /// `a_{k,j}(F)`.
    pub fn interference_power(&self, f: &PointingMatrix, w: &BeamformingMatrix, k: usize, j: usize) -> f64 {
        self.beam_inner(f, w, k, j).norm_sqr()
    }

    /// Quadratic-transform surrogate written through `u_k` and `a_{k,j}`.
    pub fn gamma_tilde(
        &self,
        f: &PointingMatrix,
        w: &BeamformingMatrix,
        z: &AuxiliaryVars,
        k: usize,
    ) -> f64 {
        let m = self.geometry.group_of(k);
        let zsq = z.get(k).norm_sqr();
        let interference: f64 = (0..w.num_groups())
            .filter(|&j| j != m)
            .map(|j| self.interference_power(f, w, k, j))
            .sum();
        self.desired_term(f, w, z, k) - zsq * (interference + self.config.noise_power_w)
    }

    /// Per-antenna gradient blocks of `u_k`.
    pub fn grad_u(
        &self,
        f: &PointingMatrix,
        w: &BeamformingMatrix,
        z: &AuxiliaryVars,
        k: usize,
    ) -> Vec<Vec3> {
        let p = self.p();
        (0..self.num_antennas())
            .map(|n| {
                let c = self.desired_coefficient(w, z, k, n);
                grad_directional_factor(f.column(n), self.geometry.direction(k, n), p) * c
            })
            .collect()
    }

    /// Per-antenna gradient blocks of `a_{k,j}`.
    pub fn grad_a(&self, f: &PointingMatrix, w: &BeamformingMatrix, k: usize, j: usize) -> Vec<Vec3> {
        let p = self.p();
        let x = self.beam_inner(f, w, k, j);
        (0..self.num_antennas())
            .map(|n| {
                let coef = 2.0 * (x.conj() * self.upsilon(w, k, j, n)).re;
                grad_directional_factor(f.column(n), self.geometry.direction(k, n), p) * coef
            })
            .collect()
    }

    /// Diagonal Hessian block `c p (p-1) psi^{p-2} u u^T` of `u_k` for antenna `n`;
    /// the off-diagonal blocks are zero.
    pub fn hessian_u_block(
        &self,
        f: &PointingMatrix,
        w: &BeamformingMatrix,
        z: &AuxiliaryVars,
        k: usize,
        n: usize,
    ) -> Matrix3<f64> {
        let p = self.p();
        let psi = self.psi(f, k, n);
        if p == 0.0 || psi <= 0.0 {
            return Matrix3::zeros();
        }
        let u = self.geometry.direction(k, n);
        let c = self.desired_coefficient(w, z, k, n);
        u * u.transpose() * (c * p * (p - 1.0) * psi.powf(p - 2.0))
    }

    /// Block `(row, col)` of the Hessian of `a_{k,j}`, i.e.
    /// `d^2 a / (d f_row d f_col^T)`.
    pub fn hessian_a_block(
        &self,
        f: &PointingMatrix,
        w: &BeamformingMatrix,
        k: usize,
        j: usize,
        row: usize,
        col: usize,
    ) -> Matrix3<f64> {
        let p = self.p();
        let psi_r = self.psi(f, k, row);
        let psi_c = self.psi(f, k, col);
        if p == 0.0 || psi_r <= 0.0 || psi_c <= 0.0 {
            return Matrix3::zeros();
        }
        let u_r = self.geometry.direction(k, row);
        let u_c = self.geometry.direction(k, col);
        let v_r = self.upsilon(w, k, j, row);
        let v_c = self.upsilon(w, k, j, col);
        if row == col {
            let x = self.beam_inner(f, w, k, j);
            let scalar = 2.0 * (x.conj() * v_r).re * p * (p - 1.0) * psi_r.powf(p - 2.0)
                + 2.0 * v_r.norm_sqr() * p * p * psi_r.powf(2.0 * (p - 1.0));
            u_r * u_r.transpose() * scalar
        } else {
            let scalar = 2.0 * (v_r.conj() * v_c).re * p * p * psi_r.powf(p - 1.0) * psi_c.powf(p - 1.0);
            u_r * u_c.transpose() * scalar
        }
    }

    /// Full 3N x 3N Hessian of `a_{k,j}`.
    pub fn hessian_a(&self, f: &PointingMatrix, w: &BeamformingMatrix, k: usize, j: usize) -> DMatrix<f64> {
        let n = self.num_antennas();
        let mut out = DMatrix::zeros(3 * n, 3 * n);
        for r in 0..n {
            for c in 0..n {
                out.fixed_view_mut::<3, 3>(3 * r, 3 * c)
                    .copy_from(&self.hessian_a_block(f, w, k, j, r, c));
            }
        }
        out
    }

    fn floored_psi(&self, f: &PointingMatrix, k: usize, n: usize) -> f64 {
        self.psi(f, k, n).max(self.psi_floor)
    }

    /// Signal curvature constant `max_n |c_{k,n} psi^{p-2}| p |p-1|`.
    pub fn lipschitz_signal(
        &self,
        f: &PointingMatrix,
        w: &BeamformingMatrix,
        z: &AuxiliaryVars,
        k: usize,
    ) -> f64 {
        let p = self.p();
        if p == 0.0 || p == 1.0 {
            return 0.0;
        }
        let c_max = (0..self.num_antennas())
            .map(|n| {
                (self.desired_coefficient(w, z, k, n) * self.floored_psi(f, k, n).powf(p - 2.0)).abs()
            })
            .fold(0.0, f64::max);
        c_max * p * (p - 1.0).abs()
    }

    /// Interference curvature constant
    /// `2p(|p-1|+p) max_n(|v_n| psi_n^{2(p-1)}) sum_n |v_n|`, `v_n = beta[k,n] w[n,j]`.
    pub fn lipschitz_interference(&self, f: &PointingMatrix, w: &BeamformingMatrix, k: usize, j: usize) -> f64 {
        let p = self.p();
        if p == 0.0 {
            return 0.0;
        }
        let n_ant = self.num_antennas();
        let v_max = (0..n_ant)
            .map(|n| self.upsilon(w, k, j, n).norm() * self.floored_psi(f, k, n).powf(2.0 * (p - 1.0)))
            .fold(0.0, f64::max);
        let v_sum: f64 = (0..n_ant).map(|n| self.upsilon(w, k, j, n).norm()).sum();
        2.0 * p * ((p - 1.0).abs() + p) * v_max * v_sum
    }

    /// Assembles every user's surrogate around `f_prev`.
    pub fn build_surrogates(
        &self,
        f_prev: &PointingMatrix,
        w: &BeamformingMatrix,
        z: &AuxiliaryVars,
    ) -> Result<SurrogateBundle> {
        if f_prev.to_flat().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("pointing matrix"));
        }
        if w.0.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite("beamforming matrix"));
        }
        if z.0.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite("auxiliary variables"));
        }
        let users = (0..self.geometry.num_users())
            .map(|k| {
                let group = self.geometry.group_of(k);
                let interferers: Vec<InterferenceSurrogate> = (0..w.num_groups())
                    .filter(|&j| j != group)
                    .map(|j| InterferenceSurrogate {
                        group: j,
                        value: self.interference_power(f_prev, w, k, j),
                        gradient: self.grad_a(f_prev, w, k, j),
                        lipschitz: self.lipschitz_interference(f_prev, w, k, j),
                    })
                    .collect();
                UserSurrogate {
                    user: k,
                    group,
                    z_sq: z.get(k).norm_sqr(),
                    desired: self.desired_term(f_prev, w, z, k),
                    grad_desired: self.grad_u(f_prev, w, z, k),
                    lipschitz_signal: self.lipschitz_signal(f_prev, w, z, k),
                    interferers,
                    noise_offset: z.get(k).norm_sqr() * self.config.noise_power_w,
                }
            })
            .collect();
        for (n, f) in f_prev.columns().iter().enumerate() {
            let group_dirs_behind = (0..self.geometry.num_users())
                .all(|k| f.dot(self.geometry.direction(k, n)) <= 0.0);
            if group_dirs_behind && self.p() != 0.0 {
                log::warn!("antenna {n} faces away from every user; its boresight gradient is zero");
            }
        }
        Ok(SurrogateBundle {
            expansion: f_prev.clone(),
            users,
        })
    }
}

/// Majorant data for one interference power `a_{k,j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceSurrogate {
    pub group: usize,
    /// `a_{k,j}` at the expansion point.
    pub value: f64,
    pub gradient: Vec<Vec3>,
    pub lipschitz: f64,
}

/// Concave minorant of one user's quadratic-transform surrogate.
#[derive(Debug, Clone, PartialEq)]
pub struct UserSurrogate {
    pub user: usize,
    pub group: usize,
    /// `|z_k|^2`.
    pub z_sq: f64,
    /// `u_k` at the expansion point.
    pub desired: f64,
    pub grad_desired: Vec<Vec3>,
    pub lipschitz_signal: f64,
    pub interferers: Vec<InterferenceSurrogate>,
    /// `|z_k|^2 sigma^2`.
    pub noise_offset: f64,
}

fn dot_blocks(grad: &[Vec3], f: &PointingMatrix, f0: &PointingMatrix) -> f64 {
    grad.iter()
        .zip(f.columns().iter().zip(f0.columns()))
        .map(|(g, (a, b))| g.dot(&(a - b)))
        .sum()
}

impl UserSurrogate {
    /// Surrogate value at the expansion point.
    pub fn constant(&self) -> f64 {
        let interference: f64 = self.interferers.iter().map(|i| i.value).sum();
        self.desired - self.z_sq * interference - self.noise_offset
    }

    /// Aggregated gradient of the surrogate at the expansion point.
    pub fn gradient(&self) -> Vec<Vec3> {
        let mut g = self.grad_desired.clone();
        for i in &self.interferers {
            for (acc, gi) in g.iter_mut().zip(&i.gradient) {
                *acc -= gi * self.z_sq;
            }
        }
        g
    }

    /// Aggregated proximal weight `L^S + |z|^2 sum_j L^I_j`.
    pub fn curvature(&self) -> f64 {
        self.lipschitz_signal + self.z_sq * self.interferers.iter().map(|i| i.lipschitz).sum::<f64>()
    }

    /// Minorant of `u_k` at `f`.
    pub fn desired_lower(&self, f: &PointingMatrix, f0: &PointingMatrix) -> f64 {
        self.desired + dot_blocks(&self.grad_desired, f, f0) - 0.5 * self.lipschitz_signal * f.distance_sq(f0)
    }

    /// Majorant of `a_{k,j}` at `f` for the interferer at position `idx`.
    pub fn interference_upper(&self, idx: usize, f: &PointingMatrix, f0: &PointingMatrix) -> f64 {
        let i = &self.interferers[idx];
        i.value + dot_blocks(&i.gradient, f, f0) + 0.5 * i.lipschitz * f.distance_sq(f0)
    }

    /// Surrogate value at `f` given expansion point `f0`.
    pub fn value(&self, f: &PointingMatrix, f0: &PointingMatrix) -> f64 {
        let q: f64 = (0..self.interferers.len())
            .map(|i| self.interference_upper(i, f, f0))
            .sum();
        self.desired_lower(f, f0) - self.z_sq * q - self.noise_offset
    }

    fn inflate(&mut self, factor: f64) {
        self.lipschitz_signal *= factor;
        for i in &mut self.interferers {
            i.lipschitz *= factor;
        }
    }
}

/// All users' surrogates around one expansion point.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateBundle {
    pub expansion: PointingMatrix,
    pub users: Vec<UserSurrogate>,
}

impl SurrogateBundle {
    /// `phi_k(f)`.
    pub fn value(&self, k: usize, f: &PointingMatrix) -> f64 {
        self.users[k].value(f, &self.expansion)
    }

    /// Multiplies every curvature constant by `factor`.
    pub fn inflate(&mut self, factor: f64) {
        for u in &mut self.users {
            u.inflate(factor);
        }
    }

    pub fn min_constant(&self) -> f64 {
        self.users
            .iter()
            .map(UserSurrogate::constant)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Checks the minorisation `gamma_tilde_k(f) >= phi_k(f)` at a candidate for
/// every user. On violation all curvature constants are doubled in place and
/// `false` is returned so the caller can re-solve.
pub fn backtrack_curvature(
    ctx: &ScaContext<'_>,
    bundle: &mut SurrogateBundle,
    candidate: &PointingMatrix,
    w: &BeamformingMatrix,
    z: &AuxiliaryVars,
) -> bool {
    let accepted = bundle.users.iter().all(|u| {
        let phi = u.value(candidate, &bundle.expansion);
        let actual = ctx.gamma_tilde(candidate, w, z, u.user);
        actual >= phi - 1e-9 * (1.0 + phi.abs())
    });
    if !accepted {
        bundle.inflate(BACKTRACK_FACTOR);
    }
    accepted
}
