//! Array and user geometry, the element gain pattern, and the
//! boresight-dependent near-field line-of-sight channel.

use nalgebra::{DMatrix, Vector3};
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::config::{peak_gain, SystemConfig};
use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Unit vector along +x, the array broadside.
pub fn e_x() -> Vec3 {
    Vec3::new(1.0, 0.0, 0.0)
}

/// Maps a zenith angle (from +x) and an azimuth angle (in the y-z plane,
/// measured from +y) to a unit pointing vector.
pub fn boresight_vector(zenith: f64, azimuth: f64) -> Vec3 {
    let (sz, cz) = zenith.sin_cos();
    let (sa, ca) = azimuth.sin_cos();
    Vec3::new(cz, sz * ca, sz * sa)
}

/// `max(psi, 0)^p`, the amplitude factor an element contributes for a link
/// whose incidence cosine is `psi`. Isotropic elements (p = 0) return 1.
pub fn directional_factor(psi: f64, p: f64) -> f64 {
    if p == 0.0 {
        1.0
    } else if psi <= 0.0 {
        0.0
    } else {
        (p * psi.ln()).exp()
    }
}

/// Power gain of the cosine-power pattern: `G0 cos^{2p}` on the front
/// half-space and zero behind the element, with `G0 = 2(2p+1)`.
/// `p = 0` is treated as an isotropic unit-gain element.
pub fn element_gain(cos_incidence: f64, p: f64) -> f64 {
    if p == 0.0 {
        return 1.0;
    }
    if cos_incidence <= 0.0 {
        return 0.0;
    }
    peak_gain(p) * (2.0 * p * cos_incidence.ln()).exp()
}

/// Element positions of a near-square planar array in the y-z plane,
/// centred on the origin. Rows are `floor(sqrt(N))`, columns `ceil(N/rows)`;
/// a short last row is centred on its own.
pub fn upa_positions(config: &SystemConfig) -> Vec<Vec3> {
    let n = config.num_antennas;
    let d = config.element_spacing_m;
    let rows = ((n as f64).sqrt().floor() as usize).max(1);
    let cols = n.div_ceil(rows);

    let mut counts = vec![cols; rows];
    let short = rows * cols - n;
    if short > 0 {
        counts[rows - 1] = cols - short;
    }
    let row_mean = counts
        .iter()
        .enumerate()
        .map(|(r, &c)| r as f64 * c as f64)
        .sum::<f64>()
        / n as f64;
    let full = short == 0;

    let mut out = Vec::with_capacity(n);
    for (r, &count) in counts.iter().enumerate() {
        // Full grids use the symmetric offset directly so the centroid is exact.
        let z = if full {
            (r as f64 - (rows as f64 - 1.0) / 2.0) * d
        } else {
            (r as f64 - row_mean) * d
        };
        for c in 0..count {
            let y = (c as f64 - (count as f64 - 1.0) / 2.0) * d;
            out.push(Vec3::new(0.0, y, z));
        }
    }
    out
}

/// Positions of the transmit elements, users and the user-to-group map,
/// together with the per-link distance and unit direction.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioGeometry {
    antennas: Vec<Vec3>,
    users: Vec<Vec3>,
    group_of: Vec<usize>,
    num_groups: usize,
    distance: Vec<f64>,
    direction: Vec<Vec3>,
}

impl ScenarioGeometry {
    pub fn new(
        antennas: Vec<Vec3>,
        users: Vec<Vec3>,
        group_of: Vec<usize>,
        num_groups: usize,
    ) -> Result<Self> {
        if antennas.is_empty() || users.is_empty() {
            return Err(Error::InvalidGeometry("need at least one antenna and one user".into()));
        }
        if group_of.len() != users.len() {
            return Err(Error::InvalidGeometry(format!(
                "{} users but {} group labels",
                users.len(),
                group_of.len()
            )));
        }
        if num_groups == 0 {
            return Err(Error::InvalidGeometry("need at least one group".into()));
        }
        let mut seen = vec![false; num_groups];
        for &g in &group_of {
            if g >= num_groups {
                return Err(Error::InvalidGeometry(format!("group index {g} out of range")));
            }
            seen[g] = true;
        }
        if let Some(m) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidGeometry(format!("group {m} has no users")));
        }

        let n = antennas.len();
        let mut distance = Vec::with_capacity(users.len() * n);
        let mut direction = Vec::with_capacity(users.len() * n);
        for q in &users {
            for p in &antennas {
                let delta = q - p;
                let dist = delta.norm();
                if !(dist > 0.0 && dist.is_finite()) {
                    return Err(Error::InvalidGeometry(
                        "user coincides with an antenna element".into(),
                    ));
                }
                distance.push(dist);
                direction.push(delta / dist);
            }
        }
        Ok(Self {
            antennas,
            users,
            group_of,
            num_groups,
            distance,
            direction,
        })
    }

    pub fn num_antennas(&self) -> usize {
        self.antennas.len()
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_groups(&self) -> usize {
        self.num_groups
    }

    pub fn antennas(&self) -> &[Vec3] {
        &self.antennas
    }

    pub fn users(&self) -> &[Vec3] {
        &self.users
    }

    pub fn group_of(&self, user: usize) -> usize {
        self.group_of[user]
    }

    pub fn members(&self, group: usize) -> impl Iterator<Item = usize> + '_ {
        self.group_of
            .iter()
            .enumerate()
            .filter(move |(_, &g)| g == group)
            .map(|(k, _)| k)
    }

    pub fn distance(&self, user: usize, antenna: usize) -> f64 {
        self.distance[user * self.antennas.len() + antenna]
    }

    pub fn direction(&self, user: usize, antenna: usize) -> &Vec3 {
        &self.direction[user * self.antennas.len() + antenna]
    }

    /// Checks that the geometry matches the config's antenna and group counts.
    pub fn check_against(&self, config: &SystemConfig) -> Result<()> {
        if self.num_antennas() != config.num_antennas {
            return Err(Error::DimensionMismatch(format!(
                "geometry has {} antennas, config {}",
                self.num_antennas(),
                config.num_antennas
            )));
        }
        if self.num_groups != config.num_groups() {
            return Err(Error::DimensionMismatch(format!(
                "geometry has {} groups, config {}",
                self.num_groups,
                config.num_groups()
            )));
        }
        Ok(())
    }
}

/// Users spread evenly over an arc of radius `radius` in the plane
/// `z = -height`, centred on the +x direction and spanning `spread` radians.
/// Groups take contiguous blocks of users along the arc in `group_sizes` order.
pub fn arc_user_layout(
    config: &SystemConfig,
    radius: f64,
    height: f64,
    spread: f64,
) -> Result<ScenarioGeometry> {
    if !(spread > 0.0 && spread <= PI) {
        return Err(Error::InvalidGeometry(format!(
            "arc spread must lie in (0, pi], got {spread}"
        )));
    }
    if !(radius > 0.0 && height > 0.0) {
        return Err(Error::InvalidGeometry("radius and height must be positive".into()));
    }
    config.validate()?;
    let k = config.num_users();
    let users = (0..k)
        .map(|i| {
            let alpha = if k == 1 {
                0.0
            } else {
                -spread / 2.0 + spread * i as f64 / (k - 1) as f64
            };
            Vec3::new(radius * alpha.cos(), radius * alpha.sin(), -height)
        })
        .collect();
    let group_of = config
        .group_sizes
        .iter()
        .enumerate()
        .flat_map(|(m, &size)| std::iter::repeat(m).take(size))
        .collect();
    ScenarioGeometry::new(upa_positions(config), users, group_of, config.num_groups())
}

/// Boresight pointing vectors, one column per antenna.
#[derive(Debug, Clone, PartialEq)]
pub struct PointingMatrix(Vec<Vec3>);

impl PointingMatrix {
    pub fn new(columns: Vec<Vec3>) -> Self {
        Self(columns)
    }

    /// Every element facing broadside (+x).
    pub fn broadside(num_antennas: usize) -> Self {
        Self(vec![e_x(); num_antennas])
    }

    pub fn from_angles(angles: &[(f64, f64)]) -> Self {
        Self(angles.iter().map(|&(z, a)| boresight_vector(z, a)).collect())
    }

    pub fn num_antennas(&self) -> usize {
        self.0.len()
    }

    pub fn columns(&self) -> &[Vec3] {
        &self.0
    }

    pub fn column(&self, n: usize) -> &Vec3 {
        &self.0[n]
    }

    /// Each column scaled to unit norm. Zero columns become +x.
    pub fn normalized(&self) -> Self {
        Self(
            self.0
                .iter()
                .map(|f| {
                    let norm = f.norm();
                    if norm > 0.0 {
                        f / norm
                    } else {
                        e_x()
                    }
                })
                .collect(),
        )
    }

    /// Stacked as `[f_1; f_2; ...]`, 3N reals.
    pub fn to_flat(&self) -> Vec<f64> {
        self.0.iter().flat_map(|f| [f.x, f.y, f.z]).collect()
    }

    pub fn from_flat(values: &[f64]) -> Self {
        Self(
            values
                .chunks_exact(3)
                .map(|c| Vec3::new(c[0], c[1], c[2]))
                .collect(),
        )
    }

    /// Squared Frobenius distance to another pointing matrix.
    pub fn distance_sq(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).norm_squared())
            .sum()
    }

    /// Largest violation of the zenith cone and the unit ball.
    pub fn max_violation(&self, max_zenith: f64) -> f64 {
        let cos_max = max_zenith.cos();
        self.0
            .iter()
            .map(|f| (cos_max - f.x).max(f.norm() - 1.0).max(0.0))
            .fold(0.0, f64::max)
    }
}

/// Boresight-independent part of each link coefficient:
/// `sqrt(S G0 / (4 pi d^2)) exp(-j 2 pi d / lambda)`, indexed (user, antenna).
pub fn static_factors(geometry: &ScenarioGeometry, config: &SystemConfig) -> DMatrix<Complex64> {
    let lambda = config.wavelength();
    let scale = config.element_area_m2 * config.peak_gain() / (4.0 * PI);
    DMatrix::from_fn(geometry.num_users(), geometry.num_antennas(), |k, n| {
        let d = geometry.distance(k, n);
        let magnitude = (scale / (d * d)).sqrt();
        Complex64::from_polar(magnitude, -2.0 * PI * d / lambda)
    })
}

/// Link coefficients `h[k, n]` for a given set of boresights.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    pub static_factor: DMatrix<Complex64>,
    pub coeffs: DMatrix<Complex64>,
    /// Links whose incidence cosine is non-positive and were clamped to zero.
    pub clamped_links: Vec<(usize, usize)>,
}

impl ChannelMatrix {
    pub fn num_users(&self) -> usize {
        self.coeffs.nrows()
    }

    pub fn num_antennas(&self) -> usize {
        self.coeffs.ncols()
    }

    /// Transpose inner product `h_k^T w = sum_n h[k,n] w[n]` (no conjugation).
    pub fn inner(&self, user: usize, w: impl IntoIterator<Item = Complex64>) -> Complex64 {
        self.coeffs
            .row(user)
            .iter()
            .zip(w)
            .map(|(h, w)| h * w)
            .sum()
    }
}

/// Evaluates the channel for the pointing matrix `pointing`.
pub fn channel_matrix(
    geometry: &ScenarioGeometry,
    pointing: &PointingMatrix,
    config: &SystemConfig,
) -> Result<ChannelMatrix> {
    if pointing.num_antennas() != geometry.num_antennas() {
        return Err(Error::DimensionMismatch(format!(
            "pointing has {} columns, geometry {} antennas",
            pointing.num_antennas(),
            geometry.num_antennas()
        )));
    }
    let p = config.directivity;
    let static_factor = static_factors(geometry, config);
    let mut clamped_links = Vec::new();
    let coeffs = DMatrix::from_fn(geometry.num_users(), geometry.num_antennas(), |k, n| {
        let psi = pointing.column(n).dot(geometry.direction(k, n));
        if p != 0.0 && psi <= 0.0 {
            clamped_links.push((k, n));
        }
        static_factor[(k, n)] * directional_factor(psi, p)
    });
    if !clamped_links.is_empty() && p.fract() != 0.0 {
        log::warn!(
            "{} link(s) fall behind their element with non-integer p = {p}; clamped to zero gain",
            clamped_links.len()
        );
    }
    Ok(ChannelMatrix {
        static_factor,
        coeffs,
        clamped_links,
    })
}
