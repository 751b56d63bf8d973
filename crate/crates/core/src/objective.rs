//! SINR evaluation and the quadratic-transform surrogate.
//!
//! All inner products use the transpose convention `h^T w = sum_n h_n w_n`;
//! nothing is conjugated.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::SystemConfig;
use crate::geometry::{ChannelMatrix, ScenarioGeometry};

/// Group precoders, one column per multicast group (N x M).
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformingMatrix(pub DMatrix<Complex64>);

impl BeamformingMatrix {
    pub fn zeros(num_antennas: usize, num_groups: usize) -> Self {
        Self(DMatrix::zeros(num_antennas, num_groups))
    }

    /// i.i.d. circularly-symmetric Gaussian entries rescaled so the total
    /// power equals `power` exactly.
    pub fn random<R: Rng + ?Sized>(
        rng: &mut R,
        num_antennas: usize,
        num_groups: usize,
        power: f64,
    ) -> Self {
        let mut w = DMatrix::from_fn(num_antennas, num_groups, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
        });
        let scale = (power / w.norm_squared()).sqrt();
        w *= Complex64::from(scale);
        Self(w)
    }

    pub fn num_antennas(&self) -> usize {
        self.0.nrows()
    }

    pub fn num_groups(&self) -> usize {
        self.0.ncols()
    }

    /// Total transmit power `sum_m ||w_m||^2`.
    pub fn power(&self) -> f64 {
        self.0.norm_squared()
    }

    pub fn entry(&self, antenna: usize, group: usize) -> Complex64 {
        self.0[(antenna, group)]
    }
}

/// Quadratic-transform auxiliary variables, one per user.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxiliaryVars(pub Vec<Complex64>);

impl AuxiliaryVars {
    pub fn zeros(num_users: usize) -> Self {
        Self(vec![Complex64::new(0.0, 0.0); num_users])
    }

    pub fn get(&self, k: usize) -> Complex64 {
        self.0[k]
    }
}

/// `h_k^T w_j` for every group `j`.
fn beam_products(w: &BeamformingMatrix, h: &ChannelMatrix, k: usize) -> Vec<Complex64> {
    (0..w.num_groups())
        .map(|j| {
            h.coeffs
                .row(k)
                .iter()
                .zip(w.0.column(j).iter())
                .map(|(a, b)| a * b)
                .sum()
        })
        .collect()
}

/// Signal term `h_k^T w_m` and interference-plus-noise power for user `k`.
fn signal_and_disturbance(
    w: &BeamformingMatrix,
    h: &ChannelMatrix,
    geometry: &ScenarioGeometry,
    config: &SystemConfig,
    k: usize,
) -> (Complex64, f64) {
    let m = geometry.group_of(k);
    let products = beam_products(w, h, k);
    let interference: f64 = products
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != m)
        .map(|(_, x)| x.norm_sqr())
        .sum();
    (products[m], interference + config.noise_power_w)
}

/// Receive SINR of user `k`.
pub fn sinr(
    w: &BeamformingMatrix,
    h: &ChannelMatrix,
    geometry: &ScenarioGeometry,
    config: &SystemConfig,
    k: usize,
) -> f64 {
    let (signal, disturbance) = signal_and_disturbance(w, h, geometry, config, k);
    signal.norm_sqr() / disturbance
}

/// Worst user SINR.
pub fn min_sinr(
    w: &BeamformingMatrix,
    h: &ChannelMatrix,
    geometry: &ScenarioGeometry,
    config: &SystemConfig,
) -> f64 {
    (0..geometry.num_users())
        .map(|k| sinr(w, h, geometry, config, k))
        .fold(f64::INFINITY, f64::min)
}

/// Closed-form maximiser of the quadratic-transform surrogate for user `k`.
pub fn optimal_z(
    w: &BeamformingMatrix,
    h: &ChannelMatrix,
    geometry: &ScenarioGeometry,
    config: &SystemConfig,
    k: usize,
) -> Complex64 {
    let (signal, disturbance) = signal_and_disturbance(w, h, geometry, config, k);
    signal / disturbance
}

/// `optimal_z` for every user.
pub fn optimal_aux(
    w: &BeamformingMatrix,
    h: &ChannelMatrix,
    geometry: &ScenarioGeometry,
    config: &SystemConfig,
) -> AuxiliaryVars {
    AuxiliaryVars(
        (0..geometry.num_users())
            .map(|k| optimal_z(w, h, geometry, config, k))
            .collect(),
    )
}

/// `2 Re{z^* h_k^T w_m} - |z|^2 (interference + noise)`.
pub fn surrogate_gamma_tilde(
    z: Complex64,
    w: &BeamformingMatrix,
    h: &ChannelMatrix,
    geometry: &ScenarioGeometry,
    config: &SystemConfig,
    k: usize,
) -> f64 {
    let (signal, disturbance) = signal_and_disturbance(w, h, geometry, config, k);
    2.0 * (z.conj() * signal).re - z.norm_sqr() * disturbance
}

/// Smallest surrogate value over all users for fixed auxiliaries.
pub fn min_surrogate(
    z: &AuxiliaryVars,
    w: &BeamformingMatrix,
    h: &ChannelMatrix,
    geometry: &ScenarioGeometry,
    config: &SystemConfig,
) -> f64 {
    (0..geometry.num_users())
        .map(|k| surrogate_gamma_tilde(z.get(k), w, h, geometry, config, k))
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{arc_user_layout, channel_matrix, PointingMatrix, Vec3};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar_two_group(pt: f64) -> (ScenarioGeometry, SystemConfig, ChannelMatrix, BeamformingMatrix) {
        let mut c = SystemConfig::reference();
        c.num_antennas = 1;
        c.group_sizes = vec![1, 1];
        c.transmit_power_w = pt;
        c.noise_power_w = pt / 2.0;
        let g = ScenarioGeometry::new(
            vec![Vec3::zeros()],
            vec![Vec3::new(10.0, 0.0, 0.0), Vec3::new(10.0, 1.0, 0.0)],
            vec![0, 1],
            2,
        )
        .unwrap();
        let one = Complex64::new(1.0, 0.0);
        let h = ChannelMatrix {
            static_factor: DMatrix::from_element(2, 1, one),
            coeffs: DMatrix::from_element(2, 1, one),
            clamped_links: vec![],
        };
        let amp = Complex64::from((pt / 2.0).sqrt());
        let w = BeamformingMatrix(DMatrix::from_element(1, 2, amp));
        (g, c, h, w)
    }

    #[test]
    fn scalar_two_group_sinr() {
        let pt = 0.2;
        let (g, c, h, w) = scalar_two_group(pt);
        assert_relative_eq!(sinr(&w, &h, &g, &c, 0), 0.5, max_relative = 1e-15);
        assert_relative_eq!(sinr(&w, &h, &g, &c, 1), 0.5, max_relative = 1e-15);
        assert_relative_eq!(min_sinr(&w, &h, &g, &c), 0.5, max_relative = 1e-15);
        let z = optimal_z(&w, &h, &g, &c, 0);
        assert_relative_eq!(z.re, (pt / 2.0).sqrt() / pt, max_relative = 1e-15);
        assert_eq!(z.im, 0.0);
    }

    #[test]
    fn zero_beamformer() {
        let (g, c, h, _) = scalar_two_group(1.0);
        let w = BeamformingMatrix::zeros(1, 2);
        assert_eq!(sinr(&w, &h, &g, &c, 0), 0.0);
        assert_eq!(optimal_z(&w, &h, &g, &c, 0), Complex64::new(0.0, 0.0));
        assert_eq!(surrogate_gamma_tilde(Complex64::new(0.0, 0.0), &w, &h, &g, &c, 0), 0.0);
    }

    #[test]
    fn min_of_hand_computed() {
        // Users with SINRs 0.5 and 0.8 built on a single-group scalar channel.
        let mut c = SystemConfig::reference();
        c.num_antennas = 1;
        c.group_sizes = vec![2];
        c.noise_power_w = 1.0;
        let g = ScenarioGeometry::new(
            vec![Vec3::zeros()],
            vec![Vec3::new(10.0, 0.0, 0.0), Vec3::new(10.0, 1.0, 0.0)],
            vec![0, 0],
            1,
        )
        .unwrap();
        let h = ChannelMatrix {
            static_factor: DMatrix::zeros(2, 1),
            coeffs: DMatrix::from_column_slice(
                2,
                1,
                &[Complex64::new(0.5f64.sqrt(), 0.0), Complex64::new(0.0, 0.8f64.sqrt())],
            ),
            clamped_links: vec![],
        };
        let w = BeamformingMatrix(DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0)));
        assert_relative_eq!(sinr(&w, &h, &g, &c, 1), 0.8, max_relative = 1e-15);
        assert_relative_eq!(min_sinr(&w, &h, &g, &c), 0.5, max_relative = 1e-15);
        // M = 1: no interference, z = h^T w / noise
        assert_relative_eq!(
            optimal_z(&w, &h, &g, &c, 1).im,
            0.8f64.sqrt(),
            max_relative = 1e-15
        );
    }

    fn random_instance(seed: u64) -> (ScenarioGeometry, SystemConfig, ChannelMatrix, BeamformingMatrix) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = SystemConfig::reference();
        let g = arc_user_layout(&c, 50.0, 10.0, 2.0 * std::f64::consts::PI / 3.0).unwrap();
        let angles: Vec<(f64, f64)> = (0..c.num_antennas)
            .map(|_| (rng.gen_range(0.0..c.max_zenith_rad), rng.gen_range(0.0..6.28)))
            .collect();
        let h = channel_matrix(&g, &PointingMatrix::from_angles(&angles), &c).unwrap();
        let w = BeamformingMatrix::random(&mut rng, c.num_antennas, c.num_groups(), c.transmit_power_w);
        (g, c, h, w)
    }

    #[test]
    fn surrogate_is_tight_and_maximal() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for seed in 0..50 {
            let (g, c, h, w) = random_instance(seed);
            for k in 0..g.num_users() {
                let z = optimal_z(&w, &h, &g, &c, k);
                let s = sinr(&w, &h, &g, &c, k);
                let t = surrogate_gamma_tilde(z, &w, &h, &g, &c, k);
                assert_relative_eq!(t, s, max_relative = 1e-9);
                for _ in 0..5 {
                    let delta = z * Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
                    assert!(surrogate_gamma_tilde(z + delta, &w, &h, &g, &c, k) <= t);
                }
            }
        }
    }

    #[test]
    fn transpose_convention_matches_elementwise_sum() {
        let (g, c, h, w) = random_instance(3);
        for k in 0..g.num_users() {
            let m = g.group_of(k);
            let mut num = Complex64::new(0.0, 0.0);
            let mut den = c.noise_power_w;
            for j in 0..w.num_groups() {
                let mut acc = Complex64::new(0.0, 0.0);
                for n in 0..w.num_antennas() {
                    acc += h.coeffs[(k, n)] * w.entry(n, j);
                }
                if j == m {
                    num = acc;
                } else {
                    den += acc.norm_sqr();
                }
            }
            assert_eq!(sinr(&w, &h, &g, &c, k), num.norm_sqr() / den);
        }
    }

    #[test]
    fn scaling_single_group_never_hurts() {
        let mut c = SystemConfig::reference();
        c.group_sizes = vec![3];
        let g = arc_user_layout(&c, 50.0, 10.0, 1.0).unwrap();
        let h = channel_matrix(&g, &PointingMatrix::broadside(4), &c).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = BeamformingMatrix::random(&mut rng, 4, 1, c.transmit_power_w / 4.0);
        let scaled = BeamformingMatrix(&w.0 * Complex64::from(1.7));
        for k in 0..3 {
            assert!(sinr(&scaled, &h, &g, &c, k) >= sinr(&w, &h, &g, &c, k));
        }
    }

    #[test]
    fn random_beamformer_meets_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = BeamformingMatrix::random(&mut rng, 4, 2, 0.0316);
        assert_relative_eq!(w.power(), 0.0316, max_relative = 1e-12);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn instance(seed: u64, p: f64, n: usize, groups: usize) -> (ScenarioGeometry, SystemConfig, ChannelMatrix, BeamformingMatrix) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut c = SystemConfig::reference();
            c.directivity = p;
            c.num_antennas = n;
            c.group_sizes = vec![2; groups];
            let g = arc_user_layout(&c, 40.0, 8.0, 1.5).unwrap();
            let f = PointingMatrix::from_angles(
                &(0..n).map(|i| (0.1 * i as f64, 1.3 * i as f64)).collect::<Vec<_>>(),
            );
            let h = channel_matrix(&g, &f, &c).unwrap();
            let w = BeamformingMatrix::random(&mut rng, n, groups, c.transmit_power_w);
            (g, c, h, w)
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn transform_is_tight_at_the_optimal_auxiliary(
                seed in 0u64..1000, p in 0.0..6.0f64, n in 1usize..5, groups in 1usize..4,
            ) {
                let (g, c, h, w) = instance(seed, p, n, groups);
                for k in 0..g.num_users() {
                    let exact = sinr(&w, &h, &g, &c, k);
                    let tight = surrogate_gamma_tilde(optimal_z(&w, &h, &g, &c, k), &w, &h, &g, &c, k);
                    prop_assert!((tight - exact).abs() <= 1e-9 * exact.max(1e-300));
                }
            }

            #[test]
            fn transform_never_exceeds_sinr(
                seed in 0u64..1000, re in -1e4..1e4f64, im in -1e4..1e4f64, scale in -8.0..0.0f64,
            ) {
                let (g, c, h, w) = instance(seed, 5.0, 3, 2);
                let z = Complex64::new(re, im) * 10f64.powf(scale) / c.noise_power_w.sqrt();
                for k in 0..g.num_users() {
                    let exact = sinr(&w, &h, &g, &c, k);
                    let value = surrogate_gamma_tilde(z, &w, &h, &g, &c, k);
                    prop_assert!(value <= exact * (1.0 + 1e-12) + 1e-12);
                }
            }
        }
    }
}
