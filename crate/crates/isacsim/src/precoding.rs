//! Baseline precoder constructions: MMSE communication beams and the
//! null-projected sensing beam used by the power-allocation design.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use thiserror::Error;

use crate::array::{steering_conj, UlaConfig};
use crate::linalg::{CholeskyFactor, LinalgError};
use crate::scene::{Scene, UserSet};

#[derive(Debug, Error)]
pub enum PrecodingError {
    #[error("MMSE precoding requires at least one user")]
    NoUsers,
    #[error("regularized channel Gram matrix is singular: {0}")]
    SingularSystem(#[from] LinalgError),
}

/// MMSE precoder: raw solution of the regularized system, unit-norm columns,
/// and the uniform power split `rho_k = 1/K`.
#[derive(Debug, Clone)]
pub struct MmseBaseline {
    /// Raw `(H Hᴴ + reg I)^{-1} H` before normalization.
    pub raw: Array2<Complex64>,
    /// Columns of `raw` scaled to unit 2-norm.
    pub normalized: Array2<Complex64>,
    /// Uniform UE power coefficients, `1/K` each.
    pub power: Vec<f64>,
}

impl MmseBaseline {
    /// Stacked precoder with the power split absorbed into the columns:
    /// column k is `sqrt(1/K)` times the normalized beam, so the total power
    /// is exactly one.
    pub fn power_scaled(&self) -> Array2<Complex64> {
        let k = self.normalized.ncols();
        let s = (1.0 / k as f64).sqrt();
        self.normalized.mapv(|z| z * s)
    }
}

/// MMSE precoder `(H Hᴴ + sigma_nu^2 I)^{-1} H` with unit-norm columns.
pub fn mmse_precoder(users: &UserSet) -> Result<MmseBaseline, PrecodingError> {
    mmse_precoder_with_regularizer(users, users.noise_variance_w)
}

/// MMSE precoder with an explicit regularizer, the sensitivity knob around
/// the plain `sigma_nu^2` choice.
pub fn mmse_precoder_with_regularizer(
    users: &UserSet,
    regularizer: f64,
) -> Result<MmseBaseline, PrecodingError> {
    let k = users.num_users();
    if k == 0 {
        return Err(PrecodingError::NoUsers);
    }
    let m = users.num_antennas();
    let h = &users.channel;
    let mut gram = Array2::<Complex64>::zeros((m, m));
    for col in h.columns() {
        for i in 0..m {
            for j in 0..m {
                gram[(i, j)] += col[i] * col[j].conj();
            }
        }
    }
    for i in 0..m {
        gram[(i, i)] += Complex64::new(regularizer, 0.0);
    }
    let factor = CholeskyFactor::new(&gram)?;
    let raw = factor.solve_mat(h);
    let mut normalized = raw.clone();
    for mut col in normalized.columns_mut() {
        let norm: f64 = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            col.mapv_inplace(|z| z / norm);
        }
    }
    Ok(MmseBaseline {
        raw,
        normalized,
        power: vec![1.0 / k as f64; k],
    })
}

/// Sensing beam: spatial matched filter projected onto the null space of the
/// clutter directions,
/// `w0 = (I + sum_q a*(theta_q) a'(theta_q))^{-1} a*(theta_0)`, normalized.
pub fn sensing_beam(cfg: UlaConfig, scene: &Scene) -> Array1<Complex64> {
    let m = cfg.num_antennas();
    let mut sys = Array2::<Complex64>::eye(m);
    for c in &scene.clutter {
        let v = steering_conj(cfg, c.angle); // a*(theta_q); a*(aᵀ) = v vᴴ
        for i in 0..m {
            for j in 0..m {
                sys[(i, j)] += v[i] * v[j].conj();
            }
        }
    }
    let rhs = steering_conj(cfg, scene.target.angle);
    let factor = CholeskyFactor::new(&sys).expect("identity-shifted system is positive definite");
    let raw = factor.solve_vec(&rhs);
    let norm: f64 = raw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    raw.mapv(|z| z / norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{steering, Angle};
    use crate::scene::{sample_scene, sample_users, trial_rng, PointScatterer, ScenarioParams};
    use ndarray::Array2;

    fn col_norm(a: &Array2<Complex64>, j: usize) -> f64 {
        a.column(j).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    #[test]
    fn mmse_raw_solves_regularized_system() {
        let params = ScenarioParams::default();
        let cfg = UlaConfig::new(32).unwrap();
        let mut rng = trial_rng(30, 0);
        let users = sample_users(&mut rng, &params, cfg);
        let base = mmse_precoder(&users).unwrap();
        let m = 32;
        let h = &users.channel;
        let mut gram = Array2::<Complex64>::zeros((m, m));
        for col in h.columns() {
            for i in 0..m {
                for j in 0..m {
                    gram[(i, j)] += col[i] * col[j].conj();
                }
            }
        }
        for i in 0..m {
            gram[(i, i)] += Complex64::new(users.noise_variance_w, 0.0);
        }
        let recon = gram.dot(&base.raw);
        let err: f64 = recon
            .iter()
            .zip(h.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        let scale: f64 = h.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err < 1e-10 * scale, "residual {err:e} vs scale {scale:e}");
        for j in 0..base.normalized.ncols() {
            assert!((col_norm(&base.normalized, j) - 1.0).abs() < 1e-12);
        }
        assert_eq!(base.power, vec![0.125; 8]);
    }

    #[test]
    fn large_regularizer_recovers_matched_beams() {
        let params = ScenarioParams {
            num_users: 4,
            ..ScenarioParams::default()
        };
        let cfg = UlaConfig::new(16).unwrap();
        let mut rng = trial_rng(31, 0);
        let users = sample_users(&mut rng, &params, cfg);
        let h_scale: f64 = users.channel.iter().map(|z| z.norm_sqr()).sum();
        let base = mmse_precoder_with_regularizer(&users, 1e6 * h_scale).unwrap();
        for k in 0..4 {
            let h = users.channel.column(k);
            let hn: f64 = h.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let cosine: f64 = {
                let inner: Complex64 = h
                    .iter()
                    .zip(base.normalized.column(k).iter())
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                inner.norm() / hn
            };
            assert!(cosine > 0.999, "cosine {cosine} at user {k}");
        }
    }

    #[test]
    fn orthogonal_channels_give_collinear_beams() {
        // channels on distinct DFT grid angles are exactly orthogonal
        let m = 8;
        let cfg = UlaConfig::new(m).unwrap();
        let grid = crate::array::dft_grid_angles(cfg);
        let mut h = Array2::<Complex64>::zeros((m, 3));
        for (j, idx) in [1usize, 4, 6].iter().enumerate() {
            h.column_mut(j).assign(&steering(cfg, grid[*idx]));
        }
        let users = UserSet {
            angles: vec![grid[1], grid[4], grid[6]],
            distances_m: vec![100.0; 3],
            covariances: vec![],
            channel: h.clone(),
            noise_variance_w: 1e-3,
        };
        let base = mmse_precoder(&users).unwrap();
        for j in 0..3 {
            let inner: Complex64 = h
                .column(j)
                .iter()
                .zip(base.normalized.column(j).iter())
                .map(|(a, b)| a.conj() * b)
                .sum();
            let cosine = inner.norm() / col_norm(&h, j);
            assert!(cosine > 1.0 - 1e-12, "cosine {cosine}");
        }
    }

    #[test]
    fn mmse_is_scale_consistent() {
        let params = ScenarioParams {
            num_users: 4,
            ..ScenarioParams::default()
        };
        let cfg = UlaConfig::new(12).unwrap();
        let mut rng = trial_rng(32, 0);
        let mut users = sample_users(&mut rng, &params, cfg);
        let a = mmse_precoder(&users).unwrap();
        let c = 37.5;
        users.channel.mapv_inplace(|z| z * c);
        users.noise_variance_w *= c * c;
        let b = mmse_precoder(&users).unwrap();
        let err: f64 = a
            .normalized
            .iter()
            .zip(b.normalized.iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "normalized columns moved by {err:e}");
    }

    #[test]
    fn sensing_beam_without_clutter_is_conjugate_steering() {
        let m = 16;
        let cfg = UlaConfig::new(m).unwrap();
        let scene = Scene {
            target: PointScatterer {
                angle: Angle::from_radians(0.45).unwrap(),
                distance_m: 420.0,
                rcs_power_m2: 1.0,
                delay_tag: 0,
            },
            clutter: vec![],
            carrier_hz: 28e9,
        };
        let w0 = sensing_beam(cfg, &scene);
        let expected = steering_conj(cfg, scene.target.angle).mapv(|z| z / (m as f64).sqrt());
        for i in 0..m {
            assert!((w0[i] - expected[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn sensing_beam_is_unit_norm_and_deterministic() {
        let params = ScenarioParams::default();
        let cfg = UlaConfig::new(64).unwrap();
        let mut rng = trial_rng(33, 0);
        let scene = sample_scene(&mut rng, &params);
        let a = sensing_beam(cfg, &scene);
        let b = sensing_beam(cfg, &scene);
        assert_eq!(a, b);
        let norm: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sensing_beam_suppresses_clutter_response() {
        let params = ScenarioParams::default();
        let cfg = UlaConfig::new(32).unwrap();
        for trial in 0..10u64 {
            let mut rng = trial_rng(34, trial);
            let scene = sample_scene(&mut rng, &params);
            let w0 = sensing_beam(cfg, &scene);
            let at_conj = steering_conj(cfg, scene.target.angle);
            for c in &scene.clutter {
                let aq_conj = steering_conj(cfg, c.angle);
                // |a'(theta_q) w0| vs the unprojected beam |a'(theta_q) a*(theta_0)| / sqrt(M)
                let with_proj: Complex64 = aq_conj
                    .iter()
                    .zip(w0.iter())
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                let without: Complex64 = aq_conj
                    .iter()
                    .zip(at_conj.iter())
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                let reference = without.norm() / 32f64.sqrt();
                assert!(
                    with_proj.norm() < reference + 1e-12,
                    "clutter response {} vs reference {reference}",
                    with_proj.norm()
                );
            }
        }
    }

    #[test]
    fn sensing_beam_keeps_target_gain_when_separated() {
        // transmit gain |a'(theta_0) w0|^2 within 3 dB of M at 10 deg separation
        let m = 64;
        let cfg = UlaConfig::new(m).unwrap();
        let params = ScenarioParams {
            min_separation_deg: 10.0,
            ..ScenarioParams::default()
        };
        for trial in 0..10u64 {
            let mut rng = trial_rng(35, trial);
            let scene = sample_scene(&mut rng, &params);
            let w0 = sensing_beam(cfg, &scene);
            let at_conj = steering_conj(cfg, scene.target.angle);
            let inner: Complex64 = at_conj
                .iter()
                .zip(w0.iter())
                .map(|(a, b)| a.conj() * b)
                .sum();
            let gain = inner.norm_sqr();
            assert!(
                gain > m as f64 / 2.0,
                "trial {trial}: gain {gain} below half of M = {m}"
            );
        }
    }
}
