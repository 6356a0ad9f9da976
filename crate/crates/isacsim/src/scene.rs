//! Random scenario generation: target and clutter placement with
//! radar-equation pathlosses, UE placement with local-scattering spatial
//! covariances, and correlated Rayleigh channel realizations.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};
use thiserror::Error;

use crate::array::{Angle, UlaConfig};
use crate::linalg::CholeskyFactor;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("distance must be positive, got {0}")]
    NonPositiveDistance(f64),
    #[error("carrier frequency must be positive, got {0}")]
    NonPositiveFrequency(f64),
    #[error("RCS power must be positive, got {0}")]
    NonPositiveRcs(f64),
    #[error("target delay tag must be 0, got {0}")]
    BadTargetTag(u32),
    #[error("delay tags must be distinct across scatterers")]
    DuplicateDelayTag,
}

/// A point scatterer: the sensing target or one clutter source.
///
/// `delay_tag` only labels the echo as belonging to a distinct delay bin;
/// echoes with different tags are mutually uncorrelated. No sample-level
/// delay arithmetic is performed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointScatterer {
    pub angle: Angle,
    pub distance_m: f64,
    pub rcs_power_m2: f64,
    pub delay_tag: u32,
}

impl PointScatterer {
    pub fn validate(&self) -> Result<(), SceneError> {
        if self.distance_m <= 0.0 {
            return Err(SceneError::NonPositiveDistance(self.distance_m));
        }
        if self.rcs_power_m2 <= 0.0 {
            return Err(SceneError::NonPositiveRcs(self.rcs_power_m2));
        }
        Ok(())
    }
}

/// Sensing environment: one target plus `Q` clutter scatterers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scene {
    pub target: PointScatterer,
    pub clutter: Vec<PointScatterer>,
    pub carrier_hz: f64,
}

impl Scene {
    pub fn validate(&self) -> Result<(), SceneError> {
        if self.carrier_hz <= 0.0 {
            return Err(SceneError::NonPositiveFrequency(self.carrier_hz));
        }
        if self.target.delay_tag != 0 {
            return Err(SceneError::BadTargetTag(self.target.delay_tag));
        }
        self.target.validate()?;
        let mut tags = vec![0u32];
        for c in &self.clutter {
            c.validate()?;
            if tags.contains(&c.delay_tag) {
                return Err(SceneError::DuplicateDelayTag);
            }
            tags.push(c.delay_tag);
        }
        Ok(())
    }

    pub fn num_clutter(&self) -> usize {
        self.clutter.len()
    }
}

/// Mean-square echo gain of one scatterer: two-way pathloss times RCS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EchoGain {
    pub mean_square: f64,
}

/// Downlink users: geometry, spatial covariances, one Rayleigh realization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UserSet {
    pub angles: Vec<Angle>,
    pub distances_m: Vec<f64>,
    /// Per-UE spatial covariance `R_k` (M x M Hermitian PSD).
    pub covariances: Vec<Array2<Complex64>>,
    /// Channel realization `H` (M x K, column k is `h_k`).
    pub channel: Array2<Complex64>,
    pub noise_variance_w: f64,
}

impl UserSet {
    pub fn num_users(&self) -> usize {
        self.channel.ncols()
    }

    pub fn num_antennas(&self) -> usize {
        self.channel.nrows()
    }
}

/// Two-way radar-equation power gain `c^2 / ((4 pi)^3 f^2 d^4)`.
pub fn radar_pathloss(distance_m: f64, carrier_hz: f64) -> Result<f64, SceneError> {
    if distance_m <= 0.0 {
        return Err(SceneError::NonPositiveDistance(distance_m));
    }
    if carrier_hz <= 0.0 {
        return Err(SceneError::NonPositiveFrequency(carrier_hz));
    }
    let four_pi_cubed = (4.0 * PI).powi(3);
    Ok(SPEED_OF_LIGHT * SPEED_OF_LIGHT
        / (four_pi_cubed * carrier_hz * carrier_hz * distance_m.powi(4)))
}

/// One-way free-space power gain `(c / (4 pi f d))^2`, used for UE pathloss.
pub fn free_space_gain(distance_m: f64, carrier_hz: f64) -> f64 {
    let x = SPEED_OF_LIGHT / (4.0 * PI * carrier_hz * distance_m);
    x * x
}

/// Mean-square echo gain of a scatterer at the given carrier.
pub fn echo_gain(s: &PointScatterer, carrier_hz: f64) -> Result<EchoGain, SceneError> {
    s.validate()?;
    let pathloss = radar_pathloss(s.distance_m, carrier_hz)?;
    Ok(EchoGain {
        mean_square: pathloss * s.rcs_power_m2,
    })
}

/// Gaussian local-scattering covariance around nominal angle `phi`:
/// `[R]_{m,l} = gain * exp(j pi (m-l) sin phi) * exp(-(s pi (m-l) cos phi)^2 / 2)`
/// with `s` the angular spread in radians. Hermitian by construction; PSD up
/// to roundoff for the spreads used here.
pub fn local_scattering_covariance(
    cfg: UlaConfig,
    phi: Angle,
    spread_deg: f64,
    gain: f64,
) -> Array2<Complex64> {
    let m = cfg.num_antennas();
    let spread = spread_deg.to_radians();
    let sin_phi = phi.radians().sin();
    let cos_phi = phi.radians().cos();
    let mut r = Array2::<Complex64>::zeros((m, m));
    for row in 0..m {
        for col in 0..m {
            let delta = row as f64 - col as f64;
            let phase = PI * delta * sin_phi;
            let damp = (-(spread * PI * delta * cos_phi).powi(2) / 2.0).exp();
            r[(row, col)] = Complex64::from_polar(gain * damp, phase);
        }
    }
    r
}

/// Scenario distributions: ranges follow the defaults unless overridden.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub num_users: usize,
    pub num_clutter: usize,
    pub carrier_hz: f64,
    pub cell_radius_m: f64,
    pub target_range_m: (f64, f64),
    pub clutter_range_m: (f64, f64),
    pub clutter_rcs_db: (f64, f64),
    pub target_rcs_m2: f64,
    pub angular_spread_deg: f64,
    /// Minimum angular separation between the target and every clutter source.
    pub min_separation_deg: f64,
    pub noise_variance_w: f64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            num_users: 8,
            num_clutter: 5,
            carrier_hz: 28e9,
            cell_radius_m: 1000.0,
            target_range_m: (400.0, 500.0),
            clutter_range_m: (20.0, 100.0),
            clutter_rcs_db: (10.0, 20.0),
            target_rcs_m2: 1.0,
            angular_spread_deg: 5.0,
            min_separation_deg: 5.0,
            noise_variance_w: 1e-12,
        }
    }
}

/// Seedable counter-based generator; one independent stream per trial index.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn uniform_angle(rng: &mut impl Rng) -> Angle {
    let v = rng.random_range(-FRAC_PI_2..=FRAC_PI_2);
    Angle::from_radians(v).expect("sampled inside sector")
}

fn uniform_in(rng: &mut impl Rng, range: (f64, f64)) -> f64 {
    if range.0 == range.1 {
        return range.0;
    }
    rng.random_range(range.0..range.1)
}

/// Angular distance with the two endfire directions identified. The
/// half-wavelength ULA responds identically at +90 and -90 degrees, so a
/// separation rule in plain angle would let clutter alias onto the target
/// near endfire.
pub fn steering_angle_distance(a: Angle, b: Angle) -> f64 {
    let direct = (a.radians() - b.radians()).abs();
    direct.min(PI - direct)
}

/// Sample the sensing environment. Target angle uniform over the sector;
/// clutter angles resampled until pairwise separated from the target and
/// from each other (the angular-separation regime of the SCNR chain);
/// clutter RCS uniform in dB relative to 1 m^2.
pub fn sample_scene(rng: &mut impl Rng, params: &ScenarioParams) -> Scene {
    let target_angle = uniform_angle(rng);
    let target = PointScatterer {
        angle: target_angle,
        distance_m: uniform_in(rng, params.target_range_m),
        rcs_power_m2: params.target_rcs_m2,
        delay_tag: 0,
    };
    let min_sep = params.min_separation_deg.to_radians();
    let mut placed = vec![target_angle];
    let mut clutter = Vec::with_capacity(params.num_clutter);
    for q in 0..params.num_clutter {
        let angle = loop {
            let cand = uniform_angle(rng);
            if placed
                .iter()
                .all(|&a| steering_angle_distance(cand, a) >= min_sep)
            {
                break cand;
            }
        };
        placed.push(angle);
        let rcs_db = uniform_in(rng, params.clutter_rcs_db);
        clutter.push(PointScatterer {
            angle,
            distance_m: uniform_in(rng, params.clutter_range_m),
            rcs_power_m2: 10f64.powf(rcs_db / 10.0),
            delay_tag: (q + 1) as u32,
        });
    }
    Scene {
        target,
        clutter,
        carrier_hz: params.carrier_hz,
    }
}

/// Sample the UE population: area-uniform placement over the cell disc,
/// local-scattering covariances, and one correlated Rayleigh realization.
pub fn sample_users(rng: &mut impl Rng, params: &ScenarioParams, cfg: UlaConfig) -> UserSet {
    let m = cfg.num_antennas();
    let k = params.num_users;
    let mut angles = Vec::with_capacity(k);
    let mut distances = Vec::with_capacity(k);
    let mut covariances = Vec::with_capacity(k);
    let mut channel = Array2::<Complex64>::zeros((m, k));
    for col in 0..k {
        let angle = uniform_angle(rng);
        let u: f64 = loop {
            let v = rng.random::<f64>();
            if v > 0.0 {
                break v;
            }
        };
        let distance = params.cell_radius_m * u.sqrt();
        let gain = free_space_gain(distance, params.carrier_hz);
        let cov = local_scattering_covariance(cfg, angle, params.angular_spread_deg, gain);
        let h = sample_correlated_channel(rng, &cov, gain);
        channel.column_mut(col).assign(&h);
        angles.push(angle);
        distances.push(distance);
        covariances.push(cov);
    }
    UserSet {
        angles,
        distances_m: distances,
        covariances,
        channel,
        noise_variance_w: params.noise_variance_w,
    }
}

/// Draw `h ~ CN(0, R)` via a jittered Cholesky square root. The jitter is
/// 1e-12 of the diagonal scale, far below every statistical test tolerance,
/// and keeps the factorization alive when R is numerically rank-deficient.
fn sample_correlated_channel(
    rng: &mut impl Rng,
    cov: &Array2<Complex64>,
    diag_scale: f64,
) -> Array1<Complex64> {
    let m = cov.nrows();
    let mut shifted = cov.clone();
    let jitter = 1e-12 * diag_scale.max(f64::MIN_POSITIVE);
    for i in 0..m {
        shifted[(i, i)] += Complex64::new(jitter, 0.0);
    }
    let factor = CholeskyFactor::new(&shifted)
        .expect("jittered covariance is positive definite");
    let normal = StandardNormal;
    let g: Array1<Complex64> = Array1::from_iter((0..m).map(|_| {
        let re: f64 = normal.sample(rng);
        let im: f64 = normal.sample(rng);
        Complex64::new(re, im) / Complex64::new(2f64.sqrt(), 0.0)
    }));
    // h = L g has covariance L Lᴴ = R (+ jitter)
    let l = factor.lower();
    let mut h = Array1::<Complex64>::zeros(m);
    for i in 0..m {
        let mut sum = Complex64::new(0.0, 0.0);
        for j in 0..=i {
            sum += l[(i, j)] * g[j];
        }
        h[i] = sum;
    }
    h
}
