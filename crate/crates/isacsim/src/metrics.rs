//! Closed-form performance metrics under hardware distortion: transmit
//! covariance, per-UE communication SINR, receiver-distortion level, receive
//! combiners, and the sensing SCNR chain from the general quadratic form down
//! to the large-array closed form.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::array::{steering, steering_conj, Angle, ArrayError, UlaConfig};
use crate::linalg::{CholeskyFactor, LinalgError};
use crate::scene::{echo_gain, Scene, SceneError, UserSet};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("hardware profile invalid: {0}")]
    InvalidProfile(String),
    #[error("design invalid: {0}")]
    InvalidDesign(String),
    #[error("operation requires {expected:?} power mode")]
    WrongMode { expected: PowerMode },
    #[error("user index {index} out of range for {num_users} users")]
    UserIndexOutOfRange { index: usize, num_users: usize },
    #[error("combining vector must be nonzero")]
    ZeroCombiner,
    #[error("combiner system requires positive noise-plus-distortion floor")]
    ZeroNoiseFloor,
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Array(#[from] ArrayError),
    #[error("linear solve failed: {0}")]
    Solve(#[from] LinalgError),
}

/// Impairment and power parameters of the transceiver chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardwareProfile {
    /// Transmit distortion factor `kappa_t >= 0`.
    pub kappa_t: f64,
    /// Receive distortion factor `kappa_r >= 0`.
    pub kappa_r: f64,
    /// Total transmit power in watts.
    pub rho_tot_w: f64,
    /// UE thermal noise variance in watts.
    pub sigma_nu_sq_w: f64,
    /// BS receiver thermal noise variance in watts.
    pub sigma_mu_sq_w: f64,
}

impl HardwareProfile {
    pub fn validate(&self) -> Result<(), MetricsError> {
        if !(self.kappa_t >= 0.0 && self.kappa_r >= 0.0) {
            return Err(MetricsError::InvalidProfile(
                "distortion factors must be nonnegative".into(),
            ));
        }
        if !(self.rho_tot_w > 0.0) {
            return Err(MetricsError::InvalidProfile(
                "total transmit power must be positive".into(),
            ));
        }
        if !(self.sigma_nu_sq_w >= 0.0 && self.sigma_mu_sq_w >= 0.0) {
            return Err(MetricsError::InvalidProfile(
                "noise variances must be nonnegative".into(),
            ));
        }
        Ok(())
    }

    /// The same power and noise figures with both distortion factors zeroed;
    /// what a distortion-unaware designer assumes.
    pub fn without_distortion(&self) -> Self {
        Self {
            kappa_t: 0.0,
            kappa_r: 0.0,
            ..*self
        }
    }
}

/// How transmit power is encoded in a [`TransmitDesign`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PowerMode {
    /// Columns of `[W, w0]` have unit norm; the power vector carries all power.
    UnitNorm,
    /// Power lives in the column norms with `trace(W Wᴴ) + ||w0||^2 <= 1`;
    /// the power vector is an all-ones placeholder.
    Absorbed,
}

const NORM_TOL: f64 = 1e-9;

/// Communication precoder, sensing beam, and power split.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransmitDesign {
    precoder: Array2<Complex64>,
    sensing_beam: Array1<Complex64>,
    /// K UE coefficients followed by the sensing coefficient.
    power: Vec<f64>,
    mode: PowerMode,
}

impl TransmitDesign {
    /// Unit-norm mode: every column of `[W, w0]` must have unit 2-norm and
    /// the coefficients must be nonnegative with sum at most one.
    pub fn unit_norm(
        precoder: Array2<Complex64>,
        sensing_beam: Array1<Complex64>,
        power: Vec<f64>,
    ) -> Result<Self, MetricsError> {
        let k = precoder.ncols();
        if sensing_beam.len() != precoder.nrows() {
            return Err(MetricsError::InvalidDesign(
                "sensing beam length must match precoder rows".into(),
            ));
        }
        if power.len() != k + 1 {
            return Err(MetricsError::InvalidDesign(format!(
                "expected {} power coefficients, got {}",
                k + 1,
                power.len()
            )));
        }
        for (i, p) in power.iter().enumerate() {
            if !(*p >= 0.0) {
                return Err(MetricsError::InvalidDesign(format!(
                    "power coefficient {i} is negative: {p}"
                )));
            }
        }
        let total: f64 = power.iter().sum();
        if total > 1.0 + NORM_TOL {
            return Err(MetricsError::InvalidDesign(format!(
                "power coefficients sum to {total} > 1"
            )));
        }
        for j in 0..k {
            let n: f64 = precoder.column(j).iter().map(|z| z.norm_sqr()).sum();
            if (n - 1.0).abs() > NORM_TOL {
                return Err(MetricsError::InvalidDesign(format!(
                    "precoder column {j} has squared norm {n}, expected 1"
                )));
            }
        }
        let n0: f64 = sensing_beam.iter().map(|z| z.norm_sqr()).sum();
        if (n0 - 1.0).abs() > NORM_TOL {
            return Err(MetricsError::InvalidDesign(format!(
                "sensing beam has squared norm {n0}, expected 1"
            )));
        }
        Ok(Self {
            precoder,
            sensing_beam,
            power,
            mode: PowerMode::UnitNorm,
        })
    }

    /// Absorbed mode: power lives in the columns, the coefficient vector is a
    /// placeholder of ones. A zero sensing beam encodes `rho_0 = 0`.
    pub fn absorbed(
        precoder: Array2<Complex64>,
        sensing_beam: Array1<Complex64>,
    ) -> Result<Self, MetricsError> {
        if sensing_beam.len() != precoder.nrows() {
            return Err(MetricsError::InvalidDesign(
                "sensing beam length must match precoder rows".into(),
            ));
        }
        let trace: f64 = precoder.iter().map(|z| z.norm_sqr()).sum::<f64>()
            + sensing_beam.iter().map(|z| z.norm_sqr()).sum::<f64>();
        if trace > 1.0 + NORM_TOL {
            return Err(MetricsError::InvalidDesign(format!(
                "absorbed design has total power {trace} > 1"
            )));
        }
        let k = precoder.ncols();
        Ok(Self {
            precoder,
            sensing_beam,
            power: vec![1.0; k + 1],
            mode: PowerMode::Absorbed,
        })
    }

    pub fn num_antennas(&self) -> usize {
        self.precoder.nrows()
    }

    pub fn num_users(&self) -> usize {
        self.precoder.ncols()
    }

    pub fn mode(&self) -> PowerMode {
        self.mode
    }

    pub fn precoder(&self) -> &Array2<Complex64> {
        &self.precoder
    }

    pub fn sensing_beam(&self) -> &Array1<Complex64> {
        &self.sensing_beam
    }

    /// UE coefficients followed by the sensing coefficient.
    pub fn power(&self) -> &[f64] {
        &self.power
    }

    /// Unused power budget: `1 - sum(rho)` in unit-norm mode, `1 - trace` in
    /// absorbed mode.
    pub fn power_slack(&self) -> f64 {
        match self.mode {
            PowerMode::UnitNorm => 1.0 - self.power.iter().sum::<f64>(),
            PowerMode::Absorbed => {
                1.0 - self.precoder.iter().map(|z| z.norm_sqr()).sum::<f64>()
                    - self.sensing_beam.iter().map(|z| z.norm_sqr()).sum::<f64>()
            }
        }
    }

    /// Columns of the power-scaled stack `W~ rho~`: `sqrt(rho_k) w_k` for the
    /// K UE beams followed by `sqrt(rho_0) w_0`.
    pub fn scaled_columns(&self) -> Vec<Array1<Complex64>> {
        let k = self.num_users();
        let mut cols = Vec::with_capacity(k + 1);
        for j in 0..k {
            let s = self.power[j].sqrt();
            cols.push(self.precoder.column(j).mapv(|z| z * s));
        }
        let s0 = self.power[k].sqrt();
        cols.push(self.sensing_beam.mapv(|z| z * s0));
        cols
    }

    /// The signal covariance `W~ rho~ rho~ᴴ W~ᴴ` (without the total power).
    pub fn signal_covariance(&self) -> Array2<Complex64> {
        let m = self.num_antennas();
        let mut x = Array2::<Complex64>::zeros((m, m));
        for col in self.scaled_columns() {
            for i in 0..m {
                for j in 0..m {
                    x[(i, j)] += col[i] * col[j].conj();
                }
            }
        }
        x
    }

    /// Directional transmit gain `M P(theta) = a'(theta) X a*(theta)`,
    /// evaluated without forming the covariance.
    pub fn directional_gain(&self, theta: Angle) -> f64 {
        let cfg = UlaConfig::new(self.num_antennas()).expect("design has antennas");
        let u = steering_conj(cfg, theta);
        self.scaled_columns()
            .iter()
            .map(|col| {
                let inner: Complex64 =
                    u.iter().zip(col.iter()).map(|(a, b)| a.conj() * b).sum();
                inner.norm_sqr()
            })
            .sum()
    }

    /// Refactor into unit-norm mode: column norms move into the coefficients.
    /// Zero columns become zero-power dummy beams.
    pub fn to_unit_norm(&self) -> TransmitDesign {
        if self.mode == PowerMode::UnitNorm {
            return self.clone();
        }
        let m = self.num_antennas();
        let k = self.num_users();
        let mut precoder = Array2::<Complex64>::zeros((m, k));
        let mut power = vec![0.0; k + 1];
        let unit_dummy = |m: usize| {
            let mut v = Array1::<Complex64>::zeros(m);
            v[0] = Complex64::new(1.0, 0.0);
            v
        };
        for j in 0..k {
            let col = self.precoder.column(j);
            let norm_sq: f64 = col.iter().map(|z| z.norm_sqr()).sum();
            if norm_sq > 0.0 {
                let inv = 1.0 / norm_sq.sqrt();
                precoder
                    .column_mut(j)
                    .assign(&col.mapv(|z| z * inv));
                power[j] = norm_sq;
            } else {
                precoder.column_mut(j).assign(&unit_dummy(m));
            }
        }
        let n0: f64 = self.sensing_beam.iter().map(|z| z.norm_sqr()).sum();
        let sensing_beam = if n0 > 0.0 {
            let inv = 1.0 / n0.sqrt();
            power[k] = n0;
            self.sensing_beam.mapv(|z| z * inv)
        } else {
            unit_dummy(m)
        };
        TransmitDesign {
            precoder,
            sensing_beam,
            power,
            mode: PowerMode::UnitNorm,
        }
    }
}

/// Echo angles and mean-square gains, target first.
#[derive(Debug, Clone)]
pub struct EchoComponents {
    pub angles: Vec<Angle>,
    pub gains: Vec<f64>,
}

pub fn echo_components(scene: &Scene) -> Result<EchoComponents, MetricsError> {
    scene.validate()?;
    let mut angles = Vec::with_capacity(scene.num_clutter() + 1);
    let mut gains = Vec::with_capacity(scene.num_clutter() + 1);
    angles.push(scene.target.angle);
    gains.push(echo_gain(&scene.target, scene.carrier_hz)?.mean_square);
    for c in &scene.clutter {
        angles.push(c.angle);
        gains.push(echo_gain(c, scene.carrier_hz)?.mean_square);
    }
    Ok(EchoComponents { angles, gains })
}

/// Per-echo noise powers `sigma_q^2 = abar_q^2 rho_tot (M P(theta_q) + kappa_t)`
/// for q = 0..Q (target first).
pub fn echo_noise_powers(
    scene: &Scene,
    design: &TransmitDesign,
    hw: &HardwareProfile,
) -> Result<Vec<f64>, MetricsError> {
    let echoes = echo_components(scene)?;
    Ok(echoes
        .angles
        .iter()
        .zip(echoes.gains.iter())
        .map(|(&theta, &gain)| {
            gain * hw.rho_tot_w * (design.directional_gain(theta) + hw.kappa_t)
        })
        .collect())
}

/// Effective receive noise floor
/// `sigma_bar_mu^2 = sigma_mu^2 + kappa_r sum_q sigma_q^2` (target included).
pub fn effective_noise_floor(
    scene: &Scene,
    design: &TransmitDesign,
    hw: &HardwareProfile,
) -> Result<f64, MetricsError> {
    let powers = echo_noise_powers(scene, design, hw)?;
    Ok(hw.sigma_mu_sq_w + hw.kappa_r * powers.iter().sum::<f64>())
}

/// Transmit covariance with distortion:
/// `E[x xᴴ] = rho_tot W~ rho~ rho~ᴴ W~ᴴ + kappa_t (rho_tot / M) I`.
pub fn transmit_covariance(
    design: &TransmitDesign,
    hw: &HardwareProfile,
) -> Result<Array2<Complex64>, MetricsError> {
    hw.validate()?;
    let m = design.num_antennas();
    let mut cov = design.signal_covariance();
    cov.mapv_inplace(|z| z * hw.rho_tot_w);
    let diag = hw.kappa_t * hw.rho_tot_w / m as f64;
    for i in 0..m {
        cov[(i, i)] += Complex64::new(diag, 0.0);
    }
    Ok(cov)
}

/// Diagonal level of the receiver distortion covariance
/// `R_r = kappa_r sum_{q=0}^{Q} abar_q^2 rho_tot (M P(theta_q) + kappa_t) I`.
pub fn receiver_distortion_cov(
    scene: &Scene,
    design: &TransmitDesign,
    hw: &HardwareProfile,
) -> Result<f64, MetricsError> {
    hw.validate()?;
    let powers = echo_noise_powers(scene, design, hw)?;
    Ok(hw.kappa_r * powers.iter().sum::<f64>())
}

/// Instantaneous communication SINR of one UE and its denominator terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommSinr {
    pub value: f64,
    /// Intended signal power `rho_k |h_kᴴ w_k|^2`.
    pub signal: f64,
    /// Multi-user interference `sum_{i != k} rho_i |h_kᴴ w_i|^2`.
    pub multiuser: f64,
    /// Sensing-stream interference `rho_0 |h_kᴴ w_0|^2`.
    pub sensing: f64,
    /// Transmit distortion `(kappa_t / M) ||h_k||^2`.
    pub distortion: f64,
    /// Normalized thermal noise `sigma_nu^2 / rho_tot`.
    pub noise: f64,
}

/// Instantaneous SINR of UE `k` for a unit-norm design.
pub fn comm_sinr(
    k: usize,
    users: &UserSet,
    design: &TransmitDesign,
    hw: &HardwareProfile,
) -> Result<CommSinr, MetricsError> {
    hw.validate()?;
    if design.mode() != PowerMode::UnitNorm {
        return Err(MetricsError::WrongMode {
            expected: PowerMode::UnitNorm,
        });
    }
    let num_users = users.num_users();
    if k >= num_users {
        return Err(MetricsError::UserIndexOutOfRange {
            index: k,
            num_users,
        });
    }
    if design.num_users() != num_users || design.num_antennas() != users.num_antennas() {
        return Err(MetricsError::InvalidDesign(
            "design dimensions do not match the user set".into(),
        ));
    }
    let m = design.num_antennas() as f64;
    let h = users.channel.column(k);
    let h_norm_sq: f64 = h.iter().map(|z| z.norm_sqr()).sum();
    let cross = |col: ndarray::ArrayView1<Complex64>| -> f64 {
        let inner: Complex64 = h.iter().zip(col.iter()).map(|(a, b)| a.conj() * b).sum();
        inner.norm_sqr()
    };
    let rho = design.power();
    let signal = rho[k] * cross(design.precoder().column(k));
    let mut multiuser = 0.0;
    for i in 0..num_users {
        if i != k {
            multiuser += rho[i] * cross(design.precoder().column(i));
        }
    }
    let sensing = rho[num_users] * cross(design.sensing_beam().view());
    let distortion = hw.kappa_t / m * h_norm_sq;
    let noise = hw.sigma_nu_sq_w / hw.rho_tot_w;
    let denom = multiuser + sensing + distortion + noise;
    Ok(CommSinr {
        value: signal / denom,
        signal,
        multiuser,
        sensing,
        distortion,
        noise,
    })
}

/// Receive combiner selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Combiner {
    ClutterAware,
    MatchedFilter,
}

/// Clutter-aware combiner
/// `omega = (sum_{q>=1} sigma_q^2 a(theta_q) aᴴ(theta_q) + sigma_bar_mu^2 I)^{-1} a(theta_0)`,
/// solved by Hermitian factorization.
pub fn clutter_aware_combiner(
    scene: &Scene,
    design: &TransmitDesign,
    hw: &HardwareProfile,
) -> Result<Array1<Complex64>, MetricsError> {
    let (factor, target_steer) = combiner_system(scene, design, hw)?;
    Ok(factor.solve_vec(&target_steer))
}

/// Receive combiner of the requested kind.
pub fn combiner(
    scene: &Scene,
    design: &TransmitDesign,
    hw: &HardwareProfile,
    kind: Combiner,
) -> Result<Array1<Complex64>, MetricsError> {
    match kind {
        Combiner::ClutterAware => clutter_aware_combiner(scene, design, hw),
        Combiner::MatchedFilter => {
            let cfg = UlaConfig::new(design.num_antennas())?;
            Ok(steering(cfg, scene.target.angle))
        }
    }
}

fn combiner_system(
    scene: &Scene,
    design: &TransmitDesign,
    hw: &HardwareProfile,
) -> Result<(CholeskyFactor, Array1<Complex64>), MetricsError> {
    hw.validate()?;
    let m = design.num_antennas();
    let cfg = UlaConfig::new(m)?;
    let echoes = echo_components(scene)?;
    let powers = echo_noise_powers(scene, design, hw)?;
    let floor = hw.sigma_mu_sq_w + hw.kappa_r * powers.iter().sum::<f64>();
    if !(floor > 0.0) {
        return Err(MetricsError::ZeroNoiseFloor);
    }
    let mut c = Array2::<Complex64>::zeros((m, m));
    for q in 1..echoes.angles.len() {
        let a = steering(cfg, echoes.angles[q]);
        let s = powers[q];
        for i in 0..m {
            for j in 0..m {
                c[(i, j)] += a[i] * a[j].conj() * s;
            }
        }
    }
    for i in 0..m {
        c[(i, i)] += Complex64::new(floor, 0.0);
    }
    let factor = CholeskyFactor::new(&c)?;
    Ok((factor, steering(cfg, scene.target.angle)))
}

/// Term-by-term SCNR decomposition for a given combiner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScnrBreakdown {
    /// Target echo power after combining.
    pub numerator: f64,
    /// Per-clutter interference terms `sigma_q^2 |omegaᴴ a(theta_q)|^2`.
    pub clutter_terms: Vec<f64>,
    /// Receiver distortion `kappa_r (sum_q sigma_q^2) ||omega||^2`.
    pub receiver_distortion: f64,
    /// Thermal noise `sigma_mu^2 ||omega||^2`.
    pub thermal: f64,
    pub value: f64,
}

/// General-form sensing SCNR for an arbitrary combining vector.
pub fn scnr_general(
    scene: &Scene,
    design: &TransmitDesign,
    hw: &HardwareProfile,
    omega: &Array1<Complex64>,
) -> Result<ScnrBreakdown, MetricsError> {
    hw.validate()?;
    let m = design.num_antennas();
    let cfg = UlaConfig::new(m)?;
    if omega.len() != m {
        return Err(MetricsError::InvalidDesign(
            "combiner length must match array size".into(),
        ));
    }
    let omega_norm_sq: f64 = omega.iter().map(|z| z.norm_sqr()).sum();
    if omega_norm_sq == 0.0 {
        return Err(MetricsError::ZeroCombiner);
    }
    let echoes = echo_components(scene)?;
    let powers = echo_noise_powers(scene, design, hw)?;
    let combine_gain = |theta: Angle| -> f64 {
        let a = steering(cfg, theta);
        let inner: Complex64 = omega.iter().zip(a.iter()).map(|(w, x)| w.conj() * x).sum();
        inner.norm_sqr()
    };
    let target_gain = design.directional_gain(echoes.angles[0]);
    let numerator =
        hw.rho_tot_w * echoes.gains[0] * target_gain * combine_gain(echoes.angles[0]);
    let clutter_terms: Vec<f64> = (1..echoes.angles.len())
        .map(|q| powers[q] * combine_gain(echoes.angles[q]))
        .collect();
    let receiver_distortion = hw.kappa_r * powers.iter().sum::<f64>() * omega_norm_sq;
    let thermal = hw.sigma_mu_sq_w * omega_norm_sq;
    let denom = clutter_terms.iter().sum::<f64>() + receiver_distortion + thermal;
    Ok(ScnrBreakdown {
        numerator,
        clutter_terms,
        receiver_distortion,
        thermal,
        value: numerator / denom,
    })
}

/// Exact SCNR under the clutter-aware combiner:
/// `sigma_0^2 aᴴ(theta_0) (A Sigma Aᴴ + sigma_bar_mu^2 I)^{-1} a(theta_0)`.
pub fn scnr_exact_clutter_aware(
    scene: &Scene,
    design: &TransmitDesign,
    hw: &HardwareProfile,
) -> Result<f64, MetricsError> {
    let (factor, target_steer) = combiner_system(scene, design, hw)?;
    let solved = factor.solve_vec(&target_steer);
    let quad: f64 = target_steer
        .iter()
        .zip(solved.iter())
        .map(|(a, y)| (a.conj() * y).re)
        .sum();
    let echoes = echo_components(scene)?;
    let sigma0_sq =
        echoes.gains[0] * hw.rho_tot_w * design.directional_gain(echoes.angles[0]);
    let value = sigma0_sq * quad;
    #[cfg(debug_assertions)]
    {
        let general = scnr_general(scene, design, hw, &solved)?;
        let rel = (general.value - value).abs() / value.abs().max(f64::MIN_POSITIVE);
        debug_assert!(
            rel < 1e-9,
            "general-form SCNR at the clutter-aware combiner deviates by {rel:e}"
        );
    }
    Ok(value)
}

/// Matrix-inversion-lemma rewrite of the exact clutter-aware SCNR:
/// `(sigma_0^2 / sbar) aᴴ (I - A (sbar Sigma^{-1} + AᴴA)^{-1} Aᴴ) a`.
pub fn scnr_mil_form(
    scene: &Scene,
    design: &TransmitDesign,
    hw: &HardwareProfile,
) -> Result<f64, MetricsError> {
    hw.validate()?;
    let m = design.num_antennas();
    let cfg = UlaConfig::new(m)?;
    let echoes = echo_components(scene)?;
    let powers = echo_noise_powers(scene, design, hw)?;
    let floor = hw.sigma_mu_sq_w + hw.kappa_r * powers.iter().sum::<f64>();
    if !(floor > 0.0) {
        return Err(MetricsError::ZeroNoiseFloor);
    }
    let sigma0_sq =
        echoes.gains[0] * hw.rho_tot_w * design.directional_gain(echoes.angles[0]);
    let target_steer = steering(cfg, echoes.angles[0]);
    // zero-power clutter columns contribute nothing and would break Sigma^{-1}
    let active: Vec<usize> = (1..echoes.angles.len())
        .filter(|&q| powers[q] > 0.0)
        .collect();
    if active.is_empty() {
        return Ok(sigma0_sq * m as f64 / floor);
    }
    let q_n = active.len();
    let mut cross = Array1::<Complex64>::zeros(q_n); // b = Aᴴ a(theta_0)
    let mut gram = Array2::<Complex64>::zeros((q_n, q_n)); // sbar Sigma^{-1} + AᴴA
    let steers: Vec<Array1<Complex64>> = active
        .iter()
        .map(|&q| steering(cfg, echoes.angles[q]))
        .collect();
    for (i, ai) in steers.iter().enumerate() {
        cross[i] = ai
            .iter()
            .zip(target_steer.iter())
            .map(|(x, y)| x.conj() * y)
            .sum();
        for (j, aj) in steers.iter().enumerate() {
            gram[(i, j)] = ai.iter().zip(aj.iter()).map(|(x, y)| x.conj() * y).sum();
        }
        gram[(i, i)] += Complex64::new(floor / powers[active[i]], 0.0);
    }
    let solved = CholeskyFactor::new(&gram)?.solve_vec(&cross);
    let correction: f64 = cross
        .iter()
        .zip(solved.iter())
        .map(|(b, y)| (b.conj() * y).re)
        .sum();
    Ok(sigma0_sq / floor * (m as f64 - correction))
}

/// Large-array approximation retaining the per-clutter correction terms:
/// `(sigma_0^2 / sbar) (M - sum_q sigma_q^2 |aᴴ(theta_0) a(theta_q)|^2 / (M sigma_q^2 + sbar))`.
pub fn scnr_large_m_approx(
    scene: &Scene,
    design: &TransmitDesign,
    hw: &HardwareProfile,
) -> Result<f64, MetricsError> {
    hw.validate()?;
    let m = design.num_antennas();
    let cfg = UlaConfig::new(m)?;
    let echoes = echo_components(scene)?;
    let powers = echo_noise_powers(scene, design, hw)?;
    let floor = hw.sigma_mu_sq_w + hw.kappa_r * powers.iter().sum::<f64>();
    if !(floor > 0.0) {
        return Err(MetricsError::ZeroNoiseFloor);
    }
    let sigma0_sq =
        echoes.gains[0] * hw.rho_tot_w * design.directional_gain(echoes.angles[0]);
    let target_steer = steering(cfg, echoes.angles[0]);
    let mut correction = 0.0;
    for q in 1..echoes.angles.len() {
        let a = steering(cfg, echoes.angles[q]);
        let inner: Complex64 = target_steer
            .iter()
            .zip(a.iter())
            .map(|(x, y)| x.conj() * y)
            .sum();
        correction += powers[q] * inner.norm_sqr() / (m as f64 * powers[q] + floor);
    }
    Ok(sigma0_sq / floor * (m as f64 - correction))
}

/// Final closed-form SCNR:
/// `M abar_0^2 rho_tot M P(theta_0) / (sigma_mu^2 + kappa_r sum_q rho_tot abar_q^2 (M P(theta_q) + kappa_t))`.
pub fn scnr_closed_form(
    scene: &Scene,
    design: &TransmitDesign,
    hw: &HardwareProfile,
) -> Result<f64, MetricsError> {
    hw.validate()?;
    let m = design.num_antennas() as f64;
    let echoes = echo_components(scene)?;
    let powers = echo_noise_powers(scene, design, hw)?;
    let floor = hw.sigma_mu_sq_w + hw.kappa_r * powers.iter().sum::<f64>();
    let sigma0_sq =
        echoes.gains[0] * hw.rho_tot_w * design.directional_gain(echoes.angles[0]);
    Ok(m * sigma0_sq / floor)
}

/// Sum spectral efficiency `sum_k log2(1 + SINR_k)` in bps/Hz.
pub fn sum_spectral_efficiency(
    users: &UserSet,
    design: &TransmitDesign,
    hw: &HardwareProfile,
) -> Result<f64, MetricsError> {
    let unit = design.to_unit_norm();
    let mut total = 0.0;
    for k in 0..users.num_users() {
        let sinr = comm_sinr(k, users, &unit, hw)?;
        total += (1.0 + sinr.value).log2();
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::steering_conj;
    use crate::scene::{sample_scene, sample_users, trial_rng, PointScatterer, ScenarioParams};
    use rand::Rng;

    fn hw(kappa_t: f64, kappa_r: f64) -> HardwareProfile {
        HardwareProfile {
            kappa_t,
            kappa_r,
            rho_tot_w: 10_000.0,
            sigma_nu_sq_w: 1e-12,
            sigma_mu_sq_w: 1e-12,
        }
    }

    fn unit_col(rng: &mut impl Rng, m: usize) -> Array1<Complex64> {
        let v: Array1<Complex64> = Array1::from_iter(
            (0..m).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)),
        );
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.mapv(|z| z / norm)
    }

    fn random_unit_design(rng: &mut impl Rng, m: usize, k: usize) -> TransmitDesign {
        let mut w = Array2::<Complex64>::zeros((m, k));
        for j in 0..k {
            w.column_mut(j).assign(&unit_col(rng, m));
        }
        let w0 = unit_col(rng, m);
        let mut rho: Vec<f64> = (0..=k).map(|_| rng.random::<f64>()).collect();
        let total: f64 = rho.iter().sum();
        for r in rho.iter_mut() {
            *r /= total; // full power budget
        }
        TransmitDesign::unit_norm(w, w0, rho).unwrap()
    }

    fn steered_scene(target_angle: f64, clutter_angles: &[f64]) -> Scene {
        Scene {
            target: PointScatterer {
                angle: Angle::from_radians(target_angle).unwrap(),
                distance_m: 450.0,
                rcs_power_m2: 1.0,
                delay_tag: 0,
            },
            clutter: clutter_angles
                .iter()
                .enumerate()
                .map(|(i, &a)| PointScatterer {
                    angle: Angle::from_radians(a).unwrap(),
                    distance_m: 40.0,
                    rcs_power_m2: 50.0,
                    delay_tag: (i + 1) as u32,
                })
                .collect(),
            carrier_hz: 28e9,
        }
    }

    #[test]
    fn transmit_covariance_rank_one_without_distortion() {
        let m = 6;
        let mut rng = trial_rng(1, 0);
        let w0 = unit_col(&mut rng, m);
        let design = TransmitDesign::unit_norm(
            Array2::zeros((m, 0)),
            w0.clone(),
            vec![1.0],
        )
        .unwrap();
        let profile = HardwareProfile { kappa_t: 0.0, ..hw(0.0, 0.0) };
        let cov = transmit_covariance(&design, &profile).unwrap();
        for i in 0..m {
            for j in 0..m {
                let expected = w0[i] * w0[j].conj() * profile.rho_tot_w;
                assert!((cov[(i, j)] - expected).norm() < 1e-9 * profile.rho_tot_w);
            }
        }
    }

    #[test]
    fn transmit_covariance_trace_includes_distortion() {
        let m = 8;
        let k = 3;
        let mut rng = trial_rng(2, 0);
        let design = random_unit_design(&mut rng, m, k);
        let profile = hw(0.01, 0.0);
        let cov = transmit_covariance(&design, &profile).unwrap();
        let trace: f64 = (0..m).map(|i| cov[(i, i)].re).sum();
        let signal_power: f64 = design.power().iter().sum();
        let expected = profile.rho_tot_w * signal_power + 0.01 * profile.rho_tot_w;
        assert!(
            (trace - expected).abs() < 1e-9 * expected,
            "trace {trace} vs {expected}"
        );
    }

    #[test]
    fn single_user_matched_beam_sinr() {
        let m = 16;
        let params = ScenarioParams {
            num_users: 1,
            ..ScenarioParams::default()
        };
        let cfg = UlaConfig::new(m).unwrap();
        let mut rng = trial_rng(3, 0);
        let users = sample_users(&mut rng, &params, cfg);
        let h = users.channel.column(0).to_owned();
        let h_norm_sq: f64 = h.iter().map(|z| z.norm_sqr()).sum();
        let w = h.mapv(|z| z / h_norm_sq.sqrt());
        let mut precoder = Array2::zeros((m, 1));
        precoder.column_mut(0).assign(&w);
        let w0 = {
            let mut v = Array1::<Complex64>::zeros(m);
            v[0] = Complex64::new(1.0, 0.0);
            v
        };
        let design =
            TransmitDesign::unit_norm(precoder, w0, vec![1.0, 0.0]).unwrap();
        let profile = hw(0.0, 0.0);
        let sinr = comm_sinr(0, &users, &design, &profile).unwrap();
        let expected = profile.rho_tot_w * h_norm_sq / profile.sigma_nu_sq_w;
        assert!(
            (sinr.value - expected).abs() < 1e-9 * expected,
            "sinr {} vs {expected}",
            sinr.value
        );
        assert_eq!(sinr.multiuser, 0.0);
        assert_eq!(sinr.sensing, 0.0);
        assert_eq!(sinr.distortion, 0.0);

        // adding transmit distortion only adds (kappa_t / M) ||h||^2 to the denominator
        let distorted = comm_sinr(0, &users, &design, &hw(0.01, 0.0)).unwrap();
        let expected_term = 0.01 / m as f64 * h_norm_sq;
        assert!((distorted.distortion - expected_term).abs() < 1e-15 * expected_term.max(1e-300));
        assert_eq!(distorted.signal, sinr.signal);
        assert_eq!(distorted.noise, sinr.noise);
    }

    #[test]
    fn mmse_reduction_has_no_distortion_terms() {
        let m = 8;
        let k = 4;
        let mut rng = trial_rng(4, 0);
        let params = ScenarioParams {
            num_users: k,
            ..ScenarioParams::default()
        };
        let users = sample_users(&mut rng, &params, UlaConfig::new(m).unwrap());
        let mut design = random_unit_design(&mut rng, m, k);
        // zero the sensing stream
        let mut rho = design.power().to_vec();
        rho[k] = 0.0;
        design = TransmitDesign::unit_norm(
            design.precoder().clone(),
            design.sensing_beam().clone(),
            rho,
        )
        .unwrap();
        let sinr = comm_sinr(1, &users, &design, &hw(0.0, 0.0)).unwrap();
        assert_eq!(sinr.distortion, 0.0);
        assert_eq!(sinr.sensing, 0.0);
        assert!(sinr.multiuser > 0.0);
        assert!(sinr.noise > 0.0);
    }

    #[test]
    fn receiver_distortion_zero_without_kappa_r() {
        let mut rng = trial_rng(5, 0);
        let scene = sample_scene(&mut rng, &ScenarioParams::default());
        let design = random_unit_design(&mut rng, 16, 4);
        let level = receiver_distortion_cov(&scene, &design, &hw(0.01, 0.0)).unwrap();
        assert_eq!(level, 0.0);
    }

    #[test]
    fn receiver_distortion_steered_substitution() {
        // Q = 0, all power in a sensing beam steered at the target:
        // level = kappa_r abar_0^2 rho_tot (M + kappa_t)
        let m = 32;
        let cfg = UlaConfig::new(m).unwrap();
        let scene = steered_scene(0.35, &[]);
        let w0 = steering_conj(cfg, scene.target.angle).mapv(|z| z / (m as f64).sqrt());
        let design = TransmitDesign::unit_norm(Array2::zeros((m, 0)), w0, vec![1.0]).unwrap();
        let profile = hw(0.01, 0.01);
        let level = receiver_distortion_cov(&scene, &design, &profile).unwrap();
        let gain = echo_gain(&scene.target, scene.carrier_hz).unwrap().mean_square;
        let expected = 0.01 * gain * profile.rho_tot_w * (m as f64 + 0.01);
        assert!(
            (level - expected).abs() < 1e-9 * expected,
            "level {level:e} vs {expected:e}"
        );
    }

    #[test]
    fn combiner_without_clutter_is_scaled_matched_filter() {
        let m = 16;
        let scene = steered_scene(-0.4, &[]);
        let mut rng = trial_rng(6, 0);
        let design = random_unit_design(&mut rng, m, 4);
        let profile = hw(0.01, 0.01);
        let omega = clutter_aware_combiner(&scene, &design, &profile).unwrap();
        let floor = effective_noise_floor(&scene, &design, &profile).unwrap();
        let a = steering(UlaConfig::new(m).unwrap(), scene.target.angle);
        for i in 0..m {
            let expected = a[i] / Complex64::new(floor, 0.0);
            assert!((omega[i] - expected).norm() < 1e-9 * expected.norm());
        }
    }

    #[test]
    fn combiner_satisfies_linear_system() {
        let m = 48;
        let scene = steered_scene(0.2, &[-0.6, 0.9, -1.1]);
        let mut rng = trial_rng(7, 0);
        let design = random_unit_design(&mut rng, m, 6);
        let profile = hw(0.01, 0.01);
        let omega = clutter_aware_combiner(&scene, &design, &profile).unwrap();
        // rebuild the system and check the residual
        let cfg = UlaConfig::new(m).unwrap();
        let powers = echo_noise_powers(&scene, &design, &profile).unwrap();
        let floor = effective_noise_floor(&scene, &design, &profile).unwrap();
        let mut c = Array2::<Complex64>::zeros((m, m));
        for (q, cl) in scene.clutter.iter().enumerate() {
            let a = steering(cfg, cl.angle);
            for i in 0..m {
                for j in 0..m {
                    c[(i, j)] += a[i] * a[j].conj() * powers[q + 1];
                }
            }
        }
        for i in 0..m {
            c[(i, i)] += Complex64::new(floor, 0.0);
        }
        let target = steering(cfg, scene.target.angle);
        let resid = &c.dot(&omega) - &target;
        let err: f64 = resid.iter().map(|z| z.norm()).fold(0.0, f64::max);
        // the system is scaled by the tiny noise floor, so compare relative to it
        let scale: f64 = target.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err < 1e-10 * m as f64 * scale, "residual {err:e}");
    }

    #[test]
    fn combiner_suppresses_strong_clutter() {
        let m = 32;
        let cfg = UlaConfig::new(m).unwrap();
        let scene = steered_scene(0.1, &[0.8]);
        let mut rng = trial_rng(8, 0);
        let design = random_unit_design(&mut rng, m, 4);
        let omega = clutter_aware_combiner(&scene, &design, &hw(0.01, 0.01)).unwrap();
        let a_c = steering(cfg, scene.clutter[0].angle);
        let a_t = steering(cfg, scene.target.angle);
        let inner = |x: &Array1<Complex64>, y: &Array1<Complex64>| -> f64 {
            let s: Complex64 = x.iter().zip(y.iter()).map(|(a, b)| a.conj() * b).sum();
            s.norm()
        };
        // normalize both responses by their target gain before comparing
        let ratio = (inner(&omega, &a_c) / inner(&omega, &a_t))
            / (inner(&a_t, &a_c) / (m as f64));
        assert!(ratio < 1.0, "clutter response ratio {ratio}");
    }

    #[test]
    fn scnr_general_zero_without_target_illumination() {
        let m = 12;
        let cfg = UlaConfig::new(m).unwrap();
        let scene = steered_scene(0.4, &[-0.3]);
        let u = steering_conj(cfg, scene.target.angle);
        let mut rng = trial_rng(9, 0);
        // project random columns onto the orthogonal complement of a*(theta_0)
        let k = 3;
        let mut w = Array2::<Complex64>::zeros((m, k));
        for j in 0..k {
            let v = unit_col(&mut rng, m);
            let coeff: Complex64 = u.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
            let mut proj = v.clone();
            for i in 0..m {
                proj[i] -= u[i] * coeff / Complex64::new(m as f64, 0.0);
            }
            let norm: f64 = proj.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            w.column_mut(j).assign(&proj.mapv(|z| z / norm));
        }
        let w0 = {
            let mut v = Array1::<Complex64>::zeros(m);
            v[0] = Complex64::new(1.0, 0.0);
            v
        };
        let design = TransmitDesign::unit_norm(w, w0, vec![0.3, 0.3, 0.4, 0.0]).unwrap();
        let omega = steering(cfg, scene.target.angle);
        let bd = scnr_general(&scene, &design, &hw(0.0, 0.01), &omega).unwrap();
        assert!(
            bd.value.abs() < 1e-20,
            "expected vanishing SCNR, got {}",
            bd.value
        );
    }

    #[test]
    fn scnr_general_single_beam_reference_value() {
        // Q = 0, ideal hardware, matched combiner, full-power steered beam:
        // value = rho_tot abar_0^2 M^2 / sigma_mu^2
        let m = 24;
        let cfg = UlaConfig::new(m).unwrap();
        let scene = steered_scene(-0.25, &[]);
        let w0 = steering_conj(cfg, scene.target.angle).mapv(|z| z / (m as f64).sqrt());
        let design = TransmitDesign::unit_norm(Array2::zeros((m, 0)), w0, vec![1.0]).unwrap();
        let profile = hw(0.0, 0.0);
        let omega = steering(cfg, scene.target.angle);
        let bd = scnr_general(&scene, &design, &profile, &omega).unwrap();
        let gain = echo_gain(&scene.target, scene.carrier_hz).unwrap().mean_square;
        let expected =
            profile.rho_tot_w * gain * (m as f64).powi(2) / profile.sigma_mu_sq_w;
        assert!(
            (bd.value - expected).abs() < 1e-9 * expected,
            "value {:e} vs {expected:e}",
            bd.value
        );
    }

    #[test]
    fn scnr_decreases_with_clutter_power() {
        let mut rng = trial_rng(10, 0);
        let scene = steered_scene(0.3, &[-0.5, 0.9]);
        let design = random_unit_design(&mut rng, 16, 4);
        let profile = hw(0.01, 0.01);
        let omega = clutter_aware_combiner(&scene, &design, &profile).unwrap();
        let base = scnr_general(&scene, &design, &profile, &omega).unwrap().value;
        let mut louder = scene.clone();
        for c in louder.clutter.iter_mut() {
            c.rcs_power_m2 *= 10.0;
        }
        let worse = scnr_general(&louder, &design, &profile, &omega).unwrap().value;
        assert!(worse < base, "{worse} !< {base}");
    }

    #[test]
    fn exact_scnr_matches_general_and_mil_forms() {
        let params = ScenarioParams::default();
        for trial in 0..20u64 {
            let mut rng = trial_rng(11, trial);
            let m = *[8usize, 16, 33, 64].get((trial % 4) as usize).unwrap();
            let q = (trial % 6) as usize;
            let scene = {
                let mut s = sample_scene(&mut rng, &params);
                s.clutter.truncate(q);
                s
            };
            let design = random_unit_design(&mut rng, m, 4);
            let profile = hw(0.01, 0.01);
            let exact = scnr_exact_clutter_aware(&scene, &design, &profile).unwrap();
            let omega = clutter_aware_combiner(&scene, &design, &profile).unwrap();
            let general = scnr_general(&scene, &design, &profile, &omega).unwrap().value;
            let mil = scnr_mil_form(&scene, &design, &profile).unwrap();
            assert!((general - exact).abs() < 1e-9 * exact, "general {general} exact {exact}");
            assert!((mil - exact).abs() < 1e-10 * exact, "mil {mil} exact {exact}");
        }
    }

    #[test]
    fn matched_filter_never_beats_clutter_aware() {
        let params = ScenarioParams::default();
        for trial in 0..20u64 {
            let mut rng = trial_rng(12, trial);
            let scene = sample_scene(&mut rng, &params);
            let design = random_unit_design(&mut rng, 24, 6);
            let profile = hw(0.01, 0.01);
            let aware = scnr_exact_clutter_aware(&scene, &design, &profile).unwrap();
            let mf = combiner(&scene, &design, &profile, Combiner::MatchedFilter).unwrap();
            let matched = scnr_general(&scene, &design, &profile, &mf).unwrap().value;
            assert!(
                matched <= aware * (1.0 + 1e-12),
                "matched {matched} > aware {aware}"
            );
        }
    }

    #[test]
    fn closed_form_without_receive_distortion() {
        let m = 20;
        let mut rng = trial_rng(13, 0);
        let scene = steered_scene(0.15, &[0.6, -0.8]);
        let design = random_unit_design(&mut rng, m, 4);
        let profile = hw(0.02, 0.0);
        let value = scnr_closed_form(&scene, &design, &profile).unwrap();
        let gain = echo_gain(&scene.target, scene.carrier_hz).unwrap().mean_square;
        let p0 = design.directional_gain(scene.target.angle) / m as f64;
        let expected =
            (m as f64).powi(2) * gain * profile.rho_tot_w * p0 / profile.sigma_mu_sq_w;
        assert!((value - expected).abs() < 1e-9 * expected);
    }

    #[test]
    fn closed_form_saturates_in_total_power() {
        let mut rng = trial_rng(14, 0);
        let scene = steered_scene(0.3, &[-0.2, 1.0]);
        let design = random_unit_design(&mut rng, 16, 4);
        let p1 = hw(0.01, 0.01);
        let mut p2 = p1;
        p2.rho_tot_w *= 2.0;
        let v1 = scnr_closed_form(&scene, &design, &p1).unwrap();
        let v2 = scnr_closed_form(&scene, &design, &p2).unwrap();
        assert!(v2 > v1, "doubling power must help");
        assert!(v2 < 2.0 * v1, "growth must be sublinear under kappa_r > 0");
        // limit value: M abar_0^2 M P0 / (kappa_r sum_q abar_q^2 (M P_q + kappa_t))
        let m = 16f64;
        let echoes = echo_components(&scene).unwrap();
        let mut denom = 0.0;
        for (q, g) in echoes.gains.iter().enumerate() {
            denom += 0.01 * g * (design.directional_gain(echoes.angles[q]) + 0.01);
        }
        let limit = m * echoes.gains[0] * design.directional_gain(echoes.angles[0]) / denom;
        let mut phuge = p1;
        phuge.rho_tot_w = 1e12;
        let vhuge = scnr_closed_form(&scene, &design, &phuge).unwrap();
        assert!((vhuge - limit).abs() < 1e-3 * limit, "vhuge {vhuge} limit {limit}");
    }

    #[test]
    fn closed_forms_ignore_column_phase() {
        let mut rng = trial_rng(15, 0);
        let scene = steered_scene(-0.1, &[0.5]);
        let design = random_unit_design(&mut rng, 12, 3);
        let profile = hw(0.01, 0.01);
        let base = scnr_closed_form(&scene, &design, &profile).unwrap();
        let exact = scnr_exact_clutter_aware(&scene, &design, &profile).unwrap();
        let mut rotated_precoder = design.precoder().clone();
        let phase = Complex64::from_polar(1.0, 1.2345);
        for i in 0..12 {
            rotated_precoder[(i, 1)] *= phase;
        }
        let rotated = TransmitDesign::unit_norm(
            rotated_precoder,
            design.sensing_beam().clone(),
            design.power().to_vec(),
        )
        .unwrap();
        let after = scnr_closed_form(&scene, &rotated, &profile).unwrap();
        let after_exact = scnr_exact_clutter_aware(&scene, &rotated, &profile).unwrap();
        assert!((base - after).abs() < 1e-12 * base);
        assert!((exact - after_exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn zero_precoder_gives_zero_sum_se() {
        let m = 8;
        let k = 4;
        let params = ScenarioParams {
            num_users: k,
            ..ScenarioParams::default()
        };
        let mut rng = trial_rng(16, 0);
        let users = sample_users(&mut rng, &params, UlaConfig::new(m).unwrap());
        let design =
            TransmitDesign::absorbed(Array2::zeros((m, k)), Array1::zeros(m)).unwrap();
        let se = sum_spectral_efficiency(&users, &design, &hw(0.01, 0.01)).unwrap();
        assert_eq!(se, 0.0);
    }

    #[test]
    fn sum_se_matches_per_user_recomputation() {
        let m = 16;
        let k = 5;
        let params = ScenarioParams {
            num_users: k,
            ..ScenarioParams::default()
        };
        let mut rng = trial_rng(17, 0);
        let users = sample_users(&mut rng, &params, UlaConfig::new(m).unwrap());
        let design = random_unit_design(&mut rng, m, k);
        let profile = hw(0.01, 0.01);
        let se = sum_spectral_efficiency(&users, &design, &profile).unwrap();
        let manual: f64 = (0..k)
            .map(|i| {
                let s = comm_sinr(i, &users, &design, &profile).unwrap();
                (1.0 + s.value).log2()
            })
            .sum();
        assert!((se - manual).abs() < 1e-12 * manual.max(1.0));
    }

    #[test]
    fn absorbed_round_trip_preserves_metrics() {
        let m = 10;
        let k = 3;
        let mut rng = trial_rng(18, 0);
        let mut w = Array2::<Complex64>::zeros((m, k));
        for j in 0..k {
            let c = unit_col(&mut rng, m).mapv(|z| z * Complex64::new(0.4, 0.0));
            w.column_mut(j).assign(&c);
        }
        let design = TransmitDesign::absorbed(w, Array1::zeros(m)).unwrap();
        let unit = design.to_unit_norm();
        let scene = steered_scene(0.2, &[0.7]);
        let profile = hw(0.01, 0.01);
        let a = scnr_closed_form(&scene, &design, &profile).unwrap();
        let b = scnr_closed_form(&scene, &unit, &profile).unwrap();
        assert!((a - b).abs() < 1e-12 * a);
        assert!((design.power_slack() - unit.power_slack()).abs() < 1e-12);
    }

    #[test]
    fn unit_norm_constructor_rejects_bad_inputs() {
        let m = 4;
        let mut rng = trial_rng(19, 0);
        let w0 = unit_col(&mut rng, m);
        // over-budget power
        assert!(TransmitDesign::unit_norm(
            Array2::zeros((m, 0)),
            w0.clone(),
            vec![1.5],
        )
        .is_err());
        // non-unit column
        let mut w = Array2::<Complex64>::zeros((m, 1));
        w[(0, 0)] = Complex64::new(0.5, 0.0);
        assert!(TransmitDesign::unit_norm(w, w0, vec![0.5, 0.0]).is_err());
    }

    #[test]
    fn comm_sinr_rejects_out_of_range_user() {
        let m = 8;
        let k = 2;
        let params = ScenarioParams {
            num_users: k,
            ..ScenarioParams::default()
        };
        let mut rng = trial_rng(20, 0);
        let users = sample_users(&mut rng, &params, UlaConfig::new(m).unwrap());
        let design = random_unit_design(&mut rng, m, k);
        assert!(matches!(
            comm_sinr(2, &users, &design, &hw(0.0, 0.0)),
            Err(MetricsError::UserIndexOutOfRange { .. })
        ));
    }
}
