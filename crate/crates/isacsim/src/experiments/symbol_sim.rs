//! Symbol-level Monte Carlo simulation of the distortion model. Signals are
//! composed sample by sample from Gaussian symbols and distortion draws,
//! independently of every closed-form expression they are checked against.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::array::{steering, UlaConfig};
use crate::metrics::{HardwareProfile, TransmitDesign};
use crate::scene::{echo_gain, Scene};

fn circular_gaussian(rng: &mut impl Rng) -> Complex64 {
    let normal = StandardNormal;
    let re: f64 = normal.sample(rng);
    let im: f64 = normal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// One transmitted sample `x[n]`: precoded symbols, the sensing stream, and
/// the isotropic transmit distortion.
fn transmit_sample(
    scaled_columns: &[Array1<Complex64>],
    distortion_std: f64,
    sqrt_rho_tot: f64,
    rng: &mut impl Rng,
) -> Array1<Complex64> {
    let m = scaled_columns[0].len();
    let mut x = Array1::<Complex64>::zeros(m);
    for col in scaled_columns {
        let symbol = circular_gaussian(rng) * sqrt_rho_tot;
        for i in 0..m {
            x[i] += col[i] * symbol;
        }
    }
    for i in 0..m {
        x[i] += circular_gaussian(rng) * distortion_std;
    }
    x
}

/// Empirical transmit covariance over `samples` draws.
pub fn empirical_transmit_covariance(
    design: &TransmitDesign,
    hw: &HardwareProfile,
    samples: usize,
    rng: &mut impl Rng,
) -> Array2<Complex64> {
    let m = design.num_antennas();
    let cols = design.scaled_columns();
    let distortion_std = (hw.kappa_t * hw.rho_tot_w / m as f64).sqrt();
    let sqrt_rho = hw.rho_tot_w.sqrt();
    let mut acc = Array2::<Complex64>::zeros((m, m));
    for _ in 0..samples {
        let x = transmit_sample(&cols, distortion_std, sqrt_rho, rng);
        for i in 0..m {
            for j in 0..m {
                acc[(i, j)] += x[i] * x[j].conj();
            }
        }
    }
    acc.mapv(|z| z / samples as f64)
}

/// Empirical per-term received powers at one UE, normalized by the total
/// transmit power so they compare directly with the SINR decomposition.
#[derive(Debug, Clone, Copy)]
pub struct EmpiricalCommPowers {
    pub signal: f64,
    pub multiuser: f64,
    pub sensing: f64,
    pub distortion: f64,
}

pub fn empirical_comm_powers(
    user: usize,
    channel: ndarray::ArrayView1<Complex64>,
    design: &TransmitDesign,
    hw: &HardwareProfile,
    samples: usize,
    rng: &mut impl Rng,
) -> EmpiricalCommPowers {
    let m = design.num_antennas() as f64;
    let k = design.num_users();
    let rho = design.power();
    // received amplitude of each stream is fixed by the channel inner product
    let inner = |col: ndarray::ArrayView1<Complex64>| -> Complex64 {
        channel
            .iter()
            .zip(col.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    };
    let gains: Vec<Complex64> = (0..k)
        .map(|i| inner(design.precoder().column(i)) * rho[i].sqrt())
        .collect();
    let sensing_gain = inner(design.sensing_beam().view()) * rho[k].sqrt();
    let distortion_std = (hw.kappa_t * hw.rho_tot_w / m).sqrt();
    let mut signal = 0.0;
    let mut multiuser = 0.0;
    let mut sensing = 0.0;
    let mut distortion = 0.0;
    for _ in 0..samples {
        let mut mu = Complex64::new(0.0, 0.0);
        for (i, g) in gains.iter().enumerate() {
            let s = circular_gaussian(rng);
            if i == user {
                signal += (g * s).norm_sqr();
            } else {
                mu += g * s;
            }
        }
        multiuser += mu.norm_sqr();
        sensing += (sensing_gain * circular_gaussian(rng)).norm_sqr();
        // h_kᴴ eta_t with isotropic distortion
        let eta: Complex64 = channel
            .iter()
            .map(|h| h.conj() * circular_gaussian(rng) * distortion_std)
            .sum();
        distortion += eta.norm_sqr();
    }
    let n = samples as f64;
    // normalize by rho_tot to match the SINR term convention
    EmpiricalCommPowers {
        signal: signal / n,
        multiuser: multiuser / n,
        sensing: sensing / n,
        distortion: distortion / (n * hw.rho_tot_w),
    }
}

/// Empirical receiver-distortion diagonal level: the echo superposition is
/// simulated with an independent transmit stream per delay tag, and the
/// distortion level is `kappa_r` times the mean received power per antenna.
pub fn empirical_receiver_distortion_diag(
    scene: &Scene,
    design: &TransmitDesign,
    hw: &HardwareProfile,
    samples: usize,
    rng: &mut impl Rng,
) -> f64 {
    let m = design.num_antennas();
    let cfg = UlaConfig::new(m).expect("design has antennas");
    let cols = design.scaled_columns();
    let distortion_std = (hw.kappa_t * hw.rho_tot_w / m as f64).sqrt();
    let sqrt_rho = hw.rho_tot_w.sqrt();
    let mut echoes = Vec::new();
    echoes.push((
        steering(cfg, scene.target.angle),
        echo_gain(&scene.target, scene.carrier_hz)
            .expect("valid target")
            .mean_square
            .sqrt(),
    ));
    for c in &scene.clutter {
        echoes.push((
            steering(cfg, c.angle),
            echo_gain(c, scene.carrier_hz)
                .expect("valid clutter")
                .mean_square
                .sqrt(),
        ));
    }
    let mut acc = 0.0;
    for _ in 0..samples {
        let mut z = Array1::<Complex64>::zeros(m);
        for (steer, amp) in &echoes {
            // distinct delay tags see independent symbol streams
            let x = transmit_sample(&cols, distortion_std, sqrt_rho, rng);
            let projected: Complex64 = steer.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
            let alpha = Complex64::from_polar(*amp, rng.random_range(0.0..std::f64::consts::TAU));
            for i in 0..m {
                z[i] += steer[i] * projected * alpha;
            }
        }
        acc += z.iter().map(|v| v.norm_sqr()).sum::<f64>();
    }
    hw.kappa_r * acc / (samples as f64 * m as f64)
}
