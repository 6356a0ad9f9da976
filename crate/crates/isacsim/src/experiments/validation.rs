//! Cross-module validation: algebraic identity suites, approximation
//! accuracy, Monte Carlo oracles of the distortion model, and solver
//! contracts, each reported as a named check with its measured error.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::Rng;

use super::config::ExperimentConfig;
use super::symbol_sim::{
    empirical_comm_powers, empirical_receiver_distortion_diag, empirical_transmit_covariance,
};
use crate::array::{beampattern, dft_grid_angles, steering, steering_conj, UlaConfig};
use crate::metrics::{
    clutter_aware_combiner, comm_sinr, receiver_distortion_cov, scnr_closed_form,
    scnr_exact_clutter_aware, scnr_general, scnr_mil_form, transmit_covariance,
    HardwareProfile, TransmitDesign,
};
use crate::optim::{
    build_constraint_coeffs, constraint_value, linearized_constraint_value, power_allocation,
    sca_design, ScaOptions, SolveStatus,
};
use crate::precoding::{mmse_precoder, sensing_beam};
use crate::scene::{sample_scene, sample_users, trial_rng, ScenarioParams};

/// Outcome of one validation check.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub measured: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckResult {
    fn new(name: &'static str, measured: f64, tolerance: f64) -> Self {
        Self {
            name,
            measured,
            tolerance,
            pass: measured.is_finite() && measured <= tolerance,
        }
    }
}

fn unit_column(rng: &mut impl Rng, m: usize) -> Array1<Complex64> {
    let v: Array1<Complex64> = Array1::from_iter(
        (0..m).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)),
    );
    let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.mapv(|z| z / norm)
}

fn random_design(rng: &mut impl Rng, m: usize, k: usize) -> TransmitDesign {
    let mut w = Array2::<Complex64>::zeros((m, k));
    for j in 0..k {
        w.column_mut(j).assign(&unit_column(rng, m));
    }
    let w0 = unit_column(rng, m);
    let mut rho: Vec<f64> = (0..=k).map(|_| rng.random::<f64>()).collect();
    let total: f64 = rho.iter().sum();
    for r in rho.iter_mut() {
        *r /= total;
    }
    TransmitDesign::unit_norm(w, w0, rho).expect("random design is valid")
}

/// Identity suite instances: varying array sizes and clutter counts.
fn identity_instances(
    config: &ExperimentConfig,
    count: u64,
) -> Vec<(crate::scene::Scene, TransmitDesign, HardwareProfile)> {
    let sizes = [8usize, 16, 32, 64, 96, 128];
    let params = config.scenario_params();
    let mut out = Vec::new();
    for trial in 0..count {
        let mut rng = trial_rng(config.seed.wrapping_add(0x5eed), trial);
        let m = sizes[(trial as usize) % sizes.len()];
        let q = (trial as usize) % 6;
        let scene = {
            let mut s = sample_scene(&mut rng, &params);
            s.clutter.truncate(q);
            s
        };
        let design = random_design(&mut rng, m, 4);
        let hw = HardwareProfile {
            kappa_t: rng.random::<f64>() * 0.05,
            kappa_r: rng.random::<f64>() * 0.05,
            rho_tot_w: config.rho_tot_w * (0.1 + rng.random::<f64>()),
            sigma_nu_sq_w: 1e-12,
            sigma_mu_sq_w: 1e-12,
        };
        out.push((scene, design, hw));
    }
    out
}

pub fn check_steering_norm() -> CheckResult {
    let mut worst = 0.0f64;
    for m in [1usize, 7, 64, 128] {
        let cfg = UlaConfig::new(m).unwrap();
        for i in 0..21 {
            let theta = crate::array::Angle::from_radians(
                -std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * i as f64 / 20.0,
            )
            .unwrap();
            let a = steering(cfg, theta);
            let n: f64 = a.iter().map(|z| z.norm_sqr()).sum();
            worst = worst.max((n - m as f64).abs() / m as f64);
        }
    }
    CheckResult::new("steering_norm", worst, 1e-12)
}

pub fn check_beampattern_dft_sum(config: &ExperimentConfig) -> CheckResult {
    let mut rng = trial_rng(config.seed.wrapping_add(2), 0);
    let mut worst = 0.0f64;
    for m in [8usize, 16, 32] {
        let cfg = UlaConfig::new(m).unwrap();
        let design = random_design(&mut rng, m, 3);
        let x = design.signal_covariance();
        let trace: f64 = (0..m).map(|i| x[(i, i)].re).sum();
        let sum: f64 = dft_grid_angles(cfg)
            .into_iter()
            .map(|th| m as f64 * beampattern(cfg, &x, th).unwrap())
            .sum();
        worst = worst.max((sum - m as f64 * trace).abs() / (m as f64 * trace));
    }
    CheckResult::new("beampattern_dft_sum", worst, 1e-10)
}

pub fn check_scnr_identity_combiner(config: &ExperimentConfig) -> CheckResult {
    let mut worst = 0.0f64;
    for (scene, design, hw) in identity_instances(config, 100) {
        let exact = scnr_exact_clutter_aware(&scene, &design, &hw).unwrap();
        let omega = clutter_aware_combiner(&scene, &design, &hw).unwrap();
        let general = scnr_general(&scene, &design, &hw, &omega).unwrap().value;
        worst = worst.max((general - exact).abs() / exact);
    }
    CheckResult::new("scnr_identity_combiner", worst, 1e-9)
}

pub fn check_scnr_identity_mil(config: &ExperimentConfig) -> CheckResult {
    let mut worst = 0.0f64;
    for (scene, design, hw) in identity_instances(config, 100) {
        let exact = scnr_exact_clutter_aware(&scene, &design, &hw).unwrap();
        let mil = scnr_mil_form(&scene, &design, &hw).unwrap();
        worst = worst.max((mil - exact).abs() / exact);
    }
    CheckResult::new("scnr_identity_mil", worst, 1e-10)
}

/// The configured combiner never beats the clutter-aware optimum; with the
/// clutter-aware choice the two agree to roundoff.
pub fn check_combiner_ordering(config: &ExperimentConfig) -> CheckResult {
    let mut worst = f64::NEG_INFINITY;
    for (scene, design, hw) in identity_instances(config, 40) {
        let aware = scnr_exact_clutter_aware(&scene, &design, &hw).unwrap();
        let omega = crate::metrics::combiner(&scene, &design, &hw, config.combiner).unwrap();
        let value = scnr_general(&scene, &design, &hw, &omega).unwrap().value;
        worst = worst.max((value - aware) / aware);
    }
    CheckResult::new("combiner_ordering", worst, 1e-12)
}

pub fn check_closed_form_accuracy(config: &ExperimentConfig) -> CheckResult {
    let params = ScenarioParams {
        min_separation_deg: 10.0,
        ..config.scenario_params()
    };
    let mut worst = 0.0f64;
    for trial in 0..100u64 {
        let mut rng = trial_rng(config.seed.wrapping_add(3), trial);
        let scene = sample_scene(&mut rng, &params);
        let design = random_design(&mut rng, 128, config.num_users.max(1));
        let hw = config.hardware(config.kappa_t, config.kappa_r);
        let exact = scnr_exact_clutter_aware(&scene, &design, &hw).unwrap();
        let closed = scnr_closed_form(&scene, &design, &hw).unwrap();
        worst = worst.max((10.0 * (closed / exact).log10()).abs());
    }
    CheckResult::new("closed_form_within_1db", worst, 1.0)
}

pub fn check_mc_transmit_covariance(config: &ExperimentConfig) -> CheckResult {
    let m = 8;
    let mut rng = trial_rng(config.seed.wrapping_add(4), 0);
    let design = random_design(&mut rng, m, 4);
    let hw = config.hardware(config.kappa_t, config.kappa_r);
    let empirical = empirical_transmit_covariance(&design, &hw, 100_000, &mut rng);
    let closed = transmit_covariance(&design, &hw).unwrap();
    let num: f64 = empirical
        .iter()
        .zip(closed.iter())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let den: f64 = closed.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    CheckResult::new("mc_transmit_covariance", num / den, 0.02)
}

pub fn check_mc_comm_powers(config: &ExperimentConfig) -> CheckResult {
    let m = 16;
    let params = ScenarioParams {
        num_users: 4,
        ..config.scenario_params()
    };
    let cfg = UlaConfig::new(m).unwrap();
    let mut rng = trial_rng(config.seed.wrapping_add(5), 0);
    let users = sample_users(&mut rng, &params, cfg);
    let design = random_design(&mut rng, m, 4);
    let hw = config.hardware(config.kappa_t, config.kappa_r);
    let user = 1;
    let emp = empirical_comm_powers(
        user,
        users.channel.column(user),
        &design,
        &hw,
        100_000,
        &mut rng,
    );
    let closed = comm_sinr(user, &users, &design, &hw).unwrap();
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
    let worst = rel(emp.signal, closed.signal)
        .max(rel(emp.multiuser, closed.multiuser))
        .max(rel(emp.sensing, closed.sensing))
        .max(rel(emp.distortion, closed.distortion));
    CheckResult::new("mc_comm_power_terms", worst, 0.03)
}

pub fn check_mc_receiver_distortion(config: &ExperimentConfig) -> CheckResult {
    let m = 8;
    let params = config.scenario_params();
    let mut rng = trial_rng(config.seed.wrapping_add(6), 0);
    let scene = sample_scene(&mut rng, &params);
    let design = random_design(&mut rng, m, 3);
    let hw = config.hardware(config.kappa_t, config.kappa_r);
    let emp = empirical_receiver_distortion_diag(&scene, &design, &hw, 100_000, &mut rng);
    let closed = receiver_distortion_cov(&scene, &design, &hw).unwrap();
    CheckResult::new(
        "mc_receiver_distortion",
        (emp - closed).abs() / closed,
        0.03,
    )
}

pub fn check_mmse_residual(config: &ExperimentConfig) -> CheckResult {
    let params = config.scenario_params();
    let m = 32;
    let cfg = UlaConfig::new(m).unwrap();
    let mut rng = trial_rng(config.seed.wrapping_add(7), 0);
    let users = sample_users(&mut rng, &params, cfg);
    let base = mmse_precoder(&users).unwrap();
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
    let num: f64 = recon
        .iter()
        .zip(h.iter())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let den: f64 = h.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    CheckResult::new("mmse_residual", num / den, 1e-10)
}

pub fn check_sensing_beam_suppression(config: &ExperimentConfig) -> CheckResult {
    // per-scene aggregate clutter response of the projected beam vs the bare
    // steered beam; the projection's optimality guarantees the ratio < 1
    let params = config.scenario_params();
    let m = 64usize;
    let cfg = UlaConfig::new(m).unwrap();
    let mut worst = 0.0f64;
    for trial in 0..20u64 {
        let mut rng = trial_rng(config.seed.wrapping_add(8), trial);
        let scene = sample_scene(&mut rng, &params);
        let w0 = sensing_beam(cfg, &scene);
        let at = steering_conj(cfg, scene.target.angle);
        let mut projected = 0.0;
        let mut unprojected = 0.0;
        for c in &scene.clutter {
            let aq = steering_conj(cfg, c.angle);
            let response: Complex64 = aq.iter().zip(w0.iter()).map(|(a, b)| a.conj() * b).sum();
            let reference: Complex64 = aq.iter().zip(at.iter()).map(|(a, b)| a.conj() * b).sum();
            projected += response.norm_sqr();
            unprojected += reference.norm_sqr() / m as f64;
        }
        worst = worst.max(projected / unprojected.max(1e-300));
    }
    CheckResult::new("sensing_beam_suppression", worst, 1.0)
}

pub fn check_constraint_equivalence(config: &ExperimentConfig) -> CheckResult {
    let params = config.scenario_params();
    let cfg = UlaConfig::new(24).unwrap();
    let hw = config.hardware(config.kappa_t, config.kappa_r);
    let mut disagreements = 0u32;
    for trial in 0..100u64 {
        let mut rng = trial_rng(config.seed.wrapping_add(9), trial);
        let scene = sample_scene(&mut rng, &params);
        let coeffs = build_constraint_coeffs(cfg, &scene, &hw, config.gamma0).unwrap();
        let mut w = Array2::<Complex64>::zeros((24, 6));
        for j in 0..6 {
            w.column_mut(j)
                .assign(&unit_column(&mut rng, 24).mapv(|z| z * Complex64::new(0.35, 0.0)));
        }
        let design = TransmitDesign::absorbed(w.clone(), Array1::zeros(24)).unwrap();
        let scnr = scnr_closed_form(&scene, &design, &hw).unwrap();
        let g = constraint_value(&coeffs, &w);
        let scale = coeffs.sigma1_sq.abs().max(1e-300);
        if g.abs() < 1e-9 * scale {
            continue; // boundary band
        }
        if (g <= 0.0) != (scnr >= config.gamma0) {
            disagreements += 1;
        }
    }
    CheckResult::new("constraint_equivalence", disagreements as f64, 0.0)
}

pub fn check_linearization_tightness(config: &ExperimentConfig) -> CheckResult {
    let params = config.scenario_params();
    let cfg = UlaConfig::new(16).unwrap();
    let hw = config.hardware(config.kappa_t, config.kappa_r);
    let mut worst = 0.0f64;
    for trial in 0..40u64 {
        let mut rng = trial_rng(config.seed.wrapping_add(10), trial);
        let scene = sample_scene(&mut rng, &params);
        let coeffs = build_constraint_coeffs(cfg, &scene, &hw, config.gamma0).unwrap();
        let mut w = Array2::<Complex64>::zeros((16, 4));
        for j in 0..4 {
            w.column_mut(j)
                .assign(&unit_column(&mut rng, 16).mapv(|z| z * Complex64::new(0.45, 0.0)));
        }
        let exact = constraint_value(&coeffs, &w);
        let lin = linearized_constraint_value(&coeffs, &w, &w);
        let scale = exact.abs().max(coeffs.sigma1_sq).max(1e-300);
        worst = worst.max((exact - lin).abs() / scale);
    }
    CheckResult::new("linearization_tightness", worst, 1e-10)
}

/// SCA contract on a handful of trials: nonincreasing objective, power
/// budget, and the floor verified through the metrics path.
pub fn check_sca_contract(config: &ExperimentConfig) -> CheckResult {
    let params = config.scenario_params();
    let cfg = UlaConfig::new(64).unwrap();
    let hw = config.hardware(config.kappa_t, config.kappa_r);
    let opts = ScaOptions {
        max_iterations: config.sca_max_iterations,
        objective_tol: config.sca_objective_tol,
        ..ScaOptions::default()
    };
    let mut worst = f64::NEG_INFINITY;
    for trial in 0..10u64 {
        let mut rng = trial_rng(config.seed.wrapping_add(11), trial);
        let scene = sample_scene(&mut rng, &params);
        let users = sample_users(&mut rng, &params, cfg);
        let (design, report) = sca_design(&users, &scene, &hw, config.gamma0, &opts).unwrap();
        if report.status == SolveStatus::Infeasible {
            continue;
        }
        for pair in report.objective_trace.windows(2) {
            worst = worst.max(pair[1] - pair[0]); // increase is a violation
        }
        worst = worst.max(-design.power_slack() - 1e-9);
        let floor = config.gamma0 * (1.0 - 1e-3);
        worst = worst.max(floor - report.achieved_scnr);
    }
    CheckResult::new("sca_contract", worst.max(0.0), 1e-9)
}

/// QP contract: the achieved ratio meets the floor and matches the metrics
/// path on every feasible trial.
pub fn check_power_alloc_contract(config: &ExperimentConfig) -> CheckResult {
    let params = config.scenario_params();
    let cfg = UlaConfig::new(64).unwrap();
    let hw = config.hardware(config.kappa_t, config.kappa_r);
    let mut worst = f64::NEG_INFINITY;
    for trial in 0..10u64 {
        let mut rng = trial_rng(config.seed.wrapping_add(12), trial);
        let scene = sample_scene(&mut rng, &params);
        let users = sample_users(&mut rng, &params, cfg);
        let beams = mmse_precoder(&users).unwrap().normalized;
        let w0 = sensing_beam(cfg, &scene);
        let (design, report) =
            power_allocation(&users, &scene, &hw, config.gamma0, &beams, &w0).unwrap();
        if report.status == SolveStatus::Infeasible {
            continue;
        }
        worst = worst.max(config.gamma0 - 1e-9 - report.achieved_scnr);
        let recomputed = scnr_closed_form(&scene, &design, &hw).unwrap();
        worst = worst.max((recomputed - report.achieved_scnr).abs() / recomputed - 1e-9);
        let total: f64 = design.power().iter().sum();
        worst = worst.max(total - 1.0 - 1e-9);
    }
    CheckResult::new("power_alloc_contract", worst.max(0.0), 1e-9)
}

pub fn check_channel_statistics(config: &ExperimentConfig) -> CheckResult {
    let params = ScenarioParams {
        num_users: 1,
        ..config.scenario_params()
    };
    let cfg = UlaConfig::new(8).unwrap();
    // mean of ||h||^2 / trace(R) over independent draws; the normalization
    // removes the heavy-tailed pathloss spread across drop geometries
    let mut acc = 0.0;
    let n = 10_000u64;
    for trial in 0..n {
        let mut rng = trial_rng(config.seed.wrapping_add(13), trial);
        let users = sample_users(&mut rng, &params, cfg);
        let norm_sq: f64 = users
            .channel
            .column(0)
            .iter()
            .map(|z| z.norm_sqr())
            .sum();
        let trace: f64 = (0..8).map(|i| users.covariances[0][(i, i)].re).sum();
        acc += norm_sq / trace;
    }
    CheckResult::new(
        "channel_norm_statistics",
        (acc / n as f64 - 1.0).abs(),
        0.02,
    )
}

/// Run the full validation suite.
pub fn run_validation(config: &ExperimentConfig) -> Vec<CheckResult> {
    vec![
        check_steering_norm(),
        check_beampattern_dft_sum(config),
        check_scnr_identity_combiner(config),
        check_scnr_identity_mil(config),
        check_combiner_ordering(config),
        check_closed_form_accuracy(config),
        check_mc_transmit_covariance(config),
        check_mc_comm_powers(config),
        check_mc_receiver_distortion(config),
        check_mmse_residual(config),
        check_sensing_beam_suppression(config),
        check_constraint_equivalence(config),
        check_linearization_tightness(config),
        check_sca_contract(config),
        check_power_alloc_contract(config),
        check_channel_statistics(config),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_suite_passes_on_defaults() {
        let config = ExperimentConfig::default();
        for check in run_validation(&config) {
            assert!(
                check.pass,
                "{}: measured {:e} exceeds tolerance {:e}",
                check.name, check.measured, check.tolerance
            );
        }
    }
}
