//! Precoder optimization: the SCA direct design (P1 solved through iterated
//! convex subproblems) and the power-allocation QP with a dedicated sensing
//! beam.

mod power_alloc;
mod subproblem;

pub use power_alloc::{build_power_alloc_coeffs, power_allocation, PowerAllocCoeffs};
pub use subproblem::{solve_p2_subproblem, P2Solution};

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::array::{steering_conj, ArrayError, UlaConfig};
use crate::linalg::hermitian_eigen_small;
use crate::metrics::{
    echo_components, scnr_closed_form, HardwareProfile, MetricsError, TransmitDesign,
};
use crate::precoding::{mmse_precoder, PrecodingError};
use crate::scene::{Scene, UserSet};

#[derive(Debug, Error)]
pub enum OptimError {
    #[error("target SCNR must be nonnegative, got {0}")]
    NegativeTarget(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("dual search failed to bracket the subproblem multipliers")]
    SubproblemBracket,
    #[error(transparent)]
    Precoding(#[from] PrecodingError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Array(#[from] ArrayError),
}

/// Coefficients of the quadratic SCNR constraint
/// `sigma_1^2 + sum_q d_q sum_k |a'(theta_q) w_k|^2
///  - c_0 sum_k |a'(theta_0) w_k|^2 <= 0`.
#[derive(Debug, Clone)]
pub struct ScnrConstraintCoeffs {
    /// `c_0 = M abar_0^2 rho_tot`.
    pub c0: f64,
    /// `d_q = Gamma_0 rho_tot kappa_r abar_q^2` for q = 0..Q, target first.
    pub d: Vec<f64>,
    /// `Gamma_0 sigma_mu^2 + sum_q abar_q^2 Gamma_0 kappa_r rho_tot kappa_t`.
    pub sigma1_sq: f64,
    pub gamma0: f64,
    /// Conjugated steering vectors `a*(theta_q)`, target first.
    steer_conj: Vec<Array1<Complex64>>,
}

impl ScnrConstraintCoeffs {
    pub fn target_steer_conj(&self) -> &Array1<Complex64> {
        &self.steer_conj[0]
    }

    pub fn echo_steer_conj(&self, q: usize) -> &Array1<Complex64> {
        &self.steer_conj[q]
    }

    pub fn num_echoes(&self) -> usize {
        self.steer_conj.len()
    }
}

/// Build the constraint coefficients for an array of `cfg` antennas.
pub fn build_constraint_coeffs(
    cfg: UlaConfig,
    scene: &Scene,
    hw: &HardwareProfile,
    gamma0: f64,
) -> Result<ScnrConstraintCoeffs, OptimError> {
    if !(gamma0 >= 0.0) {
        return Err(OptimError::NegativeTarget(gamma0));
    }
    hw.validate()?;
    let echoes = echo_components(scene)?;
    let m = cfg.num_antennas() as f64;
    let c0 = m * echoes.gains[0] * hw.rho_tot_w;
    let d: Vec<f64> = echoes
        .gains
        .iter()
        .map(|g| gamma0 * hw.rho_tot_w * hw.kappa_r * g)
        .collect();
    let sigma1_sq = gamma0 * hw.sigma_mu_sq_w
        + echoes
            .gains
            .iter()
            .map(|g| g * gamma0 * hw.kappa_r * hw.rho_tot_w * hw.kappa_t)
            .sum::<f64>();
    let steer_conj = echoes
        .angles
        .iter()
        .map(|&theta| steering_conj(cfg, theta))
        .collect();
    Ok(ScnrConstraintCoeffs {
        c0,
        d,
        sigma1_sq,
        gamma0,
        steer_conj,
    })
}

fn target_responses(coeffs: &ScnrConstraintCoeffs, w: &Array2<Complex64>) -> Vec<Complex64> {
    let u0 = coeffs.target_steer_conj();
    w.columns()
        .into_iter()
        .map(|col| {
            u0.iter()
                .zip(col.iter())
                .map(|(a, b)| a.conj() * b)
                .sum::<Complex64>()
        })
        .collect()
}

/// Exact value of the quadratic constraint at `W` (feasible when <= 0).
pub fn constraint_value(coeffs: &ScnrConstraintCoeffs, w: &Array2<Complex64>) -> f64 {
    let mut value = coeffs.sigma1_sq;
    for q in 0..coeffs.num_echoes() {
        let u = coeffs.echo_steer_conj(q);
        let sum: f64 = w
            .columns()
            .into_iter()
            .map(|col| {
                let inner: Complex64 =
                    u.iter().zip(col.iter()).map(|(a, b)| a.conj() * b).sum();
                inner.norm_sqr()
            })
            .sum();
        value += coeffs.d[q] * sum;
    }
    let target: f64 = target_responses(coeffs, w)
        .iter()
        .map(|z| z.norm_sqr())
        .sum();
    value - coeffs.c0 * target
}

/// Value of the constraint with the concave part linearized around `w_ref`.
/// Upper-bounds [`constraint_value`] and matches it exactly at `w = w_ref`.
pub fn linearized_constraint_value(
    coeffs: &ScnrConstraintCoeffs,
    w: &Array2<Complex64>,
    w_ref: &Array2<Complex64>,
) -> f64 {
    let mut value = coeffs.sigma1_sq;
    for q in 0..coeffs.num_echoes() {
        let u = coeffs.echo_steer_conj(q);
        let sum: f64 = w
            .columns()
            .into_iter()
            .map(|col| {
                let inner: Complex64 =
                    u.iter().zip(col.iter()).map(|(a, b)| a.conj() * b).sum();
                inner.norm_sqr()
            })
            .sum();
        value += coeffs.d[q] * sum;
    }
    let t_ref = target_responses(coeffs, w_ref);
    let t_w = target_responses(coeffs, w);
    for (tr, tw) in t_ref.iter().zip(t_w.iter()) {
        value += coeffs.c0 * tr.norm_sqr() - 2.0 * coeffs.c0 * (tr * tw.conj()).re;
    }
    value
}

/// Solver outcome classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Converged,
    MaxIter,
    Infeasible,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIter => "max_iter",
            SolveStatus::Infeasible => "infeasible",
        }
    }
}

/// Diagnostics attached to every design solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// Objective `||W_mmse - W||_F` after each subproblem solve.
    pub objective_trace: Vec<f64>,
    /// Slack of the governing SCNR constraint at the returned design.
    pub constraint_slack: f64,
    /// SCNR of the returned design evaluated through the metrics path.
    pub achieved_scnr: f64,
    pub converged: bool,
    pub status: SolveStatus,
}

/// Options of the SCA loop.
#[derive(Debug, Clone)]
pub struct ScaOptions {
    pub max_iterations: usize,
    pub objective_tol: f64,
    /// Warm-start mixing weights toward the steered precoder, tried in order
    /// until the first subproblem is feasible.
    pub warm_start_mix: Vec<f64>,
}

impl Default for ScaOptions {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            objective_tol: 1e-6,
            warm_start_mix: vec![0.0, 0.25, 0.5, 0.75, 1.0],
        }
    }
}

/// Largest eigenvalue and eigenvector of `c0 u0 u0ᴴ - B` restricted to the
/// span of the echo steering directions; decides feasibility of P1 at full
/// power and provides the steered warm start.
fn max_gain_direction(
    coeffs: &ScnrConstraintCoeffs,
    num_antennas: usize,
) -> (f64, Array1<Complex64>) {
    let m = num_antennas;
    let n = coeffs.num_echoes();
    // orthonormal basis of span{a*(theta_q)} by modified Gram-Schmidt
    let mut basis: Vec<Array1<Complex64>> = Vec::new();
    for q in 0..n {
        let mut v = coeffs.echo_steer_conj(q).clone();
        for b in &basis {
            let coef: Complex64 = b.iter().zip(v.iter()).map(|(a, x)| a.conj() * x).sum();
            for i in 0..m {
                v[i] -= b[i] * coef;
            }
        }
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-9 * (m as f64).sqrt() {
            basis.push(v.mapv(|z| z / norm));
        }
    }
    let r = basis.len();
    let mut sub = Array2::<Complex64>::zeros((r, r));
    // projections of each steering direction onto the basis
    let mut proj = Array2::<Complex64>::zeros((r, n));
    for (i, b) in basis.iter().enumerate() {
        for q in 0..n {
            proj[(i, q)] = b
                .iter()
                .zip(coeffs.echo_steer_conj(q).iter())
                .map(|(a, x)| a.conj() * x)
                .sum();
        }
    }
    for i in 0..r {
        for j in 0..r {
            let mut s = proj[(i, 0)] * proj[(j, 0)].conj() * coeffs.c0;
            for q in 0..n {
                s -= proj[(i, q)] * proj[(j, q)].conj() * coeffs.d[q];
            }
            sub[(i, j)] = s;
        }
    }
    let (vals, vecs) = hermitian_eigen_small(&sub);
    let best = r - 1; // ascending order
    let lambda = vals[best];
    let mut direction = Array1::<Complex64>::zeros(m);
    for (i, b) in basis.iter().enumerate() {
        let coef = vecs[(i, best)];
        for row in 0..m {
            direction[row] += b[row] * coef;
        }
    }
    (lambda, direction)
}

fn replicate_direction(direction: &Array1<Complex64>, k: usize) -> Array2<Complex64> {
    let m = direction.len();
    let scale = (1.0 / k as f64).sqrt();
    let mut w = Array2::<Complex64>::zeros((m, k));
    for j in 0..k {
        w.column_mut(j).assign(&direction.mapv(|z| z * scale));
    }
    w
}

/// SCA direct precoder design: minimize the deviation from the MMSE precoder
/// subject to the closed-form SCNR floor and the unit power budget. Returns
/// an absorbed-mode design with no dedicated sensing stream.
pub fn sca_design(
    users: &UserSet,
    scene: &Scene,
    hw: &HardwareProfile,
    gamma0: f64,
    opts: &ScaOptions,
) -> Result<(TransmitDesign, SolveReport), OptimError> {
    let m = users.num_antennas();
    let k = users.num_users();
    let cfg = UlaConfig::new(m)?;
    let coeffs = build_constraint_coeffs(cfg, scene, hw, gamma0)?;
    let mmse_target = mmse_precoder(users)?.power_scaled();
    let zero_beam = Array1::<Complex64>::zeros(m);

    let (max_gain, steer_direction) = max_gain_direction(&coeffs, m);
    let steered = replicate_direction(&steer_direction, k);
    if gamma0 > 0.0 && coeffs.sigma1_sq > max_gain {
        // even full power on the best direction cannot satisfy the floor
        let design = TransmitDesign::absorbed(steered, zero_beam)?;
        let achieved = scnr_closed_form(scene, &design, hw)?;
        let report = SolveReport {
            iterations: 0,
            objective_trace: Vec::new(),
            constraint_slack: -constraint_value(&coeffs, design.precoder()),
            achieved_scnr: achieved,
            converged: false,
            status: SolveStatus::Infeasible,
        };
        return Ok((design, report));
    }

    let frob = |a: &Array2<Complex64>, b: &Array2<Complex64>| -> f64 {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt()
    };

    for &t in &opts.warm_start_mix {
        let mut expansion = if t == 0.0 {
            mmse_target.clone()
        } else {
            let mut mix = Array2::<Complex64>::zeros((m, k));
            for i in 0..m {
                for j in 0..k {
                    mix[(i, j)] =
                        mmse_target[(i, j)] * (1.0 - t) + steered[(i, j)] * t;
                }
            }
            mix
        };
        let mut trace = Vec::new();
        let mut prev_obj = frob(&mmse_target, &expansion);
        let mut status = SolveStatus::MaxIter;
        let mut feasible_start = true;
        for iter in 1..=opts.max_iterations {
            let sol = match solve_p2_subproblem(&coeffs, &mmse_target, &expansion) {
                Ok(sol) => sol,
                Err(OptimError::SubproblemBracket) => {
                    if iter == 1 {
                        feasible_start = false;
                    }
                    // a failed dual bracket past the first iteration keeps the
                    // last feasible iterate and reports MaxIter
                    break;
                }
                Err(e) => return Err(e),
            };
            let obj = frob(&mmse_target, &sol.precoder);
            trace.push(obj);
            expansion = sol.precoder;
            if (obj - prev_obj).abs() < opts.objective_tol * prev_obj.max(1.0) {
                status = SolveStatus::Converged;
                break;
            }
            prev_obj = obj;
        }
        if !feasible_start {
            continue;
        }
        let design = TransmitDesign::absorbed(expansion, zero_beam)?;
        let achieved = scnr_closed_form(scene, &design, hw)?;
        let report = SolveReport {
            iterations: trace.len(),
            objective_trace: trace,
            constraint_slack: -constraint_value(&coeffs, design.precoder()),
            achieved_scnr: achieved,
            converged: status == SolveStatus::Converged,
            status,
        };
        return Ok((design, report));
    }

    // no warm start produced a feasible first subproblem
    let design = TransmitDesign::absorbed(steered, zero_beam)?;
    let achieved = scnr_closed_form(scene, &design, hw)?;
    let report = SolveReport {
        iterations: 0,
        objective_trace: Vec::new(),
        constraint_slack: -constraint_value(&coeffs, design.precoder()),
        achieved_scnr: achieved,
        converged: false,
        status: SolveStatus::Infeasible,
    };
    Ok((design, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{sample_scene, sample_users, trial_rng, ScenarioParams};
    use rand::Rng;

    fn hw() -> HardwareProfile {
        HardwareProfile {
            kappa_t: 0.01,
            kappa_r: 0.01,
            rho_tot_w: 10_000.0,
            sigma_nu_sq_w: 1e-12,
            sigma_mu_sq_w: 1e-12,
        }
    }

    fn random_absorbed_w(rng: &mut impl Rng, m: usize, k: usize, trace: f64) -> Array2<Complex64> {
        let mut w = Array2::<Complex64>::zeros((m, k));
        for j in 0..k {
            for i in 0..m {
                w[(i, j)] =
                    Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
            }
        }
        let total: f64 = w.iter().map(|z| z.norm_sqr()).sum();
        let s = (trace / total).sqrt();
        w.mapv(|z| z * s)
    }

    #[test]
    fn coeffs_vanish_with_zero_target() {
        let params = ScenarioParams::default();
        let mut rng = trial_rng(40, 0);
        let scene = sample_scene(&mut rng, &params);
        let cfg = UlaConfig::new(16).unwrap();
        let coeffs = build_constraint_coeffs(cfg, &scene, &hw(), 0.0).unwrap();
        assert!(coeffs.d.iter().all(|&d| d == 0.0));
        assert_eq!(coeffs.sigma1_sq, 0.0);
        assert!(coeffs.c0 > 0.0);
        // constraint reduces to -c0 * (target gain) <= 0, always satisfied
        let w = random_absorbed_w(&mut rng, 16, 4, 1.0);
        assert!(constraint_value(&coeffs, &w) <= 0.0);
    }

    #[test]
    fn coeffs_without_receive_distortion_keep_only_noise_floor() {
        let params = ScenarioParams::default();
        let mut rng = trial_rng(41, 0);
        let scene = sample_scene(&mut rng, &params);
        let cfg = UlaConfig::new(16).unwrap();
        let mut profile = hw();
        profile.kappa_r = 0.0;
        let gamma0 = 0.5;
        let coeffs = build_constraint_coeffs(cfg, &scene, &profile, gamma0).unwrap();
        assert!(coeffs.d.iter().all(|&d| d == 0.0));
        assert!((coeffs.sigma1_sq - gamma0 * profile.sigma_mu_sq_w).abs() < 1e-30);
    }

    #[test]
    fn constraint_sign_matches_closed_form_threshold() {
        // constraint <= 0 iff scnr_closed_form >= gamma0, over random designs
        let params = ScenarioParams::default();
        let cfg = UlaConfig::new(24).unwrap();
        let gamma0 = 0.5;
        let mut agree = 0;
        let total = 100;
        for trial in 0..total {
            let mut rng = trial_rng(42, trial);
            let scene = sample_scene(&mut rng, &params);
            let coeffs = build_constraint_coeffs(cfg, &scene, &hw(), gamma0).unwrap();
            let trace = rng.random::<f64>();
            let w = random_absorbed_w(&mut rng, 24, 6, trace);
            let design =
                TransmitDesign::absorbed(w.clone(), Array1::zeros(24)).unwrap();
            let scnr = scnr_closed_form(&scene, &design, &hw()).unwrap();
            let g = constraint_value(&coeffs, &w);
            // skip boundary cases inside the slack band
            let scale = coeffs.sigma1_sq.abs().max(1e-300);
            if g.abs() < 1e-9 * scale {
                agree += 1;
                continue;
            }
            if (g <= 0.0) == (scnr >= gamma0) {
                agree += 1;
            }
        }
        assert_eq!(agree, total, "constraint/threshold disagreement");
    }

    #[test]
    fn linearization_is_tight_at_expansion_point() {
        let params = ScenarioParams::default();
        let cfg = UlaConfig::new(16).unwrap();
        for trial in 0..20 {
            let mut rng = trial_rng(43, trial);
            let scene = sample_scene(&mut rng, &params);
            let coeffs = build_constraint_coeffs(cfg, &scene, &hw(), 0.5).unwrap();
            let w = random_absorbed_w(&mut rng, 16, 4, 0.8);
            let exact = constraint_value(&coeffs, &w);
            let lin = linearized_constraint_value(&coeffs, &w, &w);
            let scale = exact.abs().max(coeffs.sigma1_sq).max(1e-300);
            assert!(
                (exact - lin).abs() < 1e-10 * scale,
                "tightness violated: {exact:e} vs {lin:e}"
            );
            // and the linearization upper-bounds the exact value elsewhere
            let other = random_absorbed_w(&mut rng, 16, 4, 0.8);
            assert!(
                linearized_constraint_value(&coeffs, &other, &w)
                    >= constraint_value(&coeffs, &other) - 1e-10 * scale
            );
        }
    }

    #[test]
    fn subproblem_returns_mmse_when_unconstrained() {
        let params = ScenarioParams::default();
        let cfg = UlaConfig::new(16).unwrap();
        let mut rng = trial_rng(44, 0);
        let scene = sample_scene(&mut rng, &params);
        let users = sample_users(&mut rng, &params, cfg);
        let coeffs = build_constraint_coeffs(cfg, &scene, &hw(), 0.0).unwrap();
        let target = mmse_precoder(&users).unwrap().power_scaled();
        let sol = solve_p2_subproblem(&coeffs, &target, &target).unwrap();
        assert_eq!(sol.lambda_scnr, 0.0);
        assert_eq!(sol.lambda_power, 0.0);
        let err: f64 = sol
            .precoder
            .iter()
            .zip(target.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "moved by {err:e}");
    }

    #[test]
    fn subproblem_shrinks_when_only_power_binds() {
        // inflate the target beyond the budget; with the expansion point at
        // the target, gamma0 = 0 keeps the constraint slack and the solution
        // is the scaled target
        let params = ScenarioParams::default();
        let cfg = UlaConfig::new(12).unwrap();
        let mut rng = trial_rng(45, 0);
        let scene = sample_scene(&mut rng, &params);
        let coeffs = build_constraint_coeffs(cfg, &scene, &hw(), 0.0).unwrap();
        let target = random_absorbed_w(&mut rng, 12, 3, 2.25); // trace 2.25
        let sol = solve_p2_subproblem(&coeffs, &target, &target).unwrap();
        assert!((sol.power - 1.0).abs() < 1e-9, "power {}", sol.power);
        let norm_t: f64 = target.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        // lambda_power should satisfy 1 + lambda = ||target||_F
        assert!((1.0 + sol.lambda_power - norm_t).abs() < 1e-6);
        let err: f64 = sol
            .precoder
            .iter()
            .zip(target.iter())
            .map(|(a, b)| (a - b / Complex64::new(norm_t, 0.0)).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-8, "not a pure shrinkage: {err:e}");
    }

    #[test]
    fn subproblem_satisfies_kkt_certificates() {
        let params = ScenarioParams::default();
        let cfg = UlaConfig::new(16).unwrap();
        for trial in 0..15 {
            let mut rng = trial_rng(46, trial);
            let scene = sample_scene(&mut rng, &params);
            let users = sample_users(&mut rng, &params, cfg);
            let coeffs = build_constraint_coeffs(cfg, &scene, &hw(), 0.5).unwrap();
            let target = mmse_precoder(&users).unwrap().power_scaled();
            let sol = match solve_p2_subproblem(&coeffs, &target, &target) {
                Ok(sol) => sol,
                Err(OptimError::SubproblemBracket) => continue,
                Err(e) => panic!("{e}"),
            };
            let scale: f64 = target.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            assert!(
                sol.kkt_residual < 1e-8 * scale,
                "trial {trial}: KKT residual {:e}",
                sol.kkt_residual
            );
            assert!(sol.power <= 1.0 + 1e-9);
            // complementary slackness
            let g_scale = coeffs.sigma1_sq.max(1e-300);
            if sol.lambda_scnr > 1e-8 {
                assert!(
                    sol.constraint_value.abs() <= 1e-8 * g_scale,
                    "trial {trial}: active constraint value {:e}",
                    sol.constraint_value
                );
            } else {
                assert!(sol.constraint_value <= 1e-8 * g_scale);
            }
            // the linearized value reported matches an independent recomputation
            let lin = linearized_constraint_value(&coeffs, &sol.precoder, &target);
            assert!(
                (lin - sol.constraint_value).abs() < 1e-7 * g_scale.max(lin.abs()),
                "trial {trial}: {lin:e} vs {:e}",
                sol.constraint_value
            );
        }
    }

    #[test]
    fn sca_with_zero_target_returns_mmse_in_one_iteration() {
        let params = ScenarioParams::default();
        let cfg = UlaConfig::new(32).unwrap();
        let mut rng = trial_rng(47, 0);
        let scene = sample_scene(&mut rng, &params);
        let users = sample_users(&mut rng, &params, cfg);
        let (design, report) =
            sca_design(&users, &scene, &hw(), 0.0, &ScaOptions::default()).unwrap();
        assert_eq!(report.status, SolveStatus::Converged);
        assert_eq!(report.iterations, 1);
        assert!(report.objective_trace[0] < 1e-10);
        let target = mmse_precoder(&users).unwrap().power_scaled();
        let err: f64 = design
            .precoder()
            .iter()
            .zip(target.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-10);
    }

    #[test]
    fn sca_meets_target_and_decreases_objective() {
        let params = ScenarioParams::default();
        let cfg = UlaConfig::new(64).unwrap();
        let gamma0 = 0.5;
        let mut met = 0;
        let mut feasible = 0;
        for trial in 0..10u64 {
            let mut rng = trial_rng(48, trial);
            let scene = sample_scene(&mut rng, &params);
            let users = sample_users(&mut rng, &params, cfg);
            let (design, report) =
                sca_design(&users, &scene, &hw(), gamma0, &ScaOptions::default()).unwrap();
            if report.status == SolveStatus::Infeasible {
                continue;
            }
            feasible += 1;
            for pair in report.objective_trace.windows(2) {
                assert!(
                    pair[1] <= pair[0] + 1e-9,
                    "objective increased: {} -> {}",
                    pair[0],
                    pair[1]
                );
            }
            assert!(design.power_slack() >= -1e-9);
            if report.achieved_scnr >= gamma0 * (1.0 - 1e-3) {
                met += 1;
            }
        }
        assert!(feasible > 0, "no feasible trials sampled");
        assert_eq!(met, feasible, "feasible trials must meet the SCNR floor");
    }

    #[test]
    fn sca_unaware_design_overestimates_its_scnr() {
        let params = ScenarioParams::default();
        let cfg = UlaConfig::new(64).unwrap();
        let gamma0 = 0.5;
        let profile = hw();
        let ideal = profile.without_distortion();
        for trial in 0..5u64 {
            let mut rng = trial_rng(49, trial);
            let scene = sample_scene(&mut rng, &params);
            let users = sample_users(&mut rng, &params, cfg);
            let (design, report) =
                sca_design(&users, &scene, &ideal, gamma0, &ScaOptions::default()).unwrap();
            if report.status == SolveStatus::Infeasible {
                continue;
            }
            let truth = scnr_closed_form(&scene, &design, &profile).unwrap();
            assert!(
                truth < report.achieved_scnr,
                "distortion can only reduce the SCNR: {truth} vs {}",
                report.achieved_scnr
            );
        }
    }
}
