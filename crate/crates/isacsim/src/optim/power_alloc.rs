//! Power-allocation design: with fixed unit-norm beams, choosing the power
//! split is a convex QP with two linear constraints plus nonnegativity.
//! Solved exactly by enumerating working sets and verifying the KKT
//! conditions of each candidate.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use super::{OptimError, SolveReport, SolveStatus};
use crate::array::{steering_conj, UlaConfig};
use crate::metrics::{
    echo_components, scnr_closed_form, HardwareProfile, TransmitDesign,
};
use crate::scene::{Scene, UserSet};

const FEAS_TOL: f64 = 1e-9;
const TIE_TOL: f64 = 1e-11;

/// Coefficients of the power-allocation SCNR ratio
/// `Upsilon_0 = cᵀ rho / (sigma_2^2 + dᵀ rho)` with `rho = [rho_1..rho_K, rho_0]`.
#[derive(Debug, Clone)]
pub struct PowerAllocCoeffs {
    /// `[c]_k = M abar_0^2 rho_tot |a'(theta_0) w_k|^2`; index K is the sensing beam.
    pub c: Vec<f64>,
    /// `[d]_k = kappa_r rho_tot sum_q abar_q^2 |a'(theta_q) w_k|^2`.
    pub d: Vec<f64>,
    /// `sigma_mu^2 + kappa_r kappa_t rho_tot sum_q abar_q^2`.
    pub sigma2_sq: f64,
    /// Desired UE coefficients from the communication-centric design, `1/K` each.
    pub desired: Vec<f64>,
}

/// Build the ratio coefficients for fixed unit-norm beams `[W, w0]`.
pub fn build_power_alloc_coeffs(
    scene: &Scene,
    hw: &HardwareProfile,
    precoder: &Array2<Complex64>,
    sensing: &Array1<Complex64>,
) -> Result<PowerAllocCoeffs, OptimError> {
    hw.validate()?;
    let m = precoder.nrows();
    if sensing.len() != m {
        return Err(OptimError::DimensionMismatch(
            "sensing beam length must match precoder rows".into(),
        ));
    }
    let k = precoder.ncols();
    let cfg = UlaConfig::new(m)?;
    let echoes = echo_components(scene)?;
    let steer: Vec<Array1<Complex64>> = echoes
        .angles
        .iter()
        .map(|&theta| steering_conj(cfg, theta))
        .collect();
    let response = |col: ndarray::ArrayView1<Complex64>, q: usize| -> f64 {
        let inner: Complex64 = steer[q]
            .iter()
            .zip(col.iter())
            .map(|(a, b)| a.conj() * b)
            .sum();
        inner.norm_sqr()
    };
    let mut c = Vec::with_capacity(k + 1);
    let mut d = Vec::with_capacity(k + 1);
    let c_scale = m as f64 * echoes.gains[0] * hw.rho_tot_w;
    for idx in 0..=k {
        let col = if idx < k {
            precoder.column(idx)
        } else {
            sensing.view()
        };
        c.push(c_scale * response(col, 0));
        let mut dist = 0.0;
        for q in 0..echoes.gains.len() {
            dist += echoes.gains[q] * response(col, q);
        }
        d.push(hw.kappa_r * hw.rho_tot_w * dist);
    }
    let sigma2_sq = hw.sigma_mu_sq_w
        + hw.kappa_r * hw.kappa_t * hw.rho_tot_w * echoes.gains.iter().sum::<f64>();
    Ok(PowerAllocCoeffs {
        c,
        d,
        sigma2_sq,
        desired: vec![1.0 / k as f64; k],
    })
}

/// Partial-pivot LU solve of a small dense real system; `None` when singular.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let mut pivot = col;
        for row in (col + 1)..n {
            if a[row][col].abs() > a[pivot][col].abs() {
                pivot = row;
            }
        }
        if a[pivot][col].abs() < 1e-14 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in (col + 1)..n {
            let f = a[row][col] / a[col][col];
            for j in col..n {
                a[row][j] -= f * a[col][j];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut sum = b[row];
        for j in (row + 1)..n {
            sum -= a[row][j] * x[j];
        }
        x[row] = sum / a[row][row];
    }
    Some(x)
}

struct Candidate {
    rho: Vec<f64>,
    objective: f64,
}

/// Solve the QP exactly. `g_hat` and `rhs_hat` describe the normalized SCNR
/// constraint `g_hatᵀ rho <= rhs_hat`; the power constraint is `1ᵀ rho <= 1`.
fn solve_qp(
    g_hat: &[f64],
    rhs_hat: f64,
    desired: &[f64],
    num_examined: &mut usize,
) -> Option<Candidate> {
    let n = g_hat.len(); // K + 1, last entry is the sensing coefficient
    let k = n - 1;
    let mut best: Option<Candidate> = None;
    for scnr_active in [false, true] {
        for power_active in [false, true] {
            for zero_mask in 0u32..(1 << n) {
                *num_examined += 1;
                let free: Vec<usize> =
                    (0..n).filter(|i| zero_mask & (1 << i) == 0).collect();
                let nf = free.len();
                let n_mult = scnr_active as usize + power_active as usize;
                let dim = nf + n_mult;
                if dim == 0 {
                    continue;
                }
                // unknowns: free rho entries, then mu1 (if active), then mu2
                let mut a = vec![vec![0.0; dim]; dim];
                let mut b = vec![0.0; dim];
                let mu1_col = nf;
                let mu2_col = nf + scnr_active as usize;
                for (row, &i) in free.iter().enumerate() {
                    if i < k {
                        a[row][row] = 2.0;
                        b[row] = 2.0 * desired[i];
                    }
                    if scnr_active {
                        a[row][mu1_col] = g_hat[i];
                    }
                    if power_active {
                        a[row][mu2_col] = 1.0;
                    }
                }
                let mut row = nf;
                if scnr_active {
                    for (col, &i) in free.iter().enumerate() {
                        a[row][col] = g_hat[i];
                    }
                    b[row] = rhs_hat;
                    row += 1;
                }
                if power_active {
                    for col in 0..nf {
                        a[row][col] = 1.0;
                    }
                    b[row] = 1.0;
                }
                let Some(x) = solve_dense(a, b) else {
                    continue;
                };
                let mut rho = vec![0.0; n];
                for (idx, &i) in free.iter().enumerate() {
                    rho[i] = x[idx];
                }
                let mu1 = if scnr_active { x[mu1_col] } else { 0.0 };
                let mu2 = if power_active { x[mu2_col] } else { 0.0 };
                // primal feasibility
                if rho.iter().any(|&r| r < -FEAS_TOL) {
                    continue;
                }
                let scnr_lhs: f64 =
                    g_hat.iter().zip(rho.iter()).map(|(g, r)| g * r).sum();
                if scnr_lhs > rhs_hat + FEAS_TOL {
                    continue;
                }
                let total: f64 = rho.iter().sum();
                if total > 1.0 + FEAS_TOL {
                    continue;
                }
                // dual feasibility
                if mu1 < -FEAS_TOL || mu2 < -FEAS_TOL {
                    continue;
                }
                let mut dual_ok = true;
                for i in 0..n {
                    if zero_mask & (1 << i) != 0 {
                        let grad = if i < k { -2.0 * desired[i] } else { 0.0 };
                        let nu = grad + mu1 * g_hat[i] + mu2;
                        if nu < -FEAS_TOL {
                            dual_ok = false;
                            break;
                        }
                    }
                }
                if !dual_ok {
                    continue;
                }
                let objective: f64 = (0..k)
                    .map(|i| (rho[i] - desired[i]).powi(2))
                    .sum();
                let replace = match &best {
                    None => true,
                    Some(cur) => {
                        objective < cur.objective - TIE_TOL
                            || (objective <= cur.objective + TIE_TOL
                                && rho[k] < cur.rho[k] - TIE_TOL)
                    }
                };
                if replace {
                    best = Some(Candidate { rho, objective });
                }
            }
        }
    }
    best
}

/// Power-allocation design: fixed beams, optimal nonnegative power split
/// meeting the SCNR floor with minimal deviation from the uniform UE split.
pub fn power_allocation(
    users: &UserSet,
    scene: &Scene,
    hw: &HardwareProfile,
    gamma0: f64,
    precoder: &Array2<Complex64>,
    sensing: &Array1<Complex64>,
) -> Result<(TransmitDesign, SolveReport), OptimError> {
    if !(gamma0 >= 0.0) {
        return Err(OptimError::NegativeTarget(gamma0));
    }
    if users.num_users() != precoder.ncols() || users.num_antennas() != precoder.nrows() {
        return Err(OptimError::DimensionMismatch(
            "beam dimensions must match the user set".into(),
        ));
    }
    let coeffs = build_power_alloc_coeffs(scene, hw, precoder, sensing)?;
    let n = coeffs.c.len();
    let k = n - 1;
    let g: Vec<f64> = (0..n)
        .map(|i| gamma0 * coeffs.d[i] - coeffs.c[i])
        .collect();
    let bound = -gamma0 * coeffs.sigma2_sq;
    // normalize the constraint so multipliers and residuals are O(1)
    let scale = g
        .iter()
        .map(|x| x.abs())
        .fold(bound.abs(), f64::max)
        .max(f64::MIN_POSITIVE);
    let g_hat: Vec<f64> = g.iter().map(|x| x / scale).collect();
    let rhs_hat = bound / scale;
    // the constraint is satisfiable over the budget simplex iff some vertex works
    let best_vertex = g_hat
        .iter()
        .cloned()
        .fold(0.0f64, f64::min);
    let achieved_ratio = |rho: &[f64]| -> f64 {
        let num: f64 = coeffs.c.iter().zip(rho.iter()).map(|(c, r)| c * r).sum();
        let den: f64 =
            coeffs.sigma2_sq + coeffs.d.iter().zip(rho.iter()).map(|(d, r)| d * r).sum::<f64>();
        num / den
    };
    if best_vertex > rhs_hat + FEAS_TOL {
        // unreachable floor for this scene; report with the all-sensing split
        let mut rho = vec![0.0; n];
        rho[k] = 1.0;
        let achieved = achieved_ratio(&rho);
        let design = TransmitDesign::unit_norm(precoder.clone(), sensing.clone(), rho)?;
        let report = SolveReport {
            iterations: 0,
            objective_trace: Vec::new(),
            constraint_slack: scale * (rhs_hat - best_vertex),
            achieved_scnr: achieved,
            converged: false,
            status: SolveStatus::Infeasible,
        };
        return Ok((design, report));
    }
    let mut examined = 0usize;
    let candidate = solve_qp(&g_hat, rhs_hat, &coeffs.desired, &mut examined)
        .ok_or(OptimError::SubproblemBracket)?;
    let rho = candidate.rho;
    let slack = scale
        * (rhs_hat
            - g_hat
                .iter()
                .zip(rho.iter())
                .map(|(g, r)| g * r)
                .sum::<f64>());
    let design = TransmitDesign::unit_norm(precoder.clone(), sensing.clone(), rho)?;
    let achieved = scnr_closed_form(scene, &design, hw)?;
    let report = SolveReport {
        iterations: examined,
        objective_trace: vec![candidate.objective],
        constraint_slack: slack,
        achieved_scnr: achieved,
        converged: true,
        status: SolveStatus::Converged,
    };
    Ok((design, report))
}
