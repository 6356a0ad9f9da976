//! Monte Carlo trial execution: common random scenes per trial across
//! methods, parallel trial dispatch, and RFC-4180 CSV output with the
//! resolved config embedded as a commented header.

use std::io::{self, Write};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use super::config::{ExperimentConfig, Method};
use crate::array::UlaConfig;
use crate::metrics::{comm_sinr, scnr_closed_form, sum_spectral_efficiency, TransmitDesign};
use crate::optim::{power_allocation, sca_design, SolveStatus};
use crate::precoding::{mmse_precoder_with_regularizer, sensing_beam};
use crate::scene::{sample_scene, sample_users, trial_rng};

/// One design evaluated on one sampled scene.
#[derive(Debug, Clone)]
pub struct TrialRow {
    pub trial: u64,
    pub seed: u64,
    pub method: Method,
    pub sweep_value: f64,
    /// Closed-form SCNR of the design under the true hardware profile.
    pub achieved_scnr: f64,
    pub per_user_sinr: Vec<f64>,
    pub sum_se: f64,
    pub status: SolveStatus,
    pub iterations: usize,
    pub wall_time_ms: f64,
}

/// Aggregated sum-SE statistics at one sweep point.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub method: Method,
    pub sweep_value: f64,
    pub trials: u64,
    pub feasible: u64,
    pub mean_sum_se: f64,
    pub stderr_sum_se: f64,
}

/// Which parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    NumAntennas,
    KappaT,
    KappaR,
}

impl SweepAxis {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepAxis::NumAntennas => "m",
            SweepAxis::KappaT => "kappa-t",
            SweepAxis::KappaR => "kappa-r",
        }
    }
}

/// Run every configured method on the trial's common random scene.
pub fn run_trial(
    config: &ExperimentConfig,
    trial: u64,
    num_antennas: usize,
    kappa_t: f64,
    kappa_r: f64,
    sweep_value: f64,
) -> Vec<TrialRow> {
    let params = config.scenario_params();
    let cfg = UlaConfig::new(num_antennas).expect("antenna count validated");
    let truth = config.hardware(kappa_t, kappa_r);
    let opts = config.sca_options();
    let mut rng = trial_rng(config.seed, trial);
    let scene = sample_scene(&mut rng, &params);
    let users = sample_users(&mut rng, &params, cfg);
    let regularizer = config.mmse_reg_scale * users.noise_variance_w;

    let mut rows = Vec::with_capacity(config.methods.len());
    for &method in &config.methods {
        let designer_hw = if method.distortion_aware() {
            truth
        } else {
            truth.without_distortion()
        };
        let started = Instant::now();
        let (design, report): (TransmitDesign, _) = match method {
            Method::Sca | Method::ScaUnaware => {
                sca_design(&users, &scene, &designer_hw, config.gamma0, &opts)
                    .expect("SCA design failed")
            }
            Method::PowerAlloc | Method::PowerAllocUnaware => {
                let beams = mmse_precoder_with_regularizer(&users, regularizer)
                    .expect("MMSE precoding failed")
                    .normalized;
                let w0 = sensing_beam(cfg, &scene);
                power_allocation(&users, &scene, &designer_hw, config.gamma0, &beams, &w0)
                    .expect("power allocation failed")
            }
        };
        let wall_time_ms = started.elapsed().as_secs_f64() * 1e3;
        // always evaluate under the true hardware
        let achieved_scnr =
            scnr_closed_form(&scene, &design, &truth).expect("SCNR evaluation failed");
        let unit = design.to_unit_norm();
        let per_user_sinr: Vec<f64> = (0..users.num_users())
            .map(|k| {
                comm_sinr(k, &users, &unit, &truth)
                    .expect("SINR evaluation failed")
                    .value
            })
            .collect();
        let sum_se =
            sum_spectral_efficiency(&users, &design, &truth).expect("SE evaluation failed");
        rows.push(TrialRow {
            trial,
            seed: config.seed,
            method,
            sweep_value,
            achieved_scnr,
            per_user_sinr,
            sum_se,
            status: report.status,
            iterations: report.iterations,
            wall_time_ms,
        });
    }
    rows
}

fn run_point(
    config: &ExperimentConfig,
    num_antennas: usize,
    kappa_t: f64,
    kappa_r: f64,
    sweep_value: f64,
) -> Vec<TrialRow> {
    (0..config.trials)
        .into_par_iter()
        .map(|trial| run_trial(config, trial, num_antennas, kappa_t, kappa_r, sweep_value))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// Sensing SCNR distribution study at the configured antenna count.
pub fn run_scnr_cdf(config: &ExperimentConfig) -> Vec<TrialRow> {
    run_point(
        config,
        config.num_antennas,
        config.kappa_t,
        config.kappa_r,
        config.num_antennas as f64,
    )
}

/// Sum-SE sweep over antennas or one of the distortion factors. Returns the
/// per-trial rows and the per-point aggregates.
pub fn run_se_sweep(
    config: &ExperimentConfig,
    axis: SweepAxis,
) -> (Vec<TrialRow>, Vec<SweepRow>) {
    let points: Vec<(usize, f64, f64, f64)> = match axis {
        SweepAxis::NumAntennas => config
            .m_values
            .iter()
            .map(|&m| (m, config.kappa_t, config.kappa_r, m as f64))
            .collect(),
        SweepAxis::KappaT => config
            .kappa_t_values
            .iter()
            .map(|&kt| (config.num_antennas, kt, config.kappa_r, kt))
            .collect(),
        SweepAxis::KappaR => config
            .kappa_r_values
            .iter()
            .map(|&kr| (config.num_antennas, config.kappa_t, kr, kr))
            .collect(),
    };
    let mut rows = Vec::new();
    let mut aggregates = Vec::new();
    for (m, kt, kr, sweep_value) in points {
        let point_rows = run_point(config, m, kt, kr, sweep_value);
        for &method in &config.methods {
            aggregates.push(aggregate(&point_rows, method, sweep_value, config.trials));
        }
        rows.extend(point_rows);
    }
    (rows, aggregates)
}

fn aggregate(rows: &[TrialRow], method: Method, sweep_value: f64, trials: u64) -> SweepRow {
    let se: Vec<f64> = rows
        .iter()
        .filter(|r| r.method == method && r.status != SolveStatus::Infeasible)
        .map(|r| r.sum_se)
        .collect();
    let feasible = se.len() as u64;
    let (mean, stderr) = if se.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        let mean = se.iter().sum::<f64>() / se.len() as f64;
        let var = if se.len() > 1 {
            se.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (se.len() - 1) as f64
        } else {
            0.0
        };
        (mean, (var / se.len() as f64).sqrt())
    };
    SweepRow {
        method,
        sweep_value,
        trials,
        feasible,
        mean_sum_se: mean,
        stderr_sum_se: stderr,
    }
}

/// Nine significant digits, the float format of every CSV field.
pub fn fmt_g9(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.8e}")
    }
}

fn write_config_header(
    out: &mut impl Write,
    config: &ExperimentConfig,
    command: &str,
) -> io::Result<()> {
    writeln!(out, "# isacsim {command}")?;
    for line in config.header_lines() {
        writeln!(out, "# {line}")?;
    }
    Ok(())
}

/// Write per-trial rows: one CSV row per (trial, method, sweep point).
pub fn write_trial_csv(
    path: &Path,
    config: &ExperimentConfig,
    command: &str,
    rows: &[TrialRow],
) -> io::Result<()> {
    let mut out = io::BufWriter::new(std::fs::File::create(path)?);
    write_config_header(&mut out, config, command)?;
    let sinr_cols: String = (1..=config.num_users)
        .map(|k| format!(",sinr_{k}"))
        .collect();
    writeln!(
        out,
        "trial,seed,method,sweep_value,achieved_scnr{sinr_cols},sum_se,status,iterations,wall_time_ms"
    )?;
    for row in rows {
        let sinr: String = row
            .per_user_sinr
            .iter()
            .map(|v| format!(",{}", fmt_g9(*v)))
            .collect();
        writeln!(
            out,
            "{},{},{},{},{}{},{},{},{},{:.3}",
            row.trial,
            row.seed,
            row.method,
            fmt_g9(row.sweep_value),
            fmt_g9(row.achieved_scnr),
            sinr,
            fmt_g9(row.sum_se),
            row.status.as_str(),
            row.iterations,
            row.wall_time_ms,
        )?;
    }
    out.flush()
}

/// Write the per-point aggregates of a sweep.
pub fn write_sweep_csv(
    path: &Path,
    config: &ExperimentConfig,
    command: &str,
    rows: &[SweepRow],
) -> io::Result<()> {
    let mut out = io::BufWriter::new(std::fs::File::create(path)?);
    write_config_header(&mut out, config, command)?;
    writeln!(
        out,
        "method,sweep_value,trials,feasible,mean_sum_se,stderr_sum_se"
    )?;
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            row.method,
            fmt_g9(row.sweep_value),
            row.trials,
            row.feasible,
            fmt_g9(row.mean_sum_se),
            fmt_g9(row.stderr_sum_se),
        )?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            trials: 4,
            num_antennas: 24,
            num_users: 3,
            num_clutter: 2,
            methods: vec![Method::Sca, Method::PowerAlloc],
            m_values: vec![8, 16],
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn common_random_numbers_across_methods() {
        let config = small_config();
        let rows = run_scnr_cdf(&config);
        assert_eq!(rows.len(), 4 * 2);
        // rows are grouped by trial and ordered by the configured method list
        for t in 0..4 {
            assert_eq!(rows[2 * t].trial as usize, t);
            assert_eq!(rows[2 * t].method, Method::Sca);
            assert_eq!(rows[2 * t + 1].method, Method::PowerAlloc);
        }
    }

    #[test]
    fn reruns_are_bit_identical_except_wall_time() {
        let config = small_config();
        let a = run_scnr_cdf(&config);
        let b = run_scnr_cdf(&config);
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x.trial, y.trial);
            assert_eq!(x.achieved_scnr.to_bits(), y.achieved_scnr.to_bits());
            assert_eq!(x.sum_se.to_bits(), y.sum_se.to_bits());
            for (u, v) in x.per_user_sinr.iter().zip(y.per_user_sinr.iter()) {
                assert_eq!(u.to_bits(), v.to_bits());
            }
            assert_eq!(x.status, y.status);
            assert_eq!(x.iterations, y.iterations);
        }
    }

    #[test]
    fn sweep_covers_every_point_and_method() {
        let config = small_config();
        let (rows, aggregates) = run_se_sweep(&config, SweepAxis::NumAntennas);
        assert_eq!(rows.len(), 2 * 4 * 2); // points x trials x methods
        assert_eq!(aggregates.len(), 2 * 2);
        for agg in &aggregates {
            assert!(agg.feasible <= agg.trials);
            if agg.feasible > 0 {
                assert!(agg.mean_sum_se.is_finite());
            }
        }
    }

    #[test]
    fn csv_output_is_reproducible_modulo_wall_time() {
        let config = small_config();
        let rows = run_scnr_cdf(&config);
        let dir = std::env::temp_dir();
        let p1 = dir.join("isacsim_csv_a.csv");
        let p2 = dir.join("isacsim_csv_b.csv");
        write_trial_csv(&p1, &config, "scnr-cdf", &rows).unwrap();
        let rows2 = run_scnr_cdf(&config);
        write_trial_csv(&p2, &config, "scnr-cdf", &rows2).unwrap();
        let strip = |p: &Path| -> String {
            std::fs::read_to_string(p)
                .unwrap()
                .lines()
                .map(|l| {
                    if l.starts_with('#') || l.starts_with("trial,") {
                        l.to_string()
                    } else {
                        // drop the trailing wall-time column
                        let mut parts: Vec<&str> = l.split(',').collect();
                        parts.pop();
                        parts.join(",")
                    }
                })
                .collect::<Vec<_>>()
                .join("\n")
        };
        assert_eq!(strip(&p1), strip(&p2));
        let text = std::fs::read_to_string(&p1).unwrap();
        assert!(text.starts_with("# isacsim scnr-cdf\n# seed = 1\n"));
        let _ = std::fs::remove_file(&p1);
        let _ = std::fs::remove_file(&p2);
    }
}
