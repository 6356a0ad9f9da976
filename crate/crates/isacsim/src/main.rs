//! Command-line harness around the simulation library.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use isacsim::array::UlaConfig;
use isacsim::experiments::{
    run_scnr_cdf, run_se_sweep, run_validation, write_sweep_csv, write_trial_csv,
    ExperimentConfig, Method, SweepAxis, TrialRow,
};
use isacsim::optim::SolveStatus;
use isacsim::scene::{sample_scene, sample_users, trial_rng};

#[derive(Parser)]
#[command(
    name = "isacsim",
    about = "Distortion-aware ISAC precoding: validation suites and Monte Carlo sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Flat key = value config file; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Output CSV path.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Comma-separated method list (sca, power-alloc, sca-unaware, power-alloc-unaware).
    #[arg(long, global = true)]
    methods: Option<String>,
    /// Write the first sampled scene and user set as JSON to this path.
    #[arg(long, global = true, value_name = "PATH")]
    dump_scene: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the cross-module identity, approximation, and oracle suites.
    Validate,
    /// Per-trial SCNR samples for the configured antenna count.
    ScnrCdf,
    /// Mean sum-SE sweep over antennas or a distortion factor.
    SeSweep {
        #[arg(long, value_enum)]
        axis: AxisArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    M,
    KappaT,
    KappaR,
}

impl From<AxisArg> for SweepAxis {
    fn from(a: AxisArg) -> Self {
        match a {
            AxisArg::M => SweepAxis::NumAntennas,
            AxisArg::KappaT => SweepAxis::KappaT,
            AxisArg::KappaR => SweepAxis::KappaR,
        }
    }
}

fn resolve_config(cli: &Cli) -> Result<ExperimentConfig, String> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path).map_err(|e| e.to_string())?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(trials) = cli.trials {
        config.trials = trials;
    }
    if let Some(methods) = &cli.methods {
        let mut parsed = Vec::new();
        for item in methods.split(',') {
            let m = Method::parse(item).ok_or_else(|| format!("unknown method `{item}`"))?;
            parsed.push(m);
        }
        config.methods = parsed;
    }
    Ok(config)
}

fn dump_scene(config: &ExperimentConfig, path: &PathBuf) -> Result<(), String> {
    let params = config.scenario_params();
    let cfg = UlaConfig::new(config.num_antennas).map_err(|e| e.to_string())?;
    let mut rng = trial_rng(config.seed, 0);
    let scene = sample_scene(&mut rng, &params);
    let users = sample_users(&mut rng, &params, cfg);
    let doc = serde_json::json!({ "scene": scene, "users": users });
    std::fs::write(path, serde_json::to_string_pretty(&doc).unwrap())
        .map_err(|e| e.to_string())?;
    eprintln!("wrote scene dump to {}", path.display());
    Ok(())
}

fn feasibility_summary(rows: &[TrialRow], config: &ExperimentConfig) {
    for &method in &config.methods {
        let all: Vec<&TrialRow> = rows.iter().filter(|r| r.method == method).collect();
        let feasible: Vec<&TrialRow> = all
            .iter()
            .copied()
            .filter(|r| r.status != SolveStatus::Infeasible)
            .collect();
        let met = feasible
            .iter()
            .filter(|r| r.achieved_scnr >= config.gamma0 * (1.0 - 1e-3))
            .count();
        let mut scnrs: Vec<f64> = feasible.iter().map(|r| r.achieved_scnr).collect();
        scnrs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = if scnrs.is_empty() {
            f64::NAN
        } else {
            scnrs[scnrs.len() / 2]
        };
        println!(
            "{:22} feasible {:4}/{:4}  met-floor {:4}  median SCNR {:.4}",
            method.as_str(),
            feasible.len(),
            all.len(),
            met,
            median
        );
    }
}

fn run(cli: &Cli) -> Result<ExitCode, String> {
    let config = resolve_config(cli)?;
    if let Some(path) = &cli.dump_scene {
        dump_scene(&config, path)?;
    }
    match &cli.command {
        Command::Validate => {
            let results = run_validation(&config);
            let mut failures = 0;
            for check in &results {
                println!(
                    "{} {:32} measured {:12.5e}  tolerance {:9.2e}",
                    if check.pass { "PASS" } else { "FAIL" },
                    check.name,
                    check.measured,
                    check.tolerance
                );
                if !check.pass {
                    failures += 1;
                }
            }
            println!(
                "{} checks, {} failed",
                results.len(),
                failures
            );
            Ok(if failures == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::ScnrCdf => {
            let rows = run_scnr_cdf(&config);
            feasibility_summary(&rows, &config);
            let out = cli
                .out
                .clone()
                .unwrap_or_else(|| PathBuf::from("scnr_cdf.csv"));
            write_trial_csv(&out, &config, "scnr-cdf", &rows).map_err(|e| e.to_string())?;
            println!("wrote {} rows to {}", rows.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::SeSweep { axis } => {
            let axis = SweepAxis::from(*axis);
            let (rows, aggregates) = run_se_sweep(&config, axis);
            for agg in &aggregates {
                println!(
                    "{:22} {}={:<10} feasible {:4}/{:4}  mean SE {:8.3}  stderr {:.3}",
                    agg.method.as_str(),
                    axis.as_str(),
                    agg.sweep_value,
                    agg.feasible,
                    agg.trials,
                    agg.mean_sum_se,
                    agg.stderr_sum_se
                );
            }
            let out = cli.out.clone().unwrap_or_else(|| {
                PathBuf::from(format!("se_sweep_{}.csv", axis.as_str().replace('-', "_")))
            });
            write_sweep_csv(&out, &config, &format!("se-sweep --axis {}", axis.as_str()), &aggregates)
                .map_err(|e| e.to_string())?;
            println!(
                "wrote {} aggregate rows ({} trial rows evaluated) to {}",
                aggregates.len(),
                rows.len(),
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
