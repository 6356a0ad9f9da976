//! Experiment configuration: defaults, flat key-value config files, and the
//! resolved-config header embedded in every CSV output.

use std::fmt;
use std::path::Path;
use thiserror::Error;

use crate::metrics::{Combiner, HardwareProfile};
use crate::optim::ScaOptions;
use crate::scene::ScenarioParams;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: expected `key = value`, got `{text}`")]
    BadLine { line: usize, text: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("bad value for `{key}`: {value}")]
    BadValue { key: String, value: String },
}

/// Design / evaluation methods of the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Sca,
    PowerAlloc,
    ScaUnaware,
    PowerAllocUnaware,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Sca,
        Method::PowerAlloc,
        Method::ScaUnaware,
        Method::PowerAllocUnaware,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Sca => "sca",
            Method::PowerAlloc => "power-alloc",
            Method::ScaUnaware => "sca-unaware",
            Method::PowerAllocUnaware => "power-alloc-unaware",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        match s.trim() {
            "sca" => Some(Method::Sca),
            "power-alloc" | "power_alloc" => Some(Method::PowerAlloc),
            "sca-unaware" | "sca_unaware" => Some(Method::ScaUnaware),
            "power-alloc-unaware" | "power_alloc_unaware" => Some(Method::PowerAllocUnaware),
            _ => None,
        }
    }

    /// Whether the designer sees the true distortion factors.
    pub fn distortion_aware(&self) -> bool {
        matches!(self, Method::Sca | Method::PowerAlloc)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Full experiment configuration; every field can be set from the config
/// file and overridden from the command line.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub trials: u64,
    pub num_antennas: usize,
    pub gamma0: f64,
    pub kappa_t: f64,
    pub kappa_r: f64,
    pub rho_tot_w: f64,
    pub carrier_hz: f64,
    pub num_users: usize,
    pub num_clutter: usize,
    pub cell_radius_m: f64,
    pub target_range_min_m: f64,
    pub target_range_max_m: f64,
    pub clutter_range_min_m: f64,
    pub clutter_range_max_m: f64,
    pub clutter_rcs_min_db: f64,
    pub clutter_rcs_max_db: f64,
    pub target_rcs_m2: f64,
    /// Signal bandwidth; recorded for provenance, not used by any formula
    /// (noise is specified directly in dBm).
    pub bandwidth_hz: f64,
    pub noise_ue_dbm: f64,
    pub noise_bs_dbm: f64,
    pub angular_spread_deg: f64,
    pub min_separation_deg: f64,
    pub mmse_reg_scale: f64,
    pub methods: Vec<Method>,
    pub combiner: Combiner,
    pub m_values: Vec<usize>,
    pub kappa_t_values: Vec<f64>,
    pub kappa_r_values: Vec<f64>,
    pub sca_max_iterations: usize,
    pub sca_objective_tol: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            trials: 200,
            num_antennas: 100,
            gamma0: 0.5,
            kappa_t: 0.01,
            kappa_r: 0.01,
            rho_tot_w: 10_000.0,
            carrier_hz: 28e9,
            num_users: 8,
            num_clutter: 5,
            cell_radius_m: 1000.0,
            target_range_min_m: 400.0,
            target_range_max_m: 500.0,
            clutter_range_min_m: 20.0,
            clutter_range_max_m: 100.0,
            clutter_rcs_min_db: 10.0,
            clutter_rcs_max_db: 20.0,
            target_rcs_m2: 1.0,
            bandwidth_hz: 50e6,
            noise_ue_dbm: -90.0,
            noise_bs_dbm: -90.0,
            angular_spread_deg: 5.0,
            min_separation_deg: 5.0,
            mmse_reg_scale: 1.0,
            methods: Method::ALL.to_vec(),
            combiner: Combiner::ClutterAware,
            m_values: vec![16, 32, 64, 128],
            kappa_t_values: vec![0.0, 0.005, 0.01, 0.02, 0.05],
            kappa_r_values: vec![0.0, 0.005, 0.01, 0.02, 0.05],
            sca_max_iterations: 50,
            sca_objective_tol: 1e-6,
        }
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

impl ExperimentConfig {
    /// Parse a flat `key = value` config file; `#` starts a comment.
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let mut config = Self::default();
        let text = std::fs::read_to_string(path)?;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::BadLine {
                    line: idx + 1,
                    text: raw.to_string(),
                });
            };
            config.set(key.trim(), value.trim())?;
        }
        Ok(config)
    }

    /// Set one field from its config key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
            value.parse().map_err(|_| ConfigError::BadValue {
                key: key.to_string(),
                value: value.to_string(),
            })
        }
        fn float_list(key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
            value.split(',').map(|v| num(key, v.trim())).collect()
        }
        match key {
            "seed" => self.seed = num(key, value)?,
            "trials" => self.trials = num(key, value)?,
            "num_antennas" => self.num_antennas = num(key, value)?,
            "gamma0" => self.gamma0 = num(key, value)?,
            "kappa_t" => self.kappa_t = num(key, value)?,
            "kappa_r" => self.kappa_r = num(key, value)?,
            "rho_tot_w" => self.rho_tot_w = num(key, value)?,
            "carrier_hz" => self.carrier_hz = num(key, value)?,
            "num_users" => self.num_users = num(key, value)?,
            "num_clutter" => self.num_clutter = num(key, value)?,
            "cell_radius_m" => self.cell_radius_m = num(key, value)?,
            "target_range_min_m" => self.target_range_min_m = num(key, value)?,
            "target_range_max_m" => self.target_range_max_m = num(key, value)?,
            "clutter_range_min_m" => self.clutter_range_min_m = num(key, value)?,
            "clutter_range_max_m" => self.clutter_range_max_m = num(key, value)?,
            "clutter_rcs_min_db" => self.clutter_rcs_min_db = num(key, value)?,
            "clutter_rcs_max_db" => self.clutter_rcs_max_db = num(key, value)?,
            "target_rcs_m2" => self.target_rcs_m2 = num(key, value)?,
            "bandwidth_hz" => self.bandwidth_hz = num(key, value)?,
            "noise_ue_dbm" => self.noise_ue_dbm = num(key, value)?,
            "noise_bs_dbm" => self.noise_bs_dbm = num(key, value)?,
            "angular_spread_deg" => self.angular_spread_deg = num(key, value)?,
            "min_separation_deg" => self.min_separation_deg = num(key, value)?,
            "mmse_reg_scale" => self.mmse_reg_scale = num(key, value)?,
            "methods" => {
                let mut methods = Vec::new();
                for item in value.split(',') {
                    let m = Method::parse(item).ok_or_else(|| ConfigError::BadValue {
                        key: key.to_string(),
                        value: item.to_string(),
                    })?;
                    methods.push(m);
                }
                self.methods = methods;
            }
            "combiner" => {
                self.combiner = match value {
                    "clutter-aware" | "clutter_aware" => Combiner::ClutterAware,
                    "matched-filter" | "matched_filter" => Combiner::MatchedFilter,
                    _ => {
                        return Err(ConfigError::BadValue {
                            key: key.to_string(),
                            value: value.to_string(),
                        })
                    }
                };
            }
            "m_values" => {
                self.m_values = value
                    .split(',')
                    .map(|v| num(key, v.trim()))
                    .collect::<Result<_, _>>()?;
            }
            "kappa_t_values" => self.kappa_t_values = float_list(key, value)?,
            "kappa_r_values" => self.kappa_r_values = float_list(key, value)?,
            "sca_max_iterations" => self.sca_max_iterations = num(key, value)?,
            "sca_objective_tol" => self.sca_objective_tol = num(key, value)?,
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Scenario distributions implied by this config.
    pub fn scenario_params(&self) -> ScenarioParams {
        ScenarioParams {
            num_users: self.num_users,
            num_clutter: self.num_clutter,
            carrier_hz: self.carrier_hz,
            cell_radius_m: self.cell_radius_m,
            target_range_m: (self.target_range_min_m, self.target_range_max_m),
            clutter_range_m: (self.clutter_range_min_m, self.clutter_range_max_m),
            clutter_rcs_db: (self.clutter_rcs_min_db, self.clutter_rcs_max_db),
            target_rcs_m2: self.target_rcs_m2,
            angular_spread_deg: self.angular_spread_deg,
            min_separation_deg: self.min_separation_deg,
            noise_variance_w: dbm_to_watts(self.noise_ue_dbm),
        }
    }

    /// Hardware profile with overridable distortion factors.
    pub fn hardware(&self, kappa_t: f64, kappa_r: f64) -> HardwareProfile {
        HardwareProfile {
            kappa_t,
            kappa_r,
            rho_tot_w: self.rho_tot_w,
            sigma_nu_sq_w: dbm_to_watts(self.noise_ue_dbm),
            sigma_mu_sq_w: dbm_to_watts(self.noise_bs_dbm),
        }
    }

    pub fn sca_options(&self) -> ScaOptions {
        ScaOptions {
            max_iterations: self.sca_max_iterations,
            objective_tol: self.sca_objective_tol,
            ..ScaOptions::default()
        }
    }

    /// The resolved configuration as `key = value` lines, in a fixed order.
    pub fn header_lines(&self) -> Vec<String> {
        let methods = self
            .methods
            .iter()
            .map(|m| m.as_str())
            .collect::<Vec<_>>()
            .join(",");
        let combiner = match self.combiner {
            Combiner::ClutterAware => "clutter-aware",
            Combiner::MatchedFilter => "matched-filter",
        };
        let join_f = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x}"))
                .collect::<Vec<_>>()
                .join(",")
        };
        let join_u = |v: &[usize]| {
            v.iter()
                .map(|x| format!("{x}"))
                .collect::<Vec<_>>()
                .join(",")
        };
        vec![
            format!("seed = {}", self.seed),
            format!("trials = {}", self.trials),
            format!("num_antennas = {}", self.num_antennas),
            format!("gamma0 = {}", self.gamma0),
            format!("kappa_t = {}", self.kappa_t),
            format!("kappa_r = {}", self.kappa_r),
            format!("rho_tot_w = {}", self.rho_tot_w),
            format!("carrier_hz = {}", self.carrier_hz),
            format!("num_users = {}", self.num_users),
            format!("num_clutter = {}", self.num_clutter),
            format!("cell_radius_m = {}", self.cell_radius_m),
            format!("target_range_min_m = {}", self.target_range_min_m),
            format!("target_range_max_m = {}", self.target_range_max_m),
            format!("clutter_range_min_m = {}", self.clutter_range_min_m),
            format!("clutter_range_max_m = {}", self.clutter_range_max_m),
            format!("clutter_rcs_min_db = {}", self.clutter_rcs_min_db),
            format!("clutter_rcs_max_db = {}", self.clutter_rcs_max_db),
            format!("target_rcs_m2 = {}", self.target_rcs_m2),
            format!("bandwidth_hz = {}", self.bandwidth_hz),
            format!("noise_ue_dbm = {}", self.noise_ue_dbm),
            format!("noise_bs_dbm = {}", self.noise_bs_dbm),
            format!("angular_spread_deg = {}", self.angular_spread_deg),
            format!("min_separation_deg = {}", self.min_separation_deg),
            format!("mmse_reg_scale = {}", self.mmse_reg_scale),
            format!("methods = {methods}"),
            format!("combiner = {combiner}"),
            format!("m_values = {}", join_u(&self.m_values)),
            format!("kappa_t_values = {}", join_f(&self.kappa_t_values)),
            format!("kappa_r_values = {}", join_f(&self.kappa_r_values)),
            format!("sca_max_iterations = {}", self.sca_max_iterations),
            format!("sca_objective_tol = {}", self.sca_objective_tol),
        ]
    }
}
