//! Run configuration: presets, TOML files and flags, layered in that order.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

/// Seed used when none is given anywhere.
pub const DEFAULT_SEED: u64 = 20_180_417;

#[derive(Debug)]
pub enum ConfigError {
    Invalid(String),
    /// A required option is missing; carries the subcommand path for usage.
    Missing { command: String, option: &'static str },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Invalid(m) => f.write_str(m),
            ConfigError::Missing { command, option } => write!(f, "`{command}` requires --{option}"),
        }
    }
}

pub fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// A grid `start:stop:count` (inclusive, evenly spaced), or `[start, stop, count]` in TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Text(String),
    Triple(f64, f64, usize),
}

impl GridSpec {
    pub fn values(&self) -> Result<Vec<f64>, ConfigError> {
        let (a, b, n) = match self {
            GridSpec::Triple(a, b, n) => (*a, *b, *n),
            GridSpec::Text(s) => {
                let parts: Vec<&str> = s.split(':').map(str::trim).collect();
                if parts.len() != 3 {
                    return Err(invalid(format!("grid '{s}' must look like start:stop:count")));
                }
                let num = |p: &str| p.parse::<f64>().map_err(|_| invalid(format!("bad number '{p}' in grid '{s}'")));
                let n = parts[2].parse::<usize>().map_err(|_| invalid(format!("bad count '{}' in grid '{s}'", parts[2])))?;
                (num(parts[0])?, num(parts[1])?, n)
            }
        };
        if !(a.is_finite() && b.is_finite()) {
            return Err(invalid("grid bounds must be finite"));
        }
        match n {
            0 => Err(invalid("grid count must be at least 1")),
            1 => Ok(vec![a]),
            _ if b <= a => Err(invalid(format!("grid {a}:{b}:{n} is not increasing"))),
            // Weighted form: both endpoints are exact.
            _ => Ok((0..n).map(|i| (a * (n - 1 - i) as f64 + b * i as f64) / (n - 1) as f64).collect()),
        }
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridSpec::Text(s) => f.write_str(s),
            GridSpec::Triple(a, b, n) => write!(f, "{a}:{b}:{n}"),
        }
    }
}

/// A list `v1,v2,...`, or a number / array in TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ValueList {
    One(f64),
    Many(Vec<f64>),
    Text(String),
}

impl ValueList {
    pub fn values(&self) -> Result<Vec<f64>, ConfigError> {
        let v = match self {
            ValueList::One(x) => vec![*x],
            ValueList::Many(v) => v.clone(),
            ValueList::Text(s) => s
                .split(',')
                .map(|p| p.trim().parse::<f64>().map_err(|_| invalid(format!("bad number '{p}' in list '{s}'"))))
                .collect::<Result<_, _>>()?,
        };
        if v.is_empty() {
            return Err(invalid("empty value list"));
        }
        Ok(v)
    }
}

/// Every setting a run can take. Unset fields fall through to the next
/// layer (flags, then config file, then preset).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Subcommand path, e.g. `"wigner curves"`.
    pub command: Option<String>,
    pub prior: Option<String>,
    pub pu: Option<String>,
    pub pv: Option<String>,
    pub model: Option<String>,
    pub gamma_grid: Option<GridSpec>,
    pub lambda_grid: Option<GridSpec>,
    pub p_grid: Option<GridSpec>,
    pub q_grid: Option<GridSpec>,
    pub alpha_grid: Option<GridSpec>,
    pub epsilon_grid: Option<GridSpec>,
    pub lambda: Option<ValueList>,
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    pub q0: Option<ValueList>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub iters: Option<usize>,
    pub seeds: Option<usize>,
    pub trials: Option<usize>,
    pub h: Option<f64>,
    pub seed: Option<u64>,
    pub quad_order: Option<usize>,
    pub threads: Option<usize>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($f:ident),*) => {
        RunConfig { $($f: $top.$f.or($base.$f)),* }
    };
}

impl RunConfig {
    /// `top` wins wherever it is set.
    pub fn overlay(self, top: RunConfig) -> RunConfig {
        let base = self;
        overlay!(base, top; command, prior, pu, pv, model, gamma_grid, lambda_grid, p_grid, q_grid,
            alpha_grid, epsilon_grid, lambda, alpha, gamma, q0, n, m, iters, seeds, trials, h, seed,
            quad_order, threads, output, format)
    }

    pub fn from_toml(text: &str) -> Result<RunConfig, ConfigError> {
        toml::from_str(text).map_err(|e| invalid(format!("bad config file: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Named presets reproducing the parameter choices of standard figures.
pub fn presets() -> Vec<(&'static str, RunConfig)> {
    let text = |s: &str| Some(GridSpec::Text(s.into()));
    vec![
        (
            "mmse_xx",
            RunConfig {
                command: Some("wigner curves".into()),
                prior: Some("sbm:p=0.05".into()),
                lambda_grid: text("0.1:2.0:100"),
                ..Default::default()
            },
        ),
        (
            "free_energy_landscape",
            RunConfig {
                command: Some("wigner landscape".into()),
                prior: Some("sbm:p=0.05".into()),
                // impossible, near lambda_c, hard, spectral threshold, easy
                lambda: Some(ValueList::Many(vec![0.4, 0.6, 0.8, 1.0, 1.5])),
                q_grid: text("0:1:201"),
                ..Default::default()
            },
        ),
        (
            "phase_diagram",
            RunConfig {
                command: Some("wigner phase-diagram".into()),
                p_grid: text("0.01:0.49:49"),
                lambda_grid: text("0.1:1.5:141"),
                ..Default::default()
            },
        ),
        (
            "mmse_spiked_covariance",
            RunConfig {
                command: Some("wishart curves".into()),
                pu: Some("sparse:s=0.15".into()),
                pv: Some("gaussian".into()),
                lambda: Some(ValueList::One(1.0)),
                alpha_grid: text("0.05:4:80"),
                ..Default::default()
            },
        ),
    ]
}

pub fn preset(name: &str) -> Result<RunConfig, ConfigError> {
    presets()
        .into_iter()
        .find(|(n, _)| *n == name)
        .map(|(_, c)| c)
        .ok_or_else(|| {
            let names: Vec<&str> = presets().iter().map(|p| p.0).collect();
            invalid(format!("unknown preset '{name}' (available: {})", names.join(", ")))
        })
}
