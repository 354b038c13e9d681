//! Command-line grammar. Every subcommand lowers to a partial [`RunConfig`].

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{Format, GridSpec, RunConfig, ValueList};

#[derive(Debug, Parser)]
#[command(name = "spikelab", version, about = "Limits and algorithms for rank-one spiked matrix estimation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,
    /// TOML file with run settings (overridden by flags).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Named preset (overridden by the config file and flags).
    #[arg(long, global = true)]
    pub preset: Option<String>,
    /// Output file, written atomically; stdout when omitted.
    #[arg(short = 'o', long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (fallback: SPIKELAB_THREADS, then all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Use fixed Gauss-Hermite quadrature of this order instead of adaptive.
    #[arg(long, global = true)]
    pub quad_order: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scalar channel: psi, psi', mmse over a gamma grid.
    Scalar(ScalarArgs),
    #[command(subcommand)]
    Wigner(WignerCommand),
    #[command(subcommand)]
    Wishart(WishartCommand),
    /// State-evolution traces.
    Se(SeArgs),
    #[command(subcommand)]
    Amp(AmpCommand),
    #[command(subcommand)]
    Pca(PcaCommand),
    #[command(subcommand)]
    Oracle(OracleCommand),
    /// List presets as TOML.
    Presets,
}

#[derive(Debug, Subcommand)]
pub enum WignerCommand {
    /// q*, MMSE, PCA error, mutual information and phase over lambda.
    Curves(WignerCurvesArgs),
    /// The potential -F(lambda, q) over a q grid.
    Landscape(LandscapeArgs),
    /// Phase of the SBM prior over (p, lambda).
    PhaseDiagram(PhaseDiagramArgs),
    /// Information-theoretic threshold lambda_c.
    Threshold(PriorArgs),
}

#[derive(Debug, Subcommand)]
pub enum WishartCommand {
    /// Limits over alpha at fixed lambda.
    Curves(WishartCurvesArgs),
    /// Mixed model with side information on U U^T.
    Mixed(MixedArgs),
}

#[derive(Debug, Subcommand)]
pub enum AmpCommand {
    /// AMP on synthetic spiked Wigner instances.
    Run(AmpRunArgs),
}

#[derive(Debug, Subcommand)]
pub enum PcaCommand {
    /// Top-eigenvector PCA on synthetic spiked Wigner instances.
    Run(PcaRunArgs),
}

#[derive(Debug, Subcommand)]
pub enum OracleCommand {
    /// Exact-enumeration F_n and MMSE_n over lambda.
    Wigner(OracleWignerArgs),
    /// Overlap variance under the pinning channel over epsilon.
    Pin(OraclePinArgs),
    /// Planted random energy model.
    Rem(OracleRemArgs),
    /// Free-energy transport bound under quantization.
    Wasserstein(OracleWassersteinArgs),
}

fn grid(s: Option<String>) -> Option<GridSpec> {
    s.map(GridSpec::Text)
}

fn list(s: Option<String>) -> Option<ValueList> {
    s.map(ValueList::Text)
}

fn base(command: &str) -> RunConfig {
    RunConfig { command: Some(command.into()), ..Default::default() }
}

#[derive(Debug, Args)]
pub struct PriorArgs {
    #[arg(long)]
    pub prior: Option<String>,
}

#[derive(Debug, Args)]
pub struct ScalarArgs {
    #[arg(long)]
    pub prior: Option<String>,
    /// start:stop:count
    #[arg(long)]
    pub gamma_grid: Option<String>,
}

#[derive(Debug, Args)]
pub struct WignerCurvesArgs {
    #[arg(long)]
    pub prior: Option<String>,
    #[arg(long)]
    pub lambda_grid: Option<String>,
}

#[derive(Debug, Args)]
pub struct LandscapeArgs {
    #[arg(long)]
    pub prior: Option<String>,
    /// Comma-separated lambda values.
    #[arg(long)]
    pub lambda: Option<String>,
    #[arg(long)]
    pub q_grid: Option<String>,
}

#[derive(Debug, Args)]
pub struct PhaseDiagramArgs {
    #[arg(long)]
    pub p_grid: Option<String>,
    #[arg(long)]
    pub lambda_grid: Option<String>,
}

#[derive(Debug, Args)]
pub struct WishartCurvesArgs {
    #[arg(long)]
    pub pu: Option<String>,
    #[arg(long)]
    pub pv: Option<String>,
    #[arg(long)]
    pub lambda: Option<String>,
    #[arg(long)]
    pub alpha_grid: Option<String>,
}

#[derive(Debug, Args)]
pub struct MixedArgs {
    #[arg(long)]
    pub pu: Option<String>,
    #[arg(long)]
    pub pv: Option<String>,
    #[arg(long)]
    pub lambda: Option<String>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SeArgs {
    /// wigner (default) or wishart
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub prior: Option<String>,
    #[arg(long)]
    pub pu: Option<String>,
    #[arg(long)]
    pub pv: Option<String>,
    #[arg(long)]
    pub lambda: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub iters: Option<usize>,
    /// Start: `q0` (wigner) or `q_u,q_v` (wishart).
    #[arg(long)]
    pub q0: Option<String>,
}

#[derive(Debug, Args)]
pub struct AmpRunArgs {
    #[arg(long)]
    pub prior: Option<String>,
    #[arg(long)]
    pub lambda: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub iters: Option<usize>,
    /// Number of instances; seeds run from --seed upward.
    #[arg(long)]
    pub seeds: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PcaRunArgs {
    #[arg(long)]
    pub prior: Option<String>,
    #[arg(long)]
    pub lambda: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seeds: Option<usize>,
}

#[derive(Debug, Args)]
pub struct OracleWignerArgs {
    #[arg(long)]
    pub prior: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub lambda_grid: Option<String>,
    #[arg(long)]
    pub trials: Option<usize>,
}

#[derive(Debug, Args)]
pub struct OraclePinArgs {
    #[arg(long)]
    pub prior: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub lambda: Option<String>,
    #[arg(long)]
    pub epsilon_grid: Option<String>,
    #[arg(long)]
    pub trials: Option<usize>,
}

#[derive(Debug, Args)]
pub struct OracleRemArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub lambda_grid: Option<String>,
    #[arg(long)]
    pub trials: Option<usize>,
}

#[derive(Debug, Args)]
pub struct OracleWassersteinArgs {
    #[arg(long)]
    pub prior: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub lambda: Option<String>,
    /// Quantization level: atoms move to the grid of step K/m.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
}

impl Command {
    /// The flag layer of the configuration. `None` for `presets`.
    pub fn to_config(self) -> Option<RunConfig> {
        Some(match self {
            Command::Presets => return None,
            Command::Scalar(a) => RunConfig { prior: a.prior, gamma_grid: grid(a.gamma_grid), ..base("scalar") },
            Command::Wigner(WignerCommand::Curves(a)) => {
                RunConfig { prior: a.prior, lambda_grid: grid(a.lambda_grid), ..base("wigner curves") }
            }
            Command::Wigner(WignerCommand::Landscape(a)) => RunConfig {
                prior: a.prior,
                lambda: list(a.lambda),
                q_grid: grid(a.q_grid),
                ..base("wigner landscape")
            },
            Command::Wigner(WignerCommand::PhaseDiagram(a)) => RunConfig {
                p_grid: grid(a.p_grid),
                lambda_grid: grid(a.lambda_grid),
                ..base("wigner phase-diagram")
            },
            Command::Wigner(WignerCommand::Threshold(a)) => RunConfig { prior: a.prior, ..base("wigner threshold") },
            Command::Wishart(WishartCommand::Curves(a)) => RunConfig {
                pu: a.pu,
                pv: a.pv,
                lambda: list(a.lambda),
                alpha_grid: grid(a.alpha_grid),
                ..base("wishart curves")
            },
            Command::Wishart(WishartCommand::Mixed(a)) => RunConfig {
                pu: a.pu,
                pv: a.pv,
                lambda: list(a.lambda),
                gamma: a.gamma,
                alpha: a.alpha,
                ..base("wishart mixed")
            },
            Command::Se(a) => RunConfig {
                model: a.model,
                prior: a.prior,
                pu: a.pu,
                pv: a.pv,
                lambda: list(a.lambda),
                alpha: a.alpha,
                iters: a.iters,
                q0: list(a.q0),
                ..base("se")
            },
            Command::Amp(AmpCommand::Run(a)) => RunConfig {
                prior: a.prior,
                lambda: list(a.lambda),
                n: a.n,
                iters: a.iters,
                seeds: a.seeds,
                ..base("amp run")
            },
            Command::Pca(PcaCommand::Run(a)) => {
                RunConfig { prior: a.prior, lambda: list(a.lambda), n: a.n, seeds: a.seeds, ..base("pca run") }
            }
            Command::Oracle(OracleCommand::Wigner(a)) => RunConfig {
                prior: a.prior,
                n: a.n,
                lambda_grid: grid(a.lambda_grid),
                trials: a.trials,
                ..base("oracle wigner")
            },
            Command::Oracle(OracleCommand::Pin(a)) => RunConfig {
                prior: a.prior,
                n: a.n,
                lambda: list(a.lambda),
                epsilon_grid: grid(a.epsilon_grid),
                trials: a.trials,
                ..base("oracle pin")
            },
            Command::Oracle(OracleCommand::Rem(a)) => RunConfig {
                n: a.n,
                lambda_grid: grid(a.lambda_grid),
                trials: a.trials,
                ..base("oracle rem")
            },
            Command::Oracle(OracleCommand::Wasserstein(a)) => RunConfig {
                prior: a.prior,
                n: a.n,
                lambda: list(a.lambda),
                m: a.m,
                trials: a.trials,
                ..base("oracle wasserstein")
            },
        })
    }
}

impl Cli {
    /// Global flags as a configuration layer.
    pub fn global_config(&self) -> RunConfig {
        RunConfig {
            output: self.output.clone(),
            format: self.format,
            seed: self.seed,
            threads: self.threads,
            quad_order: self.quad_order,
            ..Default::default()
        }
    }
}
