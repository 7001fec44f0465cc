//! Command-line front end: scenario files, parallel drivers and the
//! `params`, `corr`, `validate`, `sweep` and `simulate` subcommands.

pub mod commands;
pub mod error;
pub mod output;
pub mod parallel;
pub mod scenario;

use std::path::PathBuf;

use aloha_corr_core::oracle::EXACT_BUDGET;
use aloha_corr_core::slotmodel::DEFAULT_MAX_NODES;
use clap::{Args, Parser, Subcommand, ValueEnum};

pub use error::{CliError, CliResult, ExitKind};
pub use scenario::Scenario;

#[derive(Debug, Parser)]
#[command(name = "aloha-corr", version, about = "Link success statistics and consensus bounds for slotted ALOHA")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// SINR threshold and noise power for each slot count.
    Params(ScenarioArgs),
    /// Success probabilities, covariance and correlation matrices.
    Corr(CorrArgs),
    /// Compare the analytic moments with an oracle; exit 1 on failure.
    Validate(ValidateArgs),
    /// Rate bounds over a gain grid.
    Sweep(SweepArgs),
    /// Simulated mean-square disagreement with the bounds overlaid.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    /// Scenario JSON file.
    #[arg(long)]
    pub scenario: PathBuf,
    /// Slot counts, overriding the scenario.
    #[arg(long, value_delimiter = ',')]
    pub m: Vec<u32>,
    /// Nakagami shapes applied to every node.
    #[arg(long, value_delimiter = ',')]
    pub shape: Vec<f64>,
    /// Fixed SINR threshold instead of the derived one.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Largest network accepted by the analytic model.
    #[arg(long, default_value_t = DEFAULT_MAX_NODES)]
    pub max_nodes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    /// Half duplex.
    Hd,
    /// Full duplex.
    Fd,
    /// Independent links with the half-duplex success probabilities.
    Uhbm,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Hd => "hd",
            Model::Fd => "fd",
            Model::Uhbm => "uhbm",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Enumeration of all slot assignments.
    Exact,
    /// Monte Carlo over frames.
    Mc,
}

#[derive(Debug, Clone, Args)]
pub struct CorrArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, value_enum, default_value_t = Model::Hd)]
    pub model: Model,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, value_enum, default_value_t = Model::Hd)]
    pub model: Model,
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    pub mode: Mode,
    /// Largest number of slot assignments the exact oracle enumerates.
    #[arg(long, default_value_t = EXACT_BUDGET)]
    pub budget: u64,
    /// Monte Carlo frames.
    #[arg(long, default_value_t = 1_000_000)]
    pub frames: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Model::Hd, Model::Uhbm])]
    pub models: Vec<Model>,
    /// Absolute gains.
    #[arg(long, value_delimiter = ',', conflicts_with = "eps_rel")]
    pub eps: Vec<f64>,
    /// Gains relative to the minimiser of the essential spectral radius.
    #[arg(long, value_delimiter = ',')]
    pub eps_rel: Vec<f64>,
    /// Horizon of the rate bounds.
    #[arg(long, default_value_t = 250)]
    pub k: u32,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, value_enum, default_value_t = Model::Hd)]
    pub model: Model,
    #[arg(long, conflicts_with = "eps_rel")]
    pub eps: Option<f64>,
    /// Gain relative to the minimiser of the essential spectral radius.
    #[arg(long)]
    pub eps_rel: Option<f64>,
    #[arg(long, default_value_t = 20)]
    pub k: u32,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Initial state: `e<i>` (1-based unit vector) or comma-separated values.
    #[arg(long, default_value = "e1")]
    pub x0: String,
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Params(a) => commands::params(&a),
        Command::Corr(a) => commands::corr(&a),
        Command::Validate(a) => commands::validate(&a),
        Command::Sweep(a) => commands::sweep(&a),
        Command::Simulate(a) => commands::simulate(&a),
    }
}
