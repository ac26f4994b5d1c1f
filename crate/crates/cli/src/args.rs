use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Parser)]
#[command(
    name = "phaselim",
    version,
    about = "Support recovery limits for sparse phase retrieval"
)]
pub struct Cli {
    /// Directory receiving data files and the run manifest.
    #[arg(long, global = true, default_value = "phaselim-out")]
    pub out_dir: PathBuf,

    /// Worker threads for Monte Carlo work (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Master seed.
    #[arg(long, global = true, env = "PHASELIM_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    /// Flat key-value file (TOML or JSON) whose keys mirror the flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Asymptotic achievability and converse thresholds.
    Thresholds(ThresholdsArgs),
    /// Normalized threshold curves against SNR, one CSV per signal family.
    Figure(FigureArgs),
    /// Monte Carlo and numerical verification suites.
    Verify(VerifyArgs),
    /// Empirical error curves from exhaustive decoding.
    Simulate(SimulateArgs),
    /// Re-run a command from its manifest and compare output digests.
    #[serde(skip)]
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Thresholds(_) => "thresholds",
            Command::Figure(_) => "figure",
            Command::Verify(_) => "verify",
            Command::Simulate(_) => "simulate",
            Command::Replay(_) => "replay",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelArg {
    Gaussian,
    Flat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    Asymptotic,
    FloorExact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuiteArg {
    Sandwich,
    Concentration,
    Gconv,
    Logconcavity,
    NegativeControl,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecoderArg {
    FlatMl,
    McMarginal,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ThresholdsArgs {
    #[arg(long, value_enum)]
    pub model: ModelArg,
    /// Ambient dimension.
    #[arg(long)]
    pub p: usize,
    /// Sparsity.
    #[arg(long)]
    pub k: usize,
    /// Signal energy ‖β‖².
    #[arg(long)]
    pub c_beta: f64,
    /// Noise standard deviation.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Tolerated fraction of missed support, in (0, 1).
    #[arg(long, value_parser = open_unit)]
    pub alpha_star: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Asymptotic)]
    pub mode: ModeArg,
    /// Grid step of the ratio maximization.
    #[arg(long, default_value_t = 1e-3)]
    pub alpha_step: f64,
    /// Print a JSON record instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct FigureArgs {
    #[arg(long, value_parser = open_unit, default_value_t = 0.1)]
    pub alpha_star: f64,
    #[arg(long, default_value_t = -10.0, allow_negative_numbers = true)]
    pub snr_min: f64,
    #[arg(long, default_value_t = 40.0, allow_negative_numbers = true)]
    pub snr_max: f64,
    #[arg(long, default_value_t = 1.0)]
    pub snr_step: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub alpha_step: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = SuiteArg::All)]
    pub suite: SuiteArg,
    /// Overrides the Monte Carlo trial count of the sandwich and concentration checks.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Standard error above which a verdict is inconclusive.
    #[arg(long, default_value_t = phaselim_core::verify::DEFAULT_RESOLUTION)]
    pub resolution: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = ModelArg::Flat)]
    pub model: ModelArg,
    #[arg(long)]
    pub p: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 1.0)]
    pub c_beta: f64,
    /// Noise standard deviation.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, value_parser = half_open_unit, default_value_t = 0.5)]
    pub alpha_star: f64,
    /// Measurement counts, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "5,10,15,20,25,30,35,40,45,50")]
    pub n_grid: Vec<usize>,
    #[arg(long, default_value_t = 400)]
    pub trials: usize,
    /// Defaults to flat-ml for flat signals and mc-marginal for Gaussian ones.
    #[arg(long, value_enum)]
    pub decoder: Option<DecoderArg>,
    #[arg(long, default_value_t = phaselim_core::simulator::DEFAULT_MC_SAMPLES)]
    pub mc_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct ReplayArgs {
    /// Manifest written by an earlier run.
    pub manifest: PathBuf,
}

fn open_unit(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} is outside the open interval (0, 1)"))
    }
}

fn half_open_unit(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} is outside (0, 1]"))
    }
}
