use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "stopflow",
    version,
    about = "Best-choice stopping on powers of a directed path"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub flags: Flags,
}

/// Flags shared by every subcommand. All are optional here so that a config
/// file can fill the gaps; defaults are applied during resolution.
#[derive(Debug, Default, Clone, Args)]
pub struct Flags {
    /// Vertex count; `scaling` also accepts `A..B`, `A..B:STEP` or `A,B,C`.
    #[arg(long, global = true)]
    pub n: Option<String>,
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Master seed (falls back to STOPFLOW_SEED, then 0).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub trials: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub strategy: Option<StrategyName>,
    /// Rejection probability for tau_p_star.
    #[arg(long, global = true)]
    pub p: Option<f64>,
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    /// Threshold for classical_threshold: a number or `auto` for floor(n/e).
    #[arg(long, global = true)]
    pub r: Option<String>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Flat `key=value` file; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Exact success probability of tau_n with the per-m breakdown.
    Exact,
    /// Monte Carlo estimate for one strategy.
    Simulate,
    /// Run the oracle suite; exits 2 on any failed check.
    Verify(VerifyArgs),
    /// Exact probability, scaled value and bounds over a grid of n.
    Scaling(ScalingArgs),
    /// Step-by-step observer trace for given arrival orders.
    Trace(TraceArgs),
    /// Upper bound, tau_p_star lower bound and the asymptotic constant.
    Bounds,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Exact => "exact",
            Command::Simulate => "simulate",
            Command::Verify(_) => "verify",
            Command::Scaling(_) => "scaling",
            Command::Trace(_) => "trace",
            Command::Bounds => "bounds",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Largest n checked exhaustively [default: 7].
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Skip the information-state dynamic program.
    #[arg(long)]
    pub skip_dp: bool,
    /// Lift the enumeration and dynamic-program size caps.
    #[arg(long)]
    pub unguarded: bool,
    #[arg(long, hide = true, value_enum)]
    pub inject_fault: Option<Fault>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fault {
    /// Report one extra inner slot to the stopping rule.
    BOffByOne,
}

#[derive(Debug, Clone, Args)]
pub struct ScalingArgs {
    /// Step for an `A..B` grid given through --n.
    #[arg(long)]
    pub step: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct TraceArgs {
    /// Whitespace-separated 1-based vertex indices.
    #[arg(long)]
    pub perm: Option<String>,
    /// File with one arrival order per line.
    #[arg(long)]
    pub perm_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum StrategyName {
    TauN,
    TauPStar,
    ClassicalThreshold,
    FirstMax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
    Text,
}
