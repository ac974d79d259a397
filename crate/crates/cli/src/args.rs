use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(name = "chansim", version, about = "One-shot bounds for entanglement-assisted channel simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Seed for random restarts and property sampling.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Worker threads (default: available cores).
    #[arg(long, global = true)]
    #[serde(skip)]
    pub jobs: Option<usize>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub output: Option<PathBuf>,

    /// Log solver progress to stderr.
    #[arg(short, long, global = true)]
    #[serde(skip)]
    pub verbose: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase", tag = "command")]
pub enum Command {
    /// Converse and achievability bounds on the simulation cost.
    Bounds {
        #[command(flatten)]
        channel: ChannelArgs,
        /// Target purified distances.
        #[arg(long = "eps", num_args = 1.., required = true)]
        eps: Vec<f64>,
        /// Achievability slack; each value below ε gives a row.
        #[arg(long = "delta", num_args = 1..)]
        delta: Vec<f64>,
        /// Channel uses (i.i.d. inputs).
        #[arg(long = "n", num_args = 1.., default_values_t = [1])]
        n: Vec<usize>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Entanglement-assisted capacity and Rényi channel mutual information.
    Capacity {
        #[command(flatten)]
        channel: ChannelArgs,
        #[arg(long = "alpha", num_args = 1..)]
        alpha: Vec<f64>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Property suite: convexity, concavity, restricted minimax, AEP trend.
    Verify {
        /// Defaults to dephasing with p = 0.5.
        #[command(flatten)]
        channel: ChannelArgs,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Number of channels spanning the minimax hull.
        #[arg(long, default_value_t = 3)]
        hull: usize,
        /// Largest copy count of the AEP trend; 0 skips it.
        #[arg(long, default_value_t = 2)]
        aep_copies: usize,
        /// Smoothing parameter of the AEP trend.
        #[arg(long = "eps", default_value_t = 0.3)]
        eps: f64,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Grid of bounds, Rényi upper bounds and fudge terms.
    Sweep {
        #[command(flatten)]
        channel: ChannelArgs,
        #[arg(long = "eps", num_args = 1.., required = true)]
        eps: Vec<f64>,
        #[arg(long = "delta", num_args = 1.., required = true)]
        delta: Vec<f64>,
        #[arg(long = "n", num_args = 1.., default_values_t = [1])]
        n: Vec<usize>,
        #[arg(long = "alpha", num_args = 1.., default_values_t = [2.0])]
        alpha: Vec<f64>,
        #[command(flatten)]
        solver: SolverArgs,
    },
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ChannelArgs {
    /// JSON channel file (Kraus form or builtin shorthand).
    #[arg(long, conflicts_with = "builtin")]
    pub channel: Option<PathBuf>,
    /// identity, depolarizing, dephasing, constant or random.
    #[arg(long)]
    pub builtin: Option<String>,
    /// Input dimension of a builtin.
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// Noise parameter of depolarizing and dephasing.
    #[arg(long)]
    pub p: Option<f64>,
    /// Output dimension of constant and random builtins.
    #[arg(long)]
    pub d_out: Option<usize>,
    /// Kraus rank of the random builtin.
    #[arg(long)]
    pub rank: Option<usize>,
    /// Seed of the random builtin.
    #[arg(long)]
    pub channel_seed: Option<u64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 4)]
    pub restarts: usize,
    #[arg(long, default_value_t = 2000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub value_tol: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub step_tol: f64,
}
