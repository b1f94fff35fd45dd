use std::path::PathBuf;

use arraypool_core::Scheme;
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "arraypool",
    version,
    about = "Pooled-testing design calculator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate one configuration.
    Eval(EvalArgs),
    /// Optimal configuration of one scheme at one prevalence.
    Optimize(OptimizeArgs),
    /// CSV table of optimal configurations over a prevalence range.
    Table(TableArgs),
    /// Cross-scheme crossing points and peak gains, optionally with plot data.
    Compare(CompareArgs),
    /// Array order for an unknown prevalence.
    Robust(RobustArgs),
    /// Run the numerical verification suite.
    Verify,
    /// Seeded simulation of one configuration.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// a2, dorfman, sterrett or halving.
    #[arg(long)]
    pub scheme: Scheme,
    #[arg(long)]
    pub p: f64,
    /// Array order for a2, pool size otherwise. Non-integer sizes are
    /// accepted for a2, dorfman and sterrett.
    #[arg(long)]
    pub size: f64,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub scheme: Scheme,
    #[arg(long)]
    pub p: f64,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    #[arg(long, default_value_t = 0.0001)]
    pub p_min: f64,
    /// At most 0.249790, the upper end of the array's useful range.
    #[arg(long, default_value_t = 0.249790)]
    pub p_max: f64,
    #[arg(long, default_value_t = 0.0001)]
    pub step: f64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overwrite an existing output file.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Write the series CSV files and summary into --out-dir.
    #[arg(long)]
    pub emit_plot_data: bool,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct RobustArgs {
    #[command(subcommand)]
    pub rule: RobustRule,
    /// Smallest array order considered.
    #[arg(long, default_value_t = 5, global = true)]
    pub n_min: u64,
    /// Largest array order considered.
    #[arg(long, default_value_t = 64, global = true)]
    pub n_max: u64,
}

#[derive(Debug, Subcommand)]
pub enum RobustRule {
    /// Minimize the largest loss over a q grid.
    Minimax(MinimaxArgs),
    /// Minimize the expected squared loss under a uniform prior on q.
    Bayes(BayesArgs),
}

#[derive(Debug, Args)]
pub struct MinimaxArgs {
    /// Upper end of the q grid; the grid starts at q_5 + 1e-4.
    #[arg(long, default_value_t = 0.998)]
    pub q_max: f64,
    #[arg(long, default_value_t = 0.001)]
    pub grid_step: f64,
    /// Take the supremum over all of (q_5, 1), including the q -> 1 limit.
    /// Ignores --q-max.
    #[arg(long)]
    pub full_range: bool,
    /// Scan q_max over [0.995, 0.998] in steps of 1e-4 for the given order.
    #[arg(long, value_name = "N")]
    pub calibrate: Option<u64>,
}

#[derive(Debug, Args)]
pub struct BayesArgs {
    #[arg(long, default_value_t = 0.750210)]
    pub prior_lo: f64,
    #[arg(long, default_value_t = 1.0)]
    pub prior_hi: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub quad_tol: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub scheme: Scheme,
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub size: u64,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}
