//! `cosched`: data generation, training, scheduling and policy comparison.

mod commands;
mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "cosched", version, about = "Co-scheduling of CPU/GPU job pairs under a power budget")]
struct Cli {
    /// Worker threads for pair scoring; defaults to the available parallelism.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct OutDirArg {
    /// Output directory.
    #[arg(long, env = "COSCHED_OUT_DIR", default_value = "out")]
    pub out: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write the default config space, oracle and dataset settings as JSON.
    Defaults {
        #[command(flatten)]
        out: OutDirArg,
    },

    /// Label a synthetic corpus with the oracle.
    GenData {
        space: PathBuf,
        oracle: PathBuf,
        #[arg(long, default_value_t = 16)]
        pairs: usize,
        #[arg(long, default_value_t = 4)]
        test_pairs: usize,
        #[arg(long, default_value_t = 8)]
        n_jobs: usize,
        /// Skip the solo samples of the training jobs.
        #[arg(long)]
        no_solo: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutDirArg,
    },

    /// Draw a synthetic queue of jobs.
    GenWorkload {
        #[arg(long, default_value_t = 8)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutDirArg,
    },

    /// Fit the slowdown network on the training split of a dataset directory.
    Train {
        dataset: PathBuf,
        #[arg(long, default_value_t = 200)]
        epochs: usize,
        #[arg(long, default_value_t = 0.001)]
        lr: f64,
        #[arg(long, default_value_t = 4)]
        batch: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.2)]
        validation_fraction: f64,
        #[command(flatten)]
        out: OutDirArg,
    },

    /// Pair and configure a queue.
    Schedule {
        weights: PathBuf,
        workload: PathBuf,
        space: PathBuf,
        /// Use this oracle instead of the weights to estimate times.
        #[arg(long, value_name = "ORACLE")]
        oracle_as_model: Option<PathBuf>,
        #[command(flatten)]
        out: OutDirArg,
    },

    /// Run all three policies and measure them with the oracle.
    Compare {
        weights: PathBuf,
        workload: PathBuf,
        space: PathBuf,
        oracle: PathBuf,
        /// Let the oracle make the decisions too.
        #[arg(long)]
        oracle_as_model: bool,
        #[command(flatten)]
        out: OutDirArg,
    },

    /// Score a model on one split of a dataset directory.
    EvalModel {
        weights: PathBuf,
        dataset: PathBuf,
        #[arg(long, default_value = "test")]
        split: String,
        /// Score this oracle instead of the weights.
        #[arg(long, value_name = "ORACLE")]
        oracle_as_model: Option<PathBuf>,
        #[command(flatten)]
        out: OutDirArg,
    },
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let threads = cli.jobs.unwrap_or(0);
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    commands::run(cli.command)
}
