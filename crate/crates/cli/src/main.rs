//! `cbl`: generate datasets, train models, run experiments, analyse probe logs.

mod commands;
mod config;
mod failure;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cbl_core::experiments::Experiment;
use cbl_core::Exec;

use crate::failure::Failure;

#[derive(Debug, Parser)]
#[command(name = "cbl", version, about = "Concept bootstrapping experiments on synthetic scenes")]
struct Cli {
    /// Worker threads for parallel loops (default: all hardware threads).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Run every loop on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate an audited train/test dataset.
    Gen(GenArgs),
    /// Train one model on a generated dataset.
    Train(TrainArgs),
    /// Run an experiment protocol end to end.
    Exp(ExpArgs),
    /// Analyse a probe-response log, or write a blank log template.
    Probe(ProbeArgs),
    /// Summarise experiment reports.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// three-frame, five-frame, seven-frame, one-frame-goal or two-frame-motion.
    #[arg(long)]
    pub paradigm: Option<String>,
    /// Training instances.
    #[arg(long = "train")]
    pub n_train: Option<usize>,
    /// Test instances.
    #[arg(long = "test")]
    pub n_test: Option<usize>,
    /// T1 (novel test objects) or T2 (novel actors and objects).
    #[arg(long)]
    pub condition: Option<String>,
    /// One-frame-goal: presentations of each actor-goal pair.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Seed (default: $CBL_SEED, else 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Flat JSON config file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub embed_dim: Option<usize>,
    #[arg(long)]
    pub blocks: Option<usize>,
    #[arg(long)]
    pub heads: Option<usize>,
    #[arg(long)]
    pub ff_dim: Option<usize>,
    #[arg(long)]
    pub init_scale: Option<f64>,
    /// Initialise key projections independently of query projections.
    #[arg(long)]
    pub untied_qk: bool,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// tokens or binary.
    #[arg(long)]
    pub encoding: Option<String>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset directory written by `gen`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// cognitive or naive.
    #[arg(long)]
    pub kind: Option<String>,
    /// Continue from this checkpoint instead of a fresh initialisation.
    #[arg(long)]
    pub from: Option<PathBuf>,
    #[arg(long)]
    pub eval_every: Option<usize>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExpArgs {
    /// exp1, exp2, exp3 or exp4.
    pub experiment: Experiment,
    /// Repetitions with independent seeds.
    #[arg(long)]
    pub runs: Option<usize>,
    /// Epochs of the second stage (exp2/exp4); defaults to --epochs.
    #[arg(long)]
    pub finetune_epochs: Option<usize>,
    /// Epochs of animacy pre-training (exp3).
    #[arg(long)]
    pub concept_epochs: Option<usize>,
    /// Dataset sizes by name or training-set size, comma separated
    /// (exp1: small,large; exp3: 640,1280,2560).
    #[arg(long, alias = "naive-sizes")]
    pub sizes: Option<String>,
    /// Model kinds to run, comma separated.
    #[arg(long)]
    pub kinds: Option<String>,
    /// Accuracy threshold for epochs-to-threshold.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Give the two model kinds independent data and initialisations.
    #[arg(long)]
    pub unpaired: bool,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    /// Response log CSV.
    #[arg(long, required_unless_present = "template")]
    pub log: Option<PathBuf>,
    /// Outcomes removed before the filtered test, comma separated, or `none`.
    #[arg(long, default_value = "irrelevant,hallucinated")]
    pub drop: String,
    /// Directory for analysis.json and the manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write a blank log template to this path instead of analysing.
    #[arg(long, conflicts_with = "log")]
    pub template: Option<PathBuf>,
    /// Template: actors per animacy class.
    #[arg(long, default_value_t = 11)]
    pub actors: usize,
    /// Template: sequences per actor.
    #[arg(long, default_value_t = 4)]
    pub sequences: usize,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory holding `<exp>/report.json` files, or one report's directory.
    pub dir: PathBuf,
    /// Also write the summary table as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::usage("--threads must be at least 1"));
        }
        #[cfg(feature = "parallel")]
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::runtime(e.to_string()))?;
    }
    let exec = if cli.sequential { Exec::Sequential } else { Exec::Parallel };
    match cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::Train(a) => commands::train(a, exec),
        Command::Exp(a) => commands::exp(a, exec),
        Command::Probe(a) => commands::probe(a),
        Command::Report(a) => commands::report(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code() as u8)
        }
    }
}
