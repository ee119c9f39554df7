//! `daqc`: train, evaluate and diagnose domain-aware quantum circuits.

mod config;
mod run;

use clap::{Args, Parser, Subcommand};
use config::Kind;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "daqc", version, about = "Domain-aware quantum circuit classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a classifier; writes checkpoint.json, trace.csv and metrics.json.
    Train(Common),
    /// Evaluate a checkpoint on an IDX split; writes metrics.json.
    Eval(Common),
    /// Circuit diagnostics.
    Diag {
        #[command(subcommand)]
        which: Diag,
    },
    /// Export the per-epoch trace of a checkpoint as CSV.
    Trace {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum Diag {
    /// Fidelity histogram and KL divergence to the Haar distribution.
    Expressibility(Common),
    /// Mean Meyer–Wallach Q over random angles.
    Entangling(Common),
    /// Gradient variance across qubit counts.
    BpSweep(Common),
}

#[derive(Args, Clone, Debug, Default)]
pub struct Common {
    /// JSON run config; its `kind` must match the command.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Run on one thread. Results do not depend on the thread count anyway;
    /// this removes the question.
    #[arg(long)]
    pub deterministic: bool,
    /// Seeded subsample size: the training pool for `train`, the split for `eval`.
    #[arg(long)]
    pub limit: Option<usize>,
    /// Output directory (default: `runs/<kind>`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print the default config for this command and exit.
    #[arg(long)]
    pub print_defaults: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(c) => run::configured(Kind::Train, &c),
        Command::Eval(c) => run::configured(Kind::Eval, &c),
        Command::Diag { which } => match which {
            Diag::Expressibility(c) => run::configured(Kind::Expressibility, &c),
            Diag::Entangling(c) => run::configured(Kind::Entangling, &c),
            Diag::BpSweep(c) => run::configured(Kind::BpSweep, &c),
        },
        Command::Trace { checkpoint, out } => run::trace(&checkpoint, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
