use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use motifcast_cli::args::ConfigArgs;
use motifcast_cli::cmd::{self, synth::FixtureKind};
use motifcast_cli::output::{Classify, CmdResult};

/// Motif mining and motif-guided forecasting.
#[derive(Parser)]
#[command(name = "motifcast", version)]
struct Cli {
    /// Worker thread cap (default: all cores).
    #[arg(long, global = true, env = "MOTIFCAST_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mine one motif library per channel (or channel group).
    Extract {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Train a forecaster against each given library.
    Train {
        #[command(flatten)]
        config: ConfigArgs,
        /// Library JSON written by `extract`; repeatable.
        #[arg(long, required = true)]
        library: Vec<PathBuf>,
    },
    /// Score checkpoints on the test split against naive and linear baselines.
    Eval {
        #[command(flatten)]
        config: ConfigArgs,
        /// Checkpoint written by `train`; repeatable.
        #[arg(long, required = true)]
        checkpoint: Vec<PathBuf>,
        /// Comma-separated horizons to score, each at most the trained H
        /// (default: H).
        #[arg(long, value_delimiter = ',')]
        horizons: Vec<usize>,
    },
    /// Turn a library or predictions file into CSV plot data.
    Export {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Forecast to export from a predictions file.
        #[arg(long, default_value_t = 0)]
        window: usize,
    },
    /// Write a planted-motif fixture as CSV.
    Synth {
        #[arg(long, value_enum)]
        kind: FixtureKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5000)]
        length: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> CmdResult<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .or_config()?;
    }
    match cli.command {
        Command::Extract { config } => cmd::extract::run(&config.resolve()?),
        Command::Train { config, library } => cmd::train::run(&config.resolve()?, &library),
        Command::Eval {
            config,
            checkpoint,
            horizons,
        } => cmd::eval::run(&config.resolve()?, &checkpoint, &horizons),
        Command::Export { input, out, window } => cmd::export::run(&input, &out, window),
        Command::Synth {
            kind,
            seed,
            length,
            out,
        } => cmd::synth::run(kind, seed, length, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            log::error!("{f}");
            ExitCode::from(f.kind.code())
        }
    }
}
