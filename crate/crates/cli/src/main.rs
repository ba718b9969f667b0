// SPDX-License-Identifier: Apache-2.0

//! `verispec`: corpus preparation, tokenization, label building, reference
//! model training, speculative decoding and benchmarking for Verilog.

mod cmd;
mod config;
mod fail;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{ArgAction, Parser, Subcommand};

use config::Config;
use fail::{CmdResult, OrFail, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(name = "verispec", version, about, propagate_version = true)]
struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every randomized step.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// More log output (-v debug, -vv trace).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,
    /// Only warnings and errors on stderr.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Ingest, extract, deduplicate, filter and emit a dataset.
    Corpus(cmd::corpus::Args),
    /// Train a vocabulary, encode or decode.
    Tokenize(cmd::tokenize::Args),
    /// Build label matrices and cross-check the builders.
    Labels(cmd::labels::Args),
    /// Train the multi-head n-gram reference model.
    TrainRef(cmd::train_ref::Args),
    /// Generate with speculative or next-token decoding.
    Decode(cmd::decode::Args),
    /// Run the speed and quality benchmark.
    Bench(cmd::bench::Args),
    /// Syntax-check a Verilog file.
    Check(cmd::check::Args),
}

impl Command {
    fn apply(&self, cfg: &mut Config) {
        match self {
            Command::Corpus(a) => a.apply(cfg),
            Command::Tokenize(a) => a.apply(cfg),
            Command::Labels(a) => a.apply(cfg),
            Command::TrainRef(a) => a.apply(cfg),
            Command::Decode(a) => a.apply(cfg),
            Command::Bench(a) => a.apply(cfg),
            Command::Check(_) => {}
        }
    }

    fn run(&self, cfg: &Config) -> CmdResult {
        match self {
            Command::Corpus(a) => a.run(cfg),
            Command::Tokenize(a) => a.run(cfg),
            Command::Labels(a) => a.run(cfg),
            Command::TrainRef(a) => a.run(cfg),
            Command::Decode(a) => a.run(cfg),
            Command::Bench(a) => a.run(cfg),
            Command::Check(a) => a.run(),
        }
    }
}

fn init_logging(cli: &Cli) {
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => "warn",
        (false, 0) => "info",
        (false, 1) => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
}

fn run(cli: Cli) -> CmdResult {
    let mut cfg = Config::load(cli.config.as_deref())?;
    config::set(&mut cfg.seed, &cli.seed);
    config::set(&mut cfg.workers, &cli.workers);
    cli.command.apply(&mut cfg);
    cfg.propagate();
    log::info!(
        "resolved config: {}",
        serde_json::to_string(&cfg).expect("config serializes")
    );
    if cfg.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build_global()
            .or_code(EXIT_USAGE, "setting up worker threads")?;
    }
    cli.command.run(&cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    init_logging(&cli);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
