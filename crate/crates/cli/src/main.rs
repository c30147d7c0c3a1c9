//! `heat-adapt` command-line entry point.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{RunConfig, KEYS};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "heat-adapt", version, about = "Trainable billet heating model", after_help = key_help())]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    /// Flat `key = value` config file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Config overrides as `--key=value` or `--key value`.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "OVERRIDES")]
    overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset with the physical model.
    GenData(RunArgs),
    /// Run one simulation under constant ambients.
    Simulate(RunArgs),
    /// Fit a trajectory to a dataset.
    Train(RunArgs),
    /// Score a trajectory or the physical model on a dataset.
    Eval(RunArgs),
    /// Compare analytic derivatives with finite differences.
    Gradcheck(RunArgs),
}

fn key_help() -> String {
    let mut out = String::from("Config keys (default, meaning):\n");
    for (k, v, doc) in KEYS {
        let shown = if v.is_empty() { "<empty>" } else { v };
        out.push_str(&format!("  {k:<18} {shown:<9} {doc}\n"));
    }
    out
}

/// Pairs up `--key=value` and `--key value` arguments.
fn parse_overrides(args: &[String]) -> Result<Vec<(String, String)>, CliError> {
    let mut pairs = Vec::new();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let body = arg
            .strip_prefix("--")
            .ok_or_else(|| CliError::config(arg.clone(), "overrides must look like --key=value"))?;
        let (key, value) = match body.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let value = it.next().ok_or_else(|| CliError::config(body, "missing value"))?;
                (body.to_string(), value.clone())
            }
        };
        pairs.push((key.replace('-', "_"), value));
    }
    Ok(pairs)
}

type Action = fn(&RunConfig) -> Result<Vec<String>, CliError>;

fn run(command: Command) -> Result<Vec<String>, CliError> {
    let (args, action): (RunArgs, Action) = match command {
        Command::GenData(a) => (a, commands::gen_data),
        Command::Simulate(a) => (a, commands::simulate),
        Command::Train(a) => (a, commands::train),
        Command::Eval(a) => (a, commands::eval),
        Command::Gradcheck(a) => (a, commands::gradcheck),
    };
    let config = RunConfig::load(args.config.as_deref(), &parse_overrides(&args.overrides)?)?;
    config.check()?;
    let threads: usize = config.get("threads")?;
    if threads == 0 {
        return Err(CliError::config("threads", "must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::config("threads", e.to_string()))?;
    action(&config)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(lines) => {
            for line in lines {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
