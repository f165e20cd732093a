//! `usable-info`: simulate tree-structured data, estimate F-information,
//! learn Chow-Liu style trees, run sample-size sweeps and score edges.
//!
//! Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.

mod commands;
mod config;
mod io;

use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand};

use config::UsageError;

#[derive(Parser)]
#[command(name = "usable-info", version, about = "Usable information estimation and tree learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset and its ground-truth tree.
    Simulate(commands::SimulateArgs),
    /// Estimate the F-information from X to Y.
    Estimate(commands::EstimateArgs),
    /// Learn a maximum-weight arborescence over the variables.
    Tree(commands::TreeArgs),
    /// Wrong-edges ratio across sample sizes, seeds and methods.
    Sweep(commands::SweepArgs),
    /// Variational mutual-information baselines.
    Baselines(commands::BaselinesArgs),
    /// ROC AUC of edge scores against a true adjacency.
    Auc(commands::AucArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Estimate(_) => "estimate",
            Command::Tree(_) => "tree",
            Command::Sweep(_) => "sweep",
            Command::Baselines(_) => "baselines",
            Command::Auc(_) => "auc",
        }
    }
}

const USAGE: u8 = 2;
const DATA: u8 = 3;
const NUMERICAL: u8 = 4;

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return USAGE;
        }
        if let Some(e) = cause.downcast_ref::<usable_info::Error>() {
            return match e {
                usable_info::Error::InvalidParameter(_) | usable_info::Error::Unsupported { .. } => USAGE,
                e if e.is_numerical() => NUMERICAL,
                _ => DATA,
            };
        }
        if cause.is::<std::io::Error>() || cause.is::<serde_json::Error>() || cause.is::<csv::Error>() {
            return DATA;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = cli.command.name();
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Estimate(a) => commands::estimate(a),
        Command::Tree(a) => commands::tree(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Baselines(a) => commands::baselines(a),
        Command::Auc(a) => commands::auc(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = exit_code(&err);
            if code == USAGE {
                let mut cmd = Cli::command();
                if let Some(sub) = cmd.find_subcommand_mut(name) {
                    eprintln!("\n{}", sub.render_usage());
                }
            }
            ExitCode::from(code)
        }
    }
}
