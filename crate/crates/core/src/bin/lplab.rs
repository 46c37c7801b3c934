use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lplab::lab::{self, config::ExperimentConfig};
use lplab::LabError;

#[derive(Parser)]
#[command(name = "lplab", version, about = "Desk-scale checks for multilinear square functions and weighted inequalities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the registered experiments.
    List,
    /// Run one experiment and write its report.
    Run {
        /// Experiment id such as E1 or E1b.
        id: String,
        /// JSON config; the experiment's default is used when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Seed overriding the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Report destination.
        #[arg(long)]
        out: PathBuf,
        /// Optional per-case CSV destination.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run the full invariant suite.
    Check,
}

fn run(id: &str, config: Option<PathBuf>, seed: Option<u64>, out: PathBuf, csv: Option<PathBuf>) -> Result<bool, LabError> {
    let cfg = config.map(|p| ExperimentConfig::load(&p)).transpose()?;
    let report = lab::run_experiment(id, cfg, seed)?;
    report.write_json(&out)?;
    if let Some(path) = csv {
        report.write_csv(&path)?;
    }
    for v in &report.verdicts {
        println!("{} {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    println!("{id}: {} (observed constant {:.6e})", if report.pass { "pass" } else { "fail" }, report.observed_constant);
    Ok(report.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            for (id, description) in lab::list() {
                println!("{id:<4} {description}");
            }
            ExitCode::SUCCESS
        }
        Command::Run { id, config, seed, out, csv } => match run(&id, config, seed, out, csv) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::from(1),
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
        Command::Check => {
            let outcomes = lab::check();
            for o in &outcomes {
                println!("{} {}: {}", if o.pass { "PASS" } else { "FAIL" }, o.name, o.detail);
            }
            if outcomes.iter().all(|o| o.pass) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
    }
}
