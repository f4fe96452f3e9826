//! `isac-deploy` command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime error. Runtime errors are
//! reported on stderr as `{"error": {"kind": ..., "message": ...}}`.

mod args;
mod commands;
mod io;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde_json::json;

#[derive(Debug, Parser)]
#[command(name = "isac-deploy", version, about = "UAV deployment for joint communication and localization over forest")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve random episodes with the dynamic swarm and write them as JSONL
    GenDataset(commands::GenDataset),
    /// Deploy UAVs for one user layout with a chosen algorithm
    Optimize(commands::Optimize),
    /// Score a deployment against a user layout
    Evaluate(commands::Evaluate),
    /// Render a user layout as a density grid
    Rasterize(commands::Rasterize),
    /// Deploy UAVs with a trained network
    Infer(commands::Infer),
    /// Compare algorithms over a held-out JSONL dataset
    Benchmark(commands::Benchmark),
}

fn report(kind: &str, message: &str) {
    eprintln!("{}", json!({ "error": { "kind": kind, "message": message } }));
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            let text = e.to_string();
            report("usage", text.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: "));
            return ExitCode::from(1);
        }
    };
    let result = match &cli.command {
        Command::GenDataset(a) => commands::gen_dataset(a),
        Command::Optimize(a) => commands::optimize_cmd(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Rasterize(a) => commands::rasterize_cmd(a),
        Command::Infer(a) => commands::infer(a),
        Command::Benchmark(a) => commands::benchmark(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(e.kind(), &e.to_string());
            ExitCode::from(2)
        }
    }
}
