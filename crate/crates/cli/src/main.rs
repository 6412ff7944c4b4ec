//! `qfe`: desk-scale pipeline runner for machine-learned quantum state
//! fidelity estimation.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data-integrity error,
//! 4 runtime failure.

mod args;
mod commands;
mod common;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "qfe",
    about = "Machine-learned quantum state fidelity estimation at desk scale",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rank measurement settings for a target and write the plan.
    Select(args::SelectArgs),
    /// Generate a labeled dataset for a target.
    GenData(args::GenDataArgs),
    /// Train a bin classifier (or a full k-registry) on a dataset.
    Train(args::TrainArgs),
    /// Calibrate (epsilon, 1-delta) error bars for a trained model.
    Calibrate(args::CalibrateArgs),
    /// Estimate the fidelity of a state with a calibrated registry.
    Predict(args::PredictArgs),
    /// Adaptive threshold certification, adding one setting per round.
    Certify(args::CertifyArgs),
    /// Reproduction sweeps emitted as CSV reports.
    Benchmark(args::BenchmarkArgs),
    /// DFE and QST measurement-cost baselines.
    Baseline(args::BaselineArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Select(a) => commands::run_select(a),
        Command::GenData(a) => commands::run_gen_data(a),
        Command::Train(a) => commands::run_train(a),
        Command::Calibrate(a) => commands::run_calibrate(a),
        Command::Predict(a) => commands::run_predict(a),
        Command::Certify(a) => commands::run_certify(a),
        Command::Benchmark(a) => commands::run_benchmark(a),
        Command::Baseline(a) => commands::run_baseline(a),
    };
    if let Err(e) = result {
        eprintln!("error: {}", e.message());
        std::process::exit(e.code());
    }
}
