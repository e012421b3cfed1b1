//! `motionseg`: convert, synthesize, train, segment and evaluate.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use motionseg_core::ErrorKind;

#[derive(Debug, Parser)]
#[command(name = "motionseg", version, about = "Motion capture segmentation with dilated temporal FCNs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Convert a BVH file to a motion image (PNG or .npy) plus a JSON sidecar.
    Convert(commands::ConvertArgs),
    /// Write a synthetic labeled BVH corpus and its manifest.
    Synth(commands::SynthArgs),
    /// Cross-validated training on a manifest; writes checkpoints and metrics.
    Train(commands::TrainArgs),
    /// Label every frame of a BVH file with a trained checkpoint.
    Segment(commands::SegmentArgs),
    /// Score predicted labels against ground truth.
    Eval(commands::EvalArgs),
    /// Print dilation, padding, receptive field and parameter count per layer.
    Rfs(commands::RfsArgs),
    /// Compare analytic and numeric gradients of a network.
    Gradcheck(commands::GradcheckArgs),
}

/// Process exit status for a failed command.
#[derive(Debug)]
pub enum Failure {
    Core(motionseg_core::Error),
    /// Completed, but the checked property did not hold.
    Check(String),
}

impl From<motionseg_core::Error> for Failure {
    fn from(e: motionseg_core::Error) -> Self {
        Failure::Core(e)
    }
}

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();

    let result = match cli.command {
        Command::Convert(a) => commands::convert(a),
        Command::Synth(a) => commands::synth(a),
        Command::Train(a) => commands::train(a),
        Command::Segment(a) => commands::segment(a),
        Command::Eval(a) => commands::eval(a),
        Command::Rfs(a) => commands::rfs(a),
        Command::Gradcheck(a) => commands::gradcheck(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Usage => EXIT_USAGE,
                ErrorKind::Data => EXIT_DATA,
                ErrorKind::Numeric => EXIT_NUMERIC,
            })
        }
        Err(Failure::Check(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_NUMERIC)
        }
    }
}
