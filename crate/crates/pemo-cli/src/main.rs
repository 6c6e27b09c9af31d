//! `pemo` — batch threshold simulation and diagnostics for the
//! auditory-model crate.

use clap::{Parser, Subcommand};
use pemo_cli::{analysis, commands};
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "pemo", version, about = "Auditory-model experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate discrimination thresholds for every configured condition.
    Simulate(commands::SimulateArgs),
    /// Simulate across observation periods and summarize against a reference.
    TobsSweep(commands::TobsSweepArgs),
    /// ΔSNR between two ICRA-version threshold tables, with grouping.
    CompareIcra(commands::CompareIcraArgs),
    /// Adaptation response of a ramped tone across levels and limiters.
    ToneDemo(analysis::ToneDemoArgs),
    /// Information shares per audio/modulation band.
    AnalyzeInfo(analysis::AnalyzeInfoArgs),
    /// Dump one sound's internal representation.
    Represent(analysis::RepresentArgs),
    /// Calibrate the internal-noise sigma on a level-increment task.
    CalibrateSigma(analysis::CalibrateSigmaArgs),
    /// Generate (or fetch from cache) one ICRA noise realization.
    GenNoise(analysis::GenNoiseArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::TobsSweep(a) => commands::tobs_sweep(a),
        Command::CompareIcra(a) => commands::compare_icra(a),
        Command::ToneDemo(a) => analysis::tone_demo(a),
        Command::AnalyzeInfo(a) => analysis::analyze_info(a),
        Command::Represent(a) => analysis::represent(a),
        Command::CalibrateSigma(a) => analysis::calibrate_sigma(a),
        Command::GenNoise(a) => analysis::gen_noise(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
