//! `ratransfer`: build merged datasets, draw synthetic markets, and run the
//! full estimation pipeline with reproducible, seeded outputs.

mod analyze;
mod build;
mod groups;
mod synth_cmd;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use risk_transfer::Market;

#[derive(Parser)]
#[command(
    name = "ratransfer",
    version,
    about = "Risk-adjustment transfer analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MarketArg {
    Individual,
    SmallGroup,
}

impl From<MarketArg> for Market {
    fn from(m: MarketArg) -> Self {
        match m {
            MarketArg::Individual => Market::Individual,
            MarketArg::SmallGroup => Market::SmallGroup,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Subcommand)]
enum Command {
    /// Parse summary dumps and insurer tables into merged per-year datasets.
    BuildDataset(build::Args),
    /// Draw a synthetic market with known shock deviation.
    Synth(synth_cmd::Args),
    /// Estimate beta, test outliers and normality, and account for volume.
    Analyze(analyze::Args),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::BuildDataset(a) => build::run(a),
        Command::Synth(a) => synth_cmd::run(a),
        Command::Analyze(a) => analyze::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}

pub(crate) fn ensure_dir(path: &PathBuf) -> risk_transfer::Result<()> {
    std::fs::create_dir_all(path)?;
    Ok(())
}
