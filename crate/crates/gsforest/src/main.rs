use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use gsforest::experiments::{run_named, RunError, RunOpts, SUBCOMMANDS};
use gsforest::io::{write_outcome, Format};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

/// Monte Carlo checks for Galton-Watson forests, Lamperti transforms and
/// excursion functionals.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    /// Experiment to run.
    #[arg(value_parser = clap::builder::PossibleValuesParser::new(SUBCOMMANDS))]
    subcommand: String,
    /// JSON config; omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let text = match &cli.config {
        Some(p) => match std::fs::read_to_string(p) {
            Ok(t) => Some(t),
            Err(e) => {
                eprintln!("cannot read {}: {e}", p.display());
                return ExitCode::from(2);
            }
        },
        None => None,
    };
    let opts = RunOpts {
        seed: cli.seed,
        workers: cli.workers,
    };
    let (outcome, config) = match run_named(&cli.subcommand, text.as_deref(), opts) {
        Ok(r) => r,
        Err(e @ RunError::Config(_)) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(1);
        }
    };
    let format = match cli.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    };
    if let Err(e) = write_outcome(&cli.out, &outcome, cli.seed, &config, format) {
        eprintln!("cannot write output: {e}");
        return ExitCode::from(1);
    }
    for c in &outcome.checks {
        println!(
            "{} {}: {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    if outcome.pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    }
}
