//! `uqi <command> --input <config.json> --output <report.json>`
//!
//! Exit codes: 0 success, 2 unreadable or malformed config, 3 invalid config
//! (the message names the field), 4 runtime failure.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use serde_json::json;

use config::{Command, Config, Overrides};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "uqi", version, about = "Universal quantum interface simulator")]
struct Cli {
    /// What to run; must match the config's "command" key when it has one.
    #[arg(value_enum)]
    command: Command,
    /// JSON config document.
    #[arg(long)]
    input: PathBuf,
    /// JSON report destination.
    #[arg(long)]
    output: PathBuf,
    /// CSV destination for `scan` (defaults to the report path with a .csv extension).
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Seed for stochastic commands; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Optimizer iteration cap; overrides the config.
    #[arg(long)]
    max_iters: Option<usize>,
    /// Target infidelity for synthesis, or closure tolerance for analyze/bridge.
    #[arg(long)]
    tol: Option<f64>,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&cli.input)
        .map_err(|e| CliError::Parse(format!("reading {}: {e}", cli.input.display())))?;
    let mut cfg = Config::parse(cli.command, &text)?;
    cfg.apply(Overrides {
        seed: cli.seed,
        max_iters: cli.max_iters,
        tol: cli.tol,
    })?;
    let csv_path = match (cli.command, &cli.csv) {
        (Command::Scan, Some(p)) => Some(p.clone()),
        (Command::Scan, None) => Some(output::csv_path_for(&cli.output)),
        (_, Some(_)) => {
            return Err(CliError::Invalid {
                field: "--csv".into(),
                reason: format!("not used by {}", cli.command.name()),
            })
        }
        (_, None) => None,
    };
    if csv_path.as_ref() == Some(&cli.output) {
        return Err(CliError::Invalid {
            field: "--csv".into(),
            reason: "must differ from --output".into(),
        });
    }

    let start = Instant::now();
    let out = commands::dispatch(&cfg)?;
    let report = json!({
        "artifact_version": env!("CARGO_PKG_VERSION"),
        "command": cli.command.name(),
        "config": cfg.echo(),
        "results": out.results,
        "wall_time": start.elapsed().as_secs_f64(),
    });
    let text = output::to_json(&report);

    let csv = match (&csv_path, &out.scan) {
        (Some(p), Some(scan)) => Some(output::stage(p, output::scan_csv(scan).as_bytes())?),
        _ => None,
    };
    let json = output::stage(&cli.output, text.as_bytes())?;
    if let Some(csv) = csv {
        csv.commit()?;
    }
    json.commit()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("uqi: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
