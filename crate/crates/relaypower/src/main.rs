use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use relaypower::{load_config, parse_config, run_experiment, RunError};

/// Monte Carlo power-vs-outage sweeps for parallel decode-and-forward relays.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    /// Experiment file (TOML). Without it the built-in defaults are used and
    /// `--trials` is required.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `key.path=value`, applied after the file. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Summary CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

fn run(cli: Cli) -> Result<(), RunError> {
    let mut overrides = cli.overrides;
    if let Some(t) = cli.trials {
        overrides.push(format!("run.trials={t}"));
    }
    if let Some(s) = cli.seed {
        overrides.push(format!("run.master_seed={s}"));
    }
    if let Some(w) = cli.workers {
        overrides.push(format!("run.workers={w}"));
    }
    if let Some(out) = &cli.out {
        let quoted = toml::Value::String(out.display().to_string()).to_string();
        overrides.push(format!("output.csv={quoted}"));
    }
    let config = match &cli.config {
        Some(path) => load_config(path, &overrides)?,
        None => parse_config("", &overrides)?,
    };
    let report = run_experiment(&config)?;
    for line in &report.summary {
        println!("{line}");
    }
    eprintln!(
        "wrote {} rows to {}",
        report.points.len(),
        config.output.csv.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
