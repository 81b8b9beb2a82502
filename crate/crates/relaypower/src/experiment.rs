//! Runs a configured experiment and writes its CSV files.

use std::fs::{self, File};
use std::io::Write;
use std::path::Path;

use relaypower_core::model::Region;
use relaypower_core::montecarlo::SweepResult;
use relaypower_core::StrategyId;

use crate::config::ExperimentConfig;
use crate::sweep::{run_sweep, SweepOptions, SweepPoint};
use crate::RunError;

pub const CSV_HEADER: [&str; 11] = [
    "strategy",
    "rho_target",
    "rho_empirical",
    "rho_ci95",
    "mean_total_power_w",
    "power_ci95_w",
    "mean_source_power_w",
    "mean_relay_power_w",
    "fallback_rate",
    "trials",
    "master_seed",
];

pub const CURVE_HEADER: [&str; 5] = [
    "strategy",
    "rho_target",
    "rho_empirical",
    "mean_total_power_w",
    "power_ci95_w",
];

const TRIAL_HEADER: [&str; 12] = [
    "strategy",
    "rho_target",
    "trial",
    "source_power_w",
    "relay_power_w",
    "forwarding_count",
    "destination_snr",
    "outage",
    "fallback",
    "infeasible",
    "capped_outage",
    "waste_power_w",
];

/// Savings reported for the standard deployment at `ρ_target = 0.05`.
const PUBLISHED_SAVINGS: [(StrategyId, f64); 3] = [
    (StrategyId::Odpa, 0.80),
    (StrategyId::Srm, 0.77),
    (StrategyId::Psm, 0.67),
];

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub points: Vec<SweepPoint>,
    pub summary: Vec<String>,
}

impl ExperimentReport {
    pub fn results(&self) -> Vec<SweepResult> {
        self.points.iter().map(|p| p.result).collect()
    }
}

fn num(x: f64) -> String {
    format!("{x:.15e}")
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn writer(path: &Path) -> Result<csv::Writer<File>, RunError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_error(dir))?;
    }
    let file = File::create(path).map_err(io_error(path))?;
    Ok(csv::Writer::from_writer(file))
}

pub fn summary_record(r: &SweepResult) -> [String; 11] {
    [
        r.strategy.to_string(),
        r.rho_target.to_string(),
        num(r.outage_rate),
        num(r.outage_ci95),
        num(r.mean_total_power),
        num(r.power_ci95),
        num(r.mean_source_power),
        num(r.mean_relay_power),
        num(r.fallback_rate),
        r.trials.to_string(),
        r.master_seed.to_string(),
    ]
}

pub fn write_summary<W: Write>(out: W, results: &[SweepResult]) -> Result<(), RunError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in results {
        w.write_record(summary_record(r))?;
    }
    w.flush().map_err(|e| RunError::Runtime(e.to_string()))?;
    Ok(())
}

/// Plot-ready CSV sorted by strategy name then `ρ_target`. Values are the
/// summary CSV's, formatted identically.
pub fn emit_curve_data<W: Write>(out: W, results: &[SweepResult]) -> Result<(), RunError> {
    if results.is_empty() {
        return Err(RunError::Runtime("no sweep results to emit".into()));
    }
    let mut sorted: Vec<&SweepResult> = results.iter().collect();
    sorted.sort_by(|a, b| {
        a.strategy
            .as_str()
            .cmp(b.strategy.as_str())
            .then(a.rho_target.total_cmp(&b.rho_target))
    });
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CURVE_HEADER)?;
    for r in sorted {
        let full = summary_record(r);
        w.write_record([&full[0], &full[1], &full[2], &full[4], &full[5]])?;
    }
    w.flush().map_err(|e| RunError::Runtime(e.to_string()))?;
    Ok(())
}

fn write_trials(path: &Path, points: &[SweepPoint]) -> Result<(), RunError> {
    let mut w = writer(path)?;
    w.write_record(TRIAL_HEADER)?;
    for p in points {
        let Some(trials) = &p.trials else { continue };
        for (i, o) in trials.iter().enumerate() {
            w.write_record([
                p.result.strategy.to_string(),
                p.result.rho_target.to_string(),
                i.to_string(),
                num(o.source_power),
                num(o.relay_power_total),
                o.forwarding_count.to_string(),
                num(o.destination_snr),
                (o.outage as u8).to_string(),
                (o.fallback as u8).to_string(),
                (o.infeasible as u8).to_string(),
                (o.capped_outage as u8).to_string(),
                num(o.waste_power),
            ])?;
        }
    }
    w.flush().map_err(io_error(path))?;
    Ok(())
}

/// `1 - P(strategy)/P(rrs)` at each outage target where both were run.
pub fn savings_lines(results: &[SweepResult]) -> Vec<String> {
    let mut lines = Vec::new();
    for rrs in results.iter().filter(|r| r.strategy == StrategyId::Rrs) {
        for r in results
            .iter()
            .filter(|r| r.rho_target == rrs.rho_target && r.strategy != StrategyId::Rrs)
        {
            let saving = 1.0 - r.mean_total_power / rrs.mean_total_power;
            let mut line = format!(
                "rho_target={} {}: {:.1}% power saved vs rrs",
                r.rho_target,
                r.strategy,
                100.0 * saving
            );
            if r.rho_target == 0.05 {
                if let Some((_, p)) = PUBLISHED_SAVINGS.iter().find(|(id, _)| *id == r.strategy) {
                    line.push_str(&format!(" (published: ~{:.0}%)", 100.0 * p));
                }
            }
            lines.push(line);
        }
    }
    lines
}

pub fn sweep_options(config: &ExperimentConfig) -> Result<SweepOptions, RunError> {
    let run = &config.run;
    let destination_region = run
        .destination_randomization
        .map(|b| Region::new(b.x, b.y))
        .transpose()
        .map_err(|e| RunError::Config(format!("destination_randomization: {e}")))?;
    Ok(SweepOptions {
        workers: run.workers,
        destination_region,
        ocpa_p_max: run.ocpa_p_max,
        psm_fixed: run.psm.map(|p| (p.source_power, p.threshold)),
        psm_grid: run.psm_search.into(),
        keep_trials: config.output.per_trial_csv.is_some(),
    })
}

/// Runs every `(strategy, ρ_target)` point and writes the configured files.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport, RunError> {
    let scenario = config
        .scenario
        .build()
        .map_err(|e| RunError::Config(format!("scenario: {e}")))?;
    let run = &config.run;
    let options = sweep_options(config)?;
    let points = run_sweep(
        &run.strategies,
        &scenario,
        &run.rho_targets,
        run.trials,
        run.master_seed,
        &options,
    )?;
    let results: Vec<SweepResult> = points.iter().map(|p| p.result).collect();

    let out = &config.output;
    let mut w = writer(&out.csv)?;
    w.write_record(CSV_HEADER)?;
    for r in &results {
        w.write_record(summary_record(r))?;
    }
    w.flush().map_err(io_error(&out.csv))?;
    if let Some(path) = &out.curve_csv {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(io_error(dir))?;
        }
        emit_curve_data(File::create(path).map_err(io_error(path))?, &results)?;
    }
    if let Some(path) = &out.per_trial_csv {
        write_trials(path, &points)?;
    }
    Ok(ExperimentReport {
        summary: savings_lines(&results),
        points,
    })
}
