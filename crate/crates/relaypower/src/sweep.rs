//! Parallel sweeps. Trials run on a rayon pool, come back in index order and
//! are aggregated sequentially, so the worker count never changes a result.

use rayon::prelude::*;
use rayon::ThreadPool;

use relaypower_core::model::{build_statistics, Region};
use relaypower_core::montecarlo::{
    apply_power_cap, draw_destination, run_trial, SweepAccumulator, SweepResult, TrialOutcome,
};
use relaypower_core::strategies::{psm_pick_params, PsmGrid, PsmParams, PsmSelection};
use relaypower_core::{ChannelStatistics, NetworkScenario, StrategyId, StrategySpec};

use crate::RunError;

#[derive(Debug, Clone, Default)]
pub struct SweepOptions {
    /// Worker threads; rayon's default when `None`.
    pub workers: Option<usize>,
    pub destination_region: Option<Region>,
    pub ocpa_p_max: Option<f64>,
    /// Fixed `(P_s, γ)` for the passive source.
    pub psm_fixed: Option<(f64, f64)>,
    pub psm_grid: PsmGrid,
    pub keep_trials: bool,
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub result: SweepResult,
    /// Present when [`SweepOptions::keep_trials`] is set.
    pub trials: Option<Vec<TrialOutcome>>,
    /// Passive-source parameters used at a fixed destination.
    pub psm_params: Option<PsmParams>,
    /// OCPA power cap applied, watts.
    pub ocpa_cap: Option<f64>,
}

pub fn build_pool(workers: Option<usize>) -> Result<ThreadPool, RunError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| RunError::Runtime(format!("thread pool: {e}")))
}

fn pick_psm(
    stats: &ChannelStatistics,
    rho_target: f64,
    grid: PsmGrid,
    scenario: &NetworkScenario,
) -> Result<Option<PsmParams>, RunError> {
    Ok(match psm_pick_params(stats, rho_target, grid, scenario)? {
        PsmSelection::Feasible(p) => Some(p),
        PsmSelection::Infeasible { .. } => None,
    })
}

/// `q`-quantile of `values` by the nearest-rank rule.
fn quantile(values: &mut [f64], q: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let rank = ((q * values.len() as f64).ceil() as usize).clamp(1, values.len());
    values[rank - 1]
}

/// One `(strategy, ρ_target)` point over `trials` trials.
pub fn run_point(
    pool: &ThreadPool,
    strategy: StrategyId,
    scenario: &NetworkScenario,
    rho_target: f64,
    trials: u64,
    master_seed: u64,
    options: &SweepOptions,
) -> Result<SweepPoint, RunError> {
    if trials == 0 {
        return Err(RunError::Config("trials must be at least 1".into()));
    }
    let stats = build_statistics(scenario)?;

    let mut psm_params = None;
    let fixed_spec = match strategy {
        StrategyId::Ocpa => Some(StrategySpec::Ocpa { power_cap: None }),
        StrategyId::Odpa => Some(StrategySpec::Odpa),
        StrategyId::Srm => Some(StrategySpec::Srm),
        StrategyId::Rrs => Some(StrategySpec::Rrs),
        StrategyId::Direct => Some(StrategySpec::Direct),
        StrategyId::Psm => match options.psm_fixed {
            Some((source_power, threshold)) => Some(StrategySpec::Psm {
                source_power,
                threshold,
            }),
            None if options.destination_region.is_some() => None,
            None => {
                let p =
                    pick_psm(&stats, rho_target, options.psm_grid, scenario)?.ok_or_else(|| {
                        RunError::Runtime(format!(
                            "psm: outage target {rho_target} is unreachable below {} W",
                            options.psm_grid.max_source_power
                        ))
                    })?;
                psm_params = Some(p);
                Some(StrategySpec::Psm {
                    source_power: p.source_power,
                    threshold: p.threshold,
                })
            }
        },
    };

    let trial = |i: u64| -> TrialOutcome {
        let (moved, moved_stats);
        let (scenario, stats) = match &options.destination_region {
            Some(region) => {
                let dest = draw_destination(region, master_seed, i);
                let Ok(s) = scenario.with_destination(dest) else {
                    return TrialOutcome::infeasible();
                };
                let Ok(st) = build_statistics(&s) else {
                    return TrialOutcome::infeasible();
                };
                moved = s;
                moved_stats = st;
                (&moved, &moved_stats)
            }
            None => (scenario, &stats),
        };
        let spec = match fixed_spec {
            Some(spec) => spec,
            None => match pick_psm(stats, rho_target, options.psm_grid, scenario) {
                Ok(Some(p)) => StrategySpec::Psm {
                    source_power: p.source_power,
                    threshold: p.threshold,
                },
                _ => return TrialOutcome::infeasible(),
            },
        };
        run_trial(&spec, scenario, stats, rho_target, master_seed, i)
    };
    let mut outcomes: Vec<TrialOutcome> =
        pool.install(|| (0..trials).into_par_iter().map(trial).collect());

    let mut ocpa_cap = None;
    if strategy == StrategyId::Ocpa {
        let cap = match options.ocpa_p_max {
            Some(cap) => cap,
            None => {
                let mut totals: Vec<f64> = outcomes
                    .iter()
                    .filter(|o| !o.infeasible)
                    .map(TrialOutcome::total_power)
                    .collect();
                if totals.is_empty() {
                    f64::INFINITY
                } else {
                    quantile(&mut totals, 1.0 - rho_target)
                }
            }
        };
        outcomes.iter_mut().for_each(|o| apply_power_cap(o, cap));
        ocpa_cap = Some(cap);
    }

    let mut acc = SweepAccumulator::new();
    outcomes.iter().for_each(|o| acc.push(o));
    Ok(SweepPoint {
        result: acc.finish(strategy, rho_target, master_seed),
        trials: options.keep_trials.then_some(outcomes),
        psm_params,
        ocpa_cap,
    })
}

/// Every strategy at every outage target, in that nesting order.
pub fn run_sweep(
    strategies: &[StrategyId],
    scenario: &NetworkScenario,
    rho_targets: &[f64],
    trials: u64,
    master_seed: u64,
    options: &SweepOptions,
) -> Result<Vec<SweepPoint>, RunError> {
    let pool = build_pool(options.workers)?;
    let mut points = Vec::with_capacity(strategies.len() * rho_targets.len());
    for &strategy in strategies {
        for &rho in rho_targets {
            points.push(run_point(
                &pool,
                strategy,
                scenario,
                rho,
                trials,
                master_seed,
                options,
            )?);
        }
    }
    Ok(points)
}
