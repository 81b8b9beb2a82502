//! Single-trial simulation, aggregation and brute-force oracles.
//!
//! A trial draws one fading realization, lets the strategy allocate with the
//! knowledge it is entitled to, runs every relay's local forwarding rule and
//! combines the surviving signals at the destination. Trial `i` of a run with
//! master seed `s` always uses stream `i` of the ChaCha8 generator seeded by
//! `s`, so results do not depend on scheduling.

use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by std inherent methods when std is linked
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analytics::expected_relay_power;
use crate::model::{
    draw_realization, meets_target, mrc_snr, reliable_set, reliable_set_for_gains,
    ChannelRealization, ChannelStatistics, NetworkScenario, Point, Region,
};
use crate::strategies::{
    allocate, relay_forward_decision, snr_remainder, solve_threshold, AllocationMode, StrategyId,
    StrategySpec,
};
use crate::{Error, Result};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

const DESTINATION_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    /// Watts.
    pub source_power: f64,
    /// Watts, summed over forwarding relays.
    pub relay_power_total: f64,
    pub forwarding_count: usize,
    pub destination_snr: f64,
    pub outage: bool,
    /// A relay-capable strategy transmitted directly.
    pub fallback: bool,
    /// The allocator returned an error. Counted as an outage with zero power.
    pub infeasible: bool,
    /// OCPA exceeded its power cap. Counted as an outage at the cap.
    pub capped_outage: bool,
    /// The allocator's analytic expected total, where it defines one.
    pub predicted_total: Option<f64>,
    /// Power spent by forwarders other than the one with the strongest
    /// relay-to-destination gain.
    pub waste_power: f64,
    pub mode: Option<AllocationMode>,
    /// `SNR'` the relays were asked to deliver.
    pub snr_remainder: f64,
}

impl TrialOutcome {
    pub fn total_power(&self) -> f64 {
        self.source_power + self.relay_power_total
    }

    /// Outcome of a trial whose allocator failed.
    pub fn infeasible() -> Self {
        TrialOutcome {
            source_power: 0.0,
            relay_power_total: 0.0,
            forwarding_count: 0,
            destination_snr: 0.0,
            outage: true,
            fallback: false,
            infeasible: true,
            capped_outage: false,
            predicted_total: None,
            waste_power: 0.0,
            mode: None,
            snr_remainder: 0.0,
        }
    }
}

/// Random stream for trial `index`.
pub fn trial_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Destination for trial `index` when it is redrawn per trial. Uses a
/// generator independent of the fading stream.
pub fn draw_destination(region: &Region, master_seed: u64, index: u64) -> Point {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed ^ DESTINATION_SALT);
    rng.set_stream(index);
    region.sample(&mut rng)
}

pub fn run_trial(
    spec: &StrategySpec,
    scenario: &NetworkScenario,
    stats: &ChannelStatistics,
    rho_target: f64,
    master_seed: u64,
    index: u64,
) -> TrialOutcome {
    let mut rng = trial_rng(master_seed, index);
    run_trial_with_rng(spec, scenario, stats, rho_target, &mut rng)
}

pub fn run_trial_with_rng<R: Rng + ?Sized>(
    spec: &StrategySpec,
    scenario: &NetworkScenario,
    stats: &ChannelStatistics,
    rho_target: f64,
    rng: &mut R,
) -> TrialOutcome {
    let realization = draw_realization(stats, rng);
    simulate(spec, &realization, stats, scenario, rho_target, rng)
}

/// Plays out one realization under `spec`.
pub fn simulate<R: Rng + ?Sized>(
    spec: &StrategySpec,
    realization: &ChannelRealization,
    stats: &ChannelStatistics,
    scenario: &NetworkScenario,
    rho_target: f64,
    rng: &mut R,
) -> TrialOutcome {
    let Ok(decision) = allocate(spec, realization, stats, scenario, rho_target, rng) else {
        return TrialOutcome::infeasible();
    };
    let n0 = scenario.noise_power;
    let reliable = reliable_set(decision.source_power, realization, scenario);
    let forwarding: Vec<(f64, f64)> = realization
        .g_sq
        .iter()
        .enumerate()
        .filter_map(|(i, &g)| {
            relay_forward_decision(i, g, &decision, reliable.contains(i), n0).map(|p| (p, g))
        })
        .collect();
    let relay_power: f64 = forwarding.iter().map(|&(p, _)| p).sum();
    let waste_power = if forwarding.len() > 1 {
        let best = forwarding.iter().fold(
            (0.0f64, 0.0f64),
            |b, &(p, g)| if g > b.1 { (p, g) } else { b },
        );
        relay_power - best.0
    } else {
        0.0
    };
    let destination_snr = mrc_snr(decision.source_power, realization.h_sq, &forwarding, n0);
    let mut outcome = TrialOutcome {
        source_power: decision.source_power,
        relay_power_total: relay_power,
        forwarding_count: forwarding.len(),
        destination_snr,
        outage: !meets_target(destination_snr, scenario.snr_target),
        fallback: decision.is_fallback(),
        infeasible: false,
        capped_outage: false,
        predicted_total: decision.expected_total_power,
        waste_power,
        mode: Some(decision.mode),
        snr_remainder: decision.snr_remainder,
    };
    if let StrategySpec::Ocpa {
        power_cap: Some(cap),
    } = *spec
    {
        apply_power_cap(&mut outcome, cap);
    }
    outcome
}

/// Marks a trial whose total exceeds `cap` as an outage and scales its
/// powers down so that the total equals the cap.
pub fn apply_power_cap(outcome: &mut TrialOutcome, cap: f64) {
    let total = outcome.total_power();
    if total > cap {
        let scale = cap / total;
        outcome.source_power *= scale;
        outcome.relay_power_total *= scale;
        outcome.waste_power *= scale;
        outcome.outage = true;
        outcome.capped_outage = true;
    }
}

/// Aggregate of one `(strategy, ρ_target)` sweep point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepResult {
    pub strategy: StrategyId,
    pub rho_target: f64,
    pub trials: u64,
    pub outage_rate: f64,
    /// 95% half-width, normal approximation to the binomial.
    pub outage_ci95: f64,
    /// Always `mean_source_power + mean_relay_power`.
    pub mean_total_power: f64,
    pub power_ci95: f64,
    pub mean_source_power: f64,
    pub mean_relay_power: f64,
    pub mean_waste_power: f64,
    pub fallback_rate: f64,
    pub infeasible_rate: f64,
    pub capped_rate: f64,
    pub master_seed: u64,
}

/// Streaming accumulator. Feed outcomes in trial order for bit-identical
/// results.
#[derive(Debug, Clone, Default)]
pub struct SweepAccumulator {
    n: u64,
    outages: u64,
    fallbacks: u64,
    infeasible: u64,
    capped: u64,
    sum_source: f64,
    sum_relay: f64,
    sum_waste: f64,
    mean_total: f64,
    m2_total: f64,
}

impl SweepAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, o: &TrialOutcome) {
        self.n += 1;
        self.outages += o.outage as u64;
        self.fallbacks += o.fallback as u64;
        self.infeasible += o.infeasible as u64;
        self.capped += o.capped_outage as u64;
        self.sum_source += o.source_power;
        self.sum_relay += o.relay_power_total;
        self.sum_waste += o.waste_power;
        let x = o.total_power();
        let delta = x - self.mean_total;
        self.mean_total += delta / self.n as f64;
        self.m2_total += delta * (x - self.mean_total);
    }

    pub fn trials(&self) -> u64 {
        self.n
    }

    pub fn finish(&self, strategy: StrategyId, rho_target: f64, master_seed: u64) -> SweepResult {
        let n = self.n.max(1) as f64;
        let rate = |k: u64| k as f64 / n;
        let outage_rate = rate(self.outages);
        let mean_source_power = self.sum_source / n;
        let mean_relay_power = self.sum_relay / n;
        let variance = if self.n > 1 {
            self.m2_total / (self.n - 1) as f64
        } else {
            0.0
        };
        SweepResult {
            strategy,
            rho_target,
            trials: self.n,
            outage_rate,
            outage_ci95: Z95 * (outage_rate * (1.0 - outage_rate) / n).sqrt(),
            mean_total_power: mean_source_power + mean_relay_power,
            power_ci95: Z95 * (variance / n).sqrt(),
            mean_source_power,
            mean_relay_power,
            mean_waste_power: self.sum_waste / n,
            fallback_rate: rate(self.fallbacks),
            infeasible_rate: rate(self.infeasible),
            capped_rate: rate(self.capped),
            master_seed,
        }
    }
}

pub fn summarize<'a, I: IntoIterator<Item = &'a TrialOutcome>>(
    strategy: StrategyId,
    rho_target: f64,
    master_seed: u64,
    outcomes: I,
) -> SweepResult {
    let mut acc = SweepAccumulator::new();
    outcomes.into_iter().for_each(|o| acc.push(o));
    acc.finish(strategy, rho_target, master_seed)
}

/// Sequential sweep of a fixed strategy over several outage targets. Every
/// target reuses the same trial streams.
pub fn run_sweep(
    spec: &StrategySpec,
    scenario: &NetworkScenario,
    rho_targets: &[f64],
    trials: u64,
    master_seed: u64,
) -> Result<Vec<SweepResult>> {
    if trials == 0 {
        return Err(Error::Usage("trials must be at least 1"));
    }
    let stats = crate::model::build_statistics(scenario)?;
    Ok(rho_targets
        .iter()
        .map(|&rho| {
            let mut acc = SweepAccumulator::new();
            for i in 0..trials {
                acc.push(&run_trial(spec, scenario, &stats, rho, master_seed, i));
            }
            acc.finish(spec.id(), rho, master_seed)
        })
        .collect())
}

/// Best point of a continuous source power sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptimum {
    pub source_power: f64,
    pub threshold: f64,
    pub expected_total: f64,
}

/// Expected total of the distributed threshold rule at an arbitrary source
/// power, with the threshold solved for the reliable set at that power.
pub fn odpa_expected_total_at(
    source_power: f64,
    f_sq: &[f64],
    h_sq: f64,
    var_g: &[f64],
    rho_target: f64,
    scenario: &NetworkScenario,
) -> Result<(f64, f64)> {
    let remainder = snr_remainder(source_power, h_sq, scenario);
    if remainder == 0.0 {
        return Ok((f64::INFINITY, source_power));
    }
    let reliable = reliable_set_for_gains(source_power, f_sq, scenario);
    if reliable.is_empty() {
        return Err(Error::Infeasible("no reliable relay at this source power"));
    }
    let vars: Vec<f64> = reliable.indices().iter().map(|&i| var_g[i]).collect();
    let gamma = solve_threshold(&vars, rho_target)?;
    let mut total = source_power;
    for &v in &vars {
        total += expected_relay_power(gamma, v, remainder, scenario.noise_power)?;
    }
    Ok((gamma, total))
}

/// Sweeps `grid_points` log-spaced source powers from the smallest
/// candidate (strongest relay) to the direct-link candidate and returns the
/// best expected total. With a dead direct link the sweep ends at ten times
/// the largest relay candidate.
pub fn theorem1_bruteforce_oracle(
    f_sq: &[f64],
    h_sq: f64,
    var_g: &[f64],
    rho_target: f64,
    grid_points: usize,
    scenario: &NetworkScenario,
) -> Result<GridOptimum> {
    if grid_points < 2 {
        return Err(Error::Usage("grid needs at least two points"));
    }
    let tn0 = scenario.snr_target * scenario.noise_power;
    let useful: Vec<f64> = f_sq
        .iter()
        .copied()
        .filter(|&f| f > h_sq && f > 0.0)
        .collect();
    let f_max = useful.iter().fold(0.0f64, |m, &f| m.max(f));
    let f_min = useful.iter().fold(f64::INFINITY, |m, &f| m.min(f));
    if useful.is_empty() {
        if !(h_sq > 0.0) {
            return Err(Error::Infeasible(
                "no relay can decode and the direct link is dead",
            ));
        }
        return Ok(GridOptimum {
            source_power: tn0 / h_sq,
            threshold: f64::INFINITY,
            expected_total: tn0 / h_sq,
        });
    }
    let lo = tn0 / f_max;
    let hi = if h_sq > 0.0 {
        tn0 / h_sq
    } else {
        10.0 * tn0 / f_min
    };
    let (ln_lo, ln_hi) = (lo.ln(), hi.ln());
    let last = grid_points - 1;
    let mut best: Option<GridOptimum> = None;
    for j in 0..grid_points {
        let p = match j {
            0 => lo,
            j if j == last => hi,
            j => (ln_lo + (ln_hi - ln_lo) * j as f64 / last as f64).exp(),
        };
        let (threshold, expected_total) =
            odpa_expected_total_at(p, f_sq, h_sq, var_g, rho_target, scenario)?;
        if best.is_none_or(|b| expected_total < b.expected_total) {
            best = Some(GridOptimum {
                source_power: p,
                threshold,
                expected_total,
            });
        }
    }
    Ok(best.expect("grid is nonempty"))
}

/// Minimal total power meeting the destination target with at most one
/// forwarding relay, searching source powers on a grid of spacing `step`.
/// The relay power is the exact minimum for each grid source power.
pub fn ocpa_exhaustive_oracle(
    realization: &ChannelRealization,
    scenario: &NetworkScenario,
    step: f64,
) -> Result<f64> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Usage("quantization step must be positive"));
    }
    let n0 = scenario.noise_power;
    let tn0 = scenario.snr_target * n0;
    let h = realization.h_sq;
    let links = realization.f_sq.iter().zip(&realization.g_sq);
    let relay_bound = links
        .clone()
        .filter(|(&f, &g)| f > 0.0 && g > 0.0)
        .map(|(&f, &g)| tn0 / f + tn0 / g)
        .fold(f64::INFINITY, f64::min);
    let direct = if h > 0.0 { tn0 / h } else { f64::INFINITY };
    let bound = direct.min(relay_bound);
    if !bound.is_finite() {
        return Err(Error::Infeasible("every link is dead"));
    }
    let steps = (bound / step).ceil() as u64 + 1;
    let mut best = f64::INFINITY;
    for k in 1..=steps {
        let p = k as f64 * step;
        if p >= best {
            break;
        }
        if meets_target(p * h / n0, scenario.snr_target) {
            best = best.min(p);
            continue;
        }
        let needed = scenario.snr_target - p * h / n0;
        for (&f, &g) in links.clone() {
            if g > 0.0 && meets_target(p * f / n0, scenario.snr_target) {
                best = best.min(p + needed * n0 / g);
            }
        }
    }
    Ok(best)
}
