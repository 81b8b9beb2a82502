//! Passive source: the source knows only channel statistics and transmits
//! at a fixed power; every reliable relay forwards when its own gain clears
//! a fixed threshold.

use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by std inherent methods when std is linked
use num_traits::Float;

use super::{
    snr_remainder, validate_outage_target, AllocationDecision, AllocationMode, StrategyId,
};
use crate::analytics::expected_relay_power;
use crate::model::{ChannelStatistics, NetworkScenario};
use crate::numerics::{bisect, integrate_tail, Tolerance};
use crate::{Error, Result};

const WASTE_TOL: Tolerance = Tolerance {
    rel: 1e-10,
    abs: 0.0,
    max_iter: 2000,
};

const SEARCH_TOL: Tolerance = Tolerance {
    rel: 1e-12,
    abs: 0.0,
    max_iter: 400,
};

/// A fixed `(P_s, γ)` pair and its analytic expected total power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsmParams {
    pub source_power: f64,
    pub threshold: f64,
    pub expected_total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PsmSelection {
    Feasible(PsmParams),
    /// The target is below the outage floor even at the largest source power.
    Infeasible {
        floor_at_max: f64,
    },
}

/// Search range for [`psm_pick_params`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsmGrid {
    /// Watts.
    pub max_source_power: f64,
    pub points: usize,
}

impl Default for PsmGrid {
    fn default() -> Self {
        PsmGrid {
            max_source_power: 100.0,
            points: 200,
        }
    }
}

/// Decision for one trial. The source does not see `h`; the remainder is
/// what the relays will observe once the direct signal has arrived.
pub fn psm_allocate(
    source_power: f64,
    threshold: f64,
    h_sq: f64,
    scenario: &NetworkScenario,
) -> Result<AllocationDecision> {
    if !(source_power.is_finite() && source_power > 0.0) {
        return Err(Error::Domain("source power must be positive and finite"));
    }
    if !(threshold >= 0.0) {
        return Err(Error::Domain("threshold must be nonnegative"));
    }
    Ok(AllocationDecision {
        strategy: StrategyId::Psm,
        source_power,
        mode: AllocationMode::DistributedThreshold,
        threshold,
        designated_relay: None,
        snr_remainder: snr_remainder(source_power, h_sq, scenario),
        relay_power: None,
        expected_total_power: None,
    })
}

/// `a_i`: probability that a relay with source-link variance `var_f` decodes.
pub fn reliability_probability(source_power: f64, var_f: f64, scenario: &NetworkScenario) -> f64 {
    if !(source_power > 0.0) {
        return 0.0;
    }
    (-scenario.snr_target * scenario.noise_power / (2.0 * var_f * source_power)).exp()
}

fn forwarding_probability(gamma: f64, var_g: f64) -> f64 {
    (-gamma / (2.0 * var_g)).exp()
}

fn direct_outage(source_power: f64, var_h: f64, scenario: &NetworkScenario) -> f64 {
    crate::analytics::direct_outage(source_power, var_h, scenario)
}

/// `∏_i (1 - a_i b_i) · d_out`.
pub fn psm_outage(
    source_power: f64,
    gamma: f64,
    stats: &ChannelStatistics,
    scenario: &NetworkScenario,
) -> f64 {
    if !(source_power > 0.0) {
        return 1.0;
    }
    let relays: f64 = stats
        .var_f
        .iter()
        .zip(&stats.var_g)
        .map(|(&vf, &vg)| {
            1.0 - reliability_probability(source_power, vf, scenario)
                * forwarding_probability(gamma, vg)
        })
        .product();
    relays * direct_outage(source_power, stats.var_h, scenario)
}

/// Outage at `γ = 0`, the smallest achievable for this source power.
pub fn psm_outage_floor(
    source_power: f64,
    stats: &ChannelStatistics,
    scenario: &NetworkScenario,
) -> f64 {
    psm_outage(source_power, 0.0, stats, scenario)
}

/// `E[(SNR_target - P_s|h|²/N0)^+]` over the direct-link fading.
pub fn psm_mean_snr_remainder(
    source_power: f64,
    stats: &ChannelStatistics,
    scenario: &NetworkScenario,
) -> f64 {
    let target = scenario.snr_target;
    if !(source_power > 0.0) {
        return target;
    }
    let scale = source_power * 2.0 * stats.var_h / scenario.noise_power;
    let u = target / scale;
    let shape = if u < 1e-2 {
        // u + expm1(-u) = u²/2 - u³/6 + u⁴/24 - ...
        let mut term = u * u / 2.0;
        let mut sum = term;
        for n in 3..10 {
            term *= -u / n as f64;
            sum += term;
        }
        sum
    } else {
        u + (-u).exp_m1()
    };
    scale * shape
}

/// Probability that relay `i` forwards with gain `x` while a reliable
/// competitor sees a stronger relay-to-destination channel.
pub fn psm_wrong_forwarding_prob(
    i: usize,
    x: f64,
    source_power: f64,
    stats: &ChannelStatistics,
    scenario: &NetworkScenario,
) -> f64 {
    let a = |j: usize| reliability_probability(source_power, stats.var_f[j], scenario);
    let log_none_better: f64 = (0..stats.relay_count())
        .filter(|&j| j != i)
        .map(|j| (-a(j) * forwarding_probability(x, stats.var_g[j])).ln_1p())
        .sum();
    (a(i) * -log_none_better.exp_m1()).clamp(0.0, 1.0)
}

/// Expected power spent by forwarding relays that are not the strongest,
/// averaged over the direct-link fading.
pub fn psm_expected_waste(
    source_power: f64,
    gamma: f64,
    stats: &ChannelStatistics,
    scenario: &NetworkScenario,
) -> Result<f64> {
    let remainder = psm_mean_snr_remainder(source_power, stats, scenario);
    psm_expected_waste_given(source_power, gamma, remainder, stats, scenario)
}

/// [`psm_expected_waste`] for a known remainder `SNR'`.
pub fn psm_expected_waste_given(
    source_power: f64,
    gamma: f64,
    snr_remainder: f64,
    stats: &ChannelStatistics,
    scenario: &NetworkScenario,
) -> Result<f64> {
    if stats.relay_count() < 2 || snr_remainder == 0.0 || gamma == f64::INFINITY {
        return Ok(0.0);
    }
    if !(gamma > 0.0) {
        return Err(Error::Divergent("waste diverges at a zero threshold"));
    }
    let mut total = 0.0;
    for (i, &vg) in stats.var_g.iter().enumerate() {
        let scale = 2.0 * vg;
        let integrand = |t: f64| {
            psm_wrong_forwarding_prob(i, t * scale, source_power, stats, scenario) * (-t).exp() / t
        };
        let integral = integrate_tail(integrand, gamma / scale, WASTE_TOL)?;
        total += snr_remainder * scenario.noise_power * integral / scale;
    }
    Ok(total)
}

fn psm_expected_total(
    source_power: f64,
    gamma: f64,
    stats: &ChannelStatistics,
    scenario: &NetworkScenario,
) -> Result<f64> {
    let remainder = psm_mean_snr_remainder(source_power, stats, scenario);
    let mut relay = 0.0;
    for (&vf, &vg) in stats.var_f.iter().zip(&stats.var_g) {
        let a = reliability_probability(source_power, vf, scenario);
        relay += a * expected_relay_power(gamma, vg, remainder, scenario.noise_power)?;
    }
    Ok(source_power + relay)
}

/// Largest threshold meeting the target at this source power, `+∞` when the
/// direct link alone already does.
fn largest_threshold(
    source_power: f64,
    rho_target: f64,
    stats: &ChannelStatistics,
    scenario: &NetworkScenario,
) -> Result<f64> {
    let d_out = direct_outage(source_power, stats.var_h, scenario);
    if d_out <= rho_target {
        return Ok(f64::INFINITY);
    }
    let n = stats.relay_count();
    if n == 0 {
        return Err(Error::Infeasible(
            "no relays to cover the direct-link outage",
        ));
    }
    let var_max = stats.var_g.iter().fold(0.0f64, |m, &v| m.max(v));
    let cap = -(-(rho_target / d_out).powf(1.0 / n as f64)).ln_1p() * 2.0 * var_max;
    let ln_rho = rho_target.ln();
    let residual = |gamma: f64| psm_outage(source_power, gamma, stats, scenario).ln() - ln_rho;
    if residual(0.0) > 0.0 {
        return Err(Error::Infeasible("outage floor above target"));
    }
    match bisect(residual, 0.0, cap, SEARCH_TOL) {
        Ok(g) => Ok(g),
        Err(Error::NonConvergence { estimate, .. }) => Ok(estimate),
        Err(e) => Err(e),
    }
}

fn evaluate(
    source_power: f64,
    rho_target: f64,
    stats: &ChannelStatistics,
    scenario: &NetworkScenario,
) -> Option<PsmParams> {
    let threshold = largest_threshold(source_power, rho_target, stats, scenario).ok()?;
    if threshold <= 0.0 {
        return None;
    }
    let expected_total = psm_expected_total(source_power, threshold, stats, scenario).ok()?;
    expected_total.is_finite().then_some(PsmParams {
        source_power,
        threshold,
        expected_total,
    })
}

/// Chooses `(P_s, γ)` minimizing the analytic expected total power subject
/// to the outage target, over a log-spaced source power grid followed by a
/// golden-section refinement around the best grid point.
pub fn psm_pick_params(
    stats: &ChannelStatistics,
    rho_target: f64,
    grid: PsmGrid,
    scenario: &NetworkScenario,
) -> Result<PsmSelection> {
    validate_outage_target(rho_target)?;
    if !(grid.max_source_power.is_finite() && grid.max_source_power > 0.0) || grid.points < 2 {
        return Err(Error::Usage(
            "grid needs a positive maximum and at least two points",
        ));
    }
    let p_max = grid.max_source_power;
    let floor_at_max = psm_outage_floor(p_max, stats, scenario);
    if floor_at_max > rho_target {
        return Ok(PsmSelection::Infeasible { floor_at_max });
    }

    let ln_rho = rho_target.ln();
    let floor_residual = |ln_p: f64| psm_outage_floor(ln_p.exp(), stats, scenario).ln() - ln_rho;
    let hi = p_max.ln();
    let mut lo = hi;
    while floor_residual(lo) <= 0.0 {
        lo -= core::f64::consts::LN_10;
        if lo < hi - 700.0 {
            return Err(Error::Domain(
                "outage floor does not rise at small source powers",
            ));
        }
    }
    let ln_p_lo = match bisect(floor_residual, lo, hi, SEARCH_TOL) {
        Ok(x) => x,
        Err(Error::NonConvergence { estimate, .. }) => estimate,
        Err(e) => return Err(e),
    };

    let step = (hi - ln_p_lo) / grid.points as f64;
    let points: Vec<(f64, Option<PsmParams>)> = (1..=grid.points)
        .map(|j| {
            let ln_p = if j == grid.points {
                hi
            } else {
                ln_p_lo + step * j as f64
            };
            (ln_p, evaluate(ln_p.exp(), rho_target, stats, scenario))
        })
        .collect();
    let Some(best_index) = points
        .iter()
        .enumerate()
        .filter_map(|(j, (_, p))| p.map(|p| (j, p.expected_total)))
        .reduce(|best, c| if c.1 < best.1 { c } else { best })
        .map(|(j, _)| j)
    else {
        return Ok(PsmSelection::Infeasible { floor_at_max });
    };
    let mut best = points[best_index].1.expect("selected point is feasible");

    let left = if best_index == 0 {
        ln_p_lo
    } else {
        points[best_index - 1].0
    };
    let right = points.get(best_index + 1).map_or(hi, |p| p.0);
    let cost = |ln_p: f64| {
        evaluate(ln_p.exp(), rho_target, stats, scenario)
            .map_or(f64::INFINITY, |p| p.expected_total)
    };
    let refined = golden_section(cost, left, right, 60);
    if let Some(p) = evaluate(refined.exp(), rho_target, stats, scenario) {
        if p.expected_total < best.expected_total {
            best = p;
        }
    }
    Ok(PsmSelection::Feasible(best))
}

fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, iterations: usize) -> f64 {
    let inv_phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iterations {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        c
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::iid_design_identity;
    use crate::strategies::test_support::unit_scenario;
    use alloc::vec;

    fn iid_stats(n: usize, vf: f64, vg: f64, vh: f64) -> ChannelStatistics {
        ChannelStatistics::new(vec![vf; n], vec![vg; n], vh).unwrap()
    }

    #[test]
    fn outage_limits() {
        let s = unit_scenario(2);
        let stats = iid_stats(2, 1.0, 1.0, 0.5);
        let d = crate::analytics::direct_outage(3.0, 0.5, &s);
        assert!((psm_outage(3.0, f64::INFINITY, &stats, &s) - d).abs() < 1e-15);
        assert!(psm_outage(1e12, 1.0, &stats, &s) < 1e-9);
        assert_eq!(psm_outage(0.0, 1.0, &stats, &s), 1.0);
    }

    #[test]
    fn outage_single_relay_example() {
        let s = unit_scenario(1);
        let (vf, vg, vh) = (2.0, 0.75, 0.5);
        let stats = iid_stats(1, vf, vg, vh);
        // a = exp(-T/(2 vf P)) = e^{-1}
        let p = s.snr_target / (2.0 * vf);
        let gamma = 2.0 * vg;
        assert!((reliability_probability(p, vf, &s) - (-1.0f64).exp()).abs() < 1e-15);
        let d = crate::analytics::direct_outage(p, vh, &s);
        let want = (1.0 - (-2.0f64).exp()) * d;
        assert!((psm_outage(p, gamma, &stats, &s) - want).abs() < 1e-15);
    }

    #[test]
    fn outage_bounds_hold() {
        let s = unit_scenario(3);
        let stats = ChannelStatistics::new(vec![0.4, 2.0, 1.1], vec![3.0, 0.2, 0.9], 0.3).unwrap();
        for &p in &[0.5, 3.0, 40.0] {
            let d = crate::analytics::direct_outage(p, 0.3, &s);
            for &g in &[0.01, 0.5, 4.0] {
                let out = psm_outage(p, g, &stats, &s);
                let b_bound: f64 = stats
                    .var_g
                    .iter()
                    .map(|&v| 1.0 - (-g / (2.0 * v)).exp())
                    .product();
                assert!(out >= psm_outage_floor(p, &stats, &s));
                assert!(out >= b_bound * d - 1e-16);
            }
        }
    }

    #[test]
    fn wrong_forwarding_examples() {
        let s = unit_scenario(2);
        let (vf, vg) = (2.0, 0.75);
        let p = s.snr_target / (2.0 * vf);
        let stats = iid_stats(2, vf, vg, 0.5);
        let w = psm_wrong_forwarding_prob(0, 2.0 * vg, p, &stats, &s);
        assert!((w - (-3.0f64).exp()).abs() < 1e-15);
        assert_eq!(psm_wrong_forwarding_prob(0, 1e6, p, &stats, &s), 0.0);
        let single = iid_stats(1, vf, vg, 0.5);
        assert_eq!(psm_wrong_forwarding_prob(0, 0.1, p, &single, &s), 0.0);
    }

    #[test]
    fn mean_remainder_matches_closed_form() {
        let s = unit_scenario(1);
        let stats = iid_stats(1, 1.0, 1.0, 0.5);
        for &p in &[1e-6, 0.3, 5.0, 400.0] {
            let m = 2.0 * 0.5;
            let direct = s.snr_target - p * m * (1.0 - (-s.snr_target / (p * m)).exp());
            let got = psm_mean_snr_remainder(p, &stats, &s);
            assert!(
                (got - direct).abs() <= 1e-9 * direct.max(1e-300),
                "{p}: {got} vs {direct}"
            );
        }
        // u = 1e-3: T²/(2Pm) dominates
        let p = s.snr_target / 1e-3;
        let got = psm_mean_snr_remainder(p, &stats, &s);
        let u: f64 = 1e-3;
        let want = p * (u * u / 2.0 - u.powi(3) / 6.0 + u.powi(4) / 24.0 - u.powi(5) / 120.0);
        assert!(((got - want) / want).abs() < 1e-12);
    }

    #[test]
    fn waste_trivial_cases() {
        let s = unit_scenario(2);
        let stats = iid_stats(2, 1.0, 1.0, 0.5);
        let single = iid_stats(1, 1.0, 1.0, 0.5);
        assert_eq!(
            psm_expected_waste_given(2.0, 0.1, 5.0, &single, &s).unwrap(),
            0.0
        );
        assert_eq!(
            psm_expected_waste_given(2.0, 0.1, 0.0, &stats, &s).unwrap(),
            0.0
        );
        assert!(matches!(
            psm_expected_waste_given(2.0, 0.0, 5.0, &stats, &s),
            Err(Error::Divergent(_))
        ));
        let w1 = psm_expected_waste_given(2.0, 0.1, 5.0, &stats, &s).unwrap();
        let w2 = psm_expected_waste_given(2.0, 0.5, 5.0, &stats, &s).unwrap();
        assert!(w1 > w2 && w2 > 0.0);
    }

    #[test]
    fn waste_two_iid_relays_closed_form() {
        // With a_j = 1 the integrand is e^{-2t}/t, integral E1(2γ').
        let s = unit_scenario(2);
        let stats = iid_stats(2, 1e12, 0.5, 0.5);
        let gamma = 0.3;
        let w = psm_expected_waste_given(1.0, gamma, 4.0, &stats, &s).unwrap();
        let a = reliability_probability(1.0, 1e12, &s);
        assert!((a - 1.0).abs() < 1e-10);
        let want = 2.0 * 4.0 * crate::numerics::exp_integral_e1(2.0 * gamma).unwrap();
        assert!(((w - want) / want).abs() < 1e-8, "{w} vs {want}");
    }

    #[test]
    fn pick_params_infeasible_below_floor() {
        let s = unit_scenario(1);
        let stats = iid_stats(1, 1.0, 1.0, 0.5);
        let grid = PsmGrid {
            max_source_power: 1.0,
            points: 50,
        };
        let floor = psm_outage_floor(1.0, &stats, &s);
        match psm_pick_params(&stats, floor * 0.5, grid, &s).unwrap() {
            PsmSelection::Infeasible { floor_at_max } => assert_eq!(floor_at_max, floor),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn pick_params_meets_target_below_cap() {
        let s = unit_scenario(3);
        let stats = ChannelStatistics::new(vec![0.8, 2.0, 1.1], vec![3.0, 0.7, 0.9], 0.05).unwrap();
        let rho = 0.05;
        let grid = PsmGrid {
            max_source_power: 1e3,
            points: 120,
        };
        let PsmSelection::Feasible(p) = psm_pick_params(&stats, rho, grid, &s).unwrap() else {
            panic!("expected feasible");
        };
        let out = psm_outage(p.source_power, p.threshold, &stats, &s);
        assert!(out <= rho * (1.0 + 1e-9), "{out}");
        let d = crate::analytics::direct_outage(p.source_power, 0.05, &s);
        let cap = -(-(rho / d).powf(1.0 / 3.0)).ln_1p() * 2.0 * 3.0;
        assert!(p.threshold < cap);
        let again = psm_expected_total(p.source_power, p.threshold, &stats, &s).unwrap();
        assert_eq!(again, p.expected_total);
    }

    #[test]
    fn pick_params_iid_identity_when_direct_link_is_dead() {
        let s = unit_scenario(1);
        let (vf, vg) = (1.0, 1.0);
        let stats = iid_stats(1, vf, vg, 1e-9);
        let rho = 0.1;
        let grid = PsmGrid {
            max_source_power: 1e3,
            points: 200,
        };
        let PsmSelection::Feasible(p) = psm_pick_params(&stats, rho, grid, &s).unwrap() else {
            panic!("expected feasible");
        };
        let r = iid_design_identity(p.source_power, p.threshold, vf, vg, 1, rho, &s);
        assert!(r.abs() < 1e-6, "{r}");
    }
}
