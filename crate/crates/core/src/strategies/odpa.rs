//! Optimum distributed allocation.
//!
//! With the source power fixed, the reliable set is fixed and the expected
//! total power is linear in `P_s` with slope `1 - |h|²/|g_eff|²`. Every
//! segment between consecutive decoding thresholds `T·N0/|f_i|²` therefore
//! attains its minimum at its left end or is beaten by direct transmission,
//! so only those `M + 1` source powers need to be compared. For each one the
//! threshold makes the probability that no reliable relay forwards equal to
//! the outage target.

use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by std inherent methods when std is linked
use num_traits::Float;

use super::{
    snr_remainder, validate_outage_target, AllocationDecision, AllocationMode, StrategyId,
};
use crate::analytics::{effective_gain, expected_relay_power};
use crate::model::{reliable_set_for_gains, NetworkScenario, ReliableSet};
use crate::numerics::{bisect, Tolerance};
use crate::{Error, Result};

const THRESHOLD_TOL: Tolerance = Tolerance {
    rel: 1e-13,
    abs: 0.0,
    max_iter: 400,
};

/// One of the `M + 1` candidate source powers, fully evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateEvaluation {
    pub source_power: f64,
    pub reliable_set: ReliableSet,
    /// `+∞` for the direct candidate.
    pub threshold: f64,
    /// `+∞` for the direct candidate.
    pub effective_gain_sq: f64,
    pub snr_remainder: f64,
    pub expected_total: f64,
}

impl CandidateEvaluation {
    pub fn is_direct(&self) -> bool {
        self.snr_remainder == 0.0
    }
}

/// `[γ_min, γ_max]` bracketing the threshold: the roots of the product
/// equation with every variance replaced by the smallest and largest one.
pub fn threshold_bounds(reliable_var_g: &[f64], rho_target: f64) -> Result<(f64, f64)> {
    validate_outage_target(rho_target)?;
    let (min, max) = variance_range(reliable_var_g)?;
    let per_relay = rho_target.powf(1.0 / reliable_var_g.len() as f64);
    let x = -(-per_relay).ln_1p();
    Ok((x * 2.0 * min, x * 2.0 * max))
}

/// Threshold `γ` solving `∏_i (1 - exp(-γ/(2σ_i²))) = ρ_target`.
pub fn solve_threshold(reliable_var_g: &[f64], rho_target: f64) -> Result<f64> {
    let (lo, hi) = threshold_bounds(reliable_var_g, rho_target)?;
    if hi - lo <= 4.0 * f64::EPSILON * hi {
        return Ok(lo);
    }
    let ln_rho = rho_target.ln();
    let residual = |gamma: f64| -> f64 {
        reliable_var_g
            .iter()
            .map(|&v| (-(-gamma / (2.0 * v)).exp_m1()).ln())
            .sum::<f64>()
            - ln_rho
    };
    // The exact root lies in [lo, hi]; rounding can put an endpoint on the
    // wrong side, in which case that endpoint is the root to working precision.
    if residual(lo) >= 0.0 {
        return Ok(lo);
    }
    if residual(hi) <= 0.0 {
        return Ok(hi);
    }
    match bisect(residual, lo, hi, THRESHOLD_TOL) {
        Ok(gamma) => Ok(gamma.clamp(lo, hi)),
        Err(Error::NonConvergence { estimate, .. }) => Ok(estimate.clamp(lo, hi)),
        Err(e) => Err(e),
    }
}

fn variance_range(vars: &[f64]) -> Result<(f64, f64)> {
    if vars.is_empty() {
        return Err(Error::Domain("threshold needs a nonempty reliable set"));
    }
    if !vars.iter().all(|v| v.is_finite() && *v > 0.0) {
        return Err(Error::Domain("variances must be positive"));
    }
    Ok(vars.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    }))
}

/// Evaluates every candidate source power: one per relay stronger than the
/// direct link (ascending power), then the direct candidate when `h_sq > 0`.
pub fn odpa_candidates(
    f_sq: &[f64],
    h_sq: f64,
    var_g: &[f64],
    rho_target: f64,
    scenario: &NetworkScenario,
) -> Result<Vec<CandidateEvaluation>> {
    validate_outage_target(rho_target)?;
    if f_sq.len() != var_g.len() {
        return Err(Error::Usage("gain and variance lists differ in length"));
    }
    let n0 = scenario.noise_power;
    let target = scenario.snr_target;

    let mut powers: Vec<f64> = f_sq
        .iter()
        .filter(|&&f| f > h_sq && f > 0.0)
        .map(|&f| target * n0 / f)
        .collect();
    powers.sort_by(f64::total_cmp);
    powers.dedup();

    let mut out = Vec::with_capacity(powers.len() + 1);
    for source_power in powers {
        let reliable = reliable_set_for_gains(source_power, f_sq, scenario);
        let vars: Vec<f64> = reliable.indices().iter().map(|&i| var_g[i]).collect();
        let remainder = snr_remainder(source_power, h_sq, scenario);
        let gamma = solve_threshold(&vars, rho_target)?;
        let relay_power = vars
            .iter()
            .map(|&v| expected_relay_power(gamma, v, remainder, n0))
            .sum::<Result<f64>>()?;
        out.push(CandidateEvaluation {
            source_power,
            effective_gain_sq: effective_gain(gamma, &vars)?,
            reliable_set: reliable,
            threshold: gamma,
            snr_remainder: remainder,
            expected_total: source_power + relay_power,
        });
    }
    if h_sq > 0.0 {
        let source_power = target * n0 / h_sq;
        out.push(CandidateEvaluation {
            source_power,
            reliable_set: reliable_set_for_gains(source_power, f_sq, scenario),
            threshold: f64::INFINITY,
            effective_gain_sq: f64::INFINITY,
            snr_remainder: 0.0,
            expected_total: source_power,
        });
    }
    if out.is_empty() {
        return Err(Error::Infeasible(
            "no relay can decode and the direct link is dead",
        ));
    }
    Ok(out)
}

/// Picks the cheapest candidate in expected total power. Ties go to the
/// smaller source power.
pub fn odpa_allocate(
    f_sq: &[f64],
    h_sq: f64,
    var_g: &[f64],
    rho_target: f64,
    scenario: &NetworkScenario,
) -> Result<AllocationDecision> {
    let candidates = odpa_candidates(f_sq, h_sq, var_g, rho_target, scenario)?;
    let best = candidates
        .iter()
        .reduce(|best, c| {
            if c.expected_total < best.expected_total {
                c
            } else {
                best
            }
        })
        .expect("candidate list is nonempty");
    if best.is_direct() {
        let mut d = AllocationDecision::direct(StrategyId::Odpa, h_sq, scenario)?;
        d.source_power = best.source_power;
        return Ok(d);
    }
    Ok(AllocationDecision {
        strategy: StrategyId::Odpa,
        source_power: best.source_power,
        mode: AllocationMode::DistributedThreshold,
        threshold: best.threshold,
        designated_relay: None,
        snr_remainder: best.snr_remainder,
        relay_power: None,
        expected_total_power: Some(best.expected_total),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{integrate_tail, Tolerance};
    use crate::strategies::test_support::unit_scenario;
    use alloc::vec;

    fn product(vars: &[f64], gamma: f64) -> f64 {
        vars.iter()
            .map(|&v| 1.0 - (-gamma / (2.0 * v)).exp())
            .product()
    }

    #[test]
    fn single_relay_closed_form() {
        let gamma = solve_threshold(&[0.5], 0.1).unwrap();
        assert!((gamma - 0.105_360_515_657_826_3).abs() < 1e-12);
    }

    #[test]
    fn symmetric_pair_closed_form() {
        let gamma = solve_threshold(&[0.5, 0.5], 0.25).unwrap();
        assert!((gamma - core::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn bounds_collapse_for_equal_variances() {
        let vars = [0.7, 0.7, 0.7];
        let (lo, hi) = threshold_bounds(&vars, 0.05).unwrap();
        assert_eq!(lo, hi);
        assert_eq!(solve_threshold(&vars, 0.05).unwrap(), lo);
    }

    #[test]
    fn mixed_variances_residual_and_bounds() {
        let vars = [0.1, 3.0, 0.7, 12.0];
        for &rho in &[1e-4, 0.01, 0.3, 0.9] {
            let gamma = solve_threshold(&vars, rho).unwrap();
            let (lo, hi) = threshold_bounds(&vars, rho).unwrap();
            assert!(lo <= gamma && gamma <= hi);
            assert!((product(&vars, gamma) - rho).abs() < 1e-12);
        }
    }

    #[test]
    fn threshold_errors() {
        assert!(solve_threshold(&[], 0.1).is_err());
        assert!(solve_threshold(&[1.0], 0.0).is_err());
        assert!(solve_threshold(&[1.0], 1.0).is_err());
    }

    #[test]
    fn no_stronger_relay_means_direct() {
        let s = unit_scenario(2);
        let d = odpa_allocate(&[0.1, 0.2], 0.5, &[1.0, 1.0], 0.1, &s).unwrap();
        assert_eq!(d.mode, AllocationMode::DirectOnly);
        assert_eq!(d.source_power, 20.0);
    }

    #[test]
    fn single_relay_candidate_wins() {
        let s = unit_scenario(1);
        let candidates = odpa_candidates(&[2.0], 0.5, &[0.5], 0.1, &s).unwrap();
        assert_eq!(candidates.len(), 2);
        let a = &candidates[0];
        assert_eq!(a.source_power, 5.0);
        assert_eq!(a.snr_remainder, 7.5);
        assert!((a.threshold - 0.105_360_515_657_826_3).abs() < 1e-12);

        // Independent check of the relay term by quadrature of its defining integral.
        let tol = Tolerance::new(1e-13, 0.0, 2000).unwrap();
        let relay = integrate_tail(|x| 7.5 / x * (-x).exp(), a.threshold, tol).unwrap();
        assert!((a.expected_total - (5.0 + relay)).abs() < 1e-9);
        assert!((a.expected_total - 18.318_505_125_676_44).abs() < 1e-9);
        assert_eq!(candidates[1].expected_total, 20.0);

        let d = odpa_allocate(&[2.0], 0.5, &[0.5], 0.1, &s).unwrap();
        assert_eq!(d.mode, AllocationMode::DistributedThreshold);
        assert_eq!(d.source_power, 5.0);
    }

    #[test]
    fn loose_outage_target_removes_relay_power() {
        let s = unit_scenario(1);
        let d = odpa_allocate(&[2.0], 0.5, &[0.5], 1.0 - 1e-12, &s).unwrap();
        assert_eq!(d.source_power, 5.0);
        assert!(d.threshold > 20.0);
        assert!((d.expected_total_power.unwrap() - 5.0).abs() < 1e-9);
    }

    #[test]
    fn candidate_sets_grow_with_power() {
        let s = unit_scenario(3);
        let f = [4.0, 1.0, 2.0];
        let c = odpa_candidates(&f, 0.2, &[1.0, 1.0, 1.0], 0.1, &s).unwrap();
        let sizes: Vec<usize> = c.iter().map(|c| c.reliable_set.len()).collect();
        assert_eq!(sizes, vec![1, 2, 3, 3]);
        assert_eq!(c[0].reliable_set.indices(), &[0]);
        assert_eq!(c[1].reliable_set.indices(), &[0, 2]);
    }

    #[test]
    fn dead_links_are_infeasible() {
        let s = unit_scenario(1);
        assert!(matches!(
            odpa_allocate(&[0.0], 0.0, &[1.0], 0.1, &s),
            Err(Error::Infeasible(_))
        ));
        assert!(odpa_allocate(&[1.0], 0.0, &[1.0], 1.5, &s).is_err());
    }
}
