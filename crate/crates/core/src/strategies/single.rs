//! Single forwarding relay: the source designates one relay, which forwards
//! only if its gain clears `τ_k = σ²_{g_k}·τ`. The threshold makes the
//! forwarding probability exactly `1 - ρ_target`.

#[allow(unused_imports)] // shadowed by std inherent methods when std is linked
use num_traits::Float;
use rand::Rng;

use super::{
    snr_remainder, validate_outage_target, AllocationDecision, AllocationMode, StrategyId,
};
use crate::model::NetworkScenario;
use crate::numerics::k_of_tau;
use crate::{Error, Result};

/// `τ = -2·ln(1 - ρ_target)`, the threshold for unit per-dimension variance.
pub fn srm_normalized_threshold(rho_target: f64) -> Result<f64> {
    validate_outage_target(rho_target)?;
    Ok(-2.0 * (-rho_target).ln_1p())
}

/// Expected total power of designating relay `k`, or `None` if the relay
/// cannot decode or is not worth using.
fn designated_cost(
    f_sq: f64,
    h_sq: f64,
    var_g: f64,
    k_tau: f64,
    scenario: &NetworkScenario,
) -> Option<f64> {
    if !(f_sq > 0.0) || !(h_sq * k_tau < 2.0 * var_g) {
        return None;
    }
    let n0 = scenario.noise_power;
    let source_power = scenario.snr_target * n0 / f_sq;
    let remainder = snr_remainder(source_power, h_sq, scenario);
    Some(source_power + remainder * n0 * k_tau / (2.0 * var_g))
}

fn designate(
    strategy: StrategyId,
    k: Option<(usize, f64)>,
    f_sq: &[f64],
    h_sq: f64,
    var_g: &[f64],
    tau: f64,
    scenario: &NetworkScenario,
) -> Result<AllocationDecision> {
    let direct = if h_sq > 0.0 {
        Some(scenario.snr_target * scenario.noise_power / h_sq)
    } else {
        None
    };
    match (k, direct) {
        (None, None) => Err(Error::Infeasible("no usable relay and no direct link")),
        (Some((_, cost)), Some(d)) if d < cost => {
            AllocationDecision::direct(strategy, h_sq, scenario)
        }
        (None, Some(_)) => AllocationDecision::direct(strategy, h_sq, scenario),
        (Some((k, cost)), _) => {
            let source_power = scenario.snr_target * scenario.noise_power / f_sq[k];
            Ok(AllocationDecision {
                strategy,
                source_power,
                mode: AllocationMode::DesignatedRelay,
                threshold: var_g[k] * tau,
                designated_relay: Some(k),
                snr_remainder: snr_remainder(source_power, h_sq, scenario),
                relay_power: None,
                expected_total_power: Some(cost),
            })
        }
    }
}

fn check_lengths(f_sq: &[f64], var_g: &[f64]) -> Result<()> {
    if f_sq.len() != var_g.len() {
        return Err(Error::Usage("gain and variance lists differ in length"));
    }
    Ok(())
}

/// Designates the relay minimizing
/// `1/f² + K(τ)/(2σ_g²)·(1 - h²/f²)^+` over relays with `h²·K(τ) < 2σ_g²`.
/// Direct transmission is used when no relay qualifies or it is strictly
/// cheaper.
pub fn srm_allocate(
    f_sq: &[f64],
    h_sq: f64,
    var_g: &[f64],
    rho_target: f64,
    scenario: &NetworkScenario,
) -> Result<AllocationDecision> {
    check_lengths(f_sq, var_g)?;
    let tau = srm_normalized_threshold(rho_target)?;
    let k_tau = k_of_tau(tau)?;
    let best = f_sq
        .iter()
        .zip(var_g)
        .enumerate()
        .filter_map(|(k, (&f, &v))| designated_cost(f, h_sq, v, k_tau, scenario).map(|c| (k, c)))
        .reduce(|best, c| if c.1 < best.1 { c } else { best });
    designate(StrategyId::Srm, best, f_sq, h_sq, var_g, tau, scenario)
}

/// Draws one relay uniformly and applies the single-relay rule to it.
pub fn rrs_allocate<R: Rng + ?Sized>(
    f_sq: &[f64],
    h_sq: f64,
    var_g: &[f64],
    rho_target: f64,
    rng: &mut R,
    scenario: &NetworkScenario,
) -> Result<AllocationDecision> {
    check_lengths(f_sq, var_g)?;
    if f_sq.is_empty() {
        return Err(Error::Domain("random selection needs at least one relay"));
    }
    let tau = srm_normalized_threshold(rho_target)?;
    let k_tau = k_of_tau(tau)?;
    let k = rng.random_range(0..f_sq.len());
    let drawn = designated_cost(f_sq[k], h_sq, var_g[k], k_tau, scenario).map(|c| (k, c));
    designate(StrategyId::Rrs, drawn, f_sq, h_sq, var_g, tau, scenario)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::exp_integral_e1;
    use crate::strategies::test_support::unit_scenario;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn normalized_threshold_cancels_log() {
        let rho = 1.0 - (-0.5f64).exp();
        let tau = srm_normalized_threshold(rho).unwrap();
        assert!((tau - 1.0).abs() < 1e-14);
        assert!(srm_normalized_threshold(0.0).is_err());
        assert!(srm_normalized_threshold(1.0).is_err());
    }

    /// `ρ` with `K(τ) = target`, found by bisection on `E1(τ/2)`.
    fn rho_for_k(target: f64) -> f64 {
        let (mut lo, mut hi) = (1e-6f64, 60.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if exp_integral_e1(mid / 2.0).unwrap() > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let tau = 0.5 * (lo + hi);
        -(-tau / 2.0).exp_m1()
    }

    #[test]
    fn score_example_picks_second_relay() {
        let s = unit_scenario(2);
        let rho = rho_for_k(0.2);
        let k = k_of_tau(srm_normalized_threshold(rho).unwrap()).unwrap();
        assert!((k - 0.2).abs() < 1e-12);
        // (f², 2σ²_g) = (2, 4) and (4, 1)
        let d = srm_allocate(&[2.0, 4.0], 0.0, &[2.0, 0.5], rho, &s).unwrap();
        assert_eq!(d.designated_relay, Some(1));
        assert_eq!(d.mode, AllocationMode::DesignatedRelay);
        assert_eq!(d.source_power, 2.5);
        assert_eq!(d.snr_remainder, 10.0);
        assert!((d.expected_total_power.unwrap() - 10.0 * 0.45).abs() < 1e-10);
        let tau = srm_normalized_threshold(rho).unwrap();
        assert_eq!(d.threshold, 0.5 * tau);
    }

    #[test]
    fn infeasible_relays_fall_back_to_direct() {
        let s = unit_scenario(2);
        let rho = 0.1;
        let k = k_of_tau(srm_normalized_threshold(rho).unwrap()).unwrap();
        let var_g = [0.5, 0.25];
        let h = 1.01 / k;
        let d = srm_allocate(&[100.0, 100.0], h, &var_g, rho, &s).unwrap();
        assert_eq!(d.mode, AllocationMode::DirectOnly);
        assert!(d.is_fallback());
        assert!(matches!(
            srm_allocate(&[0.0, 0.0], 0.0, &var_g, rho, &s),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn cheaper_direct_link_wins() {
        let s = unit_scenario(1);
        let d = srm_allocate(&[0.5], 0.9, &[50.0], 0.1, &s).unwrap();
        assert_eq!(d.mode, AllocationMode::DirectOnly);
        assert!((d.source_power - 10.0 / 0.9).abs() < 1e-12);
    }

    #[test]
    fn rrs_single_relay_matches_srm() {
        let s = unit_scenario(1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = rrs_allocate(&[3.0], 0.1, &[1.0], 0.05, &mut rng, &s).unwrap();
        let mut b = srm_allocate(&[3.0], 0.1, &[1.0], 0.05, &s).unwrap();
        b.strategy = StrategyId::Rrs;
        assert_eq!(a, b);
    }

    #[test]
    fn rrs_needs_relays() {
        let s = unit_scenario(0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(matches!(
            rrs_allocate(&[], 1.0, &[], 0.05, &mut rng, &s),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn rrs_is_reproducible() {
        let s = unit_scenario(4);
        let f = [5.0; 4];
        let v = [1.0; 4];
        let picks = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50)
                .map(|_| {
                    rrs_allocate(&f, 0.0, &v, 0.1, &mut rng, &s)
                        .unwrap()
                        .designated_relay
                })
                .collect::<alloc::vec::Vec<_>>()
        };
        assert_eq!(picks(9), picks(9));
    }
}
