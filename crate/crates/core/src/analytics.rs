//! Closed-form expectations and outage probabilities.
//!
//! With `X = |g|²` exponential of mean `2σ²`, a relay that forwards whenever
//! `X >= γ` with power `SNR'·N0/X` spends on average
//! `SNR'·N0·E1(γ/(2σ²))/(2σ²)`. Everything below is built from that
//! identity and from exponential tail probabilities.

use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by std inherent methods when std is linked
use num_traits::Float;

use crate::model::{ChannelStatistics, NetworkScenario};
use crate::numerics::{exp_integral_e1, k_of_tau};
use crate::strategies::{
    psm_mean_snr_remainder, psm_outage, reliability_probability, srm_normalized_threshold,
};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticReport {
    pub expected_source_power: f64,
    pub expected_relay_power: f64,
    pub expected_total: f64,
    pub outage: f64,
    pub per_relay: Vec<f64>,
}

impl AnalyticReport {
    pub fn new(expected_source_power: f64, per_relay: Vec<f64>, outage: f64) -> Self {
        let expected_relay_power = per_relay.iter().sum::<f64>();
        AnalyticReport {
            expected_source_power,
            expected_relay_power,
            expected_total: expected_source_power + expected_relay_power,
            outage: outage.clamp(0.0, 1.0),
            per_relay,
        }
    }
}

/// Mean transmit power of one relay that forwards whenever `|g|² >= gamma`.
pub fn expected_relay_power(
    gamma: f64,
    var_g: f64,
    snr_remainder: f64,
    noise_power: f64,
) -> Result<f64> {
    if snr_remainder == 0.0 || gamma == f64::INFINITY {
        return Ok(0.0);
    }
    if !(gamma > 0.0) {
        return Err(Error::Divergent("relay power diverges at a zero threshold"));
    }
    let scale = 2.0 * var_g;
    Ok(snr_remainder * noise_power * exp_integral_e1(gamma / scale)? / scale)
}

/// `|g_eff|² = 1 / Σ_i E1(γ/(2σ_i²))/(2σ_i²)`: the single link that would
/// cost the same expected power as the forwarding ensemble.
pub fn effective_gain(gamma: f64, reliable_var_g: &[f64]) -> Result<f64> {
    if reliable_var_g.is_empty() {
        return Err(Error::Domain("effective gain needs at least one relay"));
    }
    if gamma == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    if !(gamma > 0.0) {
        return Err(Error::Divergent(
            "effective gain vanishes at a zero threshold",
        ));
    }
    let mut inverse = 0.0;
    for &v in reliable_var_g {
        inverse += exp_integral_e1(gamma / (2.0 * v))? / (2.0 * v);
    }
    Ok(1.0 / inverse)
}

/// Mean extra power of the distributed optimum over the centralized one,
/// both evaluated on the same realizations.
pub fn expected_additional_power(odpa_expected_totals: &[f64], ocpa_totals: &[f64]) -> Result<f64> {
    if odpa_expected_totals.len() != ocpa_totals.len() {
        return Err(Error::Usage("ensembles differ in size"));
    }
    if odpa_expected_totals.is_empty() {
        return Err(Error::Usage("empty ensemble"));
    }
    let n = odpa_expected_totals.len() as f64;
    let diff: f64 = odpa_expected_totals
        .iter()
        .zip(ocpa_totals)
        .map(|(a, b)| a - b)
        .sum();
    Ok(diff / n)
}

/// Probability that the direct link alone misses the SNR target.
pub fn direct_outage(source_power: f64, var_h: f64, scenario: &NetworkScenario) -> f64 {
    if !(source_power > 0.0) {
        return 1.0;
    }
    let exponent = scenario.snr_target * scenario.noise_power / (2.0 * var_h * source_power);
    -(-exponent).exp_m1()
}

/// Residual of the i.i.d. design rule
/// `T·N0/(2P_sσ_f²) + γ/(2σ_g²) ≈ -ln(1 - ρ^{1/N})`, valid when the direct
/// link is nearly always in outage.
pub fn iid_design_identity(
    source_power: f64,
    gamma: f64,
    var_f: f64,
    var_g: f64,
    relays: usize,
    rho_target: f64,
    scenario: &NetworkScenario,
) -> f64 {
    let lhs = scenario.snr_target * scenario.noise_power / (2.0 * source_power * var_f)
        + gamma / (2.0 * var_g);
    let rhs = -(-rho_target.powf(1.0 / relays as f64)).ln_1p();
    lhs - rhs
}

/// Expected power of the designated relay under the single-relay rule.
pub fn srm_expected_relay_power(
    rho_target: f64,
    var_g: f64,
    snr_remainder: f64,
    noise_power: f64,
) -> Result<f64> {
    if snr_remainder == 0.0 {
        return Ok(0.0);
    }
    let k = k_of_tau(srm_normalized_threshold(rho_target)?)?;
    Ok(snr_remainder * noise_power * k / (2.0 * var_g))
}

/// Report for a common threshold over a known reliable set.
pub fn threshold_report(
    source_power: f64,
    gamma: f64,
    reliable_var_g: &[f64],
    snr_remainder: f64,
    noise_power: f64,
    outage: f64,
) -> Result<AnalyticReport> {
    let per_relay = reliable_var_g
        .iter()
        .map(|&v| expected_relay_power(gamma, v, snr_remainder, noise_power))
        .collect::<Result<Vec<_>>>()?;
    Ok(AnalyticReport::new(source_power, per_relay, outage))
}

/// Unconditional report for fixed passive-source parameters: relay `i`
/// spends `a_i·E[SNR']·N0·E1(γ/(2σ²))/(2σ²)`.
pub fn psm_report(
    source_power: f64,
    gamma: f64,
    stats: &ChannelStatistics,
    scenario: &NetworkScenario,
) -> Result<AnalyticReport> {
    let mean_remainder = psm_mean_snr_remainder(source_power, stats, scenario);
    let per_relay = stats
        .var_f
        .iter()
        .zip(&stats.var_g)
        .map(|(&vf, &vg)| {
            let a = reliability_probability(source_power, vf, scenario);
            Ok(a * expected_relay_power(gamma, vg, mean_remainder, scenario.noise_power)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let outage = psm_outage(source_power, gamma, stats, scenario);
    Ok(AnalyticReport::new(source_power, per_relay, outage))
}
