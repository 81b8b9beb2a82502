//! Allocation strategies.
//!
//! Each strategy maps the channel knowledge it is allowed to see onto an
//! [`AllocationDecision`]: a source power plus either nothing (direct only),
//! a common forwarding threshold every reliable relay applies to its own
//! relay-to-destination gain, or a single designated relay.
//!
//! | strategy | source sees                        | relays forward                |
//! |----------|------------------------------------|-------------------------------|
//! | OCPA     | every gain                         | best efficient relay, exact   |
//! | ODPA     | `f_i`, `h`, statistics of `g_i`    | reliable and `g_i >= γ`       |
//! | PSM      | statistics only, fixed `(P_s, γ)`  | reliable and `g_i >= γ`       |
//! | SRM      | `f_i`, `h`, statistics of `g_i`    | selected relay, `g_k >= τ_k`  |
//! | RRS      | as SRM, relay drawn at random      | drawn relay, `g_k >= τ_k`     |
//! | direct   | `h`                                | none                          |

mod odpa;
mod psm;
mod single;

use core::fmt;
use core::str::FromStr;

use rand::Rng;

use crate::model::{ChannelRealization, ChannelStatistics, NetworkScenario};
use crate::{Error, Result};

pub use odpa::{
    odpa_allocate, odpa_candidates, solve_threshold, threshold_bounds, CandidateEvaluation,
};
pub use psm::{
    psm_allocate, psm_expected_waste, psm_expected_waste_given, psm_mean_snr_remainder, psm_outage,
    psm_outage_floor, psm_pick_params, psm_wrong_forwarding_prob, reliability_probability, PsmGrid,
    PsmParams, PsmSelection,
};
pub use single::{rrs_allocate, srm_allocate, srm_normalized_threshold};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StrategyId {
    Ocpa,
    Odpa,
    Psm,
    Srm,
    Rrs,
    Direct,
}

impl StrategyId {
    pub const ALL: [StrategyId; 6] = [
        StrategyId::Ocpa,
        StrategyId::Odpa,
        StrategyId::Psm,
        StrategyId::Srm,
        StrategyId::Rrs,
        StrategyId::Direct,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            StrategyId::Ocpa => "ocpa",
            StrategyId::Odpa => "odpa",
            StrategyId::Psm => "psm",
            StrategyId::Srm => "srm",
            StrategyId::Rrs => "rrs",
            StrategyId::Direct => "direct",
        }
    }
}

impl fmt::Display for StrategyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StrategyId::ALL
            .into_iter()
            .find(|id| id.as_str().eq_ignore_ascii_case(s))
            .ok_or(Error::Domain("unknown strategy"))
    }
}

/// A strategy together with the parameters it needs beyond the channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StrategySpec {
    /// `power_cap` turns totals above the cap into outages.
    Ocpa {
        power_cap: Option<f64>,
    },
    Odpa,
    Psm {
        source_power: f64,
        threshold: f64,
    },
    Srm,
    Rrs,
    Direct,
}

impl StrategySpec {
    pub fn id(&self) -> StrategyId {
        match self {
            StrategySpec::Ocpa { .. } => StrategyId::Ocpa,
            StrategySpec::Odpa => StrategyId::Odpa,
            StrategySpec::Psm { .. } => StrategyId::Psm,
            StrategySpec::Srm => StrategyId::Srm,
            StrategySpec::Rrs => StrategyId::Rrs,
            StrategySpec::Direct => StrategyId::Direct,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AllocationMode {
    DirectOnly,
    DistributedThreshold,
    DesignatedRelay,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllocationDecision {
    pub strategy: StrategyId,
    /// Watts.
    pub source_power: f64,
    pub mode: AllocationMode,
    /// Forwarding threshold on `|g_i|²`, raw gain units. `+∞` in direct mode.
    pub threshold: f64,
    pub designated_relay: Option<usize>,
    /// `(SNR_target - P_s·|h|²/N0)^+`, the share the relays must deliver.
    pub snr_remainder: f64,
    /// Relay power fixed by the source (centralized allocation only).
    pub relay_power: Option<f64>,
    /// Analytic expected total power given the source's knowledge.
    pub expected_total_power: Option<f64>,
}

impl AllocationDecision {
    /// Direct transmission at exactly the power that meets the target.
    pub fn direct(strategy: StrategyId, h_sq: f64, scenario: &NetworkScenario) -> Result<Self> {
        if !(h_sq > 0.0) {
            return Err(Error::Infeasible("direct link has zero gain"));
        }
        let source_power = scenario.snr_target * scenario.noise_power / h_sq;
        Ok(AllocationDecision {
            strategy,
            source_power,
            mode: AllocationMode::DirectOnly,
            threshold: f64::INFINITY,
            designated_relay: None,
            snr_remainder: 0.0,
            relay_power: None,
            expected_total_power: Some(source_power),
        })
    }

    /// A relay-capable strategy that ended up transmitting directly.
    pub fn is_fallback(&self) -> bool {
        self.mode == AllocationMode::DirectOnly && self.strategy != StrategyId::Direct
    }
}

/// `(SNR_target - P_s·|h|²/N0)^+`.
pub fn snr_remainder(source_power: f64, h_sq: f64, scenario: &NetworkScenario) -> f64 {
    (scenario.snr_target - source_power * h_sq / scenario.noise_power).max(0.0)
}

pub fn validate_outage_target(rho_target: f64) -> Result<()> {
    if rho_target > 0.0 && rho_target < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(
            "target outage probability must lie in (0, 1)",
        ))
    }
}

pub fn direct_allocate(h_sq: f64, scenario: &NetworkScenario) -> Result<AllocationDecision> {
    AllocationDecision::direct(StrategyId::Direct, h_sq, scenario)
}

/// Centralized optimum with full channel knowledge.
///
/// Among the efficient relays (both hops at least as strong as the direct
/// link) pick the one minimizing `1/f² + 1/g² - h²/(f²g²)` (gains over
/// noise), drive the source just hard enough for it to decode and let it top
/// up the destination SNR. Falls back to direct transmission when no relay
/// is efficient.
pub fn ocpa_allocate(
    realization: &ChannelRealization,
    scenario: &NetworkScenario,
) -> Result<AllocationDecision> {
    let n0 = scenario.noise_power;
    let h = realization.h_sq;
    let mut best: Option<(usize, f64)> = None;
    for (k, (&f, &g)) in realization.f_sq.iter().zip(&realization.g_sq).enumerate() {
        if !(f >= h && g >= h && f > 0.0 && g > 0.0) {
            continue;
        }
        let (fn_, gn, hn) = (f / n0, g / n0, h / n0);
        let score = 1.0 / fn_ + 1.0 / gn - hn / (fn_ * gn);
        if best.is_none_or(|(_, s)| score < s) {
            best = Some((k, score));
        }
    }
    let Some((k, _)) = best else {
        return AllocationDecision::direct(StrategyId::Ocpa, h, scenario)
            .map_err(|_| Error::Infeasible("no efficient relay and no direct link"));
    };
    let source_power = scenario.snr_target * n0 / realization.f_sq[k];
    let remainder = snr_remainder(source_power, h, scenario);
    let relay_power = remainder * n0 / realization.g_sq[k];
    Ok(AllocationDecision {
        strategy: StrategyId::Ocpa,
        source_power,
        mode: AllocationMode::DesignatedRelay,
        threshold: 0.0,
        designated_relay: Some(k),
        snr_remainder: remainder,
        relay_power: Some(relay_power),
        expected_total_power: Some(source_power + relay_power),
    })
}

/// Local forwarding rule run by each relay with only its own gains.
///
/// Returns the transmit power `SNR'·N0/|g_i|²` when the relay forwards.
/// The threshold comparison is inclusive.
pub fn relay_forward_decision(
    relay_index: usize,
    g_sq: f64,
    decision: &AllocationDecision,
    is_reliable: bool,
    noise_power: f64,
) -> Option<f64> {
    if !(decision.snr_remainder > 0.0) || !(g_sq > 0.0) {
        return None;
    }
    let forwards = match decision.mode {
        AllocationMode::DirectOnly => false,
        AllocationMode::DistributedThreshold => is_reliable && g_sq >= decision.threshold,
        AllocationMode::DesignatedRelay => {
            decision.designated_relay == Some(relay_index) && g_sq >= decision.threshold
        }
    };
    forwards.then(|| decision.snr_remainder * noise_power / g_sq)
}

/// Runs `spec` on one realization, exposing only the knowledge the
/// strategy is entitled to.
pub fn allocate<R: Rng + ?Sized>(
    spec: &StrategySpec,
    realization: &ChannelRealization,
    stats: &ChannelStatistics,
    scenario: &NetworkScenario,
    rho_target: f64,
    rng: &mut R,
) -> Result<AllocationDecision> {
    let f = &realization.f_sq;
    let h = realization.h_sq;
    let var_g = &stats.var_g;
    match *spec {
        StrategySpec::Ocpa { .. } => ocpa_allocate(realization, scenario),
        StrategySpec::Odpa => odpa_allocate(f, h, var_g, rho_target, scenario),
        StrategySpec::Psm {
            source_power,
            threshold,
        } => psm_allocate(source_power, threshold, h, scenario),
        StrategySpec::Srm => srm_allocate(f, h, var_g, rho_target, scenario),
        StrategySpec::Rrs => rrs_allocate(f, h, var_g, rho_target, rng, scenario),
        StrategySpec::Direct => direct_allocate(h, scenario),
    }
}
