//! Geometry, path loss, Rayleigh channel draws and the SNR algebra.
//!
//! Channel gains are kept in raw units (`|f_i|²`, `|g_i|²`, `|h|²`); every
//! SNR divides by the scenario's explicit noise power, so the unit-noise
//! formulas and the watt-scale deployments run through the same code.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)] // shadowed by std inherent methods when std is linked
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::{Error, Result};

/// Relative slack used when comparing an SNR against its target.
///
/// Powers are set as `target·N0/gain` and then multiplied back by the same
/// gain, which can land a few ulps below the target.
pub const SNR_REL_TOL: f64 = 1e-12;

/// `snr >= target`, forgiving rounding of relative size [`SNR_REL_TOL`].
#[inline]
pub fn meets_target(snr: f64, target: f64) -> bool {
    snr >= target * (1.0 - SNR_REL_TOL)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Axis-aligned rectangle, used for relay placement and destination draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub x: [f64; 2],
    pub y: [f64; 2],
}

impl Region {
    pub fn new(x: [f64; 2], y: [f64; 2]) -> Result<Self> {
        let ok = |r: [f64; 2]| r[0].is_finite() && r[1].is_finite() && r[0] < r[1];
        if !(ok(x) && ok(y)) {
            return Err(Error::Domain("region ranges must be finite with min < max"));
        }
        Ok(Region { x, y })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        Point {
            x: rng.random_range(self.x[0]..self.x[1]),
            y: rng.random_range(self.y[0]..self.y[1]),
        }
    }

    /// `count` points drawn uniformly from the region with a fixed seed.
    pub fn place(&self, count: usize, seed: u64) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| self.sample(&mut rng)).collect()
    }
}

/// Propagation constants of the `C/d^α` path-loss model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Physics {
    pub alpha: f64,
    pub antenna_gain_tx: f64,
    pub antenna_gain_rx: f64,
    /// Meters.
    pub wavelength: f64,
    pub system_loss: f64,
}

impl Default for Physics {
    /// 900 MHz carrier, unit antenna gains, no system loss, cubic path loss.
    fn default() -> Self {
        Physics {
            alpha: 3.0,
            antenna_gain_tx: 1.0,
            antenna_gain_rx: 1.0,
            wavelength: 1.0 / 3.0,
            system_loss: 1.0,
        }
    }
}

impl Physics {
    /// `C = G_t·G_r·λ² / ((4π)²·L)`.
    pub fn gain_constant(&self) -> f64 {
        let four_pi = 4.0 * PI;
        self.antenna_gain_tx * self.antenna_gain_rx * self.wavelength * self.wavelength
            / (four_pi * four_pi * self.system_loss)
    }

    fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.alpha) {
            return Err(Error::Domain("path-loss exponent must be positive"));
        }
        if !(positive(self.antenna_gain_tx) && positive(self.antenna_gain_rx)) {
            return Err(Error::Domain("antenna gains must be positive"));
        }
        if !positive(self.wavelength) {
            return Err(Error::Domain("wavelength must be positive"));
        }
        if !(self.system_loss.is_finite() && self.system_loss >= 1.0) {
            return Err(Error::Domain("system loss must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkScenario {
    pub source: Point,
    pub destination: Point,
    pub relays: Vec<Point>,
    pub physics: Physics,
    /// Watts.
    pub noise_power: f64,
    /// Linear SNR required at relays (to decode) and at the destination.
    pub snr_target: f64,
}

impl NetworkScenario {
    pub fn new(
        source: Point,
        destination: Point,
        relays: Vec<Point>,
        physics: Physics,
        noise_power: f64,
        snr_target: f64,
    ) -> Result<Self> {
        let scenario = NetworkScenario {
            source,
            destination,
            relays,
            physics,
            noise_power,
            snr_target,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    /// Source and destination 100 m apart with `count` relays placed
    /// uniformly in the 50 m × 50 m square centered between them.
    pub fn standard(count: usize, placement_seed: u64) -> Self {
        let relays = STANDARD_RELAY_BOX.place(count, placement_seed);
        NetworkScenario::new(
            Point::new(0.0, 0.0),
            Point::new(100.0, 0.0),
            relays,
            Physics::default(),
            1e-10,
            10.0,
        )
        .expect("standard scenario is valid")
    }

    pub fn relay_count(&self) -> usize {
        self.relays.len()
    }

    pub fn with_destination(&self, destination: Point) -> Result<Self> {
        let mut moved = self.clone();
        moved.destination = destination;
        moved.validate()?;
        Ok(moved)
    }

    pub fn validate(&self) -> Result<()> {
        self.physics.validate()?;
        if !(self.noise_power.is_finite() && self.noise_power > 0.0) {
            return Err(Error::Domain("noise power must be positive"));
        }
        if !(self.snr_target.is_finite() && self.snr_target > 0.0) {
            return Err(Error::Domain("SNR target must be positive"));
        }
        let finite = |p: &Point| p.x.is_finite() && p.y.is_finite();
        if !(finite(&self.source) && finite(&self.destination) && self.relays.iter().all(finite)) {
            return Err(Error::Domain("node coordinates must be finite"));
        }
        if self.source == self.destination {
            return Err(Error::Domain("source and destination coincide"));
        }
        if self
            .relays
            .iter()
            .any(|r| *r == self.source || *r == self.destination)
        {
            return Err(Error::Domain(
                "a relay coincides with the source or destination",
            ));
        }
        Ok(())
    }
}

/// Relay box used by [`NetworkScenario::standard`].
pub const STANDARD_RELAY_BOX: Region = Region {
    x: [25.0, 75.0],
    y: [-25.0, 25.0],
};

/// Per-dimension variances of the complex Gaussian channel coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStatistics {
    pub var_f: Vec<f64>,
    pub var_g: Vec<f64>,
    pub var_h: f64,
}

impl ChannelStatistics {
    pub fn new(var_f: Vec<f64>, var_g: Vec<f64>, var_h: f64) -> Result<Self> {
        if var_f.len() != var_g.len() {
            return Err(Error::Domain("var_f and var_g lengths differ"));
        }
        let positive = |v: &f64| v.is_finite() && *v > 0.0;
        if !(var_f.iter().all(positive) && var_g.iter().all(positive) && positive(&var_h)) {
            return Err(Error::Domain("channel variances must be positive"));
        }
        Ok(ChannelStatistics {
            var_f,
            var_g,
            var_h,
        })
    }

    pub fn relay_count(&self) -> usize {
        self.var_f.len()
    }
}

/// One draw of the squared channel gains.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub f_sq: Vec<f64>,
    pub g_sq: Vec<f64>,
    pub h_sq: f64,
}

impl ChannelRealization {
    pub fn relay_count(&self) -> usize {
        self.f_sq.len()
    }
}

/// Relays able to decode the source transmission.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReliableSet {
    indices: Vec<usize>,
}

impl ReliableSet {
    pub fn from_indices(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        ReliableSet { indices }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn contains(&self, relay: usize) -> bool {
        self.indices.binary_search(&relay).is_ok()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn is_subset(&self, other: &ReliableSet) -> bool {
        self.indices.iter().all(|&i| other.contains(i))
    }
}

/// Per-dimension variance `C/d^α` of a link of the given length.
pub fn pathloss_variance(distance: f64, scenario: &NetworkScenario) -> Result<f64> {
    if !(distance > 0.0) || !distance.is_finite() {
        return Err(Error::Domain("link distance must be positive"));
    }
    let physics = &scenario.physics;
    Ok(physics.gain_constant() / distance.powf(physics.alpha))
}

pub fn build_statistics(scenario: &NetworkScenario) -> Result<ChannelStatistics> {
    scenario.validate()?;
    let var_of = |a: &Point, b: &Point| pathloss_variance(a.distance(b), scenario);
    let var_f = scenario
        .relays
        .iter()
        .map(|r| var_of(&scenario.source, r))
        .collect::<Result<Vec<_>>>()?;
    let var_g = scenario
        .relays
        .iter()
        .map(|r| var_of(r, &scenario.destination))
        .collect::<Result<Vec<_>>>()?;
    let var_h = var_of(&scenario.source, &scenario.destination)?;
    ChannelStatistics::new(var_f, var_g, var_h)
}

/// Squared gain of a zero-mean complex Gaussian with per-dimension variance
/// `var`: exponential with mean `2·var`.
#[inline]
pub fn draw_squared_gain<R: Rng + ?Sized>(var: f64, rng: &mut R) -> f64 {
    let unit: f64 = rng.sample(Exp1);
    2.0 * var * unit
}

/// Draws `|f_i|²` for every relay, then `|g_i|²`, then `|h|²`.
pub fn draw_realization<R: Rng + ?Sized>(
    stats: &ChannelStatistics,
    rng: &mut R,
) -> ChannelRealization {
    let f_sq = stats
        .var_f
        .iter()
        .map(|&v| draw_squared_gain(v, rng))
        .collect();
    let g_sq = stats
        .var_g
        .iter()
        .map(|&v| draw_squared_gain(v, rng))
        .collect();
    let h_sq = draw_squared_gain(stats.var_h, rng);
    ChannelRealization { f_sq, g_sq, h_sq }
}

pub fn received_snr(power: f64, gain_sq: f64, noise_power: f64) -> Result<f64> {
    if !(noise_power > 0.0) {
        return Err(Error::Domain("noise power must be positive"));
    }
    Ok(power * gain_sq / noise_power)
}

pub fn reliable_set(
    source_power: f64,
    realization: &ChannelRealization,
    scenario: &NetworkScenario,
) -> ReliableSet {
    reliable_set_for_gains(source_power, &realization.f_sq, scenario)
}

/// [`reliable_set`] from the source-to-relay gains alone.
pub fn reliable_set_for_gains(
    source_power: f64,
    f_sq: &[f64],
    scenario: &NetworkScenario,
) -> ReliableSet {
    let indices = f_sq
        .iter()
        .enumerate()
        .filter(|(_, &f)| {
            meets_target(source_power * f / scenario.noise_power, scenario.snr_target)
        })
        .map(|(i, _)| i)
        .collect();
    ReliableSet { indices }
}

/// Destination SNR after maximum ratio combining of the direct path and the
/// forwarding relays, given as `(relay power, |g_i|²)` pairs.
pub fn mrc_snr(source_power: f64, h_sq: f64, forwarding: &[(f64, f64)], noise_power: f64) -> f64 {
    debug_assert!(noise_power > 0.0);
    forwarding
        .iter()
        .fold(source_power * h_sq / noise_power, |acc, &(p, g)| {
            acc + p * g / noise_power
        })
}
