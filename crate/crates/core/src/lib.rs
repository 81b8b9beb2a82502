//! Power allocation for parallel decode-and-forward relay networks.
//!
//! A source reaches a destination directly and through `N` regenerative relays
//! on orthogonal channels, all links Rayleigh faded. This crate contains the
//! channel model, the allocation strategies (centralized optimum, optimum
//! distributed threshold rule, passive source, single relay, random relay and
//! direct transmission), their closed-form performance predictors and a
//! single-trial Monte Carlo engine with brute-force oracles.
//!
//! The crate is `no_std` and only needs `alloc`. Floating point math goes
//! through `libm`, so results are identical on every target. Parallel sweeps,
//! configuration files and CSV output live in the `relaypower` crate.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analytics;
mod error;
pub mod model;
pub mod montecarlo;
pub mod numerics;
pub mod strategies;

pub use error::{Error, Result};
pub use model::{
    ChannelRealization, ChannelStatistics, NetworkScenario, Physics, Point, ReliableSet,
};
pub use strategies::{AllocationDecision, AllocationMode, StrategyId, StrategySpec};
