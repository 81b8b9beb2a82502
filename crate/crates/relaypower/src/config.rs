//! Experiment files.
//!
//! ```toml
//! [scenario]
//! source = [0.0, 0.0]
//! destination = [100.0, 0.0]
//! snr_target = 10.0
//!
//! [scenario.physics]
//! alpha = 3.0
//! noise_power = 1e-10
//!
//! [scenario.relays.box]
//! x = [25.0, 75.0]
//! y = [-25.0, 25.0]
//! count = 15
//! placement_seed = 7
//!
//! [run]
//! trials = 100000
//! strategies = ["odpa", "srm", "psm", "rrs"]
//! rho_targets = [0.05]
//!
//! [output]
//! csv = "results.csv"
//! ```
//!
//! Everything except `run.trials` has a default.

use std::fs;
use std::path::{Path, PathBuf};

use relaypower_core::model::{Region, STANDARD_RELAY_BOX};
use relaypower_core::strategies::PsmGrid;
use relaypower_core::{NetworkScenario, Physics, Point, StrategyId};
use serde::{Deserialize, Serialize};

use crate::RunError;

/// Placement seed of the shipped deployment.
pub const DEFAULT_PLACEMENT_SEED: u64 = 7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub scenario: ScenarioConfig,
    pub run: RunConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub source: [f64; 2],
    pub destination: [f64; 2],
    pub snr_target: f64,
    pub physics: PhysicsConfig,
    pub relays: RelaysConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            source: [0.0, 0.0],
            destination: [100.0, 0.0],
            snr_target: 10.0,
            physics: PhysicsConfig::default(),
            relays: RelaysConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicsConfig {
    pub alpha: f64,
    pub antenna_gain_tx: f64,
    pub antenna_gain_rx: f64,
    /// Meters.
    pub wavelength: f64,
    pub system_loss: f64,
    /// Watts.
    pub noise_power: f64,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        let p = Physics::default();
        PhysicsConfig {
            alpha: p.alpha,
            antenna_gain_tx: p.antenna_gain_tx,
            antenna_gain_rx: p.antenna_gain_rx,
            wavelength: p.wavelength,
            system_loss: p.system_loss,
            noise_power: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelaysConfig {
    /// Explicit coordinates in meters.
    Positions(Vec<[f64; 2]>),
    /// `count` relays drawn uniformly from a box with a fixed seed.
    Box(RelayBox),
}

impl Default for RelaysConfig {
    fn default() -> Self {
        RelaysConfig::Box(RelayBox::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RelayBox {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub count: usize,
    pub placement_seed: u64,
}

impl Default for RelayBox {
    fn default() -> Self {
        RelayBox {
            x: STANDARD_RELAY_BOX.x,
            y: STANDARD_RELAY_BOX.y,
            count: 15,
            placement_seed: DEFAULT_PLACEMENT_SEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_strategies", with = "strategy_names")]
    pub strategies: Vec<StrategyId>,
    #[serde(default = "default_rho_targets")]
    pub rho_targets: Vec<f64>,
    pub trials: u64,
    #[serde(default = "default_master_seed")]
    pub master_seed: u64,
    /// OCPA total power cap in watts. Without it the cap is the empirical
    /// `1 - ρ_target` quantile of the uncapped OCPA total.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ocpa_p_max: Option<f64>,
    /// Fixed passive-source parameters. Without them they are optimized per
    /// outage target.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psm: Option<PsmFixed>,
    #[serde(default)]
    pub psm_search: PsmSearch,
    /// Redraw the destination uniformly from this box for every trial.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub destination_randomization: Option<BoxRange>,
    /// Worker threads; all available cores when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

fn default_strategies() -> Vec<StrategyId> {
    StrategyId::ALL.to_vec()
}

fn default_rho_targets() -> Vec<f64> {
    vec![0.01, 0.02, 0.05, 0.1, 0.2]
}

fn default_master_seed() -> u64 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsmFixed {
    /// Watts.
    pub source_power: f64,
    /// Raw squared-gain units.
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PsmSearch {
    pub max_source_power: f64,
    pub points: usize,
}

impl Default for PsmSearch {
    fn default() -> Self {
        let g = PsmGrid::default();
        PsmSearch {
            max_source_power: g.max_source_power,
            points: g.points,
        }
    }
}

impl From<PsmSearch> for PsmGrid {
    fn from(s: PsmSearch) -> Self {
        PsmGrid {
            max_source_power: s.max_source_power,
            points: s.points,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxRange {
    pub x: [f64; 2],
    pub y: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub csv: PathBuf,
    /// One row per trial and sweep point.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_trial_csv: Option<PathBuf>,
    /// Plot-ready subset of the summary.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curve_csv: Option<PathBuf>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            csv: PathBuf::from("results.csv"),
            per_trial_csv: None,
            curve_csv: None,
        }
    }
}

mod strategy_names {
    use relaypower_core::StrategyId;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ids: &[StrategyId], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(ids.iter().map(|id| id.as_str()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<StrategyId>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|name| {
                name.parse().map_err(|_| {
                    D::Error::custom(format!(
                        "unknown strategy `{name}`, expected one of ocpa, odpa, psm, srm, rrs, direct"
                    ))
                })
            })
            .collect()
    }
}

impl ExperimentConfig {
    /// Checks everything serde cannot. `source` is the file text, used to
    /// point at the offending line.
    pub fn validate(&self, source: &str) -> Result<(), RunError> {
        let fail = |key: &str, msg: String| Err(config_error(source, key, &msg));
        let run = &self.run;
        if run.trials == 0 {
            return fail("trials", "run.trials must be at least 1".into());
        }
        if run.strategies.is_empty() {
            return fail("strategies", "run.strategies is empty".into());
        }
        if run.rho_targets.is_empty() {
            return fail("rho_targets", "run.rho_targets is empty".into());
        }
        if let Some(bad) = run.rho_targets.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
            return fail("rho_targets", format!("rho target {bad} is outside (0, 1)"));
        }
        if let Some(cap) = run.ocpa_p_max {
            if !(cap.is_finite() && cap > 0.0) {
                return fail(
                    "ocpa_p_max",
                    format!("ocpa_p_max must be positive, got {cap}"),
                );
            }
        }
        if let Some(p) = run.psm {
            if !(p.source_power.is_finite() && p.source_power > 0.0 && p.threshold >= 0.0) {
                return fail(
                    "psm",
                    "psm needs a positive source_power and nonnegative threshold".into(),
                );
            }
        }
        let search = run.psm_search;
        if !(search.max_source_power.is_finite() && search.max_source_power > 0.0)
            || search.points < 2
        {
            return fail(
                "psm_search",
                "psm_search needs max_source_power > 0 and points >= 2".into(),
            );
        }
        if run.workers == Some(0) {
            return fail("workers", "run.workers must be at least 1".into());
        }
        if let Some(b) = run.destination_randomization {
            if let Err(e) = Region::new(b.x, b.y) {
                return fail(
                    "destination_randomization",
                    format!("destination_randomization: {e}"),
                );
            }
        }
        if let Err(e) = self.scenario.build() {
            return fail("scenario", format!("scenario: {e}"));
        }
        Ok(())
    }
}

impl ScenarioConfig {
    pub fn build(&self) -> Result<NetworkScenario, relaypower_core::Error> {
        let relays = match &self.relays {
            RelaysConfig::Positions(p) => p.iter().map(|&[x, y]| Point::new(x, y)).collect(),
            RelaysConfig::Box(b) => Region::new(b.x, b.y)?.place(b.count, b.placement_seed),
        };
        let p = &self.physics;
        NetworkScenario::new(
            Point::new(self.source[0], self.source[1]),
            Point::new(self.destination[0], self.destination[1]),
            relays,
            Physics {
                alpha: p.alpha,
                antenna_gain_tx: p.antenna_gain_tx,
                antenna_gain_rx: p.antenna_gain_rx,
                wavelength: p.wavelength,
                system_loss: p.system_loss,
            },
            p.noise_power,
            self.snr_target,
        )
    }
}

fn config_error(source: &str, key: &str, msg: &str) -> RunError {
    match line_of(source, key) {
        Some(line) => RunError::Config(format!("line {line}: {msg}")),
        None => RunError::Config(msg.to_string()),
    }
}

/// 1-based line of the first assignment to, or table named after, `key`.
fn line_of(source: &str, key: &str) -> Option<usize> {
    source
        .lines()
        .position(|l| {
            let l = l.trim_start();
            l.strip_prefix(key)
                .is_some_and(|rest| rest.trim_start().starts_with('='))
                || l.trim_start_matches('[')
                    .trim_end_matches(']')
                    .ends_with(key)
        })
        .map(|i| i + 1)
}

/// Parses and validates `text`, applying `key.path=value` overrides first.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<ExperimentConfig, RunError> {
    let mut doc: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| RunError::Config(format!("invalid config: {e}")))?;
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    let merged = if overrides.is_empty() {
        text.to_string()
    } else {
        toml::to_string(&doc).map_err(|e| RunError::Config(e.to_string()))?
    };
    let config: ExperimentConfig = toml::from_str(&merged).map_err(|e| {
        let mut msg = format!("invalid config: {e}");
        if !merged.contains("[run]") && !merged.contains("run.") {
            msg.push_str("\nthe [run] section is required and must set `trials`");
        }
        RunError::Config(msg)
    })?;
    config.validate(&merged)?;
    Ok(config)
}

fn apply_override(doc: &mut toml::Table, spec: &str) -> Result<(), RunError> {
    let bad = || RunError::Config(format!("override `{spec}` must look like key.path=value"));
    let (path, raw) = spec.split_once('=').ok_or_else(bad)?;
    let keys: Vec<&str> = path.trim().split('.').map(str::trim).collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(bad());
    }
    let value = format!("v = {}", raw.trim())
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let (last, parents) = keys.split_last().expect("path has at least one key");
    let mut table = doc;
    for key in parents {
        let entry = table
            .entry(key.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry.as_table_mut().ok_or_else(|| {
            RunError::Config(format!("override `{spec}`: `{key}` is not a table"))
        })?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

pub fn load_config(path: &Path, overrides: &[String]) -> Result<ExperimentConfig, RunError> {
    let text = fs::read_to_string(path)
        .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text, overrides).map_err(|e| match e {
        RunError::Config(msg) => RunError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Seeds above `i64::MAX` have no TOML representation and are rejected.
pub fn write_config(config: &ExperimentConfig) -> Result<String, RunError> {
    let placement = match &config.scenario.relays {
        RelaysConfig::Box(b) => Some(b.placement_seed),
        RelaysConfig::Positions(_) => None,
    };
    for seed in [Some(config.run.master_seed), placement]
        .into_iter()
        .flatten()
    {
        if i64::try_from(seed).is_err() {
            return Err(RunError::Config(format!(
                "seed {seed} exceeds the largest TOML integer {}",
                i64::MAX
            )));
        }
    }
    toml::to_string(config).map_err(|e| RunError::Config(e.to_string()))
}
