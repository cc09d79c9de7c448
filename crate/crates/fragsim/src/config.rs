//! Scenario and sweep configuration documents.
//!
//! The format is TOML with flat keys mirroring the scenario fields; units
//! are part of the key names (`*_s` seconds, `*_hz` Hz, `*_bytes` bytes,
//! `*_pct` percent). A document is a sweep when any of the list axes
//! (`node_counts`, `fragment_counts`, `spreading_factors`, `duty_cycles`)
//! is present; otherwise it is a single scenario.
//!
//! Defaults: payload 250 B, 1 B fragment header, one fragment, mean
//! inter-arrival 10 s, duty cycle 1% (use `"unrestricted"` to lift it),
//! horizon 10000 s, 300 replications, 125 kHz bandwidth, CR 4/5,
//! 8-symbol preamble.

use crate::phy::{from_secs, DutyCycleLimit, RadioConfig};
use crate::sim::{QueuePolicy, Scenario};
use crate::sweep::SweepSpec;
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("key `{key}`: {msg}")]
    Invalid { key: &'static str, msg: String },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
}

fn invalid(key: &'static str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key, msg: msg.into() }
}

/// Duty cycle as written in a document: a percent or `"unrestricted"`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum DutyCycleValue {
    Percent(f64),
    Named(String),
}

impl DutyCycleValue {
    fn resolve(&self, key: &'static str) -> Result<DutyCycleLimit, ConfigError> {
        match self {
            DutyCycleValue::Percent(p) => {
                DutyCycleLimit::percent(*p).map_err(|e| invalid(key, e.to_string()))
            }
            DutyCycleValue::Named(s) if s == "unrestricted" => Ok(DutyCycleLimit::Unrestricted),
            DutyCycleValue::Named(s) => Err(invalid(key, format!("unknown value `{s}`"))),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    n_nodes: Option<u32>,
    sf: Option<u8>,
    bw_hz: Option<u32>,
    cr: Option<u8>,
    preamble_symbols: Option<u16>,
    explicit_header: Option<bool>,
    crc: Option<bool>,
    ldro: Option<bool>,
    payload_bytes: Option<u32>,
    header_bytes: Option<u32>,
    n_fragments: Option<u32>,
    mean_interval_s: Option<f64>,
    duty_cycle_pct: Option<DutyCycleValue>,
    horizon_s: Option<f64>,
    reps: Option<u32>,
    seed: Option<u64>,
    queue_policy: Option<String>,
    node_counts: Option<Vec<u32>>,
    fragment_counts: Option<Vec<u32>>,
    spreading_factors: Option<Vec<u8>>,
    duty_cycles: Option<Vec<DutyCycleValue>>,
}

/// A parsed document: one scenario or a sweep grid.
#[derive(Debug, Clone)]
pub enum ParsedConfig {
    Single(Scenario),
    Sweep(SweepSpec),
}

fn positive_secs(value: f64, key: &'static str) -> Result<u64, ConfigError> {
    if !(value > 0.0 && value.is_finite()) {
        return Err(invalid(key, "must be a positive number of seconds"));
    }
    Ok(from_secs(value))
}

fn build_scenario(raw: &RawConfig) -> Result<Scenario, ConfigError> {
    let sf = raw.sf.ok_or(ConfigError::Missing("sf"))?;
    let n_nodes = raw.n_nodes.ok_or(ConfigError::Missing("n_nodes"))?;
    let mut radio = RadioConfig::new(sf, raw.bw_hz.unwrap_or(125_000))
        .map_err(|e| invalid("sf", e.to_string()))?;
    if let Some(cr) = raw.cr {
        radio.coding_rate_index = cr;
    }
    if let Some(p) = raw.preamble_symbols {
        radio.preamble_symbols = p;
    }
    if let Some(h) = raw.explicit_header {
        radio.explicit_header = h;
    }
    if let Some(c) = raw.crc {
        radio.crc_enabled = c;
    }
    if let Some(l) = raw.ldro {
        radio.low_data_rate_optimize = l;
    }
    radio.validate().map_err(|e| invalid("cr", e.to_string()))?;

    let duty_cycle = match &raw.duty_cycle_pct {
        Some(v) => v.resolve("duty_cycle_pct")?,
        None => DutyCycleLimit::Percent(1.0),
    };
    let queue_policy = match raw.queue_policy.as_deref() {
        None | Some("queue") => QueuePolicy::QueueAll,
        Some("drop") => QueuePolicy::DropWhenBusy,
        Some(other) => {
            return Err(invalid(
                "queue_policy",
                format!("unknown value `{other}` (expected `queue` or `drop`)"),
            ))
        }
    };
    let scenario = Scenario {
        n_nodes,
        radio,
        payload_bytes: raw.payload_bytes.unwrap_or(250),
        header_bytes: raw.header_bytes.unwrap_or(1),
        n_fragments: raw.n_fragments.unwrap_or(1),
        mean_interval_ns: positive_secs(raw.mean_interval_s.unwrap_or(10.0), "mean_interval_s")?,
        duty_cycle,
        horizon_ns: positive_secs(raw.horizon_s.unwrap_or(10_000.0), "horizon_s")?,
        n_replications: raw.reps.unwrap_or(300),
        base_seed: raw.seed.unwrap_or(1),
        queue_policy,
    };
    scenario
        .validate()
        .map_err(|e| invalid("n_fragments", e.to_string()))?;
    Ok(scenario)
}

/// Parse a configuration document into a scenario or sweep, with all
/// defaults applied and every invariant checked.
pub fn parse_scenario(text: &str) -> Result<ParsedConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text)?;
    let is_sweep = raw.node_counts.is_some()
        || raw.fragment_counts.is_some()
        || raw.spreading_factors.is_some()
        || raw.duty_cycles.is_some();
    if !is_sweep {
        return Ok(ParsedConfig::Single(build_scenario(&raw)?));
    }

    // Sweep: scalar keys seed the base scenario and default each missing axis
    // to a singleton.
    let mut scalar = RawConfig { ..Default::default() };
    scalar.n_nodes = raw.n_nodes.or(raw.node_counts.as_ref().and_then(|v| v.first().copied()));
    scalar.sf = raw
        .sf
        .or(raw.spreading_factors.as_ref().and_then(|v| v.first().copied()));
    scalar.bw_hz = raw.bw_hz;
    scalar.cr = raw.cr;
    scalar.preamble_symbols = raw.preamble_symbols;
    scalar.explicit_header = raw.explicit_header;
    scalar.crc = raw.crc;
    scalar.payload_bytes = raw.payload_bytes;
    scalar.header_bytes = raw.header_bytes;
    scalar.mean_interval_s = raw.mean_interval_s;
    scalar.duty_cycle_pct = raw.duty_cycle_pct.clone();
    scalar.horizon_s = raw.horizon_s;
    scalar.reps = raw.reps;
    scalar.seed = raw.seed;
    scalar.queue_policy = raw.queue_policy.clone();
    let base = build_scenario(&scalar)?;

    let duty_cycles = match &raw.duty_cycles {
        Some(list) => list
            .iter()
            .map(|v| v.resolve("duty_cycles"))
            .collect::<Result<Vec<_>, _>>()?,
        None => vec![base.duty_cycle],
    };
    let spec = SweepSpec {
        node_counts: raw.node_counts.clone().unwrap_or(vec![base.n_nodes]),
        fragment_counts: raw.fragment_counts.clone().unwrap_or(vec![base.n_fragments]),
        spreading_factors: raw
            .spreading_factors
            .clone()
            .unwrap_or(vec![base.radio.spreading_factor]),
        duty_cycles,
        base,
    };
    spec.validate()
        .map_err(|e| invalid("fragment_counts", e.to_string()))?;
    Ok(ParsedConfig::Sweep(spec))
}
