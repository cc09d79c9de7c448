//! Parameter sweeps over (node count, SF, duty cycle, fragment count),
//! replication orchestration, and CSV/summary output.
//!
//! Each grid point derives its own seed from the base seed and its grid
//! coordinates, so adding points never perturbs existing ones, and runs its
//! replications in parallel on the current rayon pool. Results are keyed by
//! grid position and replication index, so output bytes do not depend on
//! the parallelism level.

use crate::metrics::{self, AggregateReport, MetricsReport, RelativeChange};
use crate::phy::{DutyCycleLimit, RadioConfig};
use crate::sim::{self, Scenario, SimError};
use crate::traffic;
use rayon::prelude::*;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Metrics(#[from] metrics::MetricsError),
    #[error("sweep axis `{0}` must be nonempty")]
    EmptyAxis(&'static str),
    #[error("fragment_counts must include 1 (the unfragmented baseline)")]
    MissingBaseline,
    #[error("cannot emit an empty table")]
    EmptyTable,
    #[error("writing {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// A grid of scenarios: the base scenario with four swept axes.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub base: Scenario,
    pub node_counts: Vec<u32>,
    pub fragment_counts: Vec<u32>,
    pub spreading_factors: Vec<u8>,
    pub duty_cycles: Vec<DutyCycleLimit>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), SweepError> {
        self.base.validate()?;
        for (name, empty) in [
            ("node_counts", self.node_counts.is_empty()),
            ("fragment_counts", self.fragment_counts.is_empty()),
            ("spreading_factors", self.spreading_factors.is_empty()),
            ("duty_cycles", self.duty_cycles.is_empty()),
        ] {
            if empty {
                return Err(SweepError::EmptyAxis(name));
            }
        }
        if !self.fragment_counts.contains(&1) {
            return Err(SweepError::MissingBaseline);
        }
        Ok(())
    }
}

/// One grid point with its aggregate metrics and changes versus the
/// fragment_count = 1 row of the same (nodes, SF, duty cycle) group.
#[derive(Debug, Clone)]
pub struct ResultRow {
    pub n_nodes: u32,
    pub spreading_factor: u8,
    pub bandwidth_hz: u32,
    pub duty_cycle: DutyCycleLimit,
    pub n_fragments: u32,
    pub aggregate: AggregateReport,
    pub relative: RelativeChange,
}

#[derive(Debug, Clone)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    /// Row lookup by grid coordinates.
    pub fn row(&self, n_nodes: u32, sf: u8, dc: DutyCycleLimit, n_fragments: u32) -> Option<&ResultRow> {
        self.rows.iter().find(|r| {
            r.n_nodes == n_nodes
                && r.spreading_factor == sf
                && r.duty_cycle == dc
                && r.n_fragments == n_fragments
        })
    }
}

fn dc_seed_word(dc: DutyCycleLimit) -> u64 {
    match dc {
        DutyCycleLimit::Unrestricted => u64::MAX,
        DutyCycleLimit::Percent(p) => p.to_bits(),
    }
}

/// Scenario for one grid point, with its derived seed.
pub fn grid_scenario(
    base: &Scenario,
    n_nodes: u32,
    sf: u8,
    dc: DutyCycleLimit,
    n_fragments: u32,
) -> Result<Scenario, SimError> {
    let mut radio = RadioConfig::new(sf, base.radio.bandwidth_hz)?;
    radio.coding_rate_index = base.radio.coding_rate_index;
    radio.preamble_symbols = base.radio.preamble_symbols;
    radio.explicit_header = base.radio.explicit_header;
    radio.crc_enabled = base.radio.crc_enabled;
    let mut s = base.clone();
    s.n_nodes = n_nodes;
    s.radio = radio;
    s.duty_cycle = dc;
    s.n_fragments = n_fragments;
    s.base_seed = traffic::derive_seed(&[
        base.base_seed,
        n_nodes as u64,
        sf as u64,
        dc_seed_word(dc),
        n_fragments as u64,
    ]);
    Ok(s)
}

fn run_point(scenario: &Scenario) -> Result<AggregateReport, SweepError> {
    let reports: Vec<MetricsReport> = (0..scenario.n_replications)
        .into_par_iter()
        .map(|rep| sim::run_replication(scenario, rep).map(|log| metrics::compute_report(&log)))
        .collect::<Result<_, _>>()?;
    Ok(metrics::aggregate(&reports)?)
}

/// Run the whole grid. Row order is the nested order
/// nodes -> SF -> duty cycle -> fragment count; within each group the
/// baseline (fragment count 1) is computed first and every row's relative
/// fields are taken against it.
pub fn run_sweep(spec: &SweepSpec) -> Result<ResultTable, SweepError> {
    spec.validate()?;
    let mut rows = Vec::new();
    for &n_nodes in &spec.node_counts {
        for &sf in &spec.spreading_factors {
            for &dc in &spec.duty_cycles {
                let baseline_scenario = grid_scenario(&spec.base, n_nodes, sf, dc, 1)?;
                let baseline = run_point(&baseline_scenario)?;
                for &n_fragments in &spec.fragment_counts {
                    let aggregate = if n_fragments == 1 {
                        baseline.clone()
                    } else {
                        run_point(&grid_scenario(&spec.base, n_nodes, sf, dc, n_fragments)?)?
                    };
                    let relative = metrics::relative_change(&aggregate, &baseline);
                    rows.push(ResultRow {
                        n_nodes,
                        spreading_factor: sf,
                        bandwidth_hz: spec.base.radio.bandwidth_hz,
                        duty_cycle: dc,
                        n_fragments,
                        aggregate,
                        relative,
                    });
                }
            }
        }
    }
    Ok(ResultTable { rows })
}

/// Format with 9 significant digits, shortest representation.
pub fn fmt_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    let factor = 10f64.powi(8 - exp);
    let rounded = (x * factor).round() / factor;
    format!("{}", rounded)
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_sig9).unwrap_or_default()
}

fn dc_field(dc: DutyCycleLimit) -> String {
    match dc {
        DutyCycleLimit::Unrestricted => "unrestricted".to_string(),
        DutyCycleLimit::Percent(p) => fmt_sig9(p),
    }
}

pub const CSV_HEADER: &str = "n_nodes,sf,bw_hz,duty_cycle_pct,n_fragments,reps,\
goodput_pct_mean,goodput_pct_std,throughput_bps_mean,throughput_bps_std,\
energy_airtime_s_mean,energy_airtime_s_std,delay_s_mean,delay_s_std,\
throughput_gain_pct,goodput_change_pp,energy_overhead_pct,delay_overhead_pct";

/// Render the table as CSV ('\n' line ends, '.' decimal point, empty field
/// for missing values). Byte-stable for a given table.
pub fn csv_string(table: &ResultTable) -> Result<String, SweepError> {
    if table.rows.is_empty() {
        return Err(SweepError::EmptyTable);
    }
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &table.rows {
        let a = &r.aggregate;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.n_nodes,
            r.spreading_factor,
            r.bandwidth_hz,
            dc_field(r.duty_cycle),
            r.n_fragments,
            a.n_replications,
            fmt_sig9(a.goodput_percent.mean),
            fmt_sig9(a.goodput_percent.std_dev),
            fmt_sig9(a.throughput_bps.mean),
            fmt_sig9(a.throughput_bps.std_dev),
            fmt_sig9(a.energy_airtime_s.mean),
            fmt_sig9(a.energy_airtime_s.std_dev),
            fmt_opt(a.mean_delay_s.map(|s| s.mean)),
            fmt_opt(a.mean_delay_s.map(|s| s.std_dev)),
            fmt_opt(r.relative.throughput_gain_pct),
            fmt_sig9(r.relative.goodput_change_pp),
            fmt_opt(r.relative.energy_overhead_pct),
            fmt_opt(r.relative.delay_overhead_pct),
        )
        .expect("write to String");
    }
    Ok(out)
}

pub fn emit_csv(table: &ResultTable, path: &std::path::Path) -> Result<(), SweepError> {
    let csv = csv_string(table)?;
    std::fs::write(path, csv).map_err(|source| SweepError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Human-readable per-group summary: the recommended fragment count (the
/// smallest within 1 percentage point of the best goodput) and the energy
/// and delay costs of choosing it.
pub fn emit_summary(table: &ResultTable) -> Result<String, SweepError> {
    if table.rows.is_empty() {
        return Err(SweepError::EmptyTable);
    }
    let mut out = String::new();
    let mut seen: Vec<(u32, u8, DutyCycleLimit)> = Vec::new();
    for r in &table.rows {
        let key = (r.n_nodes, r.spreading_factor, r.duty_cycle);
        if seen.contains(&key) {
            continue;
        }
        seen.push(key);
        let group: Vec<&ResultRow> = table
            .rows
            .iter()
            .filter(|x| (x.n_nodes, x.spreading_factor, x.duty_cycle) == key)
            .collect();
        let best = group
            .iter()
            .map(|x| x.aggregate.goodput_percent.mean)
            .fold(f64::NEG_INFINITY, f64::max);
        let pick = group
            .iter()
            .filter(|x| x.aggregate.goodput_percent.mean >= best - 1.0)
            .min_by_key(|x| x.n_fragments);
        let header = format!(
            "{} nodes, SF{}, duty cycle {}:",
            r.n_nodes,
            r.spreading_factor,
            dc_field(r.duty_cycle)
        );
        match pick {
            Some(p) => {
                writeln!(
                    out,
                    "{header} best goodput {:.2}% at {} fragment(s) \
                     (energy overhead {}, delay overhead {})",
                    p.aggregate.goodput_percent.mean,
                    p.n_fragments,
                    p.relative
                        .energy_overhead_pct
                        .map(|v| format!("{v:+.1}%"))
                        .unwrap_or_else(|| "n/a".to_string()),
                    p.relative
                        .delay_overhead_pct
                        .map(|v| format!("{v:+.1}%"))
                        .unwrap_or_else(|| "n/a".to_string()),
                )
                .expect("write to String");
            }
            None => {
                writeln!(out, "{header} no rows").expect("write to String");
            }
        }
    }
    Ok(out)
}
