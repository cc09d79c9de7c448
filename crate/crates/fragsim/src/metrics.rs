//! Performance metrics over replication logs and their aggregation.
//!
//! Four metrics: goodput (% of application packets fully delivered),
//! throughput (on-air bits of uncollided fragments per second of horizon),
//! energy (total transmit airtime; the proportionality constant cancels in
//! every ratio), and mean end-to-end delay of delivered packets. Relative
//! changes are reported as `(fragmented - baseline) / baseline * 100` for
//! the ratio metrics and as a percentage-point difference for goodput.

use crate::phy::secs;
use crate::sim::ReplicationLog;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("cannot aggregate an empty report list")]
    Empty,
}

/// Per-replication metric values plus the raw counts behind them.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub goodput_percent: f64,
    pub throughput_bps: f64,
    pub energy_airtime_s: f64,
    /// Mean generation-to-completion time of delivered packets; `None` when
    /// nothing was delivered.
    pub mean_delay_s: Option<f64>,
    pub packets_offered: u64,
    pub packets_completed: u64,
    pub packets_delivered: u64,
    pub fragments_sent: u64,
    pub fragments_uncollided: u64,
}

/// Goodput: 100 * N_u / N_pkt, where N_pkt counts packets fully transmitted
/// within the horizon and N_u those with every fragment uncollided.
/// 100 by convention when no packet completed.
pub fn compute_goodput(log: &ReplicationLog) -> f64 {
    let completed = log.packets.iter().filter(|p| p.completed_ns.is_some());
    let (mut n_pkt, mut n_u) = (0u64, 0u64);
    for p in completed {
        n_pkt += 1;
        n_u += p.delivered() as u64;
    }
    if n_pkt == 0 {
        100.0
    } else {
        100.0 * n_u as f64 / n_pkt as f64
    }
}

/// Throughput: uncollided on-air bits (headers included) over the horizon.
pub fn compute_throughput(log: &ReplicationLog) -> f64 {
    let bits: u64 = log
        .records
        .iter()
        .filter(|r| !r.collided)
        .map(|r| 8 * log.plan.on_air_sizes[r.fragment_index as usize] as u64)
        .sum();
    bits as f64 / secs(log.horizon_ns)
}

/// Energy as total transmit airtime in seconds, collided or not.
pub fn compute_energy_airtime(log: &ReplicationLog) -> f64 {
    let ns: u64 = log.records.iter().map(|r| r.end_ns - r.start_ns).sum();
    secs(ns)
}

/// Mean generation-to-completion time over delivered packets, including
/// queueing wait and inter-fragment duty-cycle pauses.
pub fn compute_mean_delay(log: &ReplicationLog) -> Option<f64> {
    let (mut sum_ns, mut n) = (0u128, 0u64);
    for p in log.packets.iter().filter(|p| p.delivered()) {
        sum_ns += (p.completed_ns.unwrap() - p.generated_ns) as u128;
        n += 1;
    }
    (n > 0).then(|| sum_ns as f64 / n as f64 / 1e9)
}

pub fn compute_report(log: &ReplicationLog) -> MetricsReport {
    MetricsReport {
        goodput_percent: compute_goodput(log),
        throughput_bps: compute_throughput(log),
        energy_airtime_s: compute_energy_airtime(log),
        mean_delay_s: compute_mean_delay(log),
        packets_offered: log.packets.len() as u64,
        packets_completed: log.packets.iter().filter(|p| p.completed_ns.is_some()).count() as u64,
        packets_delivered: log.packets.iter().filter(|p| p.delivered()).count() as u64,
        fragments_sent: log.records.len() as u64,
        fragments_uncollided: log.records.iter().filter(|r| !r.collided).count() as u64,
    }
}

/// Mean and sample standard deviation of one metric over replications.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    pub std_dev: f64,
}

fn stat(values: &[f64]) -> Option<Stat> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std_dev = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Some(Stat { mean, std_dev })
}

/// Per-metric mean and standard deviation over replications. Missing delay
/// values are excluded pairwise; `delay_samples` counts the rest.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateReport {
    pub n_replications: u32,
    pub goodput_percent: Stat,
    pub throughput_bps: Stat,
    pub energy_airtime_s: Stat,
    pub mean_delay_s: Option<Stat>,
    pub delay_samples: u32,
}

pub fn aggregate(reports: &[MetricsReport]) -> Result<AggregateReport, MetricsError> {
    if reports.is_empty() {
        return Err(MetricsError::Empty);
    }
    let collect = |f: fn(&MetricsReport) -> f64| reports.iter().map(f).collect::<Vec<_>>();
    let delays: Vec<f64> = reports.iter().filter_map(|r| r.mean_delay_s).collect();
    Ok(AggregateReport {
        n_replications: reports.len() as u32,
        goodput_percent: stat(&collect(|r| r.goodput_percent)).unwrap(),
        throughput_bps: stat(&collect(|r| r.throughput_bps)).unwrap(),
        energy_airtime_s: stat(&collect(|r| r.energy_airtime_s)).unwrap(),
        delay_samples: delays.len() as u32,
        mean_delay_s: stat(&delays),
    })
}

/// Relative changes of a fragmented run versus its unfragmented baseline.
/// Ratio fields are `None` when the baseline value is zero or missing.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RelativeChange {
    pub throughput_gain_pct: Option<f64>,
    pub goodput_change_pp: f64,
    pub energy_overhead_pct: Option<f64>,
    pub delay_overhead_pct: Option<f64>,
}

fn ratio_change(frag: f64, base: f64) -> Option<f64> {
    (base != 0.0).then(|| 100.0 * (frag - base) / base)
}

pub fn relative_change(fragmented: &AggregateReport, baseline: &AggregateReport) -> RelativeChange {
    let delay_overhead_pct = match (fragmented.mean_delay_s, baseline.mean_delay_s) {
        (Some(f), Some(b)) => ratio_change(f.mean, b.mean),
        _ => None,
    };
    RelativeChange {
        throughput_gain_pct: ratio_change(fragmented.throughput_bps.mean, baseline.throughput_bps.mean),
        goodput_change_pp: fragmented.goodput_percent.mean - baseline.goodput_percent.mean,
        energy_overhead_pct: ratio_change(fragmented.energy_airtime_s.mean, baseline.energy_airtime_s.mean),
        delay_overhead_pct,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fragment::make_fragment_plan;
    use crate::phy::{DutyCycleLimit, RadioConfig, NANOS_PER_SEC};
    use crate::sim::{self, QueuePolicy, Scenario, TransmissionRecord};
    use crate::traffic;

    fn scenario(sf: u8, n_nodes: u32, n_fragments: u32, dc: DutyCycleLimit) -> Scenario {
        Scenario {
            n_nodes,
            radio: RadioConfig::new(sf, 125_000).unwrap(),
            payload_bytes: 250,
            header_bytes: 1,
            n_fragments,
            mean_interval_ns: 10 * NANOS_PER_SEC,
            duty_cycle: dc,
            horizon_ns: 10_000 * NANOS_PER_SEC,
            n_replications: 1,
            base_seed: 1,
            queue_policy: QueuePolicy::QueueAll,
        }
    }

    /// Synthetic log with hand-built records and packet table.
    fn synthetic_log(records: Vec<TransmissionRecord>, packets: Vec<sim::PacketOutcome>) -> ReplicationLog {
        ReplicationLog {
            replication_index: 0,
            plan: make_fragment_plan(250, 5, 1).unwrap(), // fragments of 51 B
            horizon_ns: 100 * NANOS_PER_SEC,
            records,
            packets,
        }
    }

    #[test]
    fn goodput_conventions() {
        let s = scenario(7, 1, 1, DutyCycleLimit::Unrestricted);
        let log = sim::run_replication(&s, 0).unwrap();
        assert_eq!(compute_goodput(&log), 100.0);

        // nothing completed -> 100 by convention
        let empty = synthetic_log(vec![], vec![]);
        assert_eq!(compute_goodput(&empty), 100.0);

        let s2 = scenario(7, 2, 1, DutyCycleLimit::Unrestricted);
        let streams = vec![
            traffic::fixed_schedule(0, vec![0]).unwrap(),
            traffic::fixed_schedule(1, vec![0]).unwrap(),
        ];
        let log2 = sim::run_with_arrivals(&s2, &streams, 0).unwrap();
        assert_eq!(compute_goodput(&log2), 0.0);
    }

    #[test]
    fn goodput_matches_brute_force_recount() {
        let s = scenario(7, 3, 2, DutyCycleLimit::Unrestricted);
        let streams = vec![
            traffic::fixed_schedule(0, vec![0, 2 * NANOS_PER_SEC]).unwrap(),
            traffic::fixed_schedule(1, vec![100_000_000]).unwrap(),
            traffic::fixed_schedule(2, vec![5 * NANOS_PER_SEC]).unwrap(),
        ];
        let log = sim::run_with_arrivals(&s, &streams, 0).unwrap();
        // independent recount straight off the delivery table
        let completed: Vec<_> = log.packets.iter().filter(|p| p.completed_ns.is_some()).collect();
        let delivered = completed.iter().filter(|p| !p.damaged).count();
        let expected = 100.0 * delivered as f64 / completed.len() as f64;
        assert_eq!(compute_goodput(&log), expected);
    }

    #[test]
    fn throughput_counts_uncollided_bits() {
        // 10 uncollided 51 B fragments in 100 s -> 40.8 bps
        let records: Vec<_> = (0..10)
            .map(|i| TransmissionRecord {
                node_id: 0,
                packet_id: i,
                fragment_index: 0, // 51 B in the 5-fragment plan
                start_ns: i as u64 * NANOS_PER_SEC,
                end_ns: i as u64 * NANOS_PER_SEC + 1000,
                collided: false,
            })
            .collect();
        let log = synthetic_log(records, vec![]);
        assert!((compute_throughput(&log) - 40.8).abs() < 1e-12);

        let empty = synthetic_log(vec![], vec![]);
        assert_eq!(compute_throughput(&empty), 0.0);
    }

    #[test]
    fn throughput_matches_recount_and_ignores_order() {
        let s = scenario(7, 4, 3, DutyCycleLimit::Unrestricted);
        let log = sim::run_replication(&s, 1).unwrap();
        let bits: u64 = log
            .records
            .iter()
            .filter(|r| !r.collided)
            .map(|r| 8 * log.plan.on_air_sizes[r.fragment_index as usize] as u64)
            .sum();
        let expected = bits as f64 / 10_000.0;
        assert_eq!(compute_throughput(&log), expected);

        let mut shuffled = log.clone();
        shuffled.records.reverse();
        assert_eq!(compute_throughput(&shuffled), expected);
        assert_eq!(compute_energy_airtime(&shuffled), compute_energy_airtime(&log));
    }

    #[test]
    fn energy_is_total_airtime() {
        let s = scenario(7, 1, 1, DutyCycleLimit::Unrestricted);
        let streams = vec![traffic::fixed_schedule(0, vec![0]).unwrap()];
        let log = sim::run_with_arrivals(&s, &streams, 0).unwrap();
        assert!((compute_energy_airtime(&log) - 0.394496).abs() < 1e-12);

        // n identical packets -> n * single-packet airtime
        let streams = vec![traffic::fixed_schedule(0, (0..7).map(|i| i * NANOS_PER_SEC).collect()).unwrap()];
        let log = sim::run_with_arrivals(&s, &streams, 0).unwrap();
        assert!((compute_energy_airtime(&log) - 7.0 * 0.394496).abs() < 1e-12);
    }

    #[test]
    fn delay_cases() {
        // idle node, no duty cycle: delay equals time on air
        let s = scenario(7, 1, 1, DutyCycleLimit::Unrestricted);
        let streams = vec![traffic::fixed_schedule(0, vec![0]).unwrap()];
        let log = sim::run_with_arrivals(&s, &streams, 0).unwrap();
        assert!((compute_mean_delay(&log).unwrap() - 0.394496).abs() < 1e-12);

        // 1% duty cycle, 2 fragments of 126 B: 2*ToA + 99*ToA
        let mut s = scenario(7, 1, 2, DutyCycleLimit::percent(1.0).unwrap());
        s.horizon_ns = 100 * NANOS_PER_SEC;
        let streams = vec![traffic::fixed_schedule(0, vec![0]).unwrap()];
        let log = sim::run_with_arrivals(&s, &streams, 0).unwrap();
        let toa = 0.210176;
        assert!((compute_mean_delay(&log).unwrap() - 101.0 * toa).abs() < 1e-9);

        // nothing delivered -> missing, not zero
        let s2 = scenario(7, 2, 1, DutyCycleLimit::Unrestricted);
        let streams = vec![
            traffic::fixed_schedule(0, vec![0]).unwrap(),
            traffic::fixed_schedule(1, vec![0]).unwrap(),
        ];
        let log2 = sim::run_with_arrivals(&s2, &streams, 0).unwrap();
        assert_eq!(compute_mean_delay(&log2), None);
    }

    fn report(goodput: f64, throughput: f64, energy: f64, delay: Option<f64>) -> MetricsReport {
        MetricsReport {
            goodput_percent: goodput,
            throughput_bps: throughput,
            energy_airtime_s: energy,
            mean_delay_s: delay,
            packets_offered: 0,
            packets_completed: 0,
            packets_delivered: 0,
            fragments_sent: 0,
            fragments_uncollided: 0,
        }
    }

    #[test]
    fn aggregate_examples() {
        let singleton = aggregate(&[report(50.0, 1.0, 2.0, Some(3.0))]).unwrap();
        assert_eq!(singleton.goodput_percent, Stat { mean: 50.0, std_dev: 0.0 });

        let two = aggregate(&[report(2.0, 2.0, 2.0, None), report(4.0, 4.0, 4.0, Some(1.0))]).unwrap();
        assert_eq!(two.energy_airtime_s.mean, 3.0);
        assert!((two.energy_airtime_s.std_dev - 2.0_f64.sqrt()).abs() < 1e-12);
        assert_eq!(two.delay_samples, 1);
        assert_eq!(two.mean_delay_s.unwrap().mean, 1.0);

        assert_eq!(aggregate(&[]), Err(MetricsError::Empty));
    }

    #[test]
    fn aggregate_mean_matches_independent_summation() {
        let reports: Vec<_> = (0..300)
            .map(|i| report(i as f64 / 3.0, i as f64, 1.0 + i as f64, Some(i as f64)))
            .collect();
        let agg = aggregate(&reports).unwrap();
        // brute-force sum in a different accumulation order
        let mut sum = 0.0;
        for r in reports.iter().rev() {
            sum += r.throughput_bps;
        }
        let expected = sum / 300.0;
        assert!((agg.throughput_bps.mean - expected).abs() / expected < 1e-12);
    }

    #[test]
    fn relative_change_examples() {
        let a = aggregate(&[report(40.0, 100.0, 0.6, Some(2.0))]).unwrap();
        let ident = relative_change(&a, &a);
        assert_eq!(ident.throughput_gain_pct, Some(0.0));
        assert_eq!(ident.goodput_change_pp, 0.0);
        assert_eq!(ident.energy_overhead_pct, Some(0.0));
        assert_eq!(ident.delay_overhead_pct, Some(0.0));

        let b = aggregate(&[report(35.0, 120.0, 1.2, Some(2.5))]).unwrap();
        let rel = relative_change(&b, &a);
        assert_eq!(rel.energy_overhead_pct, Some(100.0));
        assert_eq!(rel.goodput_change_pp, -5.0);
        assert_eq!(rel.throughput_gain_pct, Some(20.0));
        assert_eq!(rel.delay_overhead_pct, Some(25.0));

        // zero baseline -> missing, not infinite
        let zero = aggregate(&[report(0.0, 0.0, 0.0, None)]).unwrap();
        let rel0 = relative_change(&a, &zero);
        assert_eq!(rel0.throughput_gain_pct, None);
        assert_eq!(rel0.energy_overhead_pct, None);
        assert_eq!(rel0.delay_overhead_pct, None);
    }

    #[test]
    fn per_packet_airtime_ratio_two_fragments() {
        // SF7: splitting 250 B in two costs (0.420352 - 0.394496)/0.394496 more airtime
        let cfg = RadioConfig::new(7, 125_000).unwrap();
        let base = crate::fragment::plan_airtime_ns(&make_fragment_plan(250, 1, 1).unwrap(), &cfg).unwrap();
        let two = crate::fragment::plan_airtime_ns(&make_fragment_plan(250, 2, 1).unwrap(), &cfg).unwrap();
        let overhead = 100.0 * (two as f64 - base as f64) / base as f64;
        assert!((overhead - 6.554).abs() < 0.01);
    }
}
