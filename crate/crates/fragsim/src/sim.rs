//! Event-driven simulation of N nodes sharing one pure-Aloha channel.
//!
//! A single time-ordered event queue drives all nodes; ties break on
//! (time, node_id, event kind), so a replication is bit-identical across
//! runs. Nodes never sense the channel: a fragment transmission starts the
//! moment the node is idle and past its duty-cycle off time. Collisions are
//! marked afterwards over the complete transmission log.

use crate::fragment::{self, FragmentPlan};
use crate::phy::{self, DutyCycleLimit, Nanos, RadioConfig};
use crate::traffic::{self, ArrivalStream};
use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::collections::VecDeque;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Phy(#[from] phy::PhyError),
    #[error(transparent)]
    Fragment(#[from] fragment::FragmentError),
    #[error("scenario invalid: {0}")]
    Scenario(String),
}

/// What a node does with a packet that arrives while it is still draining
/// earlier traffic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QueuePolicy {
    /// Unbounded FIFO; arrivals during backlog are queued, never dropped.
    #[default]
    QueueAll,
    /// Arrivals while the node is busy or backlogged are discarded.
    DropWhenBusy,
}

/// One simulated network configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub n_nodes: u32,
    pub radio: RadioConfig,
    pub payload_bytes: u32,
    pub header_bytes: u32,
    pub n_fragments: u32,
    pub mean_interval_ns: u64,
    pub duty_cycle: DutyCycleLimit,
    pub horizon_ns: u64,
    pub n_replications: u32,
    pub base_seed: u64,
    pub queue_policy: QueuePolicy,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), SimError> {
        self.radio.validate()?;
        if self.n_nodes == 0 {
            return Err(SimError::Scenario("n_nodes must be at least 1".into()));
        }
        if self.horizon_ns == 0 || self.mean_interval_ns == 0 {
            return Err(SimError::Scenario("horizon and mean interval must be positive".into()));
        }
        if self.n_replications == 0 {
            return Err(SimError::Scenario("n_replications must be at least 1".into()));
        }
        if self.n_fragments == 0 || self.n_fragments > self.payload_bytes {
            return Err(SimError::Scenario(format!(
                "n_fragments must be in 1..={} (payload bytes), got {}",
                self.payload_bytes, self.n_fragments
            )));
        }
        Ok(())
    }

    pub fn fragment_plan(&self) -> Result<FragmentPlan, SimError> {
        Ok(fragment::make_fragment_plan(
            self.payload_bytes,
            self.n_fragments,
            self.header_bytes,
        )?)
    }
}

/// One on-air interval, half-open `[start_ns, end_ns)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransmissionRecord {
    pub node_id: u32,
    pub packet_id: u32,
    pub fragment_index: u32,
    pub start_ns: Nanos,
    pub end_ns: Nanos,
    pub collided: bool,
}

/// Delivery bookkeeping for one application packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PacketOutcome {
    pub node_id: u32,
    pub packet_id: u32,
    pub generated_ns: Nanos,
    /// End of the last fragment, when the whole packet went on air within
    /// the horizon. `None` for packets cut off at the horizon, still queued
    /// at the end, or dropped by policy.
    pub completed_ns: Option<Nanos>,
    /// At least one fragment collided.
    pub damaged: bool,
}

impl PacketOutcome {
    /// Delivered iff fully transmitted within the horizon with every
    /// fragment uncollided.
    pub fn delivered(&self) -> bool {
        self.completed_ns.is_some() && !self.damaged
    }
}

/// Complete outcome of one replication.
#[derive(Debug, Clone)]
pub struct ReplicationLog {
    pub replication_index: u32,
    pub plan: FragmentPlan,
    pub horizon_ns: Nanos,
    /// All transmissions, ordered by (start, node).
    pub records: Vec<TransmissionRecord>,
    /// All generated packets, ordered by (node, packet_id).
    pub packets: Vec<PacketOutcome>,
}

/// Earliest time a node may transmit again after a transmission that
/// occupied the air for `last_toa` and ended at `last_end`.
pub fn node_next_eligible_time(last_end: Nanos, last_toa: Nanos, dc: DutyCycleLimit) -> Nanos {
    last_end + phy::duty_cycle_off_time_ns(last_toa, dc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum EventKind {
    Arrival,
    TxEnd,
    TxStart,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Event {
    time: Nanos,
    node: u32,
    kind: EventKind,
}

struct NodeState {
    /// Flat indices into the packet table, in arrival order.
    queue: VecDeque<usize>,
    next_fragment: u32,
    busy: bool,
    start_scheduled: bool,
    /// Node stops for good once a fragment would end past the horizon.
    halted: bool,
    next_eligible: Nanos,
    current_toa: Nanos,
}

/// Run one replication with arrivals generated from the scenario seed.
pub fn run_replication(scenario: &Scenario, replication_index: u32) -> Result<ReplicationLog, SimError> {
    scenario.validate()?;
    let streams = (0..scenario.n_nodes)
        .map(|node| {
            traffic::generate_arrivals(
                scenario.base_seed,
                replication_index,
                node,
                scenario.mean_interval_ns,
                scenario.horizon_ns,
            )
        })
        .collect::<Vec<_>>();
    run_with_arrivals(scenario, &streams, replication_index)
}

/// Run one replication over explicit arrival streams (one per node).
pub fn run_with_arrivals(
    scenario: &Scenario,
    streams: &[ArrivalStream],
    replication_index: u32,
) -> Result<ReplicationLog, SimError> {
    scenario.validate()?;
    if streams.len() != scenario.n_nodes as usize {
        return Err(SimError::Scenario(format!(
            "expected {} arrival streams, got {}",
            scenario.n_nodes,
            streams.len()
        )));
    }
    let plan = scenario.fragment_plan()?;
    let toas = fragment::fragment_toas_ns(&plan, &scenario.radio)?;

    let mut events: BinaryHeap<Reverse<Event>> = BinaryHeap::new();
    let mut arrival_iters: Vec<_> = streams
        .iter()
        .map(|s| s.arrival_times_ns.iter().copied())
        .collect();
    // Seed one arrival per node; the next is pushed when this one pops, so
    // the heap stays small.
    for (node, it) in arrival_iters.iter_mut().enumerate() {
        if let Some(t) = it.next() {
            events.push(Reverse(Event { time: t, node: node as u32, kind: EventKind::Arrival }));
        }
    }

    let mut nodes: Vec<NodeState> = (0..scenario.n_nodes)
        .map(|_| NodeState {
            queue: VecDeque::new(),
            next_fragment: 0,
            busy: false,
            start_scheduled: false,
            halted: false,
            next_eligible: 0,
            current_toa: 0,
        })
        .collect();
    let mut packet_counts = vec![0u32; scenario.n_nodes as usize];
    let mut packets: Vec<PacketOutcome> = Vec::new();
    let mut records: Vec<TransmissionRecord> = Vec::new();

    while let Some(Reverse(ev)) = events.pop() {
        let n = ev.node as usize;
        match ev.kind {
            EventKind::Arrival => {
                if let Some(t) = arrival_iters[n].next() {
                    events.push(Reverse(Event { time: t, node: ev.node, kind: EventKind::Arrival }));
                }
                let packet_id = packet_counts[n];
                packet_counts[n] += 1;
                let dropped = scenario.queue_policy == QueuePolicy::DropWhenBusy
                    && (nodes[n].busy || !nodes[n].queue.is_empty() || ev.time < nodes[n].next_eligible);
                packets.push(PacketOutcome {
                    node_id: ev.node,
                    packet_id,
                    generated_ns: ev.time,
                    completed_ns: None,
                    damaged: false,
                });
                if dropped {
                    continue;
                }
                nodes[n].queue.push_back(packets.len() - 1);
                let node = &mut nodes[n];
                if !node.busy && !node.start_scheduled && !node.halted {
                    node.start_scheduled = true;
                    events.push(Reverse(Event {
                        time: ev.time.max(node.next_eligible),
                        node: ev.node,
                        kind: EventKind::TxStart,
                    }));
                }
            }
            EventKind::TxStart => {
                let node = &mut nodes[n];
                node.start_scheduled = false;
                if node.halted {
                    continue;
                }
                let pkt_idx = *node.queue.front().expect("TxStart with empty queue");
                let toa = toas[node.next_fragment as usize];
                let end = ev.time + toa;
                if end > scenario.horizon_ns {
                    node.halted = true;
                    continue;
                }
                node.busy = true;
                node.current_toa = toa;
                records.push(TransmissionRecord {
                    node_id: ev.node,
                    packet_id: packets[pkt_idx].packet_id,
                    fragment_index: node.next_fragment,
                    start_ns: ev.time,
                    end_ns: end,
                    collided: false,
                });
                events.push(Reverse(Event { time: end, node: ev.node, kind: EventKind::TxEnd }));
            }
            EventKind::TxEnd => {
                let node = &mut nodes[n];
                node.busy = false;
                node.next_eligible =
                    node_next_eligible_time(ev.time, node.current_toa, scenario.duty_cycle);
                node.next_fragment += 1;
                if node.next_fragment == plan.n_fragments {
                    node.next_fragment = 0;
                    let pkt_idx = node.queue.pop_front().expect("TxEnd with empty queue");
                    packets[pkt_idx].completed_ns = Some(ev.time);
                }
                if !node.queue.is_empty() && !node.start_scheduled {
                    node.start_scheduled = true;
                    events.push(Reverse(Event {
                        time: ev.time.max(node.next_eligible),
                        node: ev.node,
                        kind: EventKind::TxStart,
                    }));
                }
            }
        }
    }

    detect_collisions(&mut records);

    // Packets are already in (node, packet_id) order within each node's
    // arrival sequence but interleaved across nodes; sort for a stable table.
    packets.sort_unstable_by_key(|p| (p.node_id, p.packet_id));
    let mut offsets = vec![0usize; scenario.n_nodes as usize + 1];
    for n in 0..scenario.n_nodes as usize {
        offsets[n + 1] = offsets[n] + packet_counts[n] as usize;
    }
    for r in &records {
        if r.collided {
            packets[offsets[r.node_id as usize] + r.packet_id as usize].damaged = true;
        }
    }

    Ok(ReplicationLog {
        replication_index,
        plan,
        horizon_ns: scenario.horizon_ns,
        records,
        packets,
    })
}

/// Mark every record whose half-open interval intersects any other record's
/// interval. Touching endpoints are not an overlap. Marking is symmetric.
pub fn detect_collisions(records: &mut [TransmissionRecord]) {
    let mut order: Vec<u32> = (0..records.len() as u32).collect();
    order.sort_unstable_by_key(|&i| {
        let r = &records[i as usize];
        (r.start_ns, r.end_ns)
    });
    // min-heap of active intervals by end time
    let mut active: BinaryHeap<Reverse<(Nanos, u32)>> = BinaryHeap::new();
    for &i in &order {
        let (start, end) = {
            let r = &records[i as usize];
            (r.start_ns, r.end_ns)
        };
        while let Some(&Reverse((e, _))) = active.peek() {
            if e <= start {
                active.pop();
            } else {
                break;
            }
        }
        if !active.is_empty() {
            records[i as usize].collided = true;
            for &Reverse((_, j)) in active.iter() {
                records[j as usize].collided = true;
            }
        }
        active.push(Reverse((end, i)));
    }
}
