//! Deterministic discrete-event simulator for packet fragmentation in
//! duty-cycled single-channel LPWAN (LoRa-class) networks.
//!
//! The crate models a star topology of sensor nodes sharing one channel with
//! pure Aloha access (no carrier sensing, no acknowledgements). Application
//! packets may be split into fragments, each carrying a 1-byte fragmentation
//! header; under a duty-cycle limit every transmission is followed by a
//! mandatory off period proportional to its time on air. The simulator
//! quantifies the resulting throughput, goodput, energy (transmit airtime)
//! and end-to-end delay, and their relative changes versus the unfragmented
//! baseline.
//!
//! All simulation timestamps are integer nanoseconds, replications are pure
//! functions of `(seed, replication_index)`, and sweep output is byte-stable
//! regardless of parallelism.

pub mod config;
pub mod fragment;
pub mod metrics;
pub mod phy;
pub mod sim;
pub mod sweep;
pub mod traffic;

pub use fragment::{make_fragment_plan, plan_airtime_ns, FragmentPlan};
pub use phy::{DutyCycleLimit, Nanos, RadioConfig, NANOS_PER_SEC};
pub use sim::{run_replication, ReplicationLog, Scenario, TransmissionRecord};
