//! Reproducible per-node packet arrival streams.
//!
//! Arrivals form a Poisson process: i.i.d. exponential inter-arrival times
//! with the configured mean. Each `(seed, replication, node)` triple keys its
//! own ChaCha8 stream through a SplitMix64 key schedule, so streams are
//! bit-identical on replay and independent across replications and nodes
//! regardless of the order in which they are generated.

use crate::phy::Nanos;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TrafficError {
    #[error("arrival times must be strictly increasing")]
    NotIncreasing,
}

/// Application-packet arrival times for one node, strictly increasing and
/// all within `[0, horizon)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArrivalStream {
    pub node_id: u32,
    pub arrival_times_ns: Vec<Nanos>,
}

fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Fold a tuple of coordinates into one 64-bit seed. Used both for keying
/// per-node arrival streams and for deriving per-grid-point sweep seeds.
pub fn derive_seed(parts: &[u64]) -> u64 {
    let mut state = 0x243f_6a88_85a3_08d3; // arbitrary nonzero start
    for &p in parts {
        state = splitmix64(state ^ p);
    }
    state
}

fn stream_rng(seed: u64, replication: u32, node: u32) -> ChaCha8Rng {
    let mut state = derive_seed(&[seed, replication as u64, node as u64]);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Exponential inter-arrival in nanoseconds, inverse-transform sampled.
/// Clamped to >= 1 ns so timestamps stay strictly increasing.
fn exp_interval_ns(rng: &mut ChaCha8Rng, mean_ns: u64) -> u64 {
    let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64); // [0, 1)
    let delta = -(1.0 - u).ln() * mean_ns as f64;
    (delta.round() as u64).max(1)
}

/// Poisson arrival stream over `[0, horizon)`, a pure function of
/// `(seed, replication, node_id)`.
pub fn generate_arrivals(
    seed: u64,
    replication: u32,
    node_id: u32,
    mean_interval_ns: u64,
    horizon_ns: u64,
) -> ArrivalStream {
    assert!(mean_interval_ns > 0 && horizon_ns > 0);
    let mut rng = stream_rng(seed, replication, node_id);
    let mut times = Vec::with_capacity((horizon_ns / mean_interval_ns + 4) as usize);
    let mut t = 0u64;
    loop {
        t = t.saturating_add(exp_interval_ns(&mut rng, mean_interval_ns));
        if t >= horizon_ns {
            break;
        }
        times.push(t);
    }
    ArrivalStream {
        node_id,
        arrival_times_ns: times,
    }
}

/// Wrap an explicit list of arrival times, for deterministic test injection.
pub fn fixed_schedule(node_id: u32, times_ns: Vec<Nanos>) -> Result<ArrivalStream, TrafficError> {
    if !times_ns.windows(2).all(|w| w[0] < w[1]) {
        return Err(TrafficError::NotIncreasing);
    }
    Ok(ArrivalStream {
        node_id,
        arrival_times_ns: times_ns,
    })
}
