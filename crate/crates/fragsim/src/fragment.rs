//! Balanced splitting of one application payload into on-air fragments.
//!
//! Every fragment carries a fixed-size fragmentation header (1 byte by
//! default). The unfragmented baseline is the single-fragment plan and also
//! carries the header, so fragmenting into n pieces adds (n - 1) net header
//! bytes plus (n - 1) extra preambles on the air.

use crate::phy::{self, Nanos, PhyError, RadioConfig};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FragmentError {
    #[error("fragment count must be at least 1")]
    ZeroFragments,
    #[error("cannot split {payload} payload bytes into {n_fragments} fragments")]
    TooManyFragments { payload: u32, n_fragments: u32 },
}

/// Ordered list of on-air fragment sizes for one application packet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FragmentPlan {
    pub n_fragments: u32,
    /// On-air size of each fragment in bytes, header included. Larger
    /// fragments come first; sizes differ by at most one byte.
    pub on_air_sizes: Vec<u32>,
    pub header_bytes: u32,
    pub payload_bytes: u32,
}

/// Split `payload_bytes` application bytes into `n_fragments` balanced
/// fragments, adding `header_bytes` to each on-air size. The first
/// `payload mod n` fragments carry one extra application byte.
pub fn make_fragment_plan(
    payload_bytes: u32,
    n_fragments: u32,
    header_bytes: u32,
) -> Result<FragmentPlan, FragmentError> {
    if n_fragments == 0 {
        return Err(FragmentError::ZeroFragments);
    }
    if n_fragments > payload_bytes {
        return Err(FragmentError::TooManyFragments {
            payload: payload_bytes,
            n_fragments,
        });
    }
    let base = payload_bytes / n_fragments;
    let larger = payload_bytes % n_fragments;
    let on_air_sizes = (0..n_fragments)
        .map(|i| base + (i < larger) as u32 + header_bytes)
        .collect();
    Ok(FragmentPlan {
        n_fragments,
        on_air_sizes,
        header_bytes,
        payload_bytes,
    })
}

/// Total time on air of all fragments in the plan.
pub fn plan_airtime_ns(plan: &FragmentPlan, cfg: &RadioConfig) -> Result<Nanos, PhyError> {
    plan.on_air_sizes
        .iter()
        .try_fold(0, |acc, &size| Ok(acc + phy::time_on_air_ns(cfg, size)?))
}

/// Per-fragment times on air, in plan order.
pub fn fragment_toas_ns(plan: &FragmentPlan, cfg: &RadioConfig) -> Result<Vec<Nanos>, PhyError> {
    plan.on_air_sizes
        .iter()
        .map(|&size| phy::time_on_air_ns(cfg, size))
        .collect()
}
