//! Software-defined compressed memory tiers.
//!
//! The crate models a server memory system made of DRAM plus any number of
//! compressed tiers (codec + pool allocator + backing media), profiles page
//! hotness at 2 MiB region granularity, decides placements with either the
//! waterfall policy or the budgeted analytical policy, and replays access
//! traces window by window to report memory TCO savings against the time
//! spent serving compressed-tier faults.
//!
//! Layout:
//!
//! * [`codecs`]: page codecs, synthetic page content, tier characterization.
//! * [`tiers`]: pool allocator models and per-tier statistics.
//! * [`profiling`]: regions, sampled access events and fault-augmented hotness.
//! * [`models`]: waterfall and analytical placement, TCO math, tier scoring,
//!   migration screening.
//! * [`sim`]: workloads, traces and the per-window simulation engine.

pub mod codecs;
mod error;
pub mod models;
pub mod profiling;
pub mod sim;
pub mod tiers;

pub use error::{Error, Result};

/// Size of a base page in bytes.
pub const PAGE_SIZE: usize = 4096;

/// Size of a profiling/placement region in bytes.
pub const REGION_SIZE: u64 = 2 * 1024 * 1024;

/// Number of base pages per region.
pub const PAGES_PER_REGION: u64 = REGION_SIZE / PAGE_SIZE as u64;
