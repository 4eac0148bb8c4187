use serde::{Deserialize, Serialize};

use crate::tiers::TierSpec;

/// Per-page page-table and metadata update cost.
pub const DEFAULT_BOOKKEEPING_NS: u64 = 500;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScreenDecision {
    pub approve: bool,
    pub cost_ns: f64,
    pub benefit_ns: f64,
}

/// Weighs the one-off cost of moving `pages` pages from `src` to `dst`
/// against the fault latency saved over `expected_faults` faults.
pub fn migration_screen(
    pages: u64,
    src: &TierSpec,
    dst: &TierSpec,
    expected_faults: f64,
    bookkeeping_ns: u64,
) -> ScreenDecision {
    let per_page = src.access_latency_ns + dst.compress_latency_ns + bookkeeping_ns;
    let cost_ns = pages as f64 * per_page as f64;
    let benefit_ns =
        (src.access_latency_ns as f64 - dst.access_latency_ns as f64) * expected_faults;
    ScreenDecision {
        approve: benefit_ns > cost_ns,
        cost_ns,
        benefit_ns,
    }
}
