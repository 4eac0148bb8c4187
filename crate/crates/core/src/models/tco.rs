use serde::{Deserialize, Serialize};

use super::Placement;
use crate::{Error, Result};

/// Price and achieved compression ratio of one compressed tier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TierCost {
    /// Media cost of one 4 KiB page.
    pub usd_per_page: f64,
    /// Original bytes over compressed bytes.
    pub ratio: f64,
}

impl TierCost {
    /// Cost of holding one original page in this tier.
    pub fn effective_per_page(&self) -> f64 {
        self.usd_per_page / self.ratio
    }
}

/// Memory TCO for a footprint of `total_pages`, with DRAM and per-tier prices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TcoModel {
    pub usd_dram_per_page: f64,
    /// Tier `k` at index `k - 1`.
    pub tiers: Vec<TierCost>,
    pub total_pages: u64,
}

impl TcoModel {
    pub fn new(usd_dram_per_page: f64, tiers: Vec<TierCost>, total_pages: u64) -> Result<Self> {
        if !(usd_dram_per_page > 0.0) {
            return Err(Error::Config(format!(
                "DRAM page cost must be positive, got {usd_dram_per_page}"
            )));
        }
        for (i, t) in tiers.iter().enumerate() {
            if !(t.ratio > 0.0) || !t.ratio.is_finite() {
                return Err(Error::Config(format!(
                    "tier T{} has non-positive compression ratio {}",
                    i + 1,
                    t.ratio
                )));
            }
            if !(t.usd_per_page >= 0.0) {
                return Err(Error::Config(format!("tier T{} has negative cost", i + 1)));
            }
        }
        Ok(Self {
            usd_dram_per_page,
            tiers,
            total_pages,
        })
    }

    /// Cost of one original page at `placement`.
    pub fn unit_cost(&self, placement: Placement) -> f64 {
        match placement {
            Placement::Dram => self.usd_dram_per_page,
            Placement::Tier(t) => self.tiers[t.index()].effective_per_page(),
        }
    }

    /// Everything in DRAM.
    pub fn tco_max(&self) -> f64 {
        self.total_pages as f64 * self.usd_dram_per_page
    }

    /// Everything in the last tier.
    pub fn tco_min(&self) -> f64 {
        match self.tiers.last() {
            Some(last) => self.total_pages as f64 * (1.0 / last.ratio) * last.usd_per_page,
            None => self.tco_max(),
        }
    }

    /// Maximum TCO savings, never negative.
    pub fn mts(&self) -> f64 {
        (self.tco_max() - self.tco_min()).max(0.0)
    }

    /// TCO budget for a knob value in `[0, 1]`.
    pub fn budget(&self, knob: f64) -> f64 {
        self.tco_min() + knob * self.mts()
    }

    /// TCO for explicit page counts per placement (DRAM first).
    pub fn tco_of_counts(&self, dram_pages: u64, tier_pages: &[u64]) -> f64 {
        let mut tco = dram_pages as f64 * self.usd_dram_per_page;
        for (t, &p) in self.tiers.iter().zip(tier_pages) {
            tco += p as f64 * (1.0 / t.ratio) * t.usd_per_page;
        }
        tco
    }
}

/// Memory TCO of an assignment: DRAM pages at DRAM price plus, per tier,
/// pages divided by the tier ratio at the tier's media price.
pub fn compute_tco(assignment: &[Placement], pages: &[u64], model: &TcoModel) -> Result<f64> {
    let mut counts = vec![0u64; model.tiers.len() + 1];
    for (p, &n) in assignment.iter().zip(pages) {
        let idx = p.index();
        if idx > model.tiers.len() {
            return Err(Error::Config(format!(
                "placement {p} refers to an unconfigured tier"
            )));
        }
        counts[idx] += n;
    }
    Ok(model.tco_of_counts(counts[0], &counts[1..]))
}

/// Per-tier fault latency and proportionality constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerfModel {
    pub latency_ns: Vec<u64>,
    pub k: Vec<f64>,
}

impl PerfModel {
    /// All proportionality constants set to 1.
    pub fn new(latency_ns: Vec<u64>) -> Self {
        let k = vec![1.0; latency_ns.len()];
        Self { latency_ns, k }
    }

    /// Estimated overhead of one unit of hotness at `placement`.
    pub fn unit_ovh(&self, placement: Placement) -> f64 {
        match placement {
            Placement::Dram => 0.0,
            Placement::Tier(t) => self.k[t.index()] * self.latency_ns[t.index()] as f64,
        }
    }
}

/// Estimated fault-service time: for each tier, `k * (sum of hotness of the
/// regions placed there) * latency`. Faults are taken to be proportional to
/// the hotness observed in the previous window.
pub fn estimate_perf_ovh(assignment: &[Placement], hotness: &[f64], perf: &PerfModel) -> f64 {
    let mut per_tier = vec![0.0f64; perf.latency_ns.len()];
    for (p, &h) in assignment.iter().zip(hotness) {
        if let Placement::Tier(t) = p {
            per_tier[t.index()] += h;
        }
    }
    per_tier
        .iter()
        .zip(perf.latency_ns.iter().zip(&perf.k))
        .map(|(&hot, (&lat, &k))| k * hot * lat as f64)
        .sum()
}
