//! Region tracking and hotness profiling.
//!
//! Hotness comes from two ground-truth signals: sampled DRAM accesses (a
//! stand-in for hardware event sampling, which only sees a fraction of
//! accesses) and faults taken on compressed tiers, which are spread over the
//! regions of the faulting tier.

use std::collections::{BTreeMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::models::Placement;
use crate::sim::TraceRecord;
use crate::tiers::TierId;
use crate::{Error, Result, PAGE_SIZE, REGION_SIZE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfilingConfig {
    /// Simulated length of a profile window.
    pub window_seconds: u64,
    /// Probability that a DRAM access produces a sample.
    pub sample_rate: f64,
    /// Weight of the per-tier fault term added to region hotness.
    pub fault_weight: f64,
    /// Number of past windows kept per region.
    pub history_depth: usize,
    pub seed: u64,
    /// Attribute faults to the exact region that took them instead of
    /// spreading a tier's faults over all of its regions.
    pub exact_fault_attribution: bool,
}

impl Default for ProfilingConfig {
    fn default() -> Self {
        Self {
            window_seconds: 120,
            sample_rate: 0.12,
            fault_weight: 1.0,
            history_depth: 4,
            seed: 0,
            exact_fault_attribution: false,
        }
    }
}

impl ProfilingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate > 0.0 && self.sample_rate <= 1.0) {
            return Err(Error::Config(format!(
                "sample_rate must be in (0, 1], got {}",
                self.sample_rate
            )));
        }
        if !(self.fault_weight >= 0.0) || !self.fault_weight.is_finite() {
            return Err(Error::Config(format!(
                "fault_weight must be >= 0, got {}",
                self.fault_weight
            )));
        }
        if self.history_depth == 0 {
            return Err(Error::Config("history_depth must be at least 1".into()));
        }
        if self.window_seconds == 0 {
            return Err(Error::Config("window_seconds must be positive".into()));
        }
        Ok(())
    }

    pub fn window_us(&self) -> u64 {
        self.window_seconds * 1_000_000
    }
}

/// A 2 MiB slice of the address space.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub id: usize,
    pub start_addr: u64,
    /// Hotness of the most recent window.
    pub hotness: f64,
    pub placement: Placement,
    /// Number of the region's pages currently resident in DRAM.
    pub dram_pages: u32,
    history: VecDeque<f64>,
    depth: usize,
}

/// Mean over the hotness history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryMean {
    pub value: f64,
    /// Set when no window has been recorded yet (value is then 0).
    pub first_window: bool,
}

impl Region {
    pub fn new(id: usize, start_addr: u64, history_depth: usize) -> Self {
        Self {
            id,
            start_addr,
            hotness: 0.0,
            placement: Placement::Dram,
            dram_pages: (REGION_SIZE / PAGE_SIZE as u64) as u32,
            history: VecDeque::with_capacity(history_depth),
            depth: history_depth.max(1),
        }
    }

    /// Inclusive end address.
    pub fn end_addr(&self) -> u64 {
        self.start_addr + REGION_SIZE - 1
    }

    pub fn contains(&self, addr: u64) -> bool {
        self.start_addr <= addr && addr <= self.end_addr()
    }

    pub fn first_page(&self) -> u64 {
        self.start_addr / PAGE_SIZE as u64
    }

    pub fn history(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        self.history.iter().copied()
    }

    pub fn push_history(&mut self, hotness: f64) {
        if self.history.len() == self.depth {
            self.history.pop_front();
        }
        self.history.push_back(hotness);
    }

    pub fn mean_hotness(&self) -> HistoryMean {
        if self.history.is_empty() {
            return HistoryMean {
                value: 0.0,
                first_window: true,
            };
        }
        let sum: f64 = self.history.iter().sum();
        HistoryMean {
            value: sum / self.history.len() as f64,
            first_window: false,
        }
    }
}

/// Tiles `[0, footprint_bytes)` with regions, all placed in DRAM.
pub fn build_regions(footprint_bytes: u64, history_depth: usize) -> Result<Vec<Region>> {
    if footprint_bytes == 0 || footprint_bytes % REGION_SIZE != 0 {
        return Err(Error::Config(format!(
            "footprint must be a positive multiple of {REGION_SIZE} bytes, got {footprint_bytes}"
        )));
    }
    Ok((0..footprint_bytes / REGION_SIZE)
        .map(|i| Region::new(i as usize, i * REGION_SIZE, history_depth))
        .collect())
}

/// Aggregated samples for one 4 KiB page.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleEvent {
    /// Page-aligned address.
    pub addr: u64,
    pub count: u64,
}

/// Fault count and region population of one tier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct TierFaults {
    pub faults: u64,
    pub nr_regions: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FaultSummary {
    tiers: BTreeMap<TierId, TierFaults>,
    per_region: Option<Vec<u64>>,
}

impl FaultSummary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, tier: TierId, faults: u64, nr_regions: u64) -> Result<()> {
        if faults > 0 && nr_regions == 0 {
            return Err(Error::Config(format!(
                "tier {tier} reports {faults} faults but holds no regions"
            )));
        }
        self.tiers.insert(tier, TierFaults { faults, nr_regions });
        Ok(())
    }

    /// Per-region fault counts, indexed by region id, for exact attribution.
    pub fn with_region_faults(mut self, faults: Vec<u64>) -> Self {
        self.per_region = Some(faults);
        self
    }

    pub fn get(&self, tier: TierId) -> Option<TierFaults> {
        self.tiers.get(&tier).copied()
    }

    pub fn region_faults(&self) -> Option<&[u64]> {
        self.per_region.as_deref()
    }
}

/// Bernoulli sampler over DRAM accesses. One generator stream spans all
/// windows so that a window without accesses consumes no randomness.
#[derive(Debug, Clone)]
pub struct Sampler {
    rng: ChaCha8Rng,
    rate: f64,
}

impl Sampler {
    pub fn new(config: &ProfilingConfig) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(config.seed ^ 0x9ebe_55a3_91e5_0000),
            rate: config.sample_rate,
        }
    }

    /// Samples each address independently and aggregates per page, sorted
    /// by address.
    pub fn sample<I: IntoIterator<Item = u64>>(&mut self, addrs: I) -> Vec<SampleEvent> {
        let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
        for addr in addrs {
            if self.rate >= 1.0 || self.rng.random::<f64>() < self.rate {
                *counts.entry(addr & !(PAGE_SIZE as u64 - 1)).or_default() += 1;
            }
        }
        counts
            .into_iter()
            .map(|(addr, count)| SampleEvent { addr, count })
            .collect()
    }
}

/// Samples one window of DRAM-resident accesses with a fresh sampler.
pub fn sample_accesses(trace: &[TraceRecord], config: &ProfilingConfig) -> Vec<SampleEvent> {
    Sampler::new(config).sample(trace.iter().map(|r| r.addr))
}

/// Recomputes every region's hotness from this window's samples plus its
/// tier's share of faults, then records it in the history ring.
///
/// `regions` must be sorted by start address and non-overlapping.
pub fn distribute_hotness(
    events: &[SampleEvent],
    faults: &FaultSummary,
    regions: &mut [Region],
    config: &ProfilingConfig,
) -> Result<()> {
    let mut sums = vec![0u64; regions.len()];
    for ev in events {
        let idx = regions.partition_point(|r| r.start_addr <= ev.addr);
        match idx.checked_sub(1).filter(|&i| regions[i].contains(ev.addr)) {
            Some(i) => sums[i] += ev.count,
            None => {
                let limit = regions.last().map_or(0, |r| r.end_addr() + 1);
                return Err(Error::AddressOutOfRange {
                    addr: ev.addr,
                    limit,
                });
            }
        }
    }
    let exact = if config.exact_fault_attribution {
        faults.region_faults()
    } else {
        None
    };
    for (region, samples) in regions.iter_mut().zip(sums) {
        let mut hot = samples as f64;
        if let Placement::Tier(tier) = region.placement {
            let term = match exact {
                Some(per_region) => per_region.get(region.id).copied().unwrap_or(0) as f64,
                None => match faults.get(tier) {
                    Some(tf) if tf.nr_regions > 0 => tf.faults as f64 / tf.nr_regions as f64,
                    _ => 0.0,
                },
            };
            hot += config.fault_weight * term;
        }
        region.hotness = hot;
        region.push_history(hot);
    }
    Ok(())
}
