//! Placement models and the cost math they share.

mod analytical;
mod mckp;
mod migration;
mod scoring;
mod staircase;
mod tco;
mod waterfall;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use analytical::{analytical_place, AnalyticalConfig, PlacementProblem};
pub use migration::{migration_screen, ScreenDecision, DEFAULT_BOOKKEEPING_NS};
pub use scoring::{score_tiers, ScoringPolicy, TierRow, TierScore};
pub use tco::{compute_tco, estimate_perf_ovh, PerfModel, TcoModel, TierCost};
pub use waterfall::{waterfall_step, WaterfallConfig};

use crate::tiers::TierId;

/// Where a region lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Placement {
    Dram,
    Tier(TierId),
}

impl Placement {
    /// 0 for DRAM, `k` for tier `k`.
    pub fn index(self) -> usize {
        match self {
            Placement::Dram => 0,
            Placement::Tier(t) => usize::from(t.0),
        }
    }

    pub fn from_index(index: usize) -> Self {
        if index == 0 {
            Placement::Dram
        } else {
            Placement::Tier(TierId(index as u16))
        }
    }

    pub fn tier(self) -> Option<TierId> {
        match self {
            Placement::Dram => None,
            Placement::Tier(t) => Some(t),
        }
    }
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Placement::Dram => f.write_str("DRAM"),
            Placement::Tier(t) => t.fmt(f),
        }
    }
}

/// Which hotness value a model consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HotnessSource {
    /// Hotness of the window that just ended.
    #[default]
    LastWindow,
    /// Mean over the region's history ring.
    HistoryMean,
}

impl HotnessSource {
    pub fn of(self, region: &crate::profiling::Region) -> f64 {
        match self {
            HotnessSource::LastWindow => region.hotness,
            HotnessSource::HistoryMean => region.mean_hotness().value,
        }
    }
}

/// One window's placement decision for every region.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacementPlan {
    /// Indexed by region id.
    pub assignment: Vec<Placement>,
    pub predicted_tco: f64,
    pub predicted_perf_ovh: f64,
    /// Set when the solver gave up on proving optimality.
    pub approximate: bool,
}

impl PlacementPlan {
    pub fn new(assignment: Vec<Placement>) -> Self {
        Self {
            assignment,
            predicted_tco: 0.0,
            predicted_perf_ovh: 0.0,
            approximate: false,
        }
    }

    /// Fills in the predicted TCO and performance overhead.
    pub fn evaluate(
        &mut self,
        hotness: &[f64],
        pages: &[u64],
        tco: &TcoModel,
        perf: &PerfModel,
    ) -> crate::Result<()> {
        self.predicted_tco = compute_tco(&self.assignment, pages, tco)?;
        self.predicted_perf_ovh = estimate_perf_ovh(&self.assignment, hotness, perf);
        Ok(())
    }

    /// Region count per placement, DRAM first.
    pub fn histogram(&self, tiers: usize) -> Vec<u64> {
        let mut h = vec![0u64; tiers + 1];
        for p in &self.assignment {
            h[p.index()] += 1;
        }
        h
    }

    pub fn report(&self, tiers: usize) -> PlanReport {
        let histogram = self
            .histogram(tiers)
            .into_iter()
            .enumerate()
            .map(|(i, n)| (Placement::from_index(i).to_string(), n))
            .collect();
        PlanReport {
            histogram,
            predicted_tco: self.predicted_tco,
            predicted_perf_ovh: self.predicted_perf_ovh,
            approximate: self.approximate,
        }
    }
}

/// Serialized form of a plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub histogram: BTreeMap<String, u64>,
    pub predicted_tco: f64,
    pub predicted_perf_ovh: f64,
    pub approximate: bool,
}
