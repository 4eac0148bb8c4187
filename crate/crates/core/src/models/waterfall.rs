use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{HotnessSource, Placement, PlacementPlan};
use crate::profiling::Region;
use crate::tiers::TierId;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaterfallConfig {
    /// DRAM regions colder than this are demoted to the first tier.
    pub hotness_threshold: f64,
    pub hotness: HotnessSource,
}

impl Default for WaterfallConfig {
    fn default() -> Self {
        Self {
            hotness_threshold: 100.0,
            hotness: HotnessSource::LastWindow,
        }
    }
}

impl WaterfallConfig {
    pub fn new(hotness_threshold: f64) -> Self {
        Self {
            hotness_threshold,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hotness_threshold >= 0.0) || !self.hotness_threshold.is_finite() {
            return Err(Error::Config(format!(
                "hotness_threshold must be a finite non-negative number, got {}",
                self.hotness_threshold
            )));
        }
        Ok(())
    }
}

/// One aging step. Faulted regions go back to DRAM; cold DRAM regions move
/// to the first tier; every other compressed region slides one tier down,
/// stopping at the last one.
pub fn waterfall_step(
    regions: &[Region],
    tiers: usize,
    config: &WaterfallConfig,
    faulted: &[usize],
) -> PlacementPlan {
    let faulted: BTreeSet<usize> = faulted.iter().copied().collect();
    let last = tiers as u16;
    let assignment = regions
        .iter()
        .map(|r| {
            if faulted.contains(&r.id) || tiers == 0 {
                return Placement::Dram;
            }
            match r.placement {
                Placement::Dram if config.hotness.of(r) < config.hotness_threshold => {
                    Placement::Tier(TierId(1))
                }
                Placement::Dram => Placement::Dram,
                Placement::Tier(t) => Placement::Tier(TierId((t.0 + 1).min(last))),
            }
        })
        .collect();
    PlacementPlan::new(assignment)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiling::build_regions;

    fn apply(regions: &mut [Region], plan: &PlacementPlan) {
        for (r, p) in regions.iter_mut().zip(&plan.assignment) {
            r.placement = *p;
        }
    }

    #[test]
    fn cold_region_reaches_last_tier_after_n_steps() {
        let mut regions = build_regions(crate::REGION_SIZE, 4).unwrap();
        let cfg = WaterfallConfig::new(50.0);
        for step in 1..=7 {
            let plan = waterfall_step(&regions, 5, &cfg, &[]);
            apply(&mut regions, &plan);
            assert_eq!(regions[0].placement.index(), step.min(5));
        }
    }

    #[test]
    fn hot_region_stays_in_dram() {
        let mut regions = build_regions(crate::REGION_SIZE, 4).unwrap();
        regions[0].hotness = 50.0;
        let plan = waterfall_step(&regions, 5, &WaterfallConfig::new(50.0), &[]);
        assert_eq!(plan.assignment[0], Placement::Dram);
    }

    #[test]
    fn faulted_region_returns_to_dram_and_restarts() {
        let mut regions = build_regions(2 * crate::REGION_SIZE, 4).unwrap();
        regions[1].placement = Placement::Tier(TierId(3));
        let cfg = WaterfallConfig::new(10.0);
        let plan = waterfall_step(&regions, 5, &cfg, &[1]);
        assert_eq!(plan.assignment[1], Placement::Dram);
        apply(&mut regions, &plan);
        let plan = waterfall_step(&regions, 5, &cfg, &[]);
        assert_eq!(plan.assignment[1], Placement::Tier(TierId(1)));
    }

    #[test]
    fn zero_threshold_never_demotes() {
        let regions = build_regions(3 * crate::REGION_SIZE, 4).unwrap();
        let plan = waterfall_step(&regions, 2, &WaterfallConfig::new(0.0), &[]);
        assert!(plan.assignment.iter().all(|p| *p == Placement::Dram));
    }

    #[test]
    fn negative_threshold_rejected() {
        assert!(WaterfallConfig::new(-1.0).validate().is_err());
        assert!(WaterfallConfig::new(f64::NAN).validate().is_err());
    }
}
