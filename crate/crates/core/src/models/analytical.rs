use serde::{Deserialize, Serialize};

use super::mckp::{self, Choice, Instance, SolveOptions};
use super::staircase::{self, Opt};
use super::{HotnessSource, PerfModel, Placement, PlacementPlan, TcoModel};
use crate::profiling::Region;
use crate::{Error, Result};

/// Knobs of the budgeted placement model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyticalConfig {
    /// 0 picks the cheapest placement, 1 allows everything in DRAM.
    pub tco_knob: f64,
    /// Per-tier fault proportionality; empty means 1 for every tier.
    pub fault_proportionality: Vec<f64>,
    /// Placements no region may use.
    pub excluded: Vec<Placement>,
    /// Above this many regions the greedy answer is returned as approximate.
    pub exact_region_cap: usize,
    /// Branch-and-bound node budget before giving up on proving optimality.
    pub node_limit: u64,
    pub hotness: HotnessSource,
}

impl Default for AnalyticalConfig {
    fn default() -> Self {
        Self {
            tco_knob: 0.5,
            fault_proportionality: Vec::new(),
            excluded: Vec::new(),
            exact_region_cap: 5000,
            node_limit: 2_000_000,
            hotness: HotnessSource::HistoryMean,
        }
    }
}

impl AnalyticalConfig {
    pub fn with_knob(tco_knob: f64) -> Self {
        Self {
            tco_knob,
            ..Self::default()
        }
    }

    pub fn validate(&self, tiers: usize) -> Result<()> {
        if !(0.0..=1.0).contains(&self.tco_knob) {
            return Err(Error::Config(format!(
                "tco_knob must be in [0, 1], got {}",
                self.tco_knob
            )));
        }
        if !self.fault_proportionality.is_empty() && self.fault_proportionality.len() != tiers {
            return Err(Error::Config(format!(
                "fault_proportionality has {} entries for {tiers} tiers",
                self.fault_proportionality.len()
            )));
        }
        if self
            .fault_proportionality
            .iter()
            .any(|k| !(*k > 0.0) || !k.is_finite())
        {
            return Err(Error::Config(
                "fault_proportionality entries must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Inputs for one placement decision, one entry per region.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacementProblem {
    pub hotness: Vec<f64>,
    pub pages: Vec<u64>,
    pub tco: TcoModel,
    pub perf: PerfModel,
}

impl PlacementProblem {
    pub fn from_regions(
        regions: &[Region],
        source: HotnessSource,
        tco: TcoModel,
        perf: PerfModel,
    ) -> Self {
        let pages = crate::PAGES_PER_REGION as u64;
        Self {
            hotness: regions.iter().map(|r| source.of(r)).collect(),
            pages: vec![pages; regions.len()],
            tco,
            perf,
        }
    }

    pub fn tiers(&self) -> usize {
        self.tco.tiers.len()
    }
}

/// Minimizes the estimated fault overhead subject to the TCO budget
/// `tco_min + knob * mts`. Ties go to the lower placement index, then to the
/// lower region id.
pub fn analytical_place(
    problem: &PlacementProblem,
    config: &AnalyticalConfig,
) -> Result<PlacementPlan> {
    let n = problem.tiers();
    config.validate(n)?;
    if problem.perf.latency_ns.len() != n {
        return Err(Error::Config(format!(
            "{} tier latencies for {n} tier prices",
            problem.perf.latency_ns.len()
        )));
    }
    let mut perf = problem.perf.clone();
    if !config.fault_proportionality.is_empty() {
        perf.k = config.fault_proportionality.clone();
    }
    if problem
        .hotness
        .iter()
        .any(|h| !(*h >= 0.0) || !h.is_finite())
    {
        return Err(Error::Config(
            "region hotness must be finite and non-negative".into(),
        ));
    }
    if problem.hotness.len() != problem.pages.len() {
        return Err(Error::Config(
            "hotness and page counts differ in length".into(),
        ));
    }
    let budget = problem.tco.budget(config.tco_knob);

    let allowed: Vec<Placement> = (0..=n)
        .map(Placement::from_index)
        .filter(|p| !config.excluded.contains(p))
        .collect();
    let items: Vec<Vec<Choice>> = problem
        .hotness
        .iter()
        .zip(&problem.pages)
        .map(|(&h, &pages)| {
            allowed
                .iter()
                .map(|&p| Choice {
                    option: p.index(),
                    cost: pages as f64 * problem.tco.unit_cost(p),
                    value: h * perf.unit_ovh(p),
                })
                .collect()
        })
        .collect();
    if allowed.is_empty() && !items.is_empty() {
        return Err(Error::NoAdmissiblePlacement {
            region: 0,
            excluded: config.excluded.clone(),
        });
    }

    let inst = Instance { items, budget };
    let exact = inst.items.len() <= config.exact_region_cap;
    let uniform = problem.pages.windows(2).all(|w| w[0] == w[1]);
    let infeasible = |e: mckp::Infeasible| Error::Infeasible {
        budget,
        cheapest: e.cheapest,
    };
    let sol = if exact && uniform && !problem.pages.is_empty() {
        let greedy = mckp::solve(
            &inst,
            SolveOptions {
                exact: false,
                node_limit: 0,
            },
        )
        .map_err(infeasible)?;
        let opts: Vec<Opt> = inst.items[0]
            .iter()
            .map(|c| Opt {
                cost: c.cost,
                ovh: perf.unit_ovh(Placement::from_index(c.option)),
            })
            .collect();
        staircase::solve(
            &problem.hotness,
            &opts,
            budget,
            Some(&greedy.picks),
            config.node_limit,
        )
        .map_err(infeasible)?
    } else {
        mckp::solve(
            &inst,
            SolveOptions {
                exact,
                node_limit: config.node_limit,
            },
        )
        .map_err(infeasible)?
    };

    let mut picks = sol.picks;
    let mut cost = sol.cost;
    lift_ties(&inst, &mut picks, &mut cost);

    let assignment: Vec<Placement> = picks
        .iter()
        .enumerate()
        .map(|(i, &j)| Placement::from_index(inst.items[i][j].option))
        .collect();
    let mut plan = PlacementPlan::new(assignment);
    plan.approximate = !sol.optimal;
    plan.evaluate(&problem.hotness, &problem.pages, &problem.tco, &perf)?;
    Ok(plan)
}

/// Moves each region, in id order, to the lowest-index placement that is no
/// worse for the objective and still fits the budget.
fn lift_ties(inst: &Instance, picks: &mut [usize], cost: &mut f64) {
    for (i, choices) in inst.items.iter().enumerate() {
        let cur = choices[picks[i]];
        let better = choices
            .iter()
            .enumerate()
            .filter(|(_, c)| c.option < cur.option && c.value <= cur.value)
            .filter(|(_, c)| mckp::fits(*cost - cur.cost + c.cost, inst.budget))
            .min_by_key(|(_, c)| c.option);
        if let Some((j, c)) = better {
            *cost += c.cost - cur.cost;
            picks[i] = j;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{compute_tco, estimate_perf_ovh, TierCost};
    use crate::tiers::TierId;

    fn problem(hotness: Vec<f64>, pages: u64) -> PlacementProblem {
        let tiers = vec![
            TierCost {
                usd_per_page: 2.0,
                ratio: 2.0,
            },
            TierCost {
                usd_per_page: 1.0,
                ratio: 2.0,
            },
            TierCost {
                usd_per_page: 1.0,
                ratio: 4.0,
            },
        ];
        let total = pages * hotness.len() as u64;
        PlacementProblem {
            pages: vec![pages; hotness.len()],
            hotness,
            tco: TcoModel::new(4.0, tiers, total).unwrap(),
            perf: PerfModel::new(vec![1000, 4000, 20000]),
        }
    }

    #[test]
    fn full_knob_keeps_everything_in_dram() {
        let p = problem(vec![0.0, 3.0, 10.0, 0.0], 8);
        let plan = analytical_place(&p, &AnalyticalConfig::with_knob(1.0)).unwrap();
        assert!(plan.assignment.iter().all(|&a| a == Placement::Dram));
        assert_eq!(plan.predicted_tco, p.tco.tco_max());
        assert_eq!(plan.predicted_perf_ovh, 0.0);
    }

    #[test]
    fn zero_knob_lands_in_last_tier() {
        let p = problem(vec![0.0, 3.0, 10.0, 0.0], 8);
        let plan = analytical_place(&p, &AnalyticalConfig::with_knob(0.0)).unwrap();
        assert!(plan
            .assignment
            .iter()
            .all(|&a| a == Placement::Tier(TierId(3))));
        assert_eq!(plan.predicted_tco, p.tco.tco_min());
    }

    #[test]
    fn plan_respects_budget_and_reports_consistent_numbers() {
        let p = problem(vec![5.0, 1.0, 0.0, 8.0, 2.0, 2.0], 16);
        for knob in [0.0, 0.1, 0.33, 0.5, 0.77, 1.0] {
            let plan = analytical_place(&p, &AnalyticalConfig::with_knob(knob)).unwrap();
            let tco = compute_tco(&plan.assignment, &p.pages, &p.tco).unwrap();
            assert!(tco <= p.tco.budget(knob) * (1.0 + 1e-9));
            assert_eq!(tco, plan.predicted_tco);
            assert_eq!(
                estimate_perf_ovh(&plan.assignment, &p.hotness, &p.perf),
                plan.predicted_perf_ovh
            );
            assert!(!plan.approximate);
        }
    }

    #[test]
    fn excluding_the_cheapest_tier_makes_zero_knob_infeasible() {
        let p = problem(vec![1.0, 2.0], 4);
        let cfg = AnalyticalConfig {
            tco_knob: 0.0,
            excluded: vec![Placement::Tier(TierId(3))],
            ..AnalyticalConfig::default()
        };
        assert!(matches!(
            analytical_place(&p, &cfg),
            Err(Error::Infeasible { .. })
        ));
    }

    #[test]
    fn knob_out_of_range_is_rejected() {
        let p = problem(vec![1.0], 4);
        assert!(analytical_place(&p, &AnalyticalConfig::with_knob(1.5)).is_err());
    }

    #[test]
    fn greedy_fallback_stays_within_budget() {
        let p = problem((0..40).map(|i| (i % 7) as f64).collect(), 4);
        let cfg = AnalyticalConfig {
            tco_knob: 0.4,
            exact_region_cap: 10,
            ..AnalyticalConfig::default()
        };
        let plan = analytical_place(&p, &cfg).unwrap();
        let tco = compute_tco(&plan.assignment, &p.pages, &p.tco).unwrap();
        assert!(tco <= p.tco.budget(0.4) * (1.0 + 1e-9));
    }
}
