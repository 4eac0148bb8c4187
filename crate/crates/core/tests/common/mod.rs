use ntier::models::{Placement, PerfModel, PlacementProblem, TcoModel, TierCost};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Exhaustive minimum over all (N+1)^R assignments, or None if infeasible.
pub fn brute_force(p: &PlacementProblem, budget: f64) -> Option<f64> {
    let n = p.tco.tiers.len();
    let r = p.hotness.len();
    let unit_cost: Vec<f64> = (0..=n).map(|j| p.tco.unit_cost(Placement::from_index(j))).collect();
    let unit_ovh: Vec<f64> = (0..=n).map(|j| p.perf.unit_ovh(Placement::from_index(j))).collect();
    let mut pick = vec![0usize; r];
    let mut best: Option<f64> = None;
    let slack = budget + 1e-12 * budget.abs().max(1.0);
    loop {
        let mut cost = 0.0;
        let mut value = 0.0;
        for i in 0..r {
            cost += p.pages[i] as f64 * unit_cost[pick[i]];
            value += p.hotness[i] * unit_ovh[pick[i]];
        }
        if cost <= slack && best.is_none_or(|b| value < b) {
            best = Some(value);
        }
        let mut k = 0;
        while k < r {
            pick[k] += 1;
            if pick[k] <= n {
                break;
            }
            pick[k] = 0;
            k += 1;
        }
        if k == r {
            return best;
        }
    }
}

pub fn instance(rng: &mut ChaCha8Rng, uniform: bool) -> PlacementProblem {
    let r = rng.random_range(1..=8usize);
    let n = rng.random_range(1..=4usize);
    let tiers: Vec<TierCost> = (0..n)
        .map(|_| TierCost {
            usd_per_page: [0.5, 1.0, 2.0, 4.0][rng.random_range(0..4)],
            ratio: [1.0, 2.0, 4.0][rng.random_range(0..3)],
        })
        .collect();
    let pages: Vec<u64> = if uniform {
        vec![rng.random_range(1..=16); r]
    } else {
        (0..r).map(|_| rng.random_range(1..=16)).collect()
    };
    let hotness = (0..r).map(|_| rng.random_range(0..=50u32) as f64).collect();
    let latency = (0..n).map(|_| rng.random_range(1..=30_000u64)).collect();
    let total = pages.iter().sum();
    PlacementProblem {
        hotness,
        pages,
        tco: TcoModel::new(4.0, tiers, total).unwrap(),
        perf: PerfModel::new(latency),
    }
}

