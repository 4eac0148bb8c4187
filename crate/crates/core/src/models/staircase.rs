//! Exact solver for placement instances where every region has the same
//! page count, so all regions share one cost vector.
//!
//! Swapping the placements of two regions keeps the cost unchanged, and
//! giving the hotter one the lower-overhead placement never hurts. Some
//! optimum therefore sorts regions by hotness and cuts the list into runs,
//! one run per undominated placement in overhead order. The search is over
//! the cut points; the last cut has a closed form.

use std::cmp::Ordering;

use super::mckp::{fits, Infeasible, Solution};

/// One placement option shared by all regions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Opt {
    /// Per-region cost.
    pub cost: f64,
    /// Overhead per unit of hotness.
    pub ovh: f64,
}

const BISECTIONS: usize = 60;

struct Search {
    /// Frontier options: overhead ascending, cost strictly descending.
    front: Vec<Opt>,
    /// Hotness sorted descending.
    hs: Vec<f64>,
    prefix: Vec<f64>,
    budget: f64,
    incumbent: f64,
    best: Option<Vec<usize>>,
    cuts: Vec<usize>,
    nodes: u64,
    node_limit: u64,
}

impl Search {
    fn n(&self) -> usize {
        self.hs.len()
    }

    fn tol(&self) -> f64 {
        super::mckp::VALUE_TOL * self.incumbent.abs().max(1.0)
    }

    /// Number of sorted items with hotness strictly above `t`.
    fn above(&self, t: f64) -> usize {
        self.hs.partition_point(|&h| h > t)
    }

    /// Lagrangian lower bound for items `[from, n)` restricted to frontier
    /// options `[first, m)` with `budget` left. Any multiplier gives a valid
    /// bound; bisection on the subgradient pushes it towards the LP value.
    fn lower_bound(&self, from: usize, first: usize, budget: f64) -> f64 {
        let opts = &self.front[first..];
        if from == self.n() {
            return 0.0;
        }
        let eval = |mu: f64| -> (f64, f64) {
            // Lower envelope over h of o*h + mu*c, walking down from large h.
            let mut value = 0.0;
            let mut cost = 0.0;
            let mut cur = 0usize;
            let mut hi_idx = from;
            loop {
                let mut next: Option<(f64, usize)> = None;
                for q in cur + 1..opts.len() {
                    let cross =
                        mu * (opts[cur].cost - opts[q].cost) / (opts[q].ovh - opts[cur].ovh);
                    if next.is_none_or(|(x, _)| cross >= x) {
                        next = Some((cross, q));
                    }
                }
                let lo_idx = match next {
                    Some((cross, _)) => self.above(cross).max(from),
                    None => self.n(),
                };
                let lo_idx = lo_idx.max(hi_idx);
                let k = (lo_idx - hi_idx) as f64;
                value += opts[cur].ovh * (self.prefix[lo_idx] - self.prefix[hi_idx])
                    + mu * opts[cur].cost * k;
                cost += opts[cur].cost * k;
                hi_idx = lo_idx;
                match next {
                    Some((_, q)) if hi_idx < self.n() => cur = q,
                    _ => break,
                }
            }
            (value - mu * budget, cost - budget)
        };
        let (v0, g0) = eval(0.0);
        if g0 <= 0.0 {
            return v0;
        }
        let min_dc = opts
            .windows(2)
            .map(|w| w[0].cost - w[1].cost)
            .fold(f64::INFINITY, f64::min);
        let span = self.hs[from] * (opts[opts.len() - 1].ovh - opts[0].ovh);
        let mut hi = if min_dc.is_finite() && min_dc > 0.0 {
            span / min_dc + 1.0
        } else {
            1.0
        };
        let mut lo = 0.0;
        let mut best = v0;
        for _ in 0..BISECTIONS {
            let mid = 0.5 * (lo + hi);
            let (v, g) = eval(mid);
            best = best.max(v);
            if g > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        best
    }

    fn descend(&mut self, level: usize, from: usize, cost: f64, value: f64) -> bool {
        self.nodes += 1;
        if self.nodes > self.node_limit {
            return false;
        }
        let m = self.front.len();
        let n = self.n();
        let last = self.front[m - 1];
        if level == m - 1 {
            // Items [from, b) take option m-2, the rest the last option. The
            // objective only improves with b, so take the largest that fits.
            let cur = self.front[m - 2];
            let base = cost + (n - from) as f64 * last.cost;
            let dc = cur.cost - last.cost;
            let room = (self.budget - base) / dc;
            if !fits(base, self.budget) {
                return true;
            }
            let mut b = if room.is_finite() {
                (from as f64 + room.max(0.0).floor()).min(n as f64) as usize
            } else {
                n
            };
            while b > from && !fits(base + (b - from) as f64 * dc, self.budget) {
                b -= 1;
            }
            while b < n && fits(base + (b + 1 - from) as f64 * dc, self.budget) {
                b += 1;
            }
            let total = value
                + cur.ovh * (self.prefix[b] - self.prefix[from])
                + last.ovh * (self.prefix[n] - self.prefix[b]);
            if total < self.incumbent - self.tol() {
                self.incumbent = total;
                let mut cuts = self.cuts.clone();
                cuts.push(b);
                self.best = Some(cuts);
            }
            return true;
        }
        // Items [from, b) take option `level - 1`.
        let cur = self.front[level - 1];
        let base = cost + (n - from) as f64 * last.cost;
        if !fits(base, self.budget) {
            return true;
        }
        let dc = cur.cost - last.cost;
        let mut b_max = n;
        if dc > 0.0 {
            let room = ((self.budget - base) / dc).max(0.0).floor();
            b_max = (from as f64 + room).min(n as f64) as usize;
            while b_max > from && !fits(base + (b_max - from) as f64 * dc, self.budget) {
                b_max -= 1;
            }
        }
        for b in (from..=b_max).rev() {
            let c = cost + (b - from) as f64 * cur.cost;
            let v = value + cur.ovh * (self.prefix[b] - self.prefix[from]);
            let bound = v + self.lower_bound(b, level, self.budget - c);
            if bound >= self.incumbent - self.tol() {
                continue;
            }
            self.cuts.push(b);
            let ok = self.descend(level + 1, b, c, v);
            self.cuts.pop();
            if !ok {
                return false;
            }
        }
        true
    }
}

/// Solves `min sum hot[i] * opts[p_i].ovh` subject to
/// `sum opts[p_i].cost <= budget`. Returns option indices per item.
///
/// `incumbent` is a known feasible assignment used to seed pruning.
pub(crate) fn solve(
    hot: &[f64],
    opts: &[Opt],
    budget: f64,
    incumbent: Option<&[usize]>,
    node_limit: u64,
) -> Result<Solution, Infeasible> {
    let n = hot.len();
    let mut idx: Vec<usize> = (0..opts.len()).collect();
    idx.sort_by(|&a, &b| {
        opts[a]
            .ovh
            .partial_cmp(&opts[b].ovh)
            .unwrap_or(Ordering::Equal)
            .then(
                opts[a]
                    .cost
                    .partial_cmp(&opts[b].cost)
                    .unwrap_or(Ordering::Equal),
            )
            .then(a.cmp(&b))
    });
    let mut front_idx: Vec<usize> = Vec::new();
    for j in idx {
        if front_idx
            .last()
            .is_none_or(|&k| opts[j].cost < opts[k].cost)
        {
            front_idx.push(j);
        }
    }
    let cheapest = n as f64 * opts[*front_idx.last().expect("at least one option")].cost;
    if !fits(cheapest, budget) {
        return Err(Infeasible { cheapest });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        hot[b]
            .partial_cmp(&hot[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    let hs: Vec<f64> = order.iter().map(|&i| hot[i]).collect();
    let mut prefix = vec![0.0; n + 1];
    for (k, h) in hs.iter().enumerate() {
        prefix[k + 1] = prefix[k] + h;
    }
    let front: Vec<Opt> = front_idx.iter().map(|&j| opts[j]).collect();
    let m = front.len();

    let evaluate = |picks: &[usize]| -> (f64, f64) {
        picks
            .iter()
            .enumerate()
            .fold((0.0, 0.0), |(v, c), (i, &p)| {
                (v + hot[i] * opts[p].ovh, c + opts[p].cost)
            })
    };
    let seed = incumbent.map(|p| (p.to_vec(), evaluate(p)));

    let mut search = Search {
        front,
        hs,
        prefix,
        budget,
        incumbent: seed.as_ref().map_or(f64::INFINITY, |(_, (v, _))| *v),
        best: None,
        cuts: Vec::new(),
        nodes: 0,
        node_limit,
    };
    let finished = if m == 1 {
        search.best = Some(Vec::new());
        true
    } else {
        search.descend(1, 0, 0.0, 0.0)
    };

    let picks = match search.best {
        Some(cuts) => {
            let mut picks = vec![0usize; n];
            let mut start = 0;
            for (j, &fj) in front_idx.iter().enumerate() {
                let end = if j < cuts.len() { cuts[j] } else { n };
                for &i in &order[start..end] {
                    picks[i] = fj;
                }
                start = end;
            }
            picks
        }
        None => match seed {
            Some((p, _)) => p,
            // Nothing beat infinity: only possible when the node limit hit
            // before any leaf; fall back to the cheapest option everywhere.
            None => vec![*front_idx.last().expect("non-empty"); n],
        },
    };
    let (value, cost) = evaluate(&picks);
    Ok(Solution {
        picks,
        value,
        cost,
        optimal: finished,
    })
}
