//! Exact multiple-choice knapsack (minimization form).
//!
//! Every item must take exactly one of its choices; the total cost must stay
//! within the budget; the total value is minimized. The solver combines an
//! LP-relaxation bound (greedy over the convex hull of each item's
//! undominated choices), Lagrangian reduced-cost fixing to shrink the
//! instance to a small core, and depth-first branch and bound on that core.

use std::cmp::Ordering;

/// Relative slack on the budget constraint.
pub(crate) const BUDGET_TOL: f64 = 1e-12;
/// Relative improvement needed to replace the incumbent.
pub(crate) const VALUE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Choice {
    /// Caller-side label (placement index).
    pub option: usize,
    pub cost: f64,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct Instance {
    pub items: Vec<Vec<Choice>>,
    pub budget: f64,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct SolveOptions {
    /// Run branch and bound; otherwise stop at the greedy incumbent.
    pub exact: bool,
    pub node_limit: u64,
}

#[derive(Debug, Clone)]
pub(crate) struct Solution {
    /// Index into `items[i]` for every item.
    pub picks: Vec<usize>,
    pub value: f64,
    pub cost: f64,
    /// Proven optimal (up to `VALUE_TOL`).
    pub optimal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Infeasible {
    pub cheapest: f64,
}

pub(crate) fn fits(cost: f64, budget: f64) -> bool {
    cost <= budget + BUDGET_TOL * budget.abs().max(1.0)
}

fn improves(value: f64, incumbent: f64) -> bool {
    value < incumbent - VALUE_TOL * incumbent.abs().max(1.0)
}

/// Indices of the undominated choices, cost strictly increasing and value
/// strictly decreasing.
fn frontier(choices: &[Choice], allowed: impl Fn(usize) -> bool) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..choices.len()).filter(|&j| allowed(j)).collect();
    idx.sort_by(|&a, &b| {
        let (x, y) = (&choices[a], &choices[b]);
        x.cost
            .partial_cmp(&y.cost)
            .unwrap_or(Ordering::Equal)
            .then(x.value.partial_cmp(&y.value).unwrap_or(Ordering::Equal))
            .then(x.option.cmp(&y.option))
    });
    let mut out: Vec<usize> = Vec::with_capacity(idx.len());
    for j in idx {
        if out
            .last()
            .is_none_or(|&k| choices[j].value < choices[k].value)
        {
            out.push(j);
        }
    }
    out
}

/// Lower convex hull of a frontier: efficiencies strictly decreasing.
fn hull(choices: &[Choice], front: &[usize]) -> Vec<usize> {
    let eff = |a: usize, b: usize| {
        (choices[a].value - choices[b].value) / (choices[b].cost - choices[a].cost)
    };
    let mut h: Vec<usize> = Vec::with_capacity(front.len());
    for &j in front {
        while h.len() >= 2 && eff(h[h.len() - 2], h[h.len() - 1]) <= eff(h[h.len() - 1], j) {
            h.pop();
        }
        h.push(j);
    }
    h
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    eff: f64,
    item: usize,
    dcost: f64,
    dvalue: f64,
    to: usize,
}

fn segments(choices: &[Choice], h: &[usize], item: usize, out: &mut Vec<Segment>) {
    for w in h.windows(2) {
        let (a, b) = (&choices[w[0]], &choices[w[1]]);
        let dcost = b.cost - a.cost;
        let dvalue = a.value - b.value;
        out.push(Segment {
            eff: dvalue / dcost,
            item,
            dcost,
            dvalue,
            to: w[1],
        });
    }
}

fn sort_segments(segs: &mut [Segment]) {
    segs.sort_by(|a, b| {
        b.eff
            .partial_cmp(&a.eff)
            .unwrap_or(Ordering::Equal)
            .then(a.item.cmp(&b.item))
    });
}

pub(crate) fn solve(inst: &Instance, opts: SolveOptions) -> Result<Solution, Infeasible> {
    let n = inst.items.len();
    let fronts: Vec<Vec<usize>> = inst.items.iter().map(|c| frontier(c, |_| true)).collect();
    let cheapest: f64 = inst
        .items
        .iter()
        .zip(&fronts)
        .map(|(c, f)| c[f[0]].cost)
        .sum();
    if !fits(cheapest, inst.budget) {
        return Err(Infeasible { cheapest });
    }

    // Root LP relaxation.
    let hulls: Vec<Vec<usize>> = inst
        .items
        .iter()
        .zip(&fronts)
        .map(|(c, f)| hull(c, f))
        .collect();
    let mut segs = Vec::new();
    for (i, h) in hulls.iter().enumerate() {
        segments(&inst.items[i], h, i, &mut segs);
    }
    sort_segments(&mut segs);
    let mut picks: Vec<usize> = fronts.iter().map(|f| f[0]).collect();
    let mut remaining = inst.budget - cheapest;
    let mut lp = picks
        .iter()
        .enumerate()
        .map(|(i, &j)| inst.items[i][j].value)
        .sum::<f64>();
    let mut lambda = 0.0;
    for s in &segs {
        if fits(s.dcost, remaining) {
            remaining -= s.dcost;
            lp -= s.dvalue;
            picks[s.item] = s.to;
        } else {
            lp -= s.dvalue * (remaining.max(0.0) / s.dcost);
            lambda = s.eff;
            break;
        }
    }

    // Greedy completion of the integral part.
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..n {
            let cur = inst.items[i][picks[i]];
            for &j in &fronts[i] {
                let c = inst.items[i][j];
                let extra = c.cost - cur.cost;
                let gain = cur.value - c.value;
                if gain > 0.0 && fits(extra, remaining) && best.is_none_or(|(g, _, _)| gain > g) {
                    best = Some((gain, i, j));
                }
            }
        }
        match best {
            Some((_, i, j)) => {
                remaining -= inst.items[i][j].cost - inst.items[i][picks[i]].cost;
                picks[i] = j;
            }
            None => break,
        }
    }
    let mut incumbent = evaluate(inst, &picks);

    if !opts.exact {
        let optimal = !improves(lp, incumbent.value);
        incumbent.optimal = optimal;
        return Ok(incumbent);
    }
    if !improves(lp, incumbent.value) {
        incumbent.optimal = true;
        return Ok(incumbent);
    }

    // Reduced-cost fixing with the LP multiplier.
    let mins: Vec<f64> = inst
        .items
        .iter()
        .zip(&fronts)
        .map(|(c, f)| {
            f.iter()
                .map(|&j| c[j].value + lambda * c[j].cost)
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let lagrangian = mins.iter().sum::<f64>() - lambda * inst.budget;
    let mut kept: Vec<Vec<usize>> = Vec::with_capacity(n);
    for (i, f) in fronts.iter().enumerate() {
        let c = &inst.items[i];
        let k: Vec<usize> = f
            .iter()
            .copied()
            .filter(|&j| {
                improves(
                    lagrangian + c[j].value + lambda * c[j].cost - mins[i],
                    incumbent.value,
                )
            })
            .collect();
        if k.is_empty() {
            // No solution better than the incumbent can use this item at all.
            incumbent.optimal = true;
            return Ok(incumbent);
        }
        kept.push(k);
    }

    let mut fixed_cost = 0.0;
    let mut fixed_value = 0.0;
    let mut core: Vec<usize> = Vec::new();
    let mut base = picks.clone();
    for (i, k) in kept.iter().enumerate() {
        if k.len() == 1 {
            base[i] = k[0];
            fixed_cost += inst.items[i][k[0]].cost;
            fixed_value += inst.items[i][k[0]].value;
        } else {
            core.push(i);
        }
    }
    let spread = |i: usize| {
        let vals = kept[i].iter().map(|&j| inst.items[i][j].value);
        vals.clone().fold(f64::NEG_INFINITY, f64::max) - vals.fold(f64::INFINITY, f64::min)
    };
    core.sort_by(|&a, &b| {
        spread(b)
            .partial_cmp(&spread(a))
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });

    let mut bb = BranchAndBound::new(
        inst,
        &core,
        &kept,
        inst.budget - fixed_cost,
        fixed_value,
        incumbent.value,
    );
    let finished = bb.run(opts.node_limit);
    if let Some(core_picks) = bb.best {
        for (pos, &i) in core.iter().enumerate() {
            base[i] = core_picks[pos];
        }
        let candidate = evaluate(inst, &base);
        if fits(candidate.cost, inst.budget) && improves(candidate.value, incumbent.value) {
            incumbent = candidate;
        }
    }
    incumbent.optimal = finished;
    Ok(incumbent)
}

fn evaluate(inst: &Instance, picks: &[usize]) -> Solution {
    let (mut value, mut cost) = (0.0, 0.0);
    for (i, &j) in picks.iter().enumerate() {
        value += inst.items[i][j].value;
        cost += inst.items[i][j].cost;
    }
    Solution {
        picks: picks.to_vec(),
        value,
        cost,
        optimal: false,
    }
}

struct BranchAndBound<'a> {
    inst: &'a Instance,
    core: &'a [usize],
    /// Choices per core position, best value first.
    order: Vec<Vec<usize>>,
    min_cost_suffix: Vec<f64>,
    base_value_suffix: Vec<f64>,
    /// Hull segments tagged with core position, best efficiency first.
    segs: Vec<(usize, Segment)>,
    budget: f64,
    offset: f64,
    incumbent: f64,
    best: Option<Vec<usize>>,
    current: Vec<usize>,
    nodes: u64,
}

impl<'a> BranchAndBound<'a> {
    fn new(
        inst: &'a Instance,
        core: &'a [usize],
        kept: &[Vec<usize>],
        budget: f64,
        offset: f64,
        incumbent: f64,
    ) -> Self {
        let m = core.len();
        let mut order = Vec::with_capacity(m);
        let mut min_cost_suffix = vec![0.0; m + 1];
        let mut base_value_suffix = vec![0.0; m + 1];
        let mut segs = Vec::new();
        for (pos, &i) in core.iter().enumerate() {
            let c = &inst.items[i];
            let mut o = kept[i].clone();
            o.sort_by(|&a, &b| {
                c[a].value
                    .partial_cmp(&c[b].value)
                    .unwrap_or(Ordering::Equal)
                    .then(c[a].option.cmp(&c[b].option))
            });
            order.push(o);
            let f = frontier(c, |j| kept[i].contains(&j));
            let mut local = Vec::new();
            segments(c, &hull(c, &f), pos, &mut local);
            segs.extend(local);
        }
        sort_segments(&mut segs);
        let segs = segs.into_iter().map(|s| (s.item, s)).collect();
        for pos in (0..m).rev() {
            let i = core[pos];
            let c = &inst.items[i];
            let f = frontier(c, |j| kept[i].contains(&j));
            min_cost_suffix[pos] = min_cost_suffix[pos + 1] + c[f[0]].cost;
            base_value_suffix[pos] = base_value_suffix[pos + 1] + c[f[0]].value;
        }
        Self {
            inst,
            core,
            order,
            min_cost_suffix,
            base_value_suffix,
            segs,
            budget,
            offset,
            incumbent,
            best: None,
            current: vec![0; m],
            nodes: 0,
        }
    }

    /// Returns false when the node limit stopped the search.
    fn run(&mut self, node_limit: u64) -> bool {
        self.descend(0, 0.0, 0.0, node_limit)
    }

    fn bound(&self, depth: usize, cost: f64, value: f64) -> Option<f64> {
        let mut slack = self.budget - cost - self.min_cost_suffix[depth];
        if !fits(0.0, slack) && slack < 0.0 {
            return None;
        }
        let mut b = self.offset + value + self.base_value_suffix[depth];
        for (pos, s) in &self.segs {
            if *pos < depth {
                continue;
            }
            if s.dcost <= slack {
                slack -= s.dcost;
                b -= s.dvalue;
            } else {
                b -= s.dvalue * (slack.max(0.0) / s.dcost);
                break;
            }
        }
        Some(b)
    }

    fn descend(&mut self, depth: usize, cost: f64, value: f64, node_limit: u64) -> bool {
        self.nodes += 1;
        if self.nodes > node_limit {
            return false;
        }
        if depth == self.core.len() {
            let total = self.offset + value;
            if fits(cost, self.budget) && improves(total, self.incumbent) {
                self.incumbent = total;
                self.best = Some(
                    self.current
                        .iter()
                        .enumerate()
                        .map(|(pos, &k)| self.order[pos][k])
                        .collect(),
                );
            }
            return true;
        }
        match self.bound(depth, cost, value) {
            Some(b) if improves(b, self.incumbent) => {}
            _ => return true,
        }
        let item = self.core[depth];
        for k in 0..self.order[depth].len() {
            let c = self.inst.items[item][self.order[depth][k]];
            if !fits(cost + c.cost + self.min_cost_suffix[depth + 1], self.budget) {
                continue;
            }
            if !improves(
                self.offset + value + c.value + self.base_value_suffix_min(depth + 1),
                self.incumbent,
            ) {
                continue;
            }
            self.current[depth] = k;
            if !self.descend(depth + 1, cost + c.cost, value + c.value, node_limit) {
                return false;
            }
        }
        true
    }

    /// Weak bound: every remaining item at its lowest kept value.
    fn base_value_suffix_min(&self, depth: usize) -> f64 {
        self.order[depth..]
            .iter()
            .zip(&self.core[depth..])
            .map(|(o, &i)| self.inst.items[i][o[0]].value)
            .sum()
    }
}
