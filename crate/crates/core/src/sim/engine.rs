use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::metrics::{
    fault_sanity_check, ExperimentReport, LatencyHistogram, Summary, TierInfo, WindowMetrics,
};
use super::workload::{generate_window, TraceRecord, WorkloadSpec};
use crate::codecs::{generate_pages, splitmix, CalibrationTable, Codec};
use crate::models::{
    analytical_place, compute_tco, migration_screen, waterfall_step, AnalyticalConfig, PerfModel,
    Placement, PlacementPlan, PlacementProblem, TcoModel, TierCost, WaterfallConfig,
    DEFAULT_BOOKKEEPING_NS,
};
use crate::profiling::{
    build_regions, distribute_hotness, FaultSummary, ProfilingConfig, Region, Sampler,
};
use crate::tiers::{
    migrate_with, validate_tier_order, CompressedObject, CompressedTier, Media, TierDesc, TierId,
    TierSpec,
};
use crate::{Error, Result, PAGES_PER_REGION, PAGE_SIZE};

/// Hotness threshold, either fixed or resolved from the first profiled
/// window so that roughly `fraction` of the regions fall below it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Threshold {
    Fixed(f64),
    Coverage(f64),
}

impl Threshold {
    pub const CONSERVATIVE: Threshold = Threshold::Coverage(0.175);
    pub const MODERATE: Threshold = Threshold::Coverage(0.45);
    pub const AGGRESSIVE: Threshold = Threshold::Coverage(0.75);

    /// Smallest threshold that puts at least `fraction` of `hotness` strictly
    /// below it; ties at the cut are included.
    pub fn resolve(self, hotness: &[f64]) -> f64 {
        match self {
            Threshold::Fixed(h) => h,
            Threshold::Coverage(fraction) => {
                let mut sorted = hotness.to_vec();
                sorted.sort_by(f64::total_cmp);
                let want = (fraction * sorted.len() as f64).round() as usize;
                if want == 0 || sorted.is_empty() {
                    return 0.0;
                }
                let cut = sorted[want.min(sorted.len()) - 1];
                sorted
                    .iter()
                    .copied()
                    .find(|&h| h > cut)
                    .unwrap_or(cut + 1.0)
            }
        }
    }

    fn validate(self) -> std::result::Result<(), String> {
        match self {
            Threshold::Fixed(h) if !(h >= 0.0) || !h.is_finite() => {
                Err(format!("threshold {h} must be non-negative"))
            }
            Threshold::Coverage(c) if !(0.0..=1.0).contains(&c) => {
                Err(format!("coverage {c} must be in [0, 1]"))
            }
            _ => Ok(()),
        }
    }
}

/// Placement policy driving an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelSelector {
    /// Everything stays in DRAM.
    None,
    /// Single compressed tier with threshold demotion.
    TwoTier { threshold: Threshold },
    /// Waterfall aging across all tiers.
    Waterfall { threshold: Threshold },
    /// Budgeted placement.
    Analytical(AnalyticalConfig),
}

impl ModelSelector {
    pub fn label(&self) -> String {
        match self {
            ModelSelector::None => "none".into(),
            ModelSelector::TwoTier { .. } => "2T".into(),
            ModelSelector::Waterfall { .. } => "NT-WF".into(),
            ModelSelector::Analytical(a) => format!("NT-AM-{}", a.tco_knob),
        }
    }

    fn threshold(&self) -> Option<Threshold> {
        match self {
            ModelSelector::TwoTier { threshold } | ModelSelector::Waterfall { threshold } => {
                Some(*threshold)
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub tiers: Vec<TierSpec>,
    /// Compression ratio per tier assumed before a tier holds any data.
    pub initial_ratios: Vec<f64>,
    pub model: ModelSelector,
    pub profiling: ProfilingConfig,
    pub workload: WorkloadSpec,
    pub windows: usize,
    pub warmup_windows: usize,
    pub dram_latency_ns: u64,
    pub dram_cost_per_gb: f64,
    /// A compressed region whose DRAM-resident share exceeds this moves
    /// back to DRAM.
    pub rehome_fraction: f64,
    /// Cost/benefit screen on promotions between compressed tiers; by
    /// default on for the analytical model only.
    pub migration_screen: Option<bool>,
    pub bookkeeping_ns: u64,
    /// Distinct page contents drawn from the data profile.
    pub page_templates: usize,
}

impl ExperimentConfig {
    /// Calibrates `descs` against `table` and fills in defaults.
    pub fn new(
        name: impl Into<String>,
        descs: &[TierDesc],
        table: &CalibrationTable,
        model: ModelSelector,
        workload: WorkloadSpec,
    ) -> Result<Self> {
        let tiers = table.calibrate(descs)?;
        let initial_ratios = descs
            .iter()
            .map(|d| table.get(&d.name).map(|r| r.ratio).unwrap_or(1.0))
            .collect();
        let profiling = ProfilingConfig {
            seed: workload.seed,
            ..ProfilingConfig::default()
        };
        Ok(Self {
            name: name.into(),
            tiers,
            initial_ratios,
            model,
            profiling,
            workload,
            windows: 20,
            warmup_windows: 1,
            dram_latency_ns: 100,
            dram_cost_per_gb: Media::DEFAULT_DRAM_COST_PER_GB,
            rehome_fraction: 0.5,
            migration_screen: None,
            bookkeeping_ns: DEFAULT_BOOKKEEPING_NS,
            page_templates: 256,
        })
    }

    /// Checks everything and reports all problems at once.
    pub fn validate(&self) -> Result<()> {
        let mut problems: Vec<String> = Vec::new();
        let n = self.tiers.len();
        if n > 0 {
            if let Err(e) = validate_tier_order(&self.tiers) {
                problems.push(e.to_string());
            }
        }
        if n > u8::MAX as usize - 1 {
            problems.push(format!("at most 254 tiers are supported, got {n}"));
        }
        if self.initial_ratios.len() != n {
            problems.push(format!(
                "{} initial ratios for {n} tiers",
                self.initial_ratios.len()
            ));
        }
        if self
            .initial_ratios
            .iter()
            .any(|r| !(*r > 0.0) || !r.is_finite())
        {
            problems.push("initial ratios must be positive".into());
        }
        match &self.model {
            ModelSelector::None => {}
            ModelSelector::TwoTier { .. } if n != 1 => problems.push(format!(
                "the two-tier model needs exactly one compressed tier, got {n}"
            )),
            ModelSelector::Waterfall { .. } | ModelSelector::Analytical(_) if n == 0 => {
                problems.push("the model needs at least one compressed tier".into())
            }
            ModelSelector::Analytical(a) => {
                if let Err(e) = a.validate(n) {
                    problems.push(e.to_string());
                }
            }
            _ => {}
        }
        if let Some(Err(e)) = self.model.threshold().map(Threshold::validate) {
            problems.push(e);
        }
        if let Err(e) = self.profiling.validate() {
            problems.push(e.to_string());
        }
        if let Err(e) = self.workload.validate() {
            problems.push(e.to_string());
        }
        if self.dram_latency_ns == 0 {
            problems.push("dram_latency_ns must be positive".into());
        }
        if !(self.dram_cost_per_gb > 0.0) {
            problems.push("dram_cost_per_gb must be positive".into());
        }
        if !(self.rehome_fraction > 0.0 && self.rehome_fraction <= 1.0) {
            problems.push(format!(
                "rehome_fraction must be in (0, 1], got {}",
                self.rehome_fraction
            ));
        }
        if self.page_templates == 0 {
            problems.push("page_templates must be positive".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }

    fn screen_enabled(&self) -> bool {
        self.migration_screen
            .unwrap_or(matches!(self.model, ModelSelector::Analytical(_)))
    }
}

/// Immutable page contents shared by all pages through a hash, with a
/// per-codec cache of compressed forms.
struct PageLibrary {
    templates: Vec<Vec<u8>>,
    seed: u64,
    memo: HashMap<(Codec, usize), CompressedObject>,
}

impl PageLibrary {
    fn new(workload: &WorkloadSpec, count: usize) -> Result<Self> {
        let templates = generate_pages(&workload.data_profile, count)?;
        Ok(Self {
            templates,
            seed: workload.data_profile.seed,
            memo: HashMap::new(),
        })
    }

    fn template_of(&self, page: u64) -> usize {
        (splitmix(self.seed ^ splitmix(page)) % self.templates.len() as u64) as usize
    }

    fn object(&mut self, codec: Codec, page: u64) -> Result<CompressedObject> {
        let t = self.template_of(page);
        if let Some(o) = self.memo.get(&(codec, t)) {
            return Ok(o.clone());
        }
        let o = CompressedObject::compress(codec, &self.templates[t])?;
        self.memo.insert((codec, t), o.clone());
        Ok(o)
    }
}

fn pair_mut<T>(v: &mut [T], a: usize, b: usize) -> (&mut T, &mut T) {
    assert_ne!(a, b);
    if a < b {
        let (lo, hi) = v.split_at_mut(b);
        (&mut lo[a], &mut hi[0])
    } else {
        let (lo, hi) = v.split_at_mut(a);
        (&mut hi[0], &mut lo[b])
    }
}

/// Runtime state of one experiment.
pub struct SimState {
    config: ExperimentConfig,
    tiers: Vec<CompressedTier>,
    regions: Vec<Region>,
    /// 0 for DRAM, otherwise the tier number, per page.
    location: Vec<u8>,
    library: PageLibrary,
    sampler: Sampler,
    threshold: Option<f64>,
    window: usize,
}

impl SimState {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let regions = build_regions(
            config.workload.footprint_bytes,
            config.profiling.history_depth,
        )?;
        let pages = config.workload.pages() as usize;
        let library = PageLibrary::new(&config.workload, config.page_templates)?;
        let sampler = Sampler::new(&config.profiling);
        let tiers = config
            .tiers
            .iter()
            .cloned()
            .map(CompressedTier::new)
            .collect();
        let threshold = match config.model.threshold() {
            Some(Threshold::Fixed(h)) => Some(h),
            _ => None,
        };
        Ok(Self {
            config,
            tiers,
            regions,
            location: vec![0; pages],
            library,
            sampler,
            threshold,
            window: 0,
        })
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn tiers(&self) -> &[CompressedTier] {
        &self.tiers
    }

    pub fn threshold(&self) -> Option<f64> {
        self.threshold
    }

    pub fn tco_max(&self) -> f64 {
        self.location.len() as f64 * self.dram_cost_per_page()
    }

    fn dram_cost_per_page(&self) -> f64 {
        Media {
            cost_per_gb: self.config.dram_cost_per_gb,
            ..Media::dram()
        }
        .cost_per_page()
    }

    /// TCO model using each tier's current ratio, or the initial ratio for
    /// an empty tier.
    pub fn tco_model(&self) -> Result<TcoModel> {
        let tiers = self
            .tiers
            .iter()
            .zip(&self.config.initial_ratios)
            .map(|(t, &init)| TierCost {
                usd_per_page: t.spec().desc.media.cost_per_page(),
                ratio: if t.is_empty() {
                    init
                } else {
                    t.compression_ratio()
                },
            })
            .collect();
        TcoModel::new(self.dram_cost_per_page(), tiers, self.location.len() as u64)
    }

    fn perf_model(&self) -> PerfModel {
        PerfModel::new(
            self.tiers
                .iter()
                .map(|t| t.spec().access_latency_ns)
                .collect(),
        )
    }

    pub fn realized_tco(&self) -> f64 {
        let dram: u64 = self.regions.iter().map(|r| u64::from(r.dram_pages)).sum();
        let mut tco = dram as f64 * self.dram_cost_per_page();
        for t in &self.tiers {
            tco += (t.pool_bytes() as f64 / PAGE_SIZE as f64) * t.spec().desc.media.cost_per_page();
        }
        tco
    }

    /// Replays one window, profiles it, applies the model and executes the
    /// resulting migrations.
    pub fn run_window(&mut self, trace: &[TraceRecord]) -> Result<WindowMetrics> {
        let n = self.tiers.len();
        let warmup = self.window < self.config.warmup_windows;
        let dram_ns = self.config.dram_latency_ns;
        let start: Vec<Placement> = self.regions.iter().map(|r| r.placement).collect();

        // Replay.
        let mut faults = vec![0u64; n];
        let mut region_faults = vec![0u64; self.regions.len()];
        let mut lat_counts = vec![0u64; n + 1];
        let mut dram_hits = Vec::with_capacity(trace.len());
        let limit = self.config.workload.footprint_bytes;
        for r in trace {
            if r.addr >= limit {
                return Err(Error::AddressOutOfRange {
                    addr: r.addr,
                    limit,
                });
            }
            let page = r.addr / PAGE_SIZE as u64;
            let loc = self.location[page as usize] as usize;
            if loc == 0 {
                dram_hits.push(r.addr);
            } else {
                self.tiers[loc - 1].fault(page)?;
                self.location[page as usize] = 0;
                let rid = (page / PAGES_PER_REGION as u64) as usize;
                self.regions[rid].dram_pages += 1;
                region_faults[rid] += 1;
                faults[loc - 1] += 1;
            }
            lat_counts[loc] += 1;
        }
        let mut hist = LatencyHistogram::default();
        hist.record(dram_ns, lat_counts[0]);
        for (y, t) in self.tiers.iter().enumerate() {
            hist.record(dram_ns + t.spec().access_latency_ns, lat_counts[y + 1]);
        }
        let fault_ns: u64 = faults
            .iter()
            .zip(&self.tiers)
            .map(|(f, t)| f * t.spec().access_latency_ns)
            .sum();

        let mut plan_report = None;
        let mut predicted = (None, None);
        let mut tax_ns = 0u64;
        let mut tax_bytes = 0u64;
        if !warmup {
            // Profile.
            let events = self.sampler.sample(dram_hits);
            let mut summary = FaultSummary::new();
            for (y, &f) in faults.iter().enumerate() {
                let id = TierId::from_index(y);
                let nr = start.iter().filter(|p| **p == Placement::Tier(id)).count() as u64;
                summary.insert(id, f, nr)?;
            }
            let summary = summary.with_region_faults(region_faults);
            distribute_hotness(&events, &summary, &mut self.regions, &self.config.profiling)?;

            // Regions mostly faulted back start over from DRAM.
            let mut rehomed = Vec::new();
            for r in &mut self.regions {
                let share = f64::from(r.dram_pages) / PAGES_PER_REGION as f64;
                if r.placement != Placement::Dram && share > self.config.rehome_fraction {
                    r.placement = Placement::Dram;
                    rehomed.push(r.id);
                }
            }

            if let Some(plan) = self.plan(&rehomed)? {
                let (ns, bytes) = self.execute(&plan)?;
                tax_ns = ns;
                tax_bytes = bytes;
                predicted = (Some(plan.predicted_tco), Some(plan.predicted_perf_ovh));
                plan_report = Some(plan.report(n));
            }
        }

        let realized = self.realized_tco();
        let tco_max = self.tco_max();
        let savings = if tco_max > 0.0 {
            ((tco_max - realized) / tco_max * 100.0).clamp(0.0, 100.0)
        } else {
            0.0
        };
        let ops = trace.len() as u64;
        let metrics = WindowMetrics {
            window: self.window,
            warmup,
            ops,
            realized_tco_usd: realized,
            tco_savings_pct: savings,
            predicted_tco_usd: predicted.0,
            predicted_perf_ovh_ns: predicted.1,
            realized_fault_ns: fault_ns,
            faults_per_tier: faults,
            dram_pages: self.regions.iter().map(|r| u64::from(r.dram_pages)).sum(),
            pages_per_tier: self.tiers.iter().map(|t| t.len() as u64).collect(),
            pool_bytes_per_tier: self.tiers.iter().map(|t| t.pool_bytes()).collect(),
            migration_tax_ns: tax_ns,
            migration_bytes: tax_bytes,
            p50_ns: hist.percentile(0.5),
            p99_ns: hist.percentile(0.99),
            slowdown_pct: if ops == 0 {
                0.0
            } else {
                fault_ns as f64 / (ops * dram_ns) as f64 * 100.0
            },
            plan: plan_report,
        };
        self.window += 1;
        Ok(metrics)
    }

    fn plan(&mut self, rehomed: &[usize]) -> Result<Option<PlacementPlan>> {
        let n = self.tiers.len();
        match self.config.model.clone() {
            ModelSelector::None => Ok(None),
            ModelSelector::TwoTier { threshold } | ModelSelector::Waterfall { threshold } => {
                let h = match self.threshold {
                    Some(h) => h,
                    None => {
                        let hot: Vec<f64> = self.regions.iter().map(|r| r.hotness).collect();
                        let h = threshold.resolve(&hot);
                        self.threshold = Some(h);
                        h
                    }
                };
                let mut plan = waterfall_step(&self.regions, n, &WaterfallConfig::new(h), rehomed);
                let hot: Vec<f64> = self.regions.iter().map(|r| r.hotness).collect();
                let pages = vec![PAGES_PER_REGION as u64; self.regions.len()];
                plan.evaluate(&hot, &pages, &self.tco_model()?, &self.perf_model())?;
                Ok(Some(plan))
            }
            ModelSelector::Analytical(cfg) => {
                let tco = self.tco_model()?;
                let mut perf = self.perf_model();
                if !cfg.fault_proportionality.is_empty() {
                    perf.k = cfg.fault_proportionality.clone();
                }
                let problem = PlacementProblem::from_regions(&self.regions, cfg.hotness, tco, perf);
                let mut plan = analytical_place(&problem, &cfg)?;
                if self.config.screen_enabled() {
                    self.screen(&mut plan, &problem, cfg.tco_knob)?;
                }
                Ok(Some(plan))
            }
        }
    }

    /// Keeps regions in their current tier when a promotion to a faster
    /// compressed tier does not pay for itself, as long as the budget holds.
    fn screen(
        &self,
        plan: &mut PlacementPlan,
        problem: &PlacementProblem,
        knob: f64,
    ) -> Result<()> {
        let budget = problem.tco.budget(knob);
        let pages = PAGES_PER_REGION as f64;
        let mut cost = compute_tco(&plan.assignment, &problem.pages, &problem.tco)?;
        let mut changed = false;
        for (r, region) in self.regions.iter().enumerate() {
            let (Placement::Tier(s), Placement::Tier(d)) = (region.placement, plan.assignment[r])
            else {
                continue;
            };
            if d >= s {
                continue;
            }
            let compressed = (PAGES_PER_REGION as u64).saturating_sub(u64::from(region.dram_pages));
            let decision = migration_screen(
                compressed,
                self.tiers[s.index()].spec(),
                self.tiers[d.index()].spec(),
                region.mean_hotness().value,
                self.config.bookkeeping_ns,
            );
            if decision.approve {
                continue;
            }
            let next = cost
                + pages
                    * (problem.tco.unit_cost(Placement::Tier(s))
                        - problem.tco.unit_cost(Placement::Tier(d)));
            if next <= budget * (1.0 + 1e-12) {
                plan.assignment[r] = Placement::Tier(s);
                cost = next;
                changed = true;
            }
        }
        if changed {
            plan.evaluate(
                &problem.hotness,
                &problem.pages,
                &problem.tco,
                &problem.perf,
            )?;
        }
        Ok(())
    }

    /// Applies a plan. Returns migration time and uncompressed bytes moved.
    fn execute(&mut self, plan: &PlacementPlan) -> Result<(u64, u64)> {
        let Self {
            tiers,
            regions,
            location,
            library,
            ..
        } = self;
        let mut tax_ns = 0u64;
        let mut tax_bytes = 0u64;
        let page_bytes = PAGE_SIZE as u64;
        for (r, region) in regions.iter_mut().enumerate() {
            let target = plan.assignment[r];
            let first = region.first_page();
            let range = first..first + PAGES_PER_REGION as u64;
            match target {
                Placement::Dram => {
                    for p in range {
                        let loc = location[p as usize] as usize;
                        if loc != 0 {
                            tiers[loc - 1].take(p)?;
                            tax_ns += tiers[loc - 1].spec().access_latency_ns;
                            tax_bytes += page_bytes;
                            location[p as usize] = 0;
                            region.dram_pages += 1;
                        }
                    }
                }
                Placement::Tier(t) => {
                    let ti = t.index();
                    let mut by_src: BTreeMap<usize, Vec<u64>> = BTreeMap::new();
                    for p in range.clone() {
                        let loc = location[p as usize] as usize;
                        if loc != 0 && loc != ti + 1 {
                            by_src.entry(loc - 1).or_default().push(p);
                        }
                    }
                    for (s, ids) in by_src {
                        let (src, dst) = pair_mut(tiers, s, ti);
                        let codec = dst.spec().codec();
                        let receipt = migrate_with(src, dst, &ids, |id, obj| {
                            if obj.codec == codec {
                                Ok(obj.clone())
                            } else {
                                library.object(codec, id)
                            }
                        })?;
                        tax_ns += receipt.cost_ns;
                        tax_bytes += receipt.bytes_moved;
                        for id in ids {
                            location[id as usize] = (ti + 1) as u8;
                        }
                    }
                    if region.placement == Placement::Dram {
                        let codec = tiers[ti].spec().codec();
                        let compress_ns = tiers[ti].spec().compress_latency_ns;
                        for p in range {
                            if location[p as usize] == 0 {
                                tiers[ti].insert(p, library.object(codec, p)?)?;
                                location[p as usize] = (ti + 1) as u8;
                                region.dram_pages -= 1;
                                tax_ns += compress_ns;
                                tax_bytes += page_bytes;
                            }
                        }
                    }
                }
            }
            region.placement = target;
        }
        Ok((tax_ns, tax_bytes))
    }
}

/// Runs an experiment on its generated workload.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let window_us = config.profiling.window_us();
    let spec = config.workload.clone();
    run_with(config, |w| generate_window(&spec, w as u64, window_us))
}

/// Runs an experiment on a pre-split trace; one entry per window.
pub fn run_experiment_with_trace(
    config: &ExperimentConfig,
    windows: &[Vec<TraceRecord>],
) -> Result<ExperimentReport> {
    if windows.len() != config.windows {
        return Err(Error::Config(format!(
            "trace has {} windows, config expects {}",
            windows.len(),
            config.windows
        )));
    }
    run_with(config, |w| Ok(windows[w].clone()))
}

fn run_with<F>(config: &ExperimentConfig, mut window: F) -> Result<ExperimentReport>
where
    F: FnMut(usize) -> Result<Vec<TraceRecord>>,
{
    let mut state = SimState::new(config.clone())?;
    let mut history = Vec::with_capacity(config.windows);
    let mut hist = LatencyHistogram::default();
    for w in 0..config.windows {
        let trace = window(w)?;
        let m = state.run_window(&trace)?;
        if !m.warmup {
            // Rebuild the window's distribution from its counts.
            let mut wh = LatencyHistogram::default();
            wh.record(
                config.dram_latency_ns,
                m.ops - m.faults_per_tier.iter().sum::<u64>(),
            );
            for (f, t) in m.faults_per_tier.iter().zip(&config.tiers) {
                wh.record(config.dram_latency_ns + t.access_latency_ns, *f);
            }
            hist.merge(&wh);
        }
        history.push(m);
    }
    let counted: Vec<&WindowMetrics> = history.iter().filter(|m| !m.warmup).collect();
    let n = config.tiers.len();
    let total_ops: u64 = counted.iter().map(|m| m.ops).sum();
    let total_fault_ns: u64 = counted.iter().map(|m| m.realized_fault_ns).sum();
    let mut faults_per_tier = vec![0u64; n];
    for m in &counted {
        for (a, b) in faults_per_tier.iter_mut().zip(&m.faults_per_tier) {
            *a += b;
        }
    }
    let summary = Summary {
        windows: counted.len(),
        empty: counted.is_empty(),
        mean_savings_pct: if counted.is_empty() {
            0.0
        } else {
            counted.iter().map(|m| m.tco_savings_pct).sum::<f64>() / counted.len() as f64
        },
        total_fault_ns,
        total_ops,
        p50_ns: hist.percentile(0.5),
        p99_ns: hist.percentile(0.99),
        total_migration_tax_ns: counted.iter().map(|m| m.migration_tax_ns).sum(),
        slowdown_pct: if total_ops == 0 {
            0.0
        } else {
            total_fault_ns as f64 / (total_ops * config.dram_latency_ns) as f64 * 100.0
        },
        faults_per_tier,
    };
    Ok(ExperimentReport {
        name: config.name.clone(),
        model: config.model.label(),
        seed: config.workload.seed,
        hotness_threshold: state.threshold(),
        tiers: config
            .tiers
            .iter()
            .map(|t| TierInfo {
                id: t.id,
                name: t.name().to_string(),
                access_latency_ns: t.access_latency_ns,
                compress_latency_ns: t.compress_latency_ns,
            })
            .collect(),
        tco_max_usd: state.tco_max(),
        fault_order_violations: fault_sanity_check(&history),
        windows: history,
        summary,
    })
}
