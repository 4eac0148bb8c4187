//! Browser bindings: each export takes plain numbers and returns JSON.
//!
//! The Rust functions underneath return typed results so they can be tested
//! natively.

use ntier::codecs::CalibrationTable;
use ntier::models::{
    analytical_place, score_tiers, waterfall_step, AnalyticalConfig, PerfModel, Placement,
    PlacementProblem, ScoringPolicy, TcoModel, TierCost, TierRow, WaterfallConfig,
};
use ntier::profiling::build_regions;
use ntier::tiers::{standard_six_tier, Media, TierDesc, TierId};
use ntier::{PAGES_PER_REGION, REGION_SIZE};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredTier {
    pub tier: String,
    pub score: f64,
    pub ratio: f64,
    pub latency_ns: u64,
    pub scaled: [f64; 3],
}

/// Ranks the twelve bundled tiers.
pub fn rank_tiers(compressibility: f64, latency: f64, cost: f64) -> ntier::Result<Vec<ScoredTier>> {
    let policy = ScoringPolicy::new(compressibility, latency, cost)?;
    let table = CalibrationTable::builtin();
    let rows: Vec<TierRow> = table
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let media = if r.tier_id.ends_with("-OP") {
                Media::optane_like()
            } else {
                Media::dram()
            };
            TierRow {
                id: TierId::from_index(i),
                ratio: r.ratio,
                latency_ns: r.decomp_ns as f64,
                cost: media.cost_per_gb / r.ratio,
            }
        })
        .collect();
    Ok(score_tiers(&rows, &policy)?
        .into_iter()
        .map(|s| {
            let r = &table.rows[s.id.index()];
            ScoredTier {
                tier: r.tier_id.clone(),
                score: s.score,
                ratio: r.ratio,
                latency_ns: r.decomp_ns,
                scaled: s.scaled,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KnobPoint {
    pub knob: f64,
    pub savings_pct: f64,
    pub perf_ovh_ms: f64,
    /// Regions per placement, DRAM first.
    pub histogram: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tradeoff {
    pub tiers: Vec<String>,
    pub selected: KnobPoint,
    pub curve: Vec<KnobPoint>,
}

const DEMO_REGIONS: usize = 256;

fn six_tier_problem(skew: f64) -> ntier::Result<(Vec<TierDesc>, PlacementProblem)> {
    let descs = standard_six_tier();
    let specs = CalibrationTable::builtin().calibrate(&descs)?;
    let table = CalibrationTable::builtin();
    let tiers = descs
        .iter()
        .map(|d| TierCost {
            usd_per_page: d.media.cost_per_page(),
            ratio: table.get(&d.name).map_or(1.0, |r| r.ratio),
        })
        .collect();
    // Zipf-like popularity over regions.
    let hotness = (0..DEMO_REGIONS)
        .map(|i| (1000.0 / ((i + 1) as f64).powf(skew)).floor())
        .collect();
    let problem = PlacementProblem {
        hotness,
        pages: vec![PAGES_PER_REGION; DEMO_REGIONS],
        tco: TcoModel::new(
            Media::dram().cost_per_page(),
            tiers,
            DEMO_REGIONS as u64 * PAGES_PER_REGION,
        )?,
        perf: PerfModel::new(specs.iter().map(|s| s.access_latency_ns).collect()),
    };
    Ok((descs, problem))
}

fn knob_point(problem: &PlacementProblem, knob: f64) -> ntier::Result<KnobPoint> {
    let plan = analytical_place(problem, &AnalyticalConfig::with_knob(knob))?;
    let max = problem.tco.tco_max();
    Ok(KnobPoint {
        knob,
        savings_pct: (max - plan.predicted_tco) / max * 100.0,
        perf_ovh_ms: plan.predicted_perf_ovh / 1e6,
        histogram: plan.histogram(problem.tiers()),
    })
}

/// Places a skewed synthetic footprint at `knob`, plus an 11-point sweep.
pub fn knob_tradeoff(knob: f64, skew: f64) -> ntier::Result<Tradeoff> {
    if !(skew > 0.0 && skew <= 4.0) {
        return Err(ntier::Error::Config(format!("skew must be in (0, 4], got {skew}")));
    }
    let (descs, problem) = six_tier_problem(skew)?;
    let curve = (0..=10)
        .map(|i| knob_point(&problem, i as f64 / 10.0))
        .collect::<ntier::Result<Vec<_>>>()?;
    Ok(Tradeoff {
        tiers: descs.into_iter().map(|d| d.name).collect(),
        selected: knob_point(&problem, knob)?,
        curve,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaterfallFrame {
    pub window: usize,
    /// Placement index per region; 0 is DRAM.
    pub placement: Vec<usize>,
    pub histogram: Vec<u64>,
}

/// Runs the waterfall on 64 regions with a hot band in the middle. Every
/// `touch_every` windows the regions of the warm shoulder are touched again
/// and return to DRAM; 0 disables touching.
pub fn waterfall_frames(
    threshold: f64,
    windows: usize,
    touch_every: usize,
) -> ntier::Result<Vec<WaterfallFrame>> {
    let config = WaterfallConfig::new(threshold);
    config.validate()?;
    let tiers = standard_six_tier().len();
    let n = 64;
    let mut regions = build_regions(n as u64 * REGION_SIZE, 4)?;
    for r in &mut regions {
        let x = (r.id as f64 - 32.0) / 8.0;
        r.hotness = (200.0 * (-x * x).exp()).floor();
    }
    let mut frames = Vec::with_capacity(windows.min(256));
    for window in 0..windows.min(256) {
        let touched: Vec<usize> = if touch_every > 0 && window > 0 && window % touch_every == 0 {
            regions
                .iter()
                .filter(|r| r.placement != Placement::Dram && r.hotness >= 5.0)
                .map(|r| r.id)
                .collect()
        } else {
            Vec::new()
        };
        let plan = waterfall_step(&regions, tiers, &config, &touched);
        for (r, p) in regions.iter_mut().zip(&plan.assignment) {
            r.placement = *p;
        }
        frames.push(WaterfallFrame {
            window,
            placement: plan.assignment.iter().map(|p| p.index()).collect(),
            histogram: plan.histogram(tiers),
        });
    }
    Ok(frames)
}

fn to_js<T: Serialize>(r: ntier::Result<T>) -> Result<String, JsError> {
    let value = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = scoreTiers)]
pub fn score_tiers_js(compressibility: f64, latency: f64, cost: f64) -> Result<String, JsError> {
    to_js(rank_tiers(compressibility, latency, cost))
}

#[wasm_bindgen(js_name = knobTradeoff)]
pub fn knob_tradeoff_js(knob: f64, skew: f64) -> Result<String, JsError> {
    to_js(knob_tradeoff(knob, skew))
}

#[wasm_bindgen(js_name = waterfallDemo)]
pub fn waterfall_demo_js(threshold: f64, windows: usize, touch_every: usize) -> Result<String, JsError> {
    to_js(waterfall_frames(threshold, windows, touch_every))
}
