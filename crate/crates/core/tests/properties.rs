use std::sync::OnceLock;

use ntier::codecs::{generate_pages, Codec, DataProfile};
use ntier::models::{
    analytical_place, score_tiers, waterfall_step, AnalyticalConfig, PerfModel, Placement,
    PlacementProblem, ScoringPolicy, TcoModel, TierCost, TierRow, WaterfallConfig,
};
use ntier::profiling::build_regions;
use ntier::tiers::{migrate, AllocatorKind, CompressedTier, Media, TierDesc, TierId, TierSpec};
use ntier::REGION_SIZE;
use proptest::prelude::*;

/// A fixed mix of pages spanning incompressible to all-zero.
fn page_pool() -> &'static [Vec<u8>] {
    static POOL: OnceLock<Vec<Vec<u8>>> = OnceLock::new();
    POOL.get_or_init(|| {
        let mut pages = Vec::new();
        for profile in [
            DataProfile::zeros(1),
            DataProfile::random(2),
            DataProfile::text_like(1.5, 3),
            DataProfile::text_like(3.0, 4),
            DataProfile::text_like(6.0, 5),
            DataProfile::mixed(2.5, 6),
        ] {
            pages.extend(generate_pages(&profile, 6).unwrap());
        }
        pages
    })
}

fn tier(allocator: AllocatorKind, codec: Codec, id: usize) -> CompressedTier {
    CompressedTier::new(TierSpec {
        id: TierId::from_index(id),
        desc: TierDesc::standard(allocator, codec, Media::dram()),
        access_latency_ns: 1,
        compress_latency_ns: 1,
    })
}

#[derive(Debug, Clone)]
enum PoolOp {
    Store(usize),
    Load(usize),
    Migrate { count: usize, forward: bool },
}

fn pool_op() -> impl Strategy<Value = PoolOp> {
    prop_oneof![
        4 => (0..36usize).prop_map(PoolOp::Store),
        2 => any::<usize>().prop_map(PoolOp::Load),
        1 => (1..6usize, any::<bool>()).prop_map(|(count, forward)| PoolOp::Migrate { count, forward }),
    ]
}

fn codec_strategy() -> impl Strategy<Value = Codec> {
    prop_oneof![Just(Codec::lz4()), Just(Codec::lzo()), Just(Codec::deflate())]
}

const KINDS: [AllocatorKind; 3] = [
    AllocatorKind::Zbud,
    AllocatorKind::Z3fold,
    AllocatorKind::Zsmalloc,
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn allocators_respect_packing_bounds(
        ops in prop::collection::vec(pool_op(), 1..40),
        src_codec in codec_strategy(),
        dst_codec in codec_strategy(),
    ) {
        let pages = page_pool();
        // One (src, dst) pair per allocator; all see the same operations.
        let mut pairs: Vec<(CompressedTier, CompressedTier)> = KINDS
            .iter()
            .map(|&k| (tier(k, src_codec, 0), tier(k, dst_codec, 1)))
            .collect();
        let mut next_id = 0u64;
        let mut in_src: Vec<u64> = Vec::new();
        let mut in_dst: Vec<u64> = Vec::new();
        for op in ops {
            match op {
                PoolOp::Store(p) => {
                    for (src, _) in &mut pairs {
                        src.store(next_id, &pages[p]).unwrap();
                    }
                    in_src.push(next_id);
                    next_id += 1;
                }
                PoolOp::Load(k) => {
                    let from_src = k % 2 == 0;
                    let list = if from_src { &mut in_src } else { &mut in_dst };
                    if list.is_empty() {
                        continue;
                    }
                    let id = list.swap_remove(k / 2 % list.len());
                    for (src, dst) in &mut pairs {
                        let t = if from_src { src } else { dst };
                        t.load(id).unwrap();
                    }
                }
                PoolOp::Migrate { count, forward } => {
                    let (from, to) = if forward {
                        (&mut in_src, &mut in_dst)
                    } else {
                        (&mut in_dst, &mut in_src)
                    };
                    let take = count.min(from.len());
                    let ids: Vec<u64> = from.drain(..take).collect();
                    for (src, dst) in &mut pairs {
                        if forward {
                            migrate(src, dst, &ids).unwrap();
                        } else {
                            migrate(dst, src, &ids).unwrap();
                        }
                    }
                    to.extend(ids);
                }
            }
            for side in 0..2 {
                let t: Vec<&CompressedTier> = pairs
                    .iter()
                    .map(|(s, d)| if side == 0 { s } else { d })
                    .collect();
                let original = t[0].stored_original_bytes();
                prop_assert!(2 * t[0].pool_bytes() >= original);
                prop_assert!(3 * t[1].pool_bytes() >= original);
                prop_assert!(t[2].pool_bytes() <= t[0].pool_bytes());
                prop_assert!(t.iter().all(|x| x.stored_original_bytes() == original));
            }
        }
    }
}

fn tier_rows() -> impl Strategy<Value = Vec<TierRow>> {
    prop::collection::vec((1.0..8.0f64, 100.0..40_000.0f64, 0.01..3.0f64), 1..10).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (ratio, latency_ns, cost))| TierRow {
                id: TierId::from_index(i),
                ratio,
                latency_ns,
                cost,
            })
            .collect()
    })
}

fn weights() -> impl Strategy<Value = ScoringPolicy> {
    (0.0..1.0f64, 0.0..1.0f64).prop_map(|(a, b)| {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        ScoringPolicy {
            compressibility: lo,
            latency: hi - lo,
            cost: 1.0 - hi,
        }
    })
}

proptest! {
    #[test]
    fn scores_are_bounded_and_sorted(rows in tier_rows(), policy in weights()) {
        let out = score_tiers(&rows, &policy).unwrap();
        prop_assert_eq!(out.len(), rows.len());
        for s in &out {
            prop_assert!((0.0..=1.0).contains(&s.score));
            prop_assert!(s.scaled.iter().all(|x| (0.0..=1.0).contains(x)));
        }
        prop_assert!(out.windows(2).all(|w| w[0].score >= w[1].score));
    }

    #[test]
    fn scores_ignore_positive_affine_rescaling(
        rows in tier_rows(),
        policy in weights(),
        a in 0.5..4.0f64,
        b in 0.0..10.0f64,
    ) {
        let base = score_tiers(&rows, &policy).unwrap();
        let moved: Vec<TierRow> = rows
            .iter()
            .map(|r| TierRow {
                ratio: a * r.ratio + b,
                latency_ns: a * r.latency_ns + b,
                cost: a * r.cost + b,
                ..*r
            })
            .collect();
        let after = score_tiers(&moved, &policy).unwrap();
        for s in &base {
            let t = after.iter().find(|t| t.id == s.id).unwrap();
            prop_assert!((s.score - t.score).abs() <= 1e-9);
        }
    }
}

fn problem() -> impl Strategy<Value = PlacementProblem> {
    (1..5usize, 1..40usize).prop_flat_map(|(n, r)| {
        (
            prop::collection::vec(0.0..500.0f64, r),
            prop::collection::vec(1..1000u64, r),
            prop::collection::vec((0.2..2.0f64, 1.0..5.0f64, 500..40_000u64), n),
        )
            .prop_map(move |(hotness, pages, tiers)| {
                let total = pages.iter().sum();
                PlacementProblem {
                    hotness,
                    pages,
                    tco: TcoModel::new(
                        3.0,
                        tiers
                            .iter()
                            .map(|&(usd_per_page, ratio, _)| TierCost { usd_per_page, ratio })
                            .collect(),
                        total,
                    )
                    .unwrap(),
                    perf: PerfModel::new(tiers.iter().map(|t| t.2).collect()),
                }
            })
    })
}

proptest! {
    #[test]
    fn looser_knob_never_costs_performance(p in problem(), a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let tight = analytical_place(&p, &AnalyticalConfig::with_knob(lo)).unwrap();
        let loose = analytical_place(&p, &AnalyticalConfig::with_knob(hi)).unwrap();
        prop_assume!(!tight.approximate && !loose.approximate);
        let tol = 1e-9 * tight.predicted_perf_ovh.abs().max(1.0);
        prop_assert!(loose.predicted_perf_ovh <= tight.predicted_perf_ovh + tol);
        for (plan, knob) in [(&tight, lo), (&loose, hi)] {
            let budget = p.tco.budget(knob);
            prop_assert!(plan.predicted_tco <= budget + 1e-9 * budget);
        }
    }

    #[test]
    fn waterfall_moves_each_region_at_most_one_step(
        placements in prop::collection::vec(0..7usize, 1..64),
        hotness in prop::collection::vec(0.0..200.0f64, 64),
        faulted in prop::collection::vec(any::<bool>(), 64),
        threshold in 0.0..200.0f64,
    ) {
        let n = 6;
        let mut regions = build_regions(placements.len() as u64 * REGION_SIZE, 4).unwrap();
        for (i, r) in regions.iter_mut().enumerate() {
            r.placement = Placement::from_index(placements[i].min(n));
            r.hotness = hotness[i];
        }
        let hit: Vec<usize> = (0..regions.len()).filter(|&i| faulted[i]).collect();
        let plan = waterfall_step(&regions, n, &WaterfallConfig::new(threshold), &hit);
        prop_assert_eq!(plan.assignment.len(), regions.len());
        for (r, &p) in regions.iter().zip(&plan.assignment) {
            let expect = if faulted[r.id] {
                Placement::Dram
            } else {
                match r.placement {
                    Placement::Dram if r.hotness < threshold => Placement::from_index(1),
                    Placement::Dram => Placement::Dram,
                    Placement::Tier(t) => Placement::from_index((t.index() + 2).min(n)),
                }
            };
            prop_assert_eq!(p, expect);
        }
    }
}
