use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{generate_pages, Codec, DataProfile};
use crate::tiers::{CompressedObject, CompressedTier, TierDesc, TierId, TierSpec};
use crate::{Error, Result};

/// Per-tier measured costs. Latencies are per 4 KiB page.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRow {
    pub tier_id: String,
    pub decomp_ns: u64,
    pub ratio: f64,
    pub comp_ns: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CalibrationTable {
    pub rows: Vec<CalibrationRow>,
}

const DEFAULT_TABLE: &str = include_str!("../../data/calibration_default.csv");

impl CalibrationTable {
    /// Frozen table for the twelve standard tiers on text-like data aimed
    /// at a deflate ratio of 4, used wherever reproducible numbers are needed.
    pub fn builtin() -> Self {
        Self::from_csv(DEFAULT_TABLE.as_bytes()).expect("bundled calibration table is valid")
    }

    pub fn get(&self, tier_id: &str) -> Option<&CalibrationRow> {
        self.rows.iter().find(|r| r.tier_id == tier_id)
    }

    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["tier_id", "decomp_ns", "ratio", "comp_ns"] {
            return Err(Error::Config(format!(
                "calibration header must be `tier_id,decomp_ns,ratio,comp_ns`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut rows = Vec::new();
        for row in rdr.deserialize() {
            let row: CalibrationRow = row?;
            if row.decomp_ns == 0 || row.comp_ns == 0 || !(row.ratio > 0.0) {
                return Err(Error::Config(format!(
                    "calibration row `{}` must have positive latencies and ratio",
                    row.tier_id
                )));
            }
            if rows
                .iter()
                .any(|r: &CalibrationRow| r.tier_id == row.tier_id)
            {
                return Err(Error::Config(format!(
                    "duplicate calibration row `{}`",
                    row.tier_id
                )));
            }
            rows.push(row);
        }
        Ok(Self { rows })
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for row in &self.rows {
            w.serialize(row)?;
        }
        if self.rows.is_empty() {
            w.write_record(["tier_id", "decomp_ns", "ratio", "comp_ns"])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Attaches calibrated latencies to tier descriptions, numbering them
    /// 1..=N in the given order.
    pub fn calibrate(&self, descs: &[TierDesc]) -> Result<Vec<TierSpec>> {
        descs
            .iter()
            .enumerate()
            .map(|(i, desc)| {
                let row = self
                    .get(&desc.name)
                    .ok_or_else(|| Error::MissingCalibration(desc.name.clone()))?;
                Ok(TierSpec {
                    id: TierId::from_index(i),
                    desc: desc.clone(),
                    access_latency_ns: row.decomp_ns,
                    compress_latency_ns: row.comp_ns,
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CharacterizeOptions {
    pub pages: usize,
    /// Timed decompression passes; each page keeps its fastest time.
    pub passes: usize,
}

impl Default for CharacterizeOptions {
    fn default() -> Self {
        Self {
            pages: 1000,
            passes: 3,
        }
    }
}

/// Measures every tier on the same synthetic pages.
///
/// The ratio column is the pool-level ratio (original bytes over pool
/// bytes), so it reflects the allocator as well as the codec and is
/// deterministic. Latency columns are wall-clock means; `decomp_ns` also
/// carries the media read latency and the allocator lookup overhead.
pub fn characterize(
    tiers: &[TierDesc],
    profile: &DataProfile,
    options: CharacterizeOptions,
) -> Result<CalibrationTable> {
    if options.pages == 0 {
        return Err(Error::Config(
            "characterization needs at least one page".into(),
        ));
    }
    let pages = generate_pages(profile, options.pages)?;
    // Media and allocator do not change the codec work, so each codec is
    // timed once and shared by every tier that uses it.
    let codecs: Vec<Codec> = tiers
        .iter()
        .map(|d| d.codec)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let timings = time_codecs(&codecs, &pages, options.passes)?;
    let mut rows = Vec::with_capacity(tiers.len());
    for desc in tiers {
        let (comp_ns, decomp_wall) = timings[&desc.codec];
        let spec = TierSpec {
            id: TierId(1),
            desc: desc.clone(),
            access_latency_ns: 1,
            compress_latency_ns: 1,
        };
        let mut tier = CompressedTier::new(spec);
        for (i, p) in pages.iter().enumerate() {
            tier.store(i as u64, p)?;
        }
        let ratio = tier.compression_ratio();
        // Fault everything back to exercise the pool bookkeeping.
        for i in 0..pages.len() as u64 {
            let (page, _) = tier.load(i)?;
            if page != pages[i as usize] {
                return Err(Error::Codec {
                    codec: desc.codec.kind.name(),
                    reason: "round trip mismatch".into(),
                });
            }
        }
        rows.push(CalibrationRow {
            tier_id: desc.name.clone(),
            decomp_ns: decomp_wall
                + desc.media.read_latency_ns
                + desc.allocator.lookup_overhead_ns(),
            ratio,
            comp_ns,
        });
    }
    Ok(CalibrationTable { rows })
}

/// Mean compress time per page, and the mean over pages of each page's
/// fastest decompression across `passes`. Codecs are interleaved page by
/// page so a burst of outside load hits all of them alike.
fn time_codecs(
    codecs: &[Codec],
    pages: &[Vec<u8>],
    passes: usize,
) -> Result<BTreeMap<Codec, (u64, u64)>> {
    let mut comp = vec![0u128; codecs.len()];
    let mut objects: Vec<Vec<CompressedObject>> = vec![Vec::with_capacity(pages.len()); codecs.len()];
    for p in pages {
        for (c, codec) in codecs.iter().enumerate() {
            let start = Instant::now();
            let o = CompressedObject::compress(*codec, p)?;
            comp[c] += start.elapsed().as_nanos();
            objects[c].push(o);
        }
    }
    let mut best = vec![vec![u128::MAX; pages.len()]; codecs.len()];
    for _ in 0..passes.max(1) {
        for i in 0..pages.len() {
            for c in 0..codecs.len() {
                let start = Instant::now();
                std::hint::black_box(objects[c][i].decompress()?);
                best[c][i] = best[c][i].min(start.elapsed().as_nanos());
            }
        }
    }
    let n = pages.len() as f64;
    Ok(codecs
        .iter()
        .enumerate()
        .map(|(c, codec)| {
            let comp = (comp[c] as f64 / n).round().max(1.0) as u64;
            let decomp = (best[c].iter().sum::<u128>() as f64 / n).round().max(1.0) as u64;
            (*codec, (comp, decomp))
        })
        .collect())
}
