use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::codecs::DataProfile;
use crate::{Error, Result, PAGE_SIZE, REGION_SIZE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Op {
    #[serde(rename = "R")]
    Read,
    #[serde(rename = "W")]
    Write,
}

/// One memory access.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub timestamp_us: u64,
    pub op: Op,
    #[serde(rename = "virtual_addr")]
    pub addr: u64,
}

/// Where accesses land, as fractions of the footprint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AccessDistribution {
    /// Normal over page indices; `center` and `sigma` are footprint fractions.
    Gaussian {
        center: f64,
        sigma: f64,
    },
    Uniform,
    /// `hot_prob` of accesses go to the first `hot_fraction` of pages.
    Hotset {
        hot_fraction: f64,
        hot_prob: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSpec {
    pub footprint_bytes: u64,
    pub distribution: AccessDistribution,
    pub ops_per_window: u64,
    pub read_fraction: f64,
    pub data_profile: DataProfile,
    pub seed: u64,
}

impl WorkloadSpec {
    pub fn gaussian(footprint_bytes: u64, ops_per_window: u64, seed: u64) -> Self {
        Self {
            footprint_bytes,
            distribution: AccessDistribution::Gaussian {
                center: 0.5,
                sigma: 0.15,
            },
            ops_per_window,
            read_fraction: 0.9,
            data_profile: DataProfile::text_like(4.0, seed),
            seed,
        }
    }

    pub fn pages(&self) -> u64 {
        self.footprint_bytes / PAGE_SIZE as u64
    }

    pub fn validate(&self) -> Result<()> {
        if self.footprint_bytes == 0 || self.footprint_bytes % REGION_SIZE != 0 {
            return Err(Error::Config(format!(
                "footprint_bytes must be a positive multiple of {REGION_SIZE}, got {}",
                self.footprint_bytes
            )));
        }
        if !(0.0..=1.0).contains(&self.read_fraction) {
            return Err(Error::Config(format!(
                "read_fraction must be in [0, 1], got {}",
                self.read_fraction
            )));
        }
        match self.distribution {
            AccessDistribution::Gaussian { center, sigma } => {
                if !(0.0..=1.0).contains(&center) || !(sigma > 0.0) || !sigma.is_finite() {
                    return Err(Error::Config(format!(
                        "gaussian needs center in [0, 1] and positive sigma, got center {center}, sigma {sigma}"
                    )));
                }
            }
            AccessDistribution::Uniform => {}
            AccessDistribution::Hotset {
                hot_fraction,
                hot_prob,
            } => {
                if !(hot_fraction > 0.0 && hot_fraction <= 1.0) || !(0.0..=1.0).contains(&hot_prob)
                {
                    return Err(Error::Config(format!(
                        "hotset needs hot_fraction in (0, 1] and hot_prob in [0, 1], got {hot_fraction}, {hot_prob}"
                    )));
                }
            }
        }
        self.data_profile.validate()
    }
}

fn window_rng(seed: u64, window: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(window);
    rng
}

/// Accesses of one window. Each window has its own random stream, so a
/// window's content does not depend on how many windows are generated.
pub fn generate_window(
    spec: &WorkloadSpec,
    window: u64,
    window_us: u64,
) -> Result<Vec<TraceRecord>> {
    spec.validate()?;
    let pages = spec.pages();
    let mut rng = window_rng(spec.seed, window);
    let normal = match spec.distribution {
        AccessDistribution::Gaussian { center, sigma } => Some(
            Normal::new(center * pages as f64, sigma * pages as f64)
                .map_err(|e| Error::Config(e.to_string()))?,
        ),
        _ => None,
    };
    let ops = spec.ops_per_window;
    let mut out = Vec::with_capacity(ops as usize);
    for i in 0..ops {
        let page = match spec.distribution {
            AccessDistribution::Gaussian { .. } => {
                let n = normal.as_ref().expect("gaussian");
                loop {
                    let x = n.sample(&mut rng).floor();
                    if x >= 0.0 && x < pages as f64 {
                        break x as u64;
                    }
                }
            }
            AccessDistribution::Uniform => rng.random_range(0..pages),
            AccessDistribution::Hotset {
                hot_fraction,
                hot_prob,
            } => {
                let hot = ((hot_fraction * pages as f64).ceil() as u64).clamp(1, pages);
                if rng.random::<f64>() < hot_prob {
                    rng.random_range(0..hot)
                } else {
                    rng.random_range(0..pages)
                }
            }
        };
        let line = rng.random_range(0..(PAGE_SIZE as u64 / 64));
        let op = if rng.random::<f64>() < spec.read_fraction {
            Op::Read
        } else {
            Op::Write
        };
        out.push(TraceRecord {
            timestamp_us: window * window_us + i * window_us / ops.max(1),
            op,
            addr: page * PAGE_SIZE as u64 + line * 64,
        });
    }
    Ok(out)
}

/// `windows` consecutive windows starting at window 0.
pub fn generate_trace(
    spec: &WorkloadSpec,
    windows: usize,
    window_us: u64,
) -> Result<Vec<Vec<TraceRecord>>> {
    (0..windows as u64)
        .map(|w| generate_window(spec, w, window_us))
        .collect()
}

/// Groups a time-ordered trace into `windows` windows by timestamp; records
/// past the last window are rejected.
pub fn split_windows(
    records: &[TraceRecord],
    window_us: u64,
    windows: usize,
) -> Result<Vec<Vec<TraceRecord>>> {
    let mut out = vec![Vec::new(); windows];
    for (line, r) in records.iter().enumerate() {
        let w = (r.timestamp_us / window_us) as usize;
        if w >= windows {
            return Err(Error::Trace {
                line: line as u64 + 2,
                reason: format!(
                    "timestamp {} falls after window {}",
                    r.timestamp_us,
                    windows.saturating_sub(1)
                ),
            });
        }
        out[w].push(*r);
    }
    Ok(out)
}

/// CSV with header `timestamp_us,op,virtual_addr`.
pub fn write_trace<W: Write>(writer: W, records: &[TraceRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace<R: Read>(reader: R) -> Result<Vec<TraceRecord>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["timestamp_us", "op", "virtual_addr"] {
        return Err(Error::Trace {
            line: 1,
            reason: format!("unexpected header {:?}", headers),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize().enumerate() {
        let rec: TraceRecord = rec.map_err(|e| Error::Trace {
            line: i as u64 + 2,
            reason: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}
