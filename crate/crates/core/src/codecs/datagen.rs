use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Codec;
use crate::{Error, Result, PAGE_SIZE};

/// What the synthetic bytes look like.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataKind {
    Zeros,
    TextLike,
    Random,
    Mixed,
}

/// Recipe for deterministic page content with a controllable compression ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataProfile {
    pub kind: DataKind,
    /// Approximate aggregate deflate ratio to aim for. Ignored for `zeros`
    /// and `random`.
    pub target_ratio: f64,
    pub seed: u64,
}

impl DataProfile {
    pub fn zeros(seed: u64) -> Self {
        Self {
            kind: DataKind::Zeros,
            target_ratio: 1.0,
            seed,
        }
    }

    pub fn text_like(target_ratio: f64, seed: u64) -> Self {
        Self {
            kind: DataKind::TextLike,
            target_ratio,
            seed,
        }
    }

    pub fn random(seed: u64) -> Self {
        Self {
            kind: DataKind::Random,
            target_ratio: 1.0,
            seed,
        }
    }

    pub fn mixed(target_ratio: f64, seed: u64) -> Self {
        Self {
            kind: DataKind::Mixed,
            target_ratio,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.target_ratio >= 1.0) || !self.target_ratio.is_finite() {
            return Err(Error::TargetRatio(self.target_ratio));
        }
        Ok(())
    }
}

/// Generates `count` pages for `profile`. Output is a pure function of the
/// profile and the count; page `i` does not depend on `count`.
pub fn generate_pages(profile: &DataProfile, count: usize) -> Result<Vec<Vec<u8>>> {
    profile.validate()?;
    let gen = Generator::new(profile);
    Ok((0..count as u64).map(|i| gen.page(i)).collect())
}

const VOCAB: usize = 512;
const TUNING_PAGES: u64 = 16;
const TUNING_STEPS: usize = 16;
const MIXED_BLOCK: usize = 256;

struct Generator {
    kind: DataKind,
    seed: u64,
    vocab: Vec<Vec<u8>>,
    zipf_cdf: Vec<f64>,
    /// Noise rate for text-like pages, zero share for mixed pages.
    knob: f64,
}

impl Generator {
    fn new(profile: &DataProfile) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(profile.seed ^ 0x5eed_70c4_b1a5_0001);
        let vocab = (0..VOCAB)
            .map(|_| {
                let len = rng.random_range(2..=9);
                (0..len).map(|_| b'a' + rng.random_range(0..26u8)).collect()
            })
            .collect();
        let mut acc = 0.0;
        let mut zipf_cdf: Vec<f64> = (1..=VOCAB)
            .map(|r| {
                acc += 1.0 / (r as f64).powf(1.1);
                acc
            })
            .collect();
        for c in &mut zipf_cdf {
            *c /= acc;
        }
        let mut gen = Self {
            kind: profile.kind,
            seed: profile.seed,
            vocab,
            zipf_cdf,
            knob: 0.0,
        };
        match profile.kind {
            DataKind::TextLike => gen.tune(profile.target_ratio, false),
            DataKind::Mixed => gen.tune(profile.target_ratio, true),
            DataKind::Zeros | DataKind::Random => {}
        }
        gen
    }

    /// Bisection on the single knob. The ratio is monotone in the knob because
    /// every evaluation consumes identical random streams.
    fn tune(&mut self, target: f64, increasing: bool) {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..TUNING_STEPS {
            self.knob = 0.5 * (lo + hi);
            let r = self.sample_ratio();
            let too_high = r > target;
            // Text: more noise lowers the ratio. Mixed: more zeros raise it.
            if too_high != increasing {
                lo = self.knob;
            } else {
                hi = self.knob;
            }
        }
        self.knob = 0.5 * (lo + hi);
    }

    fn sample_ratio(&self) -> f64 {
        let codec = Codec::deflate();
        let mut compressed = 0usize;
        for i in 0..TUNING_PAGES {
            let page = self.page(u64::MAX - i);
            compressed += codec.compress(&page).map(|c| c.len()).unwrap_or(PAGE_SIZE);
        }
        (TUNING_PAGES as usize * PAGE_SIZE) as f64 / compressed as f64
    }

    fn page(&self, index: u64) -> Vec<u8> {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix(self.seed ^ splitmix(index)));
        match self.kind {
            DataKind::Zeros => vec![0; PAGE_SIZE],
            DataKind::Random => {
                let mut page = vec![0; PAGE_SIZE];
                rng.fill(&mut page[..]);
                page
            }
            DataKind::TextLike => self.text(&mut rng, PAGE_SIZE, self.knob),
            DataKind::Mixed => {
                let mut page = Vec::with_capacity(PAGE_SIZE);
                for _ in 0..PAGE_SIZE / MIXED_BLOCK {
                    let u: f64 = rng.random();
                    // Fixed draw order per block regardless of which branch wins.
                    let text = self.text(&mut rng, MIXED_BLOCK, 0.5);
                    let mut noise = [0u8; MIXED_BLOCK];
                    rng.fill(&mut noise[..]);
                    if u < 0.5 * self.knob {
                        page.extend_from_slice(&[0; MIXED_BLOCK]);
                    } else if u < 0.5 + 0.5 * self.knob {
                        page.extend_from_slice(&text);
                    } else {
                        page.extend_from_slice(&noise);
                    }
                }
                page
            }
        }
    }

    /// Zipf words with phrase repeats. `knob` 0 repeats earlier phrases
    /// most of the time; 1 never repeats and corrupts a share of bytes.
    /// Every token consumes the same draws whichever branch it takes.
    fn text(&self, rng: &mut ChaCha8Rng, len: usize, knob: f64) -> Vec<u8> {
        let repeat = 0.9 * (1.0 - knob);
        let noise = 0.3 * knob;
        let mut out = Vec::with_capacity(len + 64);
        while out.len() < len {
            let u: f64 = rng.random();
            let w: f64 = rng.random();
            let back: f64 = rng.random();
            let run = rng.random_range(8..48usize);
            let sep = rng.random_range(0..16u8);
            if u < repeat && out.len() > run {
                let from = ((out.len() - run) as f64 * back) as usize;
                for k in 0..run {
                    let b = out[from + k];
                    out.push(b);
                }
            } else {
                let rank = self.zipf_cdf.partition_point(|&c| c < w).min(VOCAB - 1);
                out.extend_from_slice(&self.vocab[rank]);
            }
            out.push(match sep {
                0 => b',',
                1 => b'\n',
                _ => b' ',
            });
        }
        out.truncate(len);
        for b in &mut out {
            let u: f64 = rng.random();
            let replacement: u8 = rng.random();
            if u < noise {
                *b = replacement;
            }
        }
        out
    }
}

pub(crate) fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}
