use serde::{Deserialize, Serialize};

use crate::tiers::TierId;
use crate::{Error, Result};

/// Weights over (compressibility, latency, cost); they sum to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoringPolicy {
    pub compressibility: f64,
    pub latency: f64,
    pub cost: f64,
}

impl ScoringPolicy {
    pub fn new(compressibility: f64, latency: f64, cost: f64) -> Result<Self> {
        let p = Self {
            compressibility,
            latency,
            cost,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let w = [self.compressibility, self.latency, self.cost];
        if w.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
            return Err(Error::Config(format!(
                "scoring weights must be non-negative, got {w:?}"
            )));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "scoring weights must sum to 1, got {sum}"
            )));
        }
        Ok(())
    }
}

/// Raw measurements for one tier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TierRow {
    pub id: TierId,
    pub ratio: f64,
    pub latency_ns: f64,
    /// Cost of one stored original page (media price over ratio).
    pub cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TierScore {
    pub id: TierId,
    pub score: f64,
    /// Scaled (compressibility, latency, cost), each in [0, 1].
    pub scaled: [f64; 3],
}

/// Min-max scaling. Lower-is-better columns map max to 0 and min to 1; the
/// compressibility column is oriented the other way so a higher ratio still
/// scores higher. A constant column scales to 0.5.
fn scale(values: &[f64], higher_is_better: bool) -> Vec<f64> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let range = max - min;
    values
        .iter()
        .map(|&y| {
            if !(range > 0.0) {
                0.5
            } else if higher_is_better {
                ((y - min) / range).clamp(0.0, 1.0)
            } else {
                ((max - y) / range).clamp(0.0, 1.0)
            }
        })
        .collect()
}

/// Scores tiers and returns them best first; equal scores keep the lower id
/// first.
pub fn score_tiers(rows: &[TierRow], policy: &ScoringPolicy) -> Result<Vec<TierScore>> {
    policy.validate()?;
    for r in rows {
        if [r.ratio, r.latency_ns, r.cost]
            .iter()
            .any(|x| !x.is_finite())
        {
            return Err(Error::Config(format!(
                "tier {} has a non-finite measurement",
                r.id
            )));
        }
    }
    let c = scale(&rows.iter().map(|r| r.ratio).collect::<Vec<_>>(), true);
    let l = scale(
        &rows.iter().map(|r| r.latency_ns).collect::<Vec<_>>(),
        false,
    );
    let u = scale(&rows.iter().map(|r| r.cost).collect::<Vec<_>>(), false);
    let mut out: Vec<TierScore> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let score = policy.compressibility * c[i] + policy.latency * l[i] + policy.cost * u[i];
            TierScore {
                id: r.id,
                score: score.clamp(0.0, 1.0),
                scaled: [c[i], l[i], u[i]],
            }
        })
        .collect();
    out.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.id.cmp(&b.id)));
    Ok(out)
}
