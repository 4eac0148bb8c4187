use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::models::PlanReport;
use crate::tiers::TierId;
use crate::Result;

/// Exact latency distribution over a small set of distinct values.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LatencyHistogram {
    counts: BTreeMap<u64, u64>,
    total: u64,
}

impl LatencyHistogram {
    pub fn record(&mut self, latency_ns: u64, n: u64) {
        if n > 0 {
            *self.counts.entry(latency_ns).or_default() += n;
            self.total += n;
        }
    }

    pub fn merge(&mut self, other: &LatencyHistogram) {
        for (&lat, &n) in &other.counts {
            self.record(lat, n);
        }
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Nearest-rank percentile, `q` in (0, 1]; 0 when empty.
    pub fn percentile(&self, q: f64) -> u64 {
        if self.total == 0 {
            return 0;
        }
        let rank = ((q * self.total as f64).ceil() as u64).clamp(1, self.total);
        let mut seen = 0;
        for (&lat, &n) in &self.counts {
            seen += n;
            if seen >= rank {
                return lat;
            }
        }
        unreachable!("rank within total")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowMetrics {
    pub window: usize,
    pub warmup: bool,
    pub ops: u64,
    pub realized_tco_usd: f64,
    pub tco_savings_pct: f64,
    pub predicted_tco_usd: Option<f64>,
    pub predicted_perf_ovh_ns: Option<f64>,
    pub realized_fault_ns: u64,
    pub faults_per_tier: Vec<u64>,
    pub dram_pages: u64,
    pub pages_per_tier: Vec<u64>,
    pub pool_bytes_per_tier: Vec<u64>,
    pub migration_tax_ns: u64,
    pub migration_bytes: u64,
    pub p50_ns: u64,
    pub p99_ns: u64,
    /// Fault time over the DRAM-only replay time, in percent.
    pub slowdown_pct: f64,
    pub plan: Option<PlanReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    /// Post-warmup windows counted.
    pub windows: usize,
    pub empty: bool,
    pub mean_savings_pct: f64,
    pub total_fault_ns: u64,
    pub total_ops: u64,
    pub p50_ns: u64,
    pub p99_ns: u64,
    pub total_migration_tax_ns: u64,
    pub slowdown_pct: f64,
    pub faults_per_tier: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TierInfo {
    pub id: TierId,
    pub name: String,
    pub access_latency_ns: u64,
    pub compress_latency_ns: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultOrderViolation {
    pub tier: TierId,
    pub faults: u64,
    pub faster_tier: TierId,
    pub faster_faults: u64,
}

/// Everything one experiment produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub model: String,
    pub seed: u64,
    /// Threshold in effect after preset resolution, if the model uses one.
    pub hotness_threshold: Option<f64>,
    pub tiers: Vec<TierInfo>,
    pub tco_max_usd: f64,
    pub windows: Vec<WindowMetrics>,
    pub summary: Summary,
    pub fault_order_violations: Vec<FaultOrderViolation>,
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self).map_err(std::io::Error::from)?)
    }

    /// Per-window CSV: `window,tco_usd,savings_pct,fault_ns,p50,p99,tax_ns,pages_T*,faults_T*`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let n = self.tiers.len();
        let mut header: Vec<String> = [
            "window",
            "tco_usd",
            "savings_pct",
            "fault_ns",
            "p50",
            "p99",
            "tax_ns",
        ]
        .map(String::from)
        .to_vec();
        header.extend((1..=n).map(|i| format!("pages_T{i}")));
        header.extend((1..=n).map(|i| format!("faults_T{i}")));
        w.write_record(&header)?;
        for m in &self.windows {
            let mut row = vec![
                m.window.to_string(),
                format!("{:.6}", m.realized_tco_usd),
                format!("{:.4}", m.tco_savings_pct),
                m.realized_fault_ns.to_string(),
                m.p50_ns.to_string(),
                m.p99_ns.to_string(),
                m.migration_tax_ns.to_string(),
            ];
            row.extend(m.pages_per_tier.iter().map(u64::to_string));
            row.extend(m.faults_per_tier.iter().map(u64::to_string));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Flags every tier with more faults than some faster tier. Each flagged
/// tier is reported once, against the first faster tier it beats.
pub fn fault_order_violations(faults_per_tier: &[u64]) -> Vec<FaultOrderViolation> {
    let mut out = Vec::new();
    for (i, &f) in faults_per_tier.iter().enumerate() {
        if let Some(j) = (0..i).find(|&j| faults_per_tier[j] < f) {
            out.push(FaultOrderViolation {
                tier: TierId::from_index(i),
                faults: f,
                faster_tier: TierId::from_index(j),
                faster_faults: faults_per_tier[j],
            });
        }
    }
    out
}

/// Fault-order check over the post-warmup windows of a run.
pub fn fault_sanity_check(history: &[WindowMetrics]) -> Vec<FaultOrderViolation> {
    let n = history
        .iter()
        .map(|m| m.faults_per_tier.len())
        .max()
        .unwrap_or(0);
    let mut totals = vec![0u64; n];
    for m in history.iter().filter(|m| !m.warmup) {
        for (t, f) in totals.iter_mut().zip(&m.faults_per_tier) {
            *t += f;
        }
    }
    fault_order_violations(&totals)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentiles_are_nearest_rank() {
        let mut h = LatencyHistogram::default();
        assert_eq!(h.percentile(0.99), 0);
        h.record(100, 98);
        h.record(5000, 2);
        assert_eq!(h.percentile(0.5), 100);
        assert_eq!(h.percentile(0.98), 100);
        assert_eq!(h.percentile(0.99), 5000);
        let mut g = LatencyHistogram::default();
        g.record(100, 1);
        g.merge(&h);
        assert_eq!(g.total(), 101);
    }

    #[test]
    fn decreasing_faults_are_healthy() {
        assert!(fault_order_violations(&[100, 50, 10, 2, 0]).is_empty());
        assert!(fault_order_violations(&[7]).is_empty());
        assert!(fault_order_violations(&[]).is_empty());
    }

    #[test]
    fn inversion_flagged_at_slower_tier() {
        let v = fault_order_violations(&[10, 50, 5]);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].tier, TierId(2));
        assert_eq!(v[0].faster_tier, TierId(1));
    }
}
