//! Experiment configuration files (TOML).

use std::path::Path;

use anyhow::{bail, Context};
use ntier::codecs::{CalibrationTable, Codec, CodecKind, DataKind, DataProfile};
use ntier::models::AnalyticalConfig;
use ntier::profiling::ProfilingConfig;
use ntier::sim::{AccessDistribution, ExperimentConfig, ModelSelector, Threshold, WorkloadSpec};
use ntier::tiers::{AllocatorKind, Media, TierDesc};
use serde::{Deserialize, Serialize};

use crate::CliError;

const MIB: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigFile {
    pub experiment: ExperimentSection,
    pub media: MediaSection,
    pub tiers: Vec<TierEntry>,
    pub workload: WorkloadSection,
    pub profiling: ProfilingSection,
    pub model: ModelSection,
}

impl Default for ConfigFile {
    fn default() -> Self {
        Self {
            experiment: ExperimentSection::default(),
            media: MediaSection::default(),
            tiers: vec![TierEntry::new("zsmalloc", "lzo", "dram")],
            workload: WorkloadSection::default(),
            profiling: ProfilingSection::default(),
            model: ModelSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    pub name: String,
    pub seed: u64,
    pub windows: usize,
    pub warmup_windows: usize,
    pub rehome_fraction: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub migration_screen: Option<bool>,
    pub bookkeeping_ns: u64,
    pub page_templates: usize,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            name: "experiment".into(),
            seed: 7,
            windows: 20,
            warmup_windows: 1,
            rehome_fraction: 0.5,
            migration_screen: None,
            bookkeeping_ns: ntier::models::DEFAULT_BOOKKEEPING_NS,
            page_templates: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MediaSection {
    pub dram_latency_ns: u64,
    pub dram_cost_per_gb: f64,
    pub optane_read_latency_ns: u64,
    pub optane_cost_per_gb: f64,
}

impl Default for MediaSection {
    fn default() -> Self {
        let op = Media::optane_like();
        Self {
            dram_latency_ns: 100,
            dram_cost_per_gb: Media::DEFAULT_DRAM_COST_PER_GB,
            optane_read_latency_ns: op.read_latency_ns,
            optane_cost_per_gb: op.cost_per_gb,
        }
    }
}

impl MediaSection {
    pub fn media(&self, name: &str) -> anyhow::Result<Media> {
        match name {
            "dram" => Ok(Media {
                cost_per_gb: self.dram_cost_per_gb,
                ..Media::dram()
            }),
            "optane" => Ok(Media {
                read_latency_ns: self.optane_read_latency_ns,
                cost_per_gb: self.optane_cost_per_gb,
                ..Media::optane_like()
            }),
            other => bail!(CliError::config(format!(
                "unknown media `{other}` (expected dram or optane)"
            ))),
        }
    }

    /// Media for a tier named in the `ZS-LO-DR` style.
    pub fn media_of_tier(&self, tier_id: &str) -> anyhow::Result<Media> {
        match tier_id.rsplit('-').next() {
            Some("DR") => self.media("dram"),
            Some("OP") => self.media("optane"),
            _ => bail!(CliError::config(format!(
                "cannot tell the media of tier `{tier_id}` from its name"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TierEntry {
    pub allocator: String,
    pub codec: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<u8>,
    pub media: String,
    /// Defaults to the `ZS-LO-DR` style name; must match a calibration row.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

impl TierEntry {
    pub fn new(allocator: &str, codec: &str, media: &str) -> Self {
        Self {
            allocator: allocator.into(),
            codec: codec.into(),
            level: None,
            media: media.into(),
            name: None,
        }
    }

    fn desc(&self, media: &MediaSection) -> anyhow::Result<TierDesc> {
        let allocator: AllocatorKind = self
            .allocator
            .parse()
            .map_err(|e: ntier::Error| CliError::config(e.to_string()))?;
        let kind: CodecKind = self
            .codec
            .parse()
            .map_err(|e: ntier::Error| CliError::config(e.to_string()))?;
        let codec = Codec::new(kind, self.level.unwrap_or(kind.default_level()))
            .map_err(|e| CliError::config(e.to_string()))?;
        let mut desc = TierDesc::standard(allocator, codec, media.media(&self.media)?);
        if let Some(name) = &self.name {
            desc.name = name.clone();
        }
        Ok(desc)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WorkloadSection {
    pub footprint_mib: u64,
    pub ops_per_window: u64,
    pub read_fraction: f64,
    pub distribution: AccessDistribution,
    pub data: DataSection,
}

impl Default for WorkloadSection {
    fn default() -> Self {
        let g = WorkloadSpec::gaussian(2048 * MIB, 1_000_000, 0);
        Self {
            footprint_mib: 2048,
            ops_per_window: g.ops_per_window,
            read_fraction: g.read_fraction,
            distribution: g.distribution,
            data: DataSection {
                kind: g.data_profile.kind,
                target_ratio: g.data_profile.target_ratio,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub kind: DataKind,
    pub target_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfilingSection {
    pub window_seconds: u64,
    pub sample_rate: f64,
    pub fault_weight: f64,
    pub history_depth: usize,
    pub exact_fault_attribution: bool,
}

impl Default for ProfilingSection {
    fn default() -> Self {
        let p = ProfilingConfig::default();
        Self {
            window_seconds: p.window_seconds,
            sample_rate: p.sample_rate,
            fault_weight: p.fault_weight,
            history_depth: p.history_depth,
            exact_fault_attribution: p.exact_fault_attribution,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    None,
    TwoTier,
    Waterfall,
    Analytical,
}

/// A named coverage preset or a fixed hotness value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ThresholdEntry {
    Fixed(f64),
    Named(String),
}

impl ThresholdEntry {
    fn resolve(&self) -> anyhow::Result<Threshold> {
        match self {
            ThresholdEntry::Fixed(h) => Ok(Threshold::Fixed(*h)),
            ThresholdEntry::Named(n) => match n.as_str() {
                "conservative" => Ok(Threshold::CONSERVATIVE),
                "moderate" => Ok(Threshold::MODERATE),
                "aggressive" => Ok(Threshold::AGGRESSIVE),
                other => match other.strip_suffix('%').map(str::parse::<f64>) {
                    Some(Ok(pct)) => Ok(Threshold::Coverage(pct / 100.0)),
                    _ => bail!(CliError::config(format!(
                        "threshold `{other}` is not a number, a percentage or \
                         one of conservative, moderate, aggressive"
                    ))),
                },
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub kind: ModelKind,
    pub threshold: ThresholdEntry,
    pub knob: f64,
    pub exact_region_cap: usize,
    pub node_limit: u64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub fault_proportionality: Vec<f64>,
}

impl Default for ModelSection {
    fn default() -> Self {
        let a = AnalyticalConfig::default();
        Self {
            kind: ModelKind::TwoTier,
            threshold: ThresholdEntry::Named("moderate".into()),
            knob: a.tco_knob,
            exact_region_cap: a.exact_region_cap,
            node_limit: a.node_limit,
            fault_proportionality: Vec::new(),
        }
    }
}

pub const PRESETS: &[(&str, &str)] = &[
    ("2T-C", include_str!("../presets/2T-C.toml")),
    ("2T-M", include_str!("../presets/2T-M.toml")),
    ("2T-A", include_str!("../presets/2T-A.toml")),
    ("6T-WF-C", include_str!("../presets/6T-WF-C.toml")),
    ("6T-WF-M", include_str!("../presets/6T-WF-M.toml")),
    ("6T-WF-A", include_str!("../presets/6T-WF-A.toml")),
    ("6T-AM-0.9", include_str!("../presets/6T-AM-0.9.toml")),
    ("6T-AM-0.5", include_str!("../presets/6T-AM-0.5.toml")),
    ("6T-AM-0.1", include_str!("../presets/6T-AM-0.1.toml")),
    ("characterize", include_str!("../presets/characterize.toml")),
];

impl ConfigFile {
    pub fn parse(text: &str, origin: &str) -> anyhow::Result<Self> {
        toml::from_str(text).map_err(|e| CliError::config(format!("{origin}: {e}")).into())
    }

    /// Reads `path`, or a bundled preset when the path is `preset:NAME`.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let shown = path.display().to_string();
        if let Some(name) = shown.strip_prefix("preset:") {
            return Self::parse(preset(name)?, &shown);
        }
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config `{shown}`: {e}")))?;
        Self::parse(&text, &shown)
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        toml::to_string(self).context("serializing config")
    }

    pub fn tier_descs(&self) -> anyhow::Result<Vec<TierDesc>> {
        self.tiers.iter().map(|t| t.desc(&self.media)).collect()
    }

    pub fn workload(&self) -> WorkloadSpec {
        let w = &self.workload;
        WorkloadSpec {
            footprint_bytes: w.footprint_mib * MIB,
            distribution: w.distribution,
            ops_per_window: w.ops_per_window,
            read_fraction: w.read_fraction,
            data_profile: self.data_profile(),
            seed: self.experiment.seed,
        }
    }

    pub fn data_profile(&self) -> DataProfile {
        DataProfile {
            kind: self.workload.data.kind,
            target_ratio: self.workload.data.target_ratio,
            seed: self.experiment.seed,
        }
    }

    fn model(&self) -> anyhow::Result<ModelSelector> {
        let m = &self.model;
        Ok(match m.kind {
            ModelKind::None => ModelSelector::None,
            ModelKind::TwoTier => ModelSelector::TwoTier {
                threshold: m.threshold.resolve()?,
            },
            ModelKind::Waterfall => ModelSelector::Waterfall {
                threshold: m.threshold.resolve()?,
            },
            ModelKind::Analytical => ModelSelector::Analytical(AnalyticalConfig {
                tco_knob: m.knob,
                fault_proportionality: m.fault_proportionality.clone(),
                exact_region_cap: m.exact_region_cap,
                node_limit: m.node_limit,
                ..AnalyticalConfig::default()
            }),
        })
    }

    /// Builds and validates the experiment against a calibration table.
    pub fn experiment(&self, table: &CalibrationTable) -> anyhow::Result<ExperimentConfig> {
        let descs = self.tier_descs()?;
        let mut c = ExperimentConfig::new(
            self.experiment.name.clone(),
            &descs,
            table,
            self.model()?,
            self.workload(),
        )
        .map_err(|e| match e {
            ntier::Error::MissingCalibration(id) => CliError::config(format!(
                "calibration has no row for tier `{id}`"
            )),
            other => CliError::config(other.to_string()),
        })?;
        let e = &self.experiment;
        c.windows = e.windows;
        c.warmup_windows = e.warmup_windows;
        c.rehome_fraction = e.rehome_fraction;
        c.migration_screen = e.migration_screen;
        c.bookkeeping_ns = e.bookkeeping_ns;
        c.page_templates = e.page_templates;
        c.dram_latency_ns = self.media.dram_latency_ns;
        c.dram_cost_per_gb = self.media.dram_cost_per_gb;
        let p = &self.profiling;
        c.profiling = ProfilingConfig {
            window_seconds: p.window_seconds,
            sample_rate: p.sample_rate,
            fault_weight: p.fault_weight,
            history_depth: p.history_depth,
            seed: e.seed,
            exact_fault_attribution: p.exact_fault_attribution,
        };
        if self.workload.footprint_mib % 2 != 0 {
            bail!(CliError::config(format!(
                "footprint_mib must be a multiple of 2, got {}",
                self.workload.footprint_mib
            )));
        }
        c.validate().map_err(|e| CliError::config(e.to_string()))?;
        Ok(c)
    }
}

pub fn preset(name: &str) -> anyhow::Result<&'static str> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| {
            let names: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
            CliError::config(format!(
                "unknown preset `{name}` (available: {})",
                names.join(", ")
            ))
            .into()
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_builds_against_the_bundled_table() {
        let table = CalibrationTable::builtin();
        for (name, text) in PRESETS {
            let c = ConfigFile::parse(text, name).unwrap();
            let e = c.experiment(&table).unwrap();
            if *name != "characterize" {
                assert_eq!(e.name, *name);
                assert_eq!(c.experiment.seed, 7);
            }
        }
    }

    #[test]
    fn normalized_form_is_a_fixed_point() {
        for (name, text) in PRESETS {
            let once = ConfigFile::parse(text, name).unwrap();
            let text2 = once.to_toml().unwrap();
            let twice = ConfigFile::parse(&text2, "normalized").unwrap();
            assert_eq!(once, twice, "{name}");
            assert_eq!(twice.to_toml().unwrap(), text2);
        }
        let d = ConfigFile::default();
        assert_eq!(ConfigFile::parse(&d.to_toml().unwrap(), "default").unwrap(), d);
    }

    #[test]
    fn empty_file_means_defaults() {
        assert_eq!(ConfigFile::parse("", "empty").unwrap(), ConfigFile::default());
    }

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let err = ConfigFile::parse("[model]\nkind = \"waterfall\"\nthreshhold = 3\n", "x.toml")
            .unwrap_err()
            .to_string();
        assert!(err.contains("threshhold"), "{err}");
        assert!(err.contains("line 3"), "{err}");
    }

    #[test]
    fn thresholds_accept_numbers_names_and_percentages() {
        let t = |s: &str| {
            let c = ConfigFile::parse(&format!("[model]\nthreshold = {s}\n"), "t").unwrap();
            c.model.threshold.resolve()
        };
        assert_eq!(t("250.0").unwrap(), Threshold::Fixed(250.0));
        assert_eq!(t("\"aggressive\"").unwrap(), Threshold::AGGRESSIVE);
        assert_eq!(t("\"30%\"").unwrap(), Threshold::Coverage(0.3));
        assert!(t("\"lukewarm\"").is_err());
    }

    #[test]
    fn bad_values_are_config_errors() {
        let table = CalibrationTable::builtin();
        for text in [
            "[[tiers]]\nallocator = \"zfoo\"\ncodec = \"lz4\"\nmedia = \"dram\"\n",
            "[[tiers]]\nallocator = \"zbud\"\ncodec = \"lz4\"\nmedia = \"tape\"\n",
            "[workload]\nfootprint_mib = 3\n",
            "[model]\nkind = \"analytical\"\nknob = 1.5\n",
        ] {
            let err = ConfigFile::parse(text, "t")
                .and_then(|c| c.experiment(&table))
                .unwrap_err();
            assert_eq!(
                err.downcast_ref::<CliError>().map(|e| e.kind),
                Some(crate::ErrorKind::Config),
                "{text}: {err}"
            );
        }
    }

    #[test]
    fn missing_calibration_row_names_the_tier() {
        let text = "[[tiers]]\nallocator = \"z3fold\"\ncodec = \"lz4\"\nmedia = \"dram\"\n";
        let err = ConfigFile::parse(text, "t")
            .unwrap()
            .experiment(&CalibrationTable::builtin())
            .unwrap_err()
            .to_string();
        assert!(err.contains("Z3-L4-DR"), "{err}");
    }
}
