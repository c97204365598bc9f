//! Flat run configuration shared by every subcommand.
//!
//! The file format is TOML with one `key = value` line per field (see
//! `configs/default.toml`); the same struct serializes to JSON for the
//! config echo stored in artifacts, and both forms round-trip losslessly.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use motifcast_core::motif::{QualityWeights, SigmaMode};
use motifcast_core::nn::AdamWConfig;
use motifcast_core::{Band, ExtractConfig, SplitSpec, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    /// Chronological fractions `train_frac / val_frac / test_frac`.
    Ratio,
    /// 12/4/4 months of `steps_per_day * 30` rows, as in the ETT benchmarks.
    Calendar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    /// One library and one model per channel.
    Channel,
    /// Channels sharing their top `kdfh_k` frequency bins share a library
    /// and a model.
    Kdfh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaKind {
    NearestNeighbor,
    Median,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: String,
    pub date_column: String,
    /// Channel names to use; empty means all.
    pub channels: Vec<String>,
    pub split: SplitMode,
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_frac: f64,
    pub steps_per_day: usize,
    pub lookback: usize,
    pub horizon: usize,
    pub stride: usize,
    pub grouping: Grouping,
    pub kdfh_k: usize,

    pub detrend_window: usize,
    pub n_periods: usize,
    pub anchors_per_scale: usize,
    pub clusters_per_scale: usize,
    pub tau_s: f64,
    pub tau_g: f64,
    pub sigma_mode: SigmaKind,
    /// Neighbour rank for `sigma_mode = "nearest_neighbor"`.
    pub sigma_k: usize,
    /// Kernel scale for `sigma_mode = "fixed"`.
    pub sigma_value: f64,
    /// Sakoe-Chiba radius as a fraction of the longer sequence; 0 disables
    /// the band.
    pub band_fraction: f64,
    pub weight_saliency: f64,
    pub weight_prevalence: f64,
    pub weight_atomicity: f64,
    pub normalize_quality: bool,
    pub gamma_d: f64,
    pub k: usize,
    pub max_motif_points: usize,

    pub embed_dim: usize,
    pub separate_experts: bool,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub patience: usize,
    pub max_epochs: usize,
    pub alpha_pos: f64,
    pub gamma: f64,
    pub clip_norm: f64,
    pub seed: u64,

    pub out_dir: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        let e = ExtractConfig::default();
        let t = TrainConfig::default();
        let s = SplitSpec::default();
        let (sigma_mode, sigma_k, sigma_value) = match e.sigma {
            SigmaMode::NearestNeighbor { k } => (SigmaKind::NearestNeighbor, k, 1.0),
            SigmaMode::Median => (SigmaKind::Median, 7, 1.0),
            SigmaMode::Fixed(v) => (SigmaKind::Fixed, 7, v),
        };
        let band_fraction = match e.band {
            Band::Fraction(f) => f,
            _ => 0.0,
        };
        Self {
            data: String::new(),
            date_column: "date".into(),
            channels: Vec::new(),
            split: SplitMode::Ratio,
            train_frac: s.train,
            val_frac: s.val,
            test_frac: s.test,
            steps_per_day: 24,
            lookback: 96,
            horizon: 96,
            stride: 1,
            grouping: Grouping::Channel,
            kdfh_k: 3,
            detrend_window: e.detrend_window,
            n_periods: e.n_periods,
            anchors_per_scale: e.anchors_per_scale,
            clusters_per_scale: e.clusters_per_scale,
            tau_s: e.tau_s,
            tau_g: e.tau_g,
            sigma_mode,
            sigma_k,
            sigma_value,
            band_fraction,
            weight_saliency: e.weights.saliency,
            weight_prevalence: e.weights.prevalence,
            weight_atomicity: e.weights.atomicity,
            normalize_quality: e.normalize_quality,
            gamma_d: e.gamma_d,
            k: e.k,
            max_motif_points: e.max_motif_points,
            embed_dim: t.embed_dim,
            separate_experts: t.separate_experts,
            learning_rate: t.learning_rate,
            weight_decay: t.optimizer.weight_decay,
            batch_size: t.batch_size,
            patience: t.patience,
            max_epochs: t.max_epochs,
            alpha_pos: t.alpha_pos,
            gamma: t.gamma,
            clip_norm: t.clip_norm,
            seed: t.seed,
            out_dir: "runs/default".into(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn to_json(&self) -> Result<serde_json::Value> {
        Ok(serde_json::to_value(self)?)
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        Ok(serde_json::from_value(value.clone())?)
    }

    /// Every field name, sorted.
    pub fn keys() -> Vec<String> {
        match serde_json::to_value(Self::default()) {
            Ok(serde_json::Value::Object(map)) => map.keys().cloned().collect(),
            _ => unreachable!("RunConfig serializes to an object"),
        }
    }

    /// Replace one field, given as `key` and a TOML literal. Bare words that
    /// do not parse as TOML are taken as strings, and as comma-separated
    /// strings for list fields.
    pub fn set(&mut self, key: &str, raw: &str) -> Result<()> {
        let mut table = toml::Table::try_from(&*self)?;
        let Some(current) = table.get(key) else {
            bail!("unknown config key '{key}'");
        };
        let parsed = toml::from_str::<toml::Table>(&format!("v = {raw}"))
            .ok()
            .and_then(|mut t| t.remove("v"));
        let value = match (parsed, current.is_array()) {
            (Some(v), false) => v,
            (Some(v @ toml::Value::Array(_)), true) => v,
            (_, true) => toml::Value::Array(
                raw.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| toml::Value::String(s.to_string()))
                    .collect(),
            ),
            (None, false) => toml::Value::String(raw.to_string()),
        };
        table.insert(key.to_string(), value);
        *self = table
            .try_into()
            .with_context(|| format!("bad value for '{key}': {raw}"))?;
        Ok(())
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            train: self.train_frac,
            val: self.val_frac,
            test: self.test_frac,
        }
    }

    pub fn extract_config(&self) -> ExtractConfig {
        ExtractConfig {
            detrend_window: self.detrend_window,
            n_periods: self.n_periods,
            anchors_per_scale: self.anchors_per_scale,
            clusters_per_scale: self.clusters_per_scale,
            tau_s: self.tau_s,
            tau_g: self.tau_g,
            sigma: match self.sigma_mode {
                SigmaKind::NearestNeighbor => SigmaMode::NearestNeighbor { k: self.sigma_k },
                SigmaKind::Median => SigmaMode::Median,
                SigmaKind::Fixed => SigmaMode::Fixed(self.sigma_value),
            },
            band: if self.band_fraction > 0.0 {
                Band::Fraction(self.band_fraction)
            } else {
                Band::Full
            },
            weights: QualityWeights {
                saliency: self.weight_saliency,
                prevalence: self.weight_prevalence,
                atomicity: self.weight_atomicity,
            },
            normalize_quality: self.normalize_quality,
            gamma_d: self.gamma_d,
            k: self.k,
            max_motif_points: self.max_motif_points,
            seed: self.seed,
            ..ExtractConfig::default()
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            embed_dim: self.embed_dim,
            separate_experts: self.separate_experts,
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            patience: self.patience,
            max_epochs: self.max_epochs,
            alpha_pos: self.alpha_pos,
            gamma: self.gamma,
            clip_norm: self.clip_norm,
            optimizer: AdamWConfig {
                weight_decay: self.weight_decay,
                ..AdamWConfig::default()
            },
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lookback == 0 || self.horizon == 0 || self.stride == 0 {
            bail!("lookback, horizon and stride must be positive");
        }
        if self.split == SplitMode::Ratio {
            self.split_spec().validate()?;
        } else if self.steps_per_day == 0 {
            bail!("steps_per_day must be positive for the calendar split");
        }
        if self.grouping == Grouping::Kdfh && self.kdfh_k == 0 {
            bail!("kdfh_k must be positive");
        }
        if !(self.band_fraction >= 0.0) {
            bail!("band_fraction must be non-negative");
        }
        self.extract_config().validate()?;
        self.train_config().validate()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_carry_the_published_hyperparameters() {
        let c = RunConfig::default();
        assert_eq!((c.k, c.embed_dim, c.batch_size, c.patience), (10, 256, 256, 7));
        assert_eq!((c.tau_s, c.tau_g, c.gamma_d), (0.7, 0.8, 2.0));
        assert_eq!((c.learning_rate, c.alpha_pos, c.gamma), (1e-3, 1.0, 0.1));
        assert_eq!(
            (c.weight_saliency, c.weight_prevalence, c.weight_atomicity),
            (0.6, 0.2, 0.2)
        );
        assert_eq!((c.n_periods, c.clusters_per_scale), (10, 10));
        c.validate().unwrap();
    }

    #[test]
    fn bundled_config_file_matches_defaults() {
        let text = include_str!("../../../configs/default.toml");
        assert_eq!(RunConfig::from_toml(text).unwrap(), RunConfig::default());
    }

    #[test]
    fn keys_cover_every_field() {
        let keys = RunConfig::keys();
        assert_eq!(keys.len(), 42);
        assert!(keys.windows(2).all(|w| w[0] < w[1]));
        assert!(keys.iter().any(|k| k == "sigma_mode") && keys.iter().any(|k| k == "out_dir"));
    }

    #[test]
    fn toml_and_json_round_trip() {
        let c = RunConfig {
            data: "some/file.csv".into(),
            channels: vec!["OT".into(), "HUFL".into()],
            sigma_mode: SigmaKind::Fixed,
            sigma_value: 0.1 + 0.2,
            learning_rate: 3.3e-4,
            seed: u32::MAX as u64 + 5,
            ..RunConfig::default()
        };
        assert_eq!(RunConfig::from_toml(&c.to_toml().unwrap()).unwrap(), c);
        assert_eq!(RunConfig::from_json(&c.to_json().unwrap()).unwrap(), c);
    }

    #[test]
    fn overrides_parse_toml_literals() {
        let mut c = RunConfig::default();
        c.set("k", "4").unwrap();
        c.set("data", "x.csv").unwrap();
        c.set("tau_g", "0.85").unwrap();
        c.set("learning_rate", "1").unwrap();
        c.set("channels", "[\"a\", \"b\"]").unwrap();
        c.set("grouping", "kdfh").unwrap();
        assert_eq!(c.k, 4);
        assert_eq!(c.data, "x.csv");
        assert_eq!(c.tau_g, 0.85);
        assert_eq!(c.learning_rate, 1.0);
        assert_eq!(c.channels, ["a", "b"]);
        assert_eq!(c.grouping, Grouping::Kdfh);
        c.set("channels", "OT, HUFL").unwrap();
        assert_eq!(c.channels, ["OT", "HUFL"]);
        c.set("channels", "OT").unwrap();
        assert_eq!(c.channels, ["OT"]);
        assert!(c.set("nope", "1").is_err());
        assert!(c.set("k", "\"four\"").is_err());
        assert!(RunConfig::from_toml("unknown_key = 3").is_err());
    }
}
