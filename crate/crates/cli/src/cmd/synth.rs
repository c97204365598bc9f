use std::path::Path;

use clap::ValueEnum;
use motifcast_core::synth::{episode_series, two_regime_series, EpisodeConfig, TwoRegimeConfig};
use serde_json::json;

use crate::output::{write_atomic, write_json, Classify, CmdResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FixtureKind {
    /// One template tiled over each half of the series.
    TwoRegime,
    /// Template episodes followed by template-dependent ramps.
    Episodes,
}

/// `x.csv` with columns `date,value` (integer time index), plus
/// `x.truth.json` holding the planted structure.
pub fn run(kind: FixtureKind, seed: u64, length: usize, out: &Path) -> CmdResult<()> {
    let (values, truth) = match kind {
        FixtureKind::TwoRegime => {
            let cfg = TwoRegimeConfig {
                length,
                seed,
                ..TwoRegimeConfig::default()
            };
            let f = two_regime_series(&cfg).or_config()?;
            let truth = json!({
                "kind": "two_regime",
                "config": cfg,
                "template_a": f.template_a,
                "template_b": f.template_b,
            });
            (f.series, truth)
        }
        FixtureKind::Episodes => {
            let cfg = EpisodeConfig {
                length,
                seed,
                ..EpisodeConfig::default()
            };
            let f = episode_series(&cfg).or_config()?;
            let truth = json!({
                "kind": "episodes",
                "config": cfg,
                "episodes": f.episodes,
            });
            (f.series, truth)
        }
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["date", "value"]).or_data()?;
    for (t, v) in values.iter().enumerate() {
        w.serialize((t, v)).or_data()?;
    }
    write_atomic(out, &w.into_inner().or_data()?)?;
    write_json(&out.with_extension("truth.json"), &truth)
}
