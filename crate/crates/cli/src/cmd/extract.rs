use std::path::Path;

use log::info;
use motifcast_core::extract_motifs;
use serde_json::json;

use crate::config::RunConfig;
use crate::data;
use crate::output::{slug, write_atomic, Classify, CmdResult};

/// One library per subject, written to `<out_dir>/library_<subject>.json`.
pub fn run(cfg: &RunConfig) -> CmdResult<()> {
    let ds = data::load(cfg)?;
    let subjects = ds.subjects(cfg)?;
    let extract_cfg = cfg.extract_config();
    let run_config = cfg.to_json().or_config()?;
    for subject in &subjects {
        let values = ds.extraction_input(subject);
        let mut lib = extract_motifs(&values, &extract_cfg).or_data()?;
        lib.subject = subject.name.clone();
        lib.channels = subject.members.iter().map(|&c| ds.source_index[c]).collect();
        let names: Vec<&String> = subject.members.iter().map(|&c| &ds.names()[c]).collect();
        lib.provenance = Some(json!({
            "run_config": run_config,
            "channel_names": names,
            "train_range": [ds.train.start, ds.train.end],
            "input": if subject.members.len() == 1 {
                "standardized training values"
            } else {
                "mean of the members' standardized training values"
            },
        }));
        for w in &lib.warnings {
            log::warn!("{}: {w}", subject.name);
        }
        let path = Path::new(&cfg.out_dir).join(format!("library_{}.json", slug(&subject.name)));
        let mut text = lib.to_json().or_data()?;
        text.push('\n');
        write_atomic(&path, text.as_bytes())?;
        info!(
            "{}: {} motifs from {} candidates (sigma {:.4}) -> {}",
            subject.name,
            lib.len(),
            lib.candidate_count,
            lib.sigma,
            path.display()
        );
    }
    Ok(())
}
