use std::path::{Path, PathBuf};

use log::{info, warn};
use motifcast_core::forecast::{annotate_windows, train_three_phase};
use motifcast_core::nn::write_checkpoint;
use motifcast_core::MotifLibrary;
use serde_json::{json, Map, Value};

use crate::config::RunConfig;
use crate::data::{self, Dataset};
use crate::output::{fail, slug, write_atomic, write_json, Classify, CmdResult, Kind};

pub fn read_library(path: &Path) -> CmdResult<MotifLibrary> {
    if !path.is_file() {
        return fail(Kind::Config, format!("library file not found: {}", path.display()));
    }
    let text = std::fs::read_to_string(path).or_data()?;
    MotifLibrary::from_json(&text).or_data().map_err(|mut f| {
        f.error = f.error.context(format!("invalid library {}", path.display()));
        f
    })
}

/// Channel names a library was mined from, as recorded at extraction.
fn library_channels(lib: &MotifLibrary, ds: &Dataset) -> CmdResult<Vec<usize>> {
    let recorded = lib
        .provenance
        .as_ref()
        .and_then(|p| p.get("channel_names"))
        .and_then(|v| serde_json::from_value::<Vec<String>>(v.clone()).ok());
    match recorded {
        Some(names) if !names.is_empty() => ds.members_by_name(&names),
        _ => match ds.names().iter().position(|n| *n == lib.subject) {
            Some(i) => Ok(vec![i]),
            None => fail(
                Kind::Data,
                format!("library '{}' does not record its channels", lib.subject),
            ),
        },
    }
}

pub fn run(cfg: &RunConfig, libraries: &[PathBuf]) -> CmdResult<()> {
    let ds = data::load(cfg)?;
    for path in libraries {
        let lib = read_library(path)?;
        train_one(cfg, &ds, &lib)?;
    }
    Ok(())
}

fn train_one(cfg: &RunConfig, ds: &Dataset, lib: &MotifLibrary) -> CmdResult<()> {
    let members = library_channels(lib, ds)?;
    let mut warnings = Vec::new();
    if lib.len() != cfg.k {
        let w = format!(
            "config k = {} but the library holds {} motifs; using {}",
            cfg.k,
            lib.len(),
            lib.len()
        );
        warn!("{}: {w}", lib.subject);
        warnings.push(w);
    }
    let stats = ds.member_stats(&members);
    let (l, h) = (cfg.lookback, cfg.horizon);
    let mut train = ds.windows(&members, &stats, l, h, cfg.stride, ds.train.clone())?;
    let mut val = ds.windows(&members, &stats, l, h, 1, ds.val.clone())?;
    annotate_windows(&mut train, lib).or_data()?;
    annotate_windows(&mut val, lib).or_data()?;
    let fallback = |s: &[motifcast_core::WindowSample]| {
        s.iter().filter(|w| w.annotation.is_some_and(|a| a.fallback)).count() as f64 / s.len() as f64
    };
    info!(
        "{}: {} train / {} val windows, K = {}, training...",
        lib.subject,
        train.len(),
        val.len(),
        lib.len()
    );
    let (model, report) = train_three_phase(&train, &val, lib.len(), &cfg.train_config()).or_data()?;
    info!(
        "{}: probe val MSE {:.5}, final val MSE {:.5}, gate val accuracy {:.3}",
        lib.subject, report.probe_val_mse, report.final_val_mse, report.gate_val_accuracy
    );

    let run_config = cfg.to_json().or_config()?;
    let names: Vec<&String> = members.iter().map(|&c| &ds.names()[c]).collect();
    let source: Vec<usize> = members.iter().map(|&c| ds.source_index[c]).collect();
    let mut manifest = Map::new();
    manifest.insert("run_config".into(), run_config.clone());
    manifest.insert("subject".into(), Value::String(lib.subject.clone()));
    manifest.insert("channels".into(), json!(source));
    manifest.insert("channel_names".into(), json!(names));
    manifest.insert("stats".into(), serde_json::to_value(&stats).or_data()?);
    manifest.insert("library_k".into(), json!(lib.len()));
    manifest.insert("warnings".into(), json!(warnings));
    let ckpt = model.to_checkpoint(manifest).or_data()?;
    let mut bytes = Vec::new();
    write_checkpoint(&mut bytes, &ckpt).or_data()?;

    let out = Path::new(&cfg.out_dir);
    let name = slug(&lib.subject);
    write_atomic(&out.join(format!("model_{name}.mckp")), &bytes)?;
    write_json(
        &out.join(format!("report_{name}.json")),
        &json!({
            "subject": lib.subject,
            "channel_names": names,
            "library_k": lib.len(),
            "warnings": warnings,
            "train_windows": train.len(),
            "val_windows": val.len(),
            "train_fallback_fraction": fallback(&train),
            "val_fallback_fraction": fallback(&val),
            "training": report,
            "run_config": run_config,
        }),
    )?;
    info!(
        "{}: wrote {}",
        lib.subject,
        out.join(format!("model_{name}.mckp")).display()
    );
    Ok(())
}
