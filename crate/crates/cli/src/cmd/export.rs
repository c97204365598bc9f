//! Plot data: motif spans from a library, or one forecast trace from a
//! predictions file. The artifact type is recognised from its content.

use std::path::Path;

use motifcast_core::MotifLibrary;
use serde_json::Value;

use crate::cmd::eval::Predictions;
use crate::output::{fail, write_atomic, Classify, CmdResult, Kind};

/// `(start, end, motif_id)` with `end` exclusive.
pub fn library_spans(lib: &MotifLibrary) -> Vec<(usize, usize, usize)> {
    let mut spans: Vec<_> = lib
        .motifs
        .iter()
        .flat_map(|m| m.occurrences.iter().map(move |o| (o.start, o.end(), m.id)))
        .collect();
    spans.sort_unstable();
    spans
}

/// `(t, truth, prediction)` for every step of one forecast.
pub fn prediction_triples(p: &Predictions, window: usize) -> CmdResult<Vec<(usize, f64, f64)>> {
    let Some(w) = p.windows.get(window) else {
        return fail(
            Kind::Config,
            format!(
                "window {window} out of range; the file holds {} forecasts",
                p.windows.len()
            ),
        );
    };
    Ok(w.truth
        .iter()
        .zip(&w.prediction)
        .enumerate()
        .map(|(j, (&t, &y))| (w.t_start + j, t, y))
        .collect())
}

pub fn run(input: &Path, out: &Path, window: usize) -> CmdResult<()> {
    if !input.is_file() {
        return fail(Kind::Config, format!("input artifact not found: {}", input.display()));
    }
    let text = std::fs::read_to_string(input).or_data()?;
    let value: Value = serde_json::from_str(&text).or_data()?;
    let mut w = csv::Writer::from_writer(Vec::new());
    if value.get("motifs").is_some() {
        let lib = MotifLibrary::from_json(&text).or_data()?;
        w.write_record(["start", "end", "motif_id"]).or_data()?;
        for span in library_spans(&lib) {
            w.serialize(span).or_data()?;
        }
    } else if value.get("windows").is_some() && value.get("horizon").is_some() {
        let p: Predictions = serde_json::from_value(value).or_data()?;
        w.write_record(["t", "truth", "prediction"]).or_data()?;
        for row in prediction_triples(&p, window)? {
            w.serialize(row).or_data()?;
        }
    } else {
        return fail(
            Kind::Data,
            format!("{} is neither a motif library nor a predictions file", input.display()),
        );
    }
    write_atomic(out, &w.into_inner().or_data()?)
}
