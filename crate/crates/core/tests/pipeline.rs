//! Library-level pipeline: extraction, serialization, annotation, training
//! and checkpoint round trips through the public API only.

use motifcast_core::forecast::{annotate_windows, predict_samples, train_three_phase};
use motifcast_core::nn::{read_checkpoint, write_checkpoint};
use motifcast_core::series::channel_windows;
use motifcast_core::synth::{two_regime_series, TwoRegimeConfig};
use motifcast_core::{extract_motifs, ExtractConfig, ForecasterModel, MotifLibrary, TrainConfig};

fn fixture() -> Vec<f64> {
    two_regime_series(&TwoRegimeConfig {
        length: 2000,
        seed: 3,
        ..TwoRegimeConfig::default()
    })
    .unwrap()
    .series
}

fn small_library(values: &[f64]) -> MotifLibrary {
    let cfg = ExtractConfig {
        k: 2,
        ..ExtractConfig::default()
    };
    extract_motifs(values, &cfg).unwrap()
}

#[test]
fn extraction_is_reproducible_and_survives_json() {
    let values = fixture();
    let lib = small_library(&values);
    assert_eq!(lib.len(), 2);
    assert!(lib.periods.periods.iter().any(|&p| p == 24 || p == 36));
    for m in &lib.motifs {
        assert!(!m.occurrences.is_empty());
        assert!(m.occurrences.iter().all(|o| o.end() <= values.len()));
    }
    let text = lib.to_json().unwrap();
    assert_eq!(small_library(&values).to_json().unwrap(), text);
    assert_eq!(MotifLibrary::from_json(&text).unwrap().to_json().unwrap(), text);
}

#[test]
fn trained_model_round_trips_through_a_checkpoint() {
    let values = fixture();
    let lib = small_library(&values);
    let (l, h) = (32, 16);
    let mut train = channel_windows(&values, 0, l, h, 4, 0..1600).unwrap();
    let mut val = channel_windows(&values, 0, l, h, 4, 1600..2000).unwrap();
    annotate_windows(&mut train, &lib).unwrap();
    annotate_windows(&mut val, &lib).unwrap();
    assert!(train
        .iter()
        .chain(&val)
        .all(|w| w.annotation.is_some_and(|a| a.y_class < 2)));

    let cfg = TrainConfig {
        embed_dim: 8,
        batch_size: 32,
        max_epochs: 3,
        ..TrainConfig::default()
    };
    let (model, report) = train_three_phase(&train, &val, lib.len(), &cfg).unwrap();
    assert_eq!(report.phases.len(), 3);
    assert!(report.final_val_mse.is_finite());
    let sum: f64 = report.expert_utilization.iter().sum();
    assert!((sum - 1.0).abs() < 1e-12);

    let mut bytes = Vec::new();
    write_checkpoint(&mut bytes, &model.to_checkpoint(serde_json::Map::new()).unwrap()).unwrap();
    let restored = ForecasterModel::from_checkpoint(&read_checkpoint(bytes.as_slice()).unwrap()).unwrap();
    assert_eq!(
        predict_samples(&model, &val, 17).unwrap(),
        predict_samples(&restored, &val, 64).unwrap()
    );
}
