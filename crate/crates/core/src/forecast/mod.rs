//! Motif-guided mixture-of-experts forecasting: the model, its losses,
//! window annotation against a motif library, three-phase training and
//! in-repo baselines.

mod annotate;
mod baseline;
mod losses;
mod model;
mod train;

pub use annotate::{annotate_windows, phase_score, upsample_template, Annotation, Annotator};
pub use baseline::{naive_forecast, LinearBaseline};
pub use losses::{argmax_fractions, batch_mse, load_balance, loss_final, loss_gate, FinalLoss, GateLoss, PROB_FLOOR};
pub use model::{
    combine, softmax_rows, ForecasterModel, ForwardCache, GateCache, GateHeads, GateOutput, ModelConfig, OutputGrads,
};
pub use train::{
    batch_inputs, evaluate_mse, pretrain_embedder, route, train_end_to_end, train_gate, train_three_phase, EpochRecord,
    PhaseData, PhaseReport, TrainConfig, TrainingReport,
};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::series::{ChannelStats, WindowSample};

/// Forecast a single window, optionally mapping the result back to the
/// original units of `channel` with `stats`.
pub fn predict_window(
    model: &ForecasterModel,
    window: &[f64],
    destandardize: Option<(&ChannelStats, usize)>,
) -> Result<Vec<f64>> {
    if window.len() != model.config.lookback {
        return Err(Error::DimensionMismatch {
            expected: model.config.lookback,
            actual: window.len(),
        });
    }
    let x = Array2::from_shape_vec((1, window.len()), window.to_vec()).expect("row shape");
    let y = model.predict(&x)?.row(0).to_vec();
    Ok(match destandardize {
        Some((stats, channel)) => stats.inverse_values(channel, &y),
        None => y,
    })
}

/// Forecasts for many windows, evaluated `batch` windows at a time.
pub fn predict_samples(model: &ForecasterModel, samples: &[WindowSample], batch: usize) -> Result<Vec<Vec<f64>>> {
    let idx: Vec<usize> = (0..samples.len()).collect();
    let mut out = Vec::with_capacity(samples.len());
    for chunk in idx.chunks(batch.max(1)) {
        let (x, _) = batch_inputs(samples, chunk);
        out.extend(model.predict(&x)?.outer_iter().map(|row| row.to_vec()));
    }
    Ok(out)
}
