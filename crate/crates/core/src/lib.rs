//! Contextual motif mining and motif-guided mixture-of-experts forecasting.
//!
//! The crate is organised bottom-up:
//!
//! * [`series`] and [`metrics`]: data model, CSV ingestion, splits,
//!   normalization, windowing and error metrics.
//! * [`spectral`]: amplitude spectra and dominant periods.
//! * [`dtw`]: DTW distance, the Gaussian-kernel similarity and Pearson
//!   correlation.
//! * [`motif`]: the multi-scale extraction cascade producing a
//!   [`MotifLibrary`].
//! * [`nn`]: dense layers, layer norm, AdamW and checkpoints.
//! * [`forecast`]: the gated forecaster, annotation and training.
//! * [`synth`]: planted-motif fixtures used by tests and the CLI.

pub mod dtw;
pub mod error;
pub mod forecast;
pub mod metrics;
pub mod motif;
pub mod nn;
pub mod series;
pub mod spectral;
pub mod synth;

pub use dtw::{dtw_distance, dtw_similarity, pearson, Band, SimilarityConfig};
pub use error::{Error, Result};
pub use forecast::{Annotation, ForecasterModel, ModelConfig, TrainConfig, TrainingReport};
pub use metrics::{mae, mse};
pub use motif::{extract_motifs, ExtractConfig, Motif, MotifLibrary};
pub use series::{ChannelStats, MultivariateSeries, SplitSpec, WindowSample};
