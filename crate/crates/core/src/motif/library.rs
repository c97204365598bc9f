use serde::{Deserialize, Serialize};

use super::{ExtractConfig, Occurrence, QualityBreakdown};
use crate::dtw::{Band, SimilarityConfig};
use crate::error::{Error, Result};
use crate::spectral::PeriodSet;

/// Bumped whenever the serialized layout changes incompatibly.
pub const LIBRARY_FORMAT_VERSION: u32 = 1;

/// A selected dominant motif.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Motif {
    /// Position in selection order, `0..K`.
    pub id: usize,
    /// Template at the resolution it was found at.
    pub values: Vec<f64>,
    /// Span in full-resolution steps.
    pub scale: usize,
    /// Downsampling factor of `values`.
    pub resolution: usize,
    pub period: usize,
    /// Sorted, deduplicated full-resolution occurrences.
    pub occurrences: Vec<Occurrence>,
    pub support: usize,
    pub quality: QualityBreakdown,
    /// Benefit in the round this motif was picked.
    pub benefit: f64,
    /// Index into the refined (post-prototype) candidate set.
    pub refined_index: usize,
}

/// Benefits of all refined candidates in one greedy round; `None` marks
/// candidates selected in earlier rounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRound {
    pub selected: usize,
    pub benefits: Vec<Option<f64>>,
}

/// Dominant motifs of one channel plus everything needed to replay the
/// extraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotifLibrary {
    pub format_version: u32,
    /// Name of the channel (or channel group) the library was mined from.
    pub subject: String,
    /// Source channel indices; more than one under frequency-hash grouping.
    pub channels: Vec<usize>,
    pub series_length: usize,
    pub config: ExtractConfig,
    /// Kernel scale actually used (resolved when the config asks for a
    /// data-driven heuristic).
    pub sigma: f64,
    pub band: Band,
    pub periods: PeriodSet,
    pub candidate_count: usize,
    pub refined_count: usize,
    pub motifs: Vec<Motif>,
    pub selection_trace: Vec<SelectionRound>,
    pub warnings: Vec<String>,
    /// Caller-supplied record of how the input series was prepared.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<serde_json::Value>,
}

impl MotifLibrary {
    pub fn len(&self) -> usize {
        self.motifs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.motifs.is_empty()
    }

    /// Similarity settings the library was built with.
    pub fn similarity(&self) -> SimilarityConfig {
        SimilarityConfig {
            sigma: self.sigma,
            band: self.band,
            z_normalize: self.config.z_normalize,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let lib: MotifLibrary = serde_json::from_str(text)?;
        if lib.format_version != LIBRARY_FORMAT_VERSION {
            return Err(Error::Serialization(format!(
                "library format version {} is not supported (expected {LIBRARY_FORMAT_VERSION})",
                lib.format_version
            )));
        }
        lib.validate()?;
        Ok(lib)
    }

    /// Structural checks applied to libraries read from disk.
    pub fn validate(&self) -> Result<()> {
        if self.motifs.is_empty() {
            return Err(Error::invalid("library holds no motifs"));
        }
        self.similarity().validate()?;
        for (i, m) in self.motifs.iter().enumerate() {
            if m.id != i {
                return Err(Error::invalid(format!("motif {i} carries id {}", m.id)));
            }
            if m.values.len() < 2 || m.resolution == 0 || m.occurrences.is_empty() {
                return Err(Error::invalid(format!("motif {i} is malformed")));
            }
            if m.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("motif {i} values")));
            }
            if m.occurrences.iter().any(|o| o.end() > self.series_length) {
                return Err(Error::invalid(format!(
                    "motif {i} has an occurrence past the series end"
                )));
            }
        }
        Ok(())
    }
}
