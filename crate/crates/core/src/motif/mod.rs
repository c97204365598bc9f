//! Dominant contextual motif mining.
//!
//! The cascade runs per channel: detrend and find dominant periods, then
//! at every period scale sample anchors, score them by correlation
//! density, cluster all subsequences around the densest anchors and keep
//! each cluster's DTW medoid. The pooled medoids are de-duplicated across
//! scales through a thresholded similarity graph (one prototype per
//! connected component) and the library is filled greedily by
//! quality x marginal coverage x marginal diversity.

mod discovery;
mod graph;
mod library;
mod pipeline;
mod selection;

pub use discovery::{
    cluster_and_medoid, density_scores, medoid_index, sample_anchors, top_centroids, Anchor, ClusterParams,
};
pub use graph::{build_similarity_graph, connected_components, select_prototypes, similarity_matrix, SimilarityGraph};
pub use library::{Motif, MotifLibrary, SelectionRound, LIBRARY_FORMAT_VERSION};
pub use pipeline::{extract_motifs, ExtractConfig, SigmaMode};
pub use selection::{
    marginal_coverage, marginal_diversity, normalize_quality, quality, select_dominant, Footprint, QualityBreakdown,
    QualityComponents, QualityWeights, Selection,
};

use serde::{Deserialize, Serialize};

/// One appearance of a pattern in the full-resolution series,
/// covering `[start, start + len)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Occurrence {
    pub start: usize,
    pub len: usize,
}

impl Occurrence {
    pub fn end(&self) -> usize {
        self.start + self.len
    }
}

/// A cluster medoid, or after redundancy filtering a component prototype.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateMotif {
    /// Values at the downsampled resolution the pattern was found at.
    pub values: Vec<f64>,
    /// Span in full-resolution steps.
    pub scale: usize,
    /// Downsampling factor of `values`.
    pub resolution: usize,
    /// Dominant period that produced this scale.
    pub period: usize,
    /// Number of subsequences behind this candidate.
    pub cluster_support: usize,
    pub occurrences: Vec<Occurrence>,
}
