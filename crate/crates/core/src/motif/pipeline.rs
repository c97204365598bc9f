use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::discovery::{cluster_and_medoid, density_scores, sample_anchors, top_centroids, ClusterParams};
use super::graph::{connected_components, select_prototypes, SimilarityGraph};
use super::library::{Motif, MotifLibrary, SelectionRound, LIBRARY_FORMAT_VERSION};
use super::selection::{normalize_quality, quality, select_dominant, QualityWeights};
use super::CandidateMotif;
use crate::dtw::{
    is_constant, median_sigma, nearest_neighbor_sigma, pairwise_distances, similarity_from_distance, Band,
    SimilarityConfig,
};
use crate::error::{Error, Result};
use crate::series::{detrend_channel, downsample_channel};
use crate::spectral::{amplitude_spectrum, dominant_periods};

/// How the similarity kernel scale is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaMode {
    /// Median of pairwise distances among the pooled candidates.
    Median,
    /// Median over candidates of the distance to their `k`-th nearest
    /// neighbour; tracks the spacing of near-duplicates rather than of the
    /// whole pool.
    NearestNeighbor {
        k: usize,
    },
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractConfig {
    pub detrend_window: usize,
    pub n_periods: usize,
    pub anchors_per_scale: usize,
    pub clusters_per_scale: usize,
    pub tau_s: f64,
    pub tau_g: f64,
    pub sigma: SigmaMode,
    pub band: Band,
    pub z_normalize: bool,
    pub weights: QualityWeights,
    pub normalize_quality: bool,
    pub gamma_d: f64,
    pub k: usize,
    /// Downsampling keeps each motif at or below this many points.
    pub max_motif_points: usize,
    /// Enumeration stride is `motif_len / stride_divisor` (at least 1).
    pub stride_divisor: usize,
    pub medoid_max_members: usize,
    pub min_benefit: f64,
    pub seed: u64,
    /// Cluster the detrended series instead of the raw one. Periods are
    /// always detected on the detrended series.
    pub cluster_on_detrended: bool,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        Self {
            detrend_window: 25,
            n_periods: 10,
            anchors_per_scale: 64,
            clusters_per_scale: 10,
            tau_s: 0.7,
            tau_g: 0.8,
            sigma: SigmaMode::NearestNeighbor { k: 7 },
            band: Band::Fraction(0.1),
            z_normalize: true,
            weights: QualityWeights::default(),
            normalize_quality: true,
            gamma_d: 2.0,
            k: 10,
            max_motif_points: 48,
            stride_divisor: 4,
            medoid_max_members: 256,
            min_benefit: 1e-9,
            seed: 0,
            cluster_on_detrended: false,
        }
    }
}

impl ExtractConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(Error::invalid(msg)) };
        check(self.detrend_window % 2 == 1, "detrend_window must be odd")?;
        check(self.n_periods >= 1, "n_periods must be at least 1")?;
        check(self.anchors_per_scale >= 2, "anchors_per_scale must be at least 2")?;
        check(self.clusters_per_scale >= 1, "clusters_per_scale must be at least 1")?;
        check((-1.0..=1.0).contains(&self.tau_s), "tau_s must lie in [-1, 1]")?;
        check((0.0..=1.0).contains(&self.tau_g), "tau_g must lie in [0, 1]")?;
        match self.sigma {
            SigmaMode::Fixed(s) => check(s > 0.0 && s.is_finite(), "fixed sigma must be positive")?,
            SigmaMode::NearestNeighbor { k } => check(k >= 1, "nearest-neighbour sigma needs k >= 1")?,
            SigmaMode::Median => {}
        }
        let w = &self.weights;
        check(
            w.saliency >= 0.0 && w.prevalence >= 0.0 && w.atomicity >= 0.0,
            "quality weights must be non-negative",
        )?;
        check(self.gamma_d >= 0.0, "gamma_d must be non-negative")?;
        check(self.k >= 1, "k must be at least 1")?;
        check(self.max_motif_points >= 2, "max_motif_points must be at least 2")?;
        check(self.stride_divisor >= 1, "stride_divisor must be at least 1")?;
        check(self.medoid_max_members >= 1, "medoid_max_members must be at least 1")?;
        SimilarityConfig {
            sigma: 1.0,
            band: self.band,
            z_normalize: self.z_normalize,
        }
        .validate()
    }

    /// Downsampling factor for a period.
    pub fn resolution_for(&self, period: usize) -> usize {
        period.div_ceil(self.max_motif_points).max(1)
    }
}

fn scale_seed(seed: u64, period: usize) -> u64 {
    seed ^ (period as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn discover_at_period(source: &[f64], period: usize, config: &ExtractConfig) -> Result<Vec<CandidateMotif>> {
    let resolution = config.resolution_for(period);
    let reduced = downsample_channel(source, resolution)?;
    let len = ((period as f64 / resolution as f64).round() as usize).max(2);
    if reduced.len() < len + 1 {
        return Ok(Vec::new());
    }
    let mut anchors = sample_anchors(&reduced, len, config.anchors_per_scale, scale_seed(config.seed, period))?;
    density_scores(&mut anchors, config.tau_s);
    let centroids = top_centroids(&anchors, config.clusters_per_scale);
    let params = ClusterParams {
        stride: (len / config.stride_divisor).max(1),
        resolution,
        period,
        medoid_max_members: config.medoid_max_members,
        similarity: SimilarityConfig {
            sigma: 1.0,
            band: config.band,
            z_normalize: config.z_normalize,
        },
    };
    cluster_and_medoid(&reduced, len, &centroids, &params)
}

/// Mine the dominant motif library of one channel.
///
/// The returned library has an empty `subject` and `channels`; callers
/// that know where the series came from fill those in.
pub fn extract_motifs(values: &[f64], config: &ExtractConfig) -> Result<MotifLibrary> {
    config.validate()?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("extraction input".into()));
    }
    let mut warnings = Vec::new();
    let detrended = detrend_channel(values, config.detrend_window)?;
    let periods = dominant_periods(&amplitude_spectrum(&detrended)?, config.n_periods)?;
    let source = if config.cluster_on_detrended {
        &detrended
    } else {
        values
    };

    let per_scale = periods
        .periods
        .par_iter()
        .map(|&p| discover_at_period(source, p, config))
        .collect::<Result<Vec<_>>>()?;
    let candidates: Vec<CandidateMotif> = per_scale.into_iter().flatten().collect();
    if candidates.is_empty() {
        return Err(Error::invalid("no candidate motifs at any detected period"));
    }
    let flat = candidates.iter().filter(|c| is_constant(&c.values)).count();
    if flat > 0 && config.z_normalize {
        warnings.push(format!("{flat} constant candidate(s) compared as zero vectors"));
    }

    let mut similarity = SimilarityConfig {
        sigma: 1.0,
        band: config.band,
        z_normalize: config.z_normalize,
    };
    let seqs: Vec<Vec<f64>> = candidates.iter().map(|c| c.values.clone()).collect();
    let distances = pairwise_distances(&seqs, &similarity)?;
    similarity.sigma = match config.sigma {
        SigmaMode::Median => median_sigma(&distances),
        SigmaMode::NearestNeighbor { k } => nearest_neighbor_sigma(&distances, k),
        SigmaMode::Fixed(s) => s,
    };
    let sim: Vec<Vec<f64>> = distances
        .iter()
        .map(|row| {
            row.iter()
                .map(|&d| similarity_from_distance(d, similarity.sigma))
                .collect()
        })
        .collect();

    let graph = SimilarityGraph::from_similarity(&sim, config.tau_g);
    let components = connected_components(&graph);
    let refined = select_prototypes(&components, &candidates, &sim);

    let raw = refined.iter().map(|(_, c)| quality(c)).collect::<Result<Vec<_>>>()?;
    let breakdown = normalize_quality(&raw, &config.weights, config.normalize_quality);
    let totals: Vec<f64> = breakdown.iter().map(|b| b.total).collect();
    let occurrences: Vec<_> = refined.iter().map(|(_, c)| c.occurrences.clone()).collect();
    let refined_sim: Vec<Vec<f64>> = refined
        .iter()
        .map(|&(i, _)| refined.iter().map(|&(j, _)| sim[i][j]).collect())
        .collect();
    let selection = select_dominant(
        &totals,
        &occurrences,
        &refined_sim,
        config.k,
        config.gamma_d,
        config.min_benefit,
    )?;
    if selection.order.len() < config.k {
        warnings.push(format!(
            "selected {} of {} requested motifs",
            selection.order.len(),
            config.k
        ));
    }

    let motifs = selection
        .order
        .iter()
        .zip(&selection.benefits)
        .enumerate()
        .map(|(id, (&r, &benefit))| {
            let c = &refined[r].1;
            Motif {
                id,
                values: c.values.clone(),
                scale: c.scale,
                resolution: c.resolution,
                period: c.period,
                occurrences: c.occurrences.clone(),
                support: c.cluster_support,
                quality: breakdown[r],
                benefit,
                refined_index: r,
            }
        })
        .collect();
    let selection_trace = selection
        .order
        .iter()
        .zip(selection.rounds)
        .map(|(&selected, benefits)| SelectionRound { selected, benefits })
        .collect();

    Ok(MotifLibrary {
        format_version: LIBRARY_FORMAT_VERSION,
        subject: String::new(),
        channels: Vec::new(),
        series_length: values.len(),
        config: config.clone(),
        sigma: similarity.sigma,
        band: config.band,
        periods,
        candidate_count: candidates.len(),
        refined_count: refined.len(),
        motifs,
        selection_trace,
        warnings,
        provenance: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two_regime(seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..2000)
            .map(|t| {
                let base = if t < 1000 {
                    (2.0 * std::f64::consts::PI * t as f64 / 24.0).sin()
                } else {
                    ((t % 36) as f64 / 36.0 - 0.5) * 3.0
                };
                base + 0.05 * rng.random_range(-1.0..1.0)
            })
            .collect()
    }

    #[test]
    fn resolution_keeps_motifs_short() {
        let c = ExtractConfig::default();
        assert_eq!(c.resolution_for(24), 1);
        assert_eq!(c.resolution_for(48), 1);
        assert_eq!(c.resolution_for(49), 2);
        assert_eq!(c.resolution_for(1000), 21);
    }

    #[test]
    fn config_rejects_bad_values() {
        let bad = ExtractConfig {
            detrend_window: 24,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = ExtractConfig {
            sigma: SigmaMode::Fixed(0.0),
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn library_is_well_formed_and_deterministic() {
        let s = two_regime(3);
        let config = ExtractConfig::default();
        let a = extract_motifs(&s, &config).unwrap();
        let b = extract_motifs(&s, &config).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        assert!(!a.is_empty() && a.len() <= config.k);
        assert!(a.refined_count <= a.candidate_count);
        a.validate().unwrap();
        let back = MotifLibrary::from_json(&a.to_json().unwrap()).unwrap();
        assert_eq!(back, a);
        // Each pick was the strict round maximum with lowest-index ties.
        for round in &a.selection_trace {
            let b = round.benefits[round.selected].unwrap();
            for (i, v) in round.benefits.iter().enumerate() {
                if let Some(v) = v {
                    assert!(*v < b || (*v == b && i >= round.selected));
                }
            }
        }
    }

    #[test]
    fn white_noise_completes() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s: Vec<f64> = (0..1500).map(|_| rng.random_range(-1.0..1.0)).collect();
        let lib = extract_motifs(&s, &ExtractConfig::default()).unwrap();
        assert!(!lib.is_empty());
        assert!(lib.motifs.iter().all(|m| m.quality.total.is_finite()));
    }

    #[test]
    fn rejects_other_versions() {
        let lib = extract_motifs(&two_regime(1), &ExtractConfig::default()).unwrap();
        let text = lib
            .to_json()
            .unwrap()
            .replacen("\"format_version\": 1", "\"format_version\": 99", 1);
        assert!(MotifLibrary::from_json(&text).is_err());
    }
}
