use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CandidateMotif, Occurrence};
use crate::dtw::{dtw_distance, is_constant, pearson, z_normalize, SimilarityConfig};
use crate::error::{Error, Result};

/// A randomly sampled subsequence used as a clustering seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub start_index: usize,
    pub scale: usize,
    pub values: Vec<f64>,
    pub density: f64,
}

/// Draw up to `n_anchors` distinct start positions uniformly without
/// replacement. Returned in ascending start order.
pub fn sample_anchors(series: &[f64], scale: usize, n_anchors: usize, seed: u64) -> Result<Vec<Anchor>> {
    if scale == 0 || series.len() < scale {
        return Err(Error::invalid(format!(
            "series of length {} is shorter than scale {scale}",
            series.len()
        )));
    }
    if n_anchors < 2 {
        return Err(Error::invalid("need at least two anchors"));
    }
    let positions = series.len() - scale + 1;
    let count = n_anchors.min(positions);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts = rand::seq::index::sample(&mut rng, positions, count).into_vec();
    starts.sort_unstable();
    Ok(starts
        .into_iter()
        .map(|s| Anchor {
            start_index: s,
            scale,
            values: series[s..s + scale].to_vec(),
            density: 0.0,
        })
        .collect())
}

/// Correlation density `rho_i = sum_j R_ij * [R_ij > tau_s]`, self included.
/// Anchors with no variance get `rho = 1`.
pub fn density_scores(anchors: &mut [Anchor], tau_s: f64) {
    let n = anchors.len();
    let flat: Vec<bool> = anchors.iter().map(|a| is_constant(&a.values)).collect();
    let mut rho = vec![0.0; n];
    for i in 0..n {
        if flat[i] {
            rho[i] = 1.0;
            continue;
        }
        if 1.0 > tau_s {
            rho[i] += 1.0;
        }
        for j in i + 1..n {
            if flat[j] {
                continue;
            }
            let r = pearson(&anchors[i].values, &anchors[j].values).unwrap_or(0.0);
            if r > tau_s {
                rho[i] += r;
                rho[j] += r;
            }
        }
    }
    for (a, r) in anchors.iter_mut().zip(rho) {
        a.density = r;
    }
}

/// The `n` densest anchors, ties broken by earlier start.
pub fn top_centroids(anchors: &[Anchor], n: usize) -> Vec<Anchor> {
    let mut sorted = anchors.to_vec();
    sorted.sort_by(|a, b| b.density.total_cmp(&a.density).then(a.start_index.cmp(&b.start_index)));
    sorted.truncate(n);
    sorted
}

/// Index of the member with minimum mean DTW distance to all members
/// (itself included). Ties go to the lowest index.
pub fn medoid_index(members: &[Vec<f64>], z_normalized: bool) -> Result<usize> {
    if members.is_empty() {
        return Err(Error::invalid("medoid of an empty cluster"));
    }
    let seqs: Vec<Vec<f64>> = if z_normalized {
        members.iter().map(|m| z_normalize(m).0).collect()
    } else {
        members.to_vec()
    };
    let n = seqs.len();
    let mut totals = vec![0.0; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = dtw_distance(&seqs[i], &seqs[j], None)?;
            totals[i] += d;
            totals[j] += d;
        }
    }
    let mut best = 0;
    for i in 1..n {
        if totals[i] < totals[best] {
            best = i;
        }
    }
    Ok(best)
}

/// Settings for assigning subsequences to centroids at one scale.
#[derive(Debug, Clone, Copy)]
pub struct ClusterParams {
    /// Step between enumerated subsequence starts (downsampled units).
    pub stride: usize,
    /// Downsampling factor that produced the series.
    pub resolution: usize,
    /// Period that produced this scale.
    pub period: usize,
    /// Largest cluster evaluated exhaustively for its medoid; larger ones
    /// use an evenly spaced subset of this size.
    pub medoid_max_members: usize,
    pub similarity: SimilarityConfig,
}

/// Assign every enumerated subsequence of length `scale` to the centroid it
/// correlates with most and return each non-empty cluster's medoid, with
/// occurrences mapped back to full resolution.
pub fn cluster_and_medoid(
    series: &[f64],
    scale: usize,
    centroids: &[Anchor],
    params: &ClusterParams,
) -> Result<Vec<CandidateMotif>> {
    if centroids.is_empty() {
        return Err(Error::invalid("need at least one centroid"));
    }
    if series.len() < scale || scale < 2 {
        return Err(Error::invalid("series shorter than scale"));
    }
    let stride = params.stride.max(1);
    let mut clusters: Vec<Vec<usize>> = vec![Vec::new(); centroids.len()];
    for start in (0..=series.len() - scale).step_by(stride) {
        let sub = &series[start..start + scale];
        let mut best = 0;
        let mut best_r = f64::NEG_INFINITY;
        for (c, centroid) in centroids.iter().enumerate() {
            let r = pearson(sub, &centroid.values).unwrap_or(0.0);
            if r > best_r {
                best_r = r;
                best = c;
            }
        }
        clusters[best].push(start);
    }

    let mut out = Vec::new();
    for members in clusters.into_iter().filter(|m| !m.is_empty()) {
        let reference: Vec<usize> = if members.len() > params.medoid_max_members {
            let n = params.medoid_max_members.max(1);
            (0..n).map(|i| members[i * members.len() / n]).collect()
        } else {
            members.clone()
        };
        let seqs: Vec<Vec<f64>> = reference.iter().map(|&s| series[s..s + scale].to_vec()).collect();
        let medoid_start = reference[medoid_index(&seqs, params.similarity.z_normalize)?];
        let span = scale * params.resolution;
        out.push(CandidateMotif {
            values: series[medoid_start..medoid_start + scale].to_vec(),
            scale: span,
            resolution: params.resolution,
            period: params.period,
            cluster_support: members.len(),
            occurrences: members
                .iter()
                .map(|&s| Occurrence {
                    start: s * params.resolution,
                    len: span,
                })
                .collect(),
        });
    }
    Ok(out)
}
