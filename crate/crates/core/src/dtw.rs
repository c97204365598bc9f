//! Dynamic time warping, the Gaussian-kernel similarity built on it, and
//! Pearson correlation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::mean_std;

/// Below this standard deviation a sequence is treated as constant.
pub const CONSTANT_EPS: f64 = 1e-12;

/// Warping-window policy for similarity computations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    /// Unconstrained DTW.
    Full,
    /// Fixed Sakoe-Chiba radius.
    Radius(usize),
    /// Radius as a fraction of the longer sequence.
    Fraction(f64),
}

impl Band {
    /// Radius for a pair of lengths, never narrower than the length
    /// difference so that a warping path always exists.
    pub fn radius_for(&self, n: usize, m: usize) -> Option<usize> {
        let diff = n.abs_diff(m);
        match *self {
            Band::Full => None,
            Band::Radius(r) => Some(r.max(diff)),
            Band::Fraction(f) => Some(((f * n.max(m) as f64).ceil() as usize).max(diff)),
        }
    }
}

/// Parameters of the normalized DTW similarity `exp(-d^2 / sigma^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityConfig {
    pub sigma: f64,
    pub band: Band,
    /// Compare z-normalized copies rather than raw values.
    pub z_normalize: bool,
}

impl SimilarityConfig {
    pub fn new(sigma: f64) -> Result<Self> {
        let cfg = Self {
            sigma,
            band: Band::Full,
            z_normalize: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid(format!("sigma must be positive, got {}", self.sigma)));
        }
        if let Band::Fraction(f) = self.band {
            if !(f >= 0.0) {
                return Err(Error::invalid("band fraction must be non-negative"));
            }
        }
        Ok(())
    }

    /// Distance between two sequences under this configuration's
    /// normalization and band.
    pub fn distance(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        let radius = self.band.radius_for(a.len(), b.len());
        if self.z_normalize {
            dtw_distance(&z_normalize(a).0, &z_normalize(b).0, radius)
        } else {
            dtw_distance(a, b, radius)
        }
    }
}

/// Minimum cumulative `|a_i - b_j|` over monotone warping paths.
///
/// With `band_radius = Some(r)` cells with `|i - j| > r` are excluded; the
/// radius must be at least `|len(a) - len(b)|`.
pub fn dtw_distance(a: &[f64], b: &[f64], band_radius: Option<usize>) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("DTW needs non-empty sequences"));
    }
    let (n, m) = (a.len(), b.len());
    if let Some(r) = band_radius {
        if r < n.abs_diff(m) {
            return Err(Error::invalid(format!(
                "band radius {r} admits no warping path for lengths {n} and {m}"
            )));
        }
    }
    let r = band_radius.unwrap_or(n.max(m));
    let mut prev = vec![f64::INFINITY; m + 1];
    let mut cur = vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    for i in 1..=n {
        cur.fill(f64::INFINITY);
        let lo = i.saturating_sub(r).max(1);
        let hi = (i + r).min(m);
        let ai = a[i - 1];
        for j in lo..=hi {
            let best = prev[j - 1].min(prev[j]).min(cur[j - 1]);
            cur[j] = (ai - b[j - 1]).abs() + best;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[m])
}

pub fn is_constant(values: &[f64]) -> bool {
    !(mean_std(values).1 > CONSTANT_EPS)
}

/// Z-normalized copy (population std). Constant input maps to zeros and
/// the flag is set.
pub fn z_normalize(values: &[f64]) -> (Vec<f64>, bool) {
    let (mean, std) = mean_std(values);
    if !(std > CONSTANT_EPS) {
        return (vec![0.0; values.len()], true);
    }
    (values.iter().map(|v| (v - mean) / std).collect(), false)
}

/// Gaussian kernel applied to a DTW distance.
pub fn similarity_from_distance(distance: f64, sigma: f64) -> f64 {
    (-(distance * distance) / (sigma * sigma)).exp()
}

pub fn dtw_similarity(a: &[f64], b: &[f64], config: &SimilarityConfig) -> Result<f64> {
    config.validate()?;
    Ok(similarity_from_distance(config.distance(a, b)?, config.sigma))
}

/// Pearson correlation coefficient.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::invalid("correlation needs at least two points"));
    }
    let (ma, sa) = mean_std(a);
    let (mb, sb) = mean_std(b);
    if !(sa > CONSTANT_EPS && sb > CONSTANT_EPS) {
        return Err(Error::invalid("correlation undefined for a constant sequence"));
    }
    let cov = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / a.len() as f64;
    Ok((cov / (sa * sb)).clamp(-1.0, 1.0))
}

/// Symmetric matrix of distances under `config`, computed over the upper
/// triangle in parallel. The result does not depend on scheduling.
pub fn pairwise_distances(seqs: &[Vec<f64>], config: &SimilarityConfig) -> Result<Vec<Vec<f64>>> {
    let n = seqs.len();
    let normalized: Vec<Vec<f64>> = if config.z_normalize {
        seqs.iter().map(|s| z_normalize(s).0).collect()
    } else {
        seqs.to_vec()
    };
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let dists = pairs
        .par_iter()
        .map(|&(i, j)| {
            let radius = config.band.radius_for(normalized[i].len(), normalized[j].len());
            dtw_distance(&normalized[i], &normalized[j], radius)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut out = vec![vec![0.0; n]; n];
    for (&(i, j), d) in pairs.iter().zip(dists) {
        out[i][j] = d;
        out[j][i] = d;
    }
    Ok(out)
}

/// Median of the off-diagonal distances, the default kernel scale. Falls
/// back to 1 when there are no pairs or every pair is identical.
pub fn median_sigma(distances: &[Vec<f64>]) -> f64 {
    let mut upper: Vec<f64> = distances
        .iter()
        .enumerate()
        .flat_map(|(i, row)| row[i + 1..].iter().copied())
        .collect();
    if upper.is_empty() {
        return 1.0;
    }
    upper.sort_by(f64::total_cmp);
    let mid = upper.len() / 2;
    let median = if upper.len() % 2 == 0 {
        0.5 * (upper[mid - 1] + upper[mid])
    } else {
        upper[mid]
    };
    if median > 0.0 {
        median
    } else {
        1.0
    }
}

/// Median over sequences of the distance to their `k`-th nearest
/// neighbour (`k` clamped to the number of other sequences). Falls back to
/// 1 like [`median_sigma`].
pub fn nearest_neighbor_sigma(distances: &[Vec<f64>], k: usize) -> f64 {
    let n = distances.len();
    if n < 2 || k == 0 {
        return 1.0;
    }
    let k = k.min(n - 1);
    let mut kth: Vec<f64> = distances
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut others: Vec<f64> = row
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &d)| d)
                .collect();
            others.sort_by(f64::total_cmp);
            others[k - 1]
        })
        .collect();
    kth.sort_by(f64::total_cmp);
    let mid = n / 2;
    let median = if n % 2 == 0 {
        0.5 * (kth[mid - 1] + kth[mid])
    } else {
        kth[mid]
    };
    if median > 0.0 {
        median
    } else {
        1.0
    }
}
