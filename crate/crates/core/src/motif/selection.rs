use serde::{Deserialize, Serialize};

use super::{CandidateMotif, Occurrence};
use crate::dtw::{dtw_similarity, SimilarityConfig};
use crate::error::{Error, Result};
use crate::series::mean_std;

/// Weights of saliency, prevalence and atomicity in the quality score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityWeights {
    pub saliency: f64,
    pub prevalence: f64,
    pub atomicity: f64,
}

impl Default for QualityWeights {
    fn default() -> Self {
        Self {
            saliency: 0.6,
            prevalence: 0.2,
            atomicity: 0.2,
        }
    }
}

/// Unweighted quality components of one candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityComponents {
    pub saliency: f64,
    pub prevalence: f64,
    pub atomicity: f64,
}

/// Raw components, their normalized counterparts and the weighted total.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityBreakdown {
    pub raw: QualityComponents,
    pub normalized: QualityComponents,
    pub total: f64,
}

/// Raw quality of a candidate.
///
/// * saliency: largest deviation of peak or trough from the mean, in units
///   of the candidate's own (population) standard deviation; 0 when flat.
/// * prevalence: aggregated cluster support.
/// * atomicity: `1 / ln(1 + scale)` with `scale` the full-resolution span.
pub fn quality(candidate: &CandidateMotif) -> Result<QualityComponents> {
    if candidate.values.len() < 2 || candidate.scale < 2 {
        return Err(Error::invalid("quality needs a candidate of length >= 2"));
    }
    let (mean, std) = mean_std(&candidate.values);
    let peak = candidate.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let trough = candidate.values.iter().copied().fold(f64::INFINITY, f64::min);
    let saliency = if std > crate::dtw::CONSTANT_EPS {
        (peak - mean).abs().max((trough - mean).abs()) / std
    } else {
        0.0
    };
    Ok(QualityComponents {
        saliency,
        prevalence: candidate.cluster_support as f64,
        atomicity: 1.0 / (1.0 + candidate.scale as f64).ln(),
    })
}

/// Weight the components, min-max normalizing each across the set first
/// when `normalize` is set. A component that is equal for every candidate
/// normalizes to 1.
pub fn normalize_quality(
    raw: &[QualityComponents],
    weights: &QualityWeights,
    normalize: bool,
) -> Vec<QualityBreakdown> {
    let scale = |get: fn(&QualityComponents) -> f64| -> Vec<f64> {
        let vals: Vec<f64> = raw.iter().map(get).collect();
        if !normalize {
            return vals;
        }
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        vals.iter()
            .map(|v| if hi > lo { (v - lo) / (hi - lo) } else { 1.0 })
            .collect()
    };
    let s = scale(|q| q.saliency);
    let p = scale(|q| q.prevalence);
    let a = scale(|q| q.atomicity);
    raw.iter()
        .enumerate()
        .map(|(i, r)| {
            let normalized = QualityComponents {
                saliency: s[i],
                prevalence: p[i],
                atomicity: a[i],
            };
            QualityBreakdown {
                raw: *r,
                normalized,
                total: weights.saliency * s[i] + weights.prevalence * p[i] + weights.atomicity * a[i],
            }
        })
        .collect()
}

/// Set of time points covered by a group of occurrences, kept as sorted
/// disjoint half-open intervals.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Footprint {
    intervals: Vec<(usize, usize)>,
}

impl Footprint {
    pub fn from_occurrences(occurrences: &[Occurrence]) -> Self {
        Self::from_intervals(occurrences.iter().map(|o| (o.start, o.end())).collect())
    }

    fn from_intervals(mut raw: Vec<(usize, usize)>) -> Self {
        raw.retain(|&(a, b)| b > a);
        raw.sort_unstable();
        let mut intervals: Vec<(usize, usize)> = Vec::with_capacity(raw.len());
        for (a, b) in raw {
            match intervals.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => intervals.push((a, b)),
            }
        }
        Self { intervals }
    }

    pub fn len(&self) -> usize {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn intersection_len(&self, other: &Footprint) -> usize {
        let (mut i, mut j, mut total) = (0, 0, 0);
        while i < self.intervals.len() && j < other.intervals.len() {
            let (a0, a1) = self.intervals[i];
            let (b0, b1) = other.intervals[j];
            let lo = a0.max(b0);
            let hi = a1.min(b1);
            if hi > lo {
                total += hi - lo;
            }
            if a1 < b1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        total
    }

    pub fn union(&self, other: &Footprint) -> Footprint {
        let mut all = self.intervals.clone();
        all.extend_from_slice(&other.intervals);
        Self::from_intervals(all)
    }

    pub fn contains(&self, t: usize) -> bool {
        self.intervals.iter().any(|&(a, b)| a <= t && t < b)
    }
}

/// Fraction of the candidate's footprint not already covered by the
/// selected motifs.
pub fn marginal_coverage(candidate: &[Occurrence], selected: &[&[Occurrence]]) -> f64 {
    let own = Footprint::from_occurrences(candidate);
    let covered = selected.iter().fold(Footprint::default(), |acc, occ| {
        acc.union(&Footprint::from_occurrences(occ))
    });
    coverage_against(&own, &covered)
}

fn coverage_against(own: &Footprint, covered: &Footprint) -> f64 {
    let total = own.len();
    if total == 0 {
        return 0.0;
    }
    (total - own.intersection_len(covered)) as f64 / total as f64
}

/// `(1 - max_k S(c, m_k))^gamma_d`, 1 for an empty selection.
pub fn diversity_from_max_similarity(max_similarity: f64, gamma_d: f64) -> f64 {
    (1.0 - max_similarity).clamp(0.0, 1.0).powf(gamma_d)
}

pub fn marginal_diversity(
    candidate: &[f64],
    selected: &[&[f64]],
    gamma_d: f64,
    config: &SimilarityConfig,
) -> Result<f64> {
    if gamma_d < 0.0 {
        return Err(Error::invalid("gamma_d must be non-negative"));
    }
    let mut max_s: f64 = 0.0;
    for m in selected {
        max_s = max_s.max(dtw_similarity(candidate, m, config)?);
    }
    Ok(diversity_from_max_similarity(max_s, gamma_d))
}

/// Outcome of greedy selection: picks in order with their benefit at pick
/// time, and every round's benefit vector (`None` for already selected).
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub order: Vec<usize>,
    pub benefits: Vec<f64>,
    pub rounds: Vec<Vec<Option<f64>>>,
}

/// Greedy maximization of `B = Q * Cov * Div`.
///
/// Each round scores every unselected candidate against the current
/// selection and adds the argmax (lowest index on ties). Stops after `k`
/// picks, or once the best benefit drops below `min_benefit`; the first
/// pick is always made so the library is never empty.
pub fn select_dominant(
    quality: &[f64],
    occurrences: &[Vec<Occurrence>],
    similarity: &[Vec<f64>],
    k: usize,
    gamma_d: f64,
    min_benefit: f64,
) -> Result<Selection> {
    let n = quality.len();
    if n == 0 {
        return Err(Error::invalid("no candidates to select from"));
    }
    if occurrences.len() != n || similarity.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: occurrences.len().min(similarity.len()),
        });
    }
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let footprints: Vec<Footprint> = occurrences.iter().map(|o| Footprint::from_occurrences(o)).collect();
    let mut covered = Footprint::default();
    let mut max_sim = vec![0.0f64; n];
    let mut taken = vec![false; n];
    let mut out = Selection {
        order: Vec::new(),
        benefits: Vec::new(),
        rounds: Vec::new(),
    };
    while out.order.len() < k.min(n) {
        let mut round = vec![None; n];
        let mut best: Option<(usize, f64)> = None;
        for i in 0..n {
            if taken[i] {
                continue;
            }
            let b = quality[i]
                * coverage_against(&footprints[i], &covered)
                * diversity_from_max_similarity(max_sim[i], gamma_d);
            round[i] = Some(b);
            if best.is_none_or(|(_, bb)| b > bb) {
                best = Some((i, b));
            }
        }
        let Some((pick, benefit)) = best else { break };
        if !out.order.is_empty() && benefit < min_benefit {
            break;
        }
        out.rounds.push(round);
        out.order.push(pick);
        out.benefits.push(benefit);
        taken[pick] = true;
        covered = covered.union(&footprints[pick]);
        for i in 0..n {
            max_sim[i] = max_sim[i].max(similarity[i][pick]);
        }
    }
    Ok(out)
}
