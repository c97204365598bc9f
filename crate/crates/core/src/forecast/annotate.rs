//! Motif class and life-cycle position labels for look-back windows.
//!
//! A window ending at `t_end` is matched against every library occurrence
//! `[o, o + len)` that contains `t_end`. The observed part of that
//! occurrence is `phase = t_end - o + 1` steps long; the last
//! `ov = min(L, phase)` window values are compared with the template's
//! `[phase - ov, phase)` slice (template upsampled to `len`), and the score
//! is `ov / min(L, len) * S_DTW`. The best score names the class, and
//! `y_pos = phase / len` is the fraction of the motif elapsed at `t_end`.
//!
//! Windows that touch no occurrence are scored the same way against every
//! template at every phase that is a multiple of the motif's resolution
//! and are flagged as fallbacks.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dtw::{dtw_similarity, SimilarityConfig};
use crate::error::{Error, Result};
use crate::motif::{MotifLibrary, Occurrence};
use crate::series::WindowSample;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub y_class: usize,
    /// Fraction of the matched motif elapsed at the window's last step.
    pub y_pos: f64,
    pub match_similarity: f64,
    /// Matched by template scan rather than a containing occurrence.
    #[serde(default)]
    pub fallback: bool,
}

/// Linear interpolation of a block-mean-downsampled template back onto
/// `len` points.
pub fn upsample_template(values: &[f64], len: usize) -> Vec<f64> {
    let m = values.len();
    if m == 1 {
        return vec![values[0]; len];
    }
    let step = m as f64 / len as f64;
    (0..len)
        .map(|i| {
            let x = ((i as f64 + 0.5) * step - 0.5).clamp(0.0, (m - 1) as f64);
            let lo = x.floor() as usize;
            let hi = (lo + 1).min(m - 1);
            let w = x - lo as f64;
            values[lo] * (1.0 - w) + values[hi] * w
        })
        .collect()
}

/// Score of matching `window` at `phase` steps into a template of length
/// `template.len()`.
pub fn phase_score(window: &[f64], template: &[f64], phase: usize, sim: &SimilarityConfig) -> Result<f64> {
    let l = window.len();
    let len = template.len();
    let ov = l.min(phase);
    let s = dtw_similarity(&window[l - ov..], &template[phase - ov..phase], sim)?;
    Ok(ov as f64 / l.min(len) as f64 * s)
}

struct MotifIndex {
    occurrences: Vec<Occurrence>,
    max_len: usize,
    resolution: usize,
    scale: usize,
}

/// Precomputed lookup structures for annotating many windows against one
/// library.
pub struct Annotator {
    motifs: Vec<MotifIndex>,
    templates: HashMap<(usize, usize), Vec<f64>>,
    similarity: SimilarityConfig,
}

impl Annotator {
    pub fn new(library: &MotifLibrary) -> Result<Self> {
        if library.is_empty() {
            return Err(Error::invalid("cannot annotate against an empty library"));
        }
        let similarity = library.similarity();
        similarity.validate()?;
        let mut templates = HashMap::new();
        let mut motifs = Vec::with_capacity(library.len());
        for (k, m) in library.motifs.iter().enumerate() {
            let mut occurrences = m.occurrences.clone();
            occurrences.sort_unstable();
            let mut lens: Vec<usize> = occurrences.iter().map(|o| o.len).collect();
            lens.push(m.scale);
            for &len in &lens {
                templates
                    .entry((k, len))
                    .or_insert_with(|| upsample_template(&m.values, len));
            }
            motifs.push(MotifIndex {
                max_len: lens.iter().copied().max().unwrap_or(0),
                occurrences,
                resolution: m.resolution.max(1),
                scale: m.scale,
            });
        }
        Ok(Self {
            motifs,
            templates,
            similarity,
        })
    }

    pub fn annotate(&self, window: &[f64], t_end: usize) -> Result<Annotation> {
        if window.is_empty() {
            return Err(Error::invalid("empty window"));
        }
        let mut best: Option<Annotation> = None;
        let consider = |best: &mut Option<Annotation>, class: usize, score: f64, y_pos: f64, fallback: bool| {
            if best.is_none_or(|b| score > b.match_similarity) {
                *best = Some(Annotation {
                    y_class: class,
                    y_pos: y_pos.clamp(0.0, 1.0),
                    match_similarity: score,
                    fallback,
                });
            }
        };
        for (k, m) in self.motifs.iter().enumerate() {
            let earliest = (t_end + 1).saturating_sub(m.max_len);
            let from = m.occurrences.partition_point(|o| o.start < earliest);
            let to = m.occurrences.partition_point(|o| o.start <= t_end);
            for o in &m.occurrences[from..to] {
                if t_end >= o.end() {
                    continue;
                }
                let phase = t_end - o.start + 1;
                let score = phase_score(window, &self.templates[&(k, o.len)], phase, &self.similarity)?;
                consider(&mut best, k, score, phase as f64 / o.len as f64, false);
            }
        }
        if let Some(b) = best {
            return Ok(b);
        }
        for (k, m) in self.motifs.iter().enumerate() {
            let template = &self.templates[&(k, m.scale)];
            for phase in (m.resolution..=m.scale).step_by(m.resolution) {
                let score = phase_score(window, template, phase, &self.similarity)?;
                consider(&mut best, k, score, phase as f64 / m.scale as f64, true);
            }
        }
        best.ok_or_else(|| Error::invalid("library has no usable templates"))
    }
}

/// Attach annotations to every sample, in parallel.
pub fn annotate_windows(samples: &mut [WindowSample], library: &MotifLibrary) -> Result<()> {
    let annotator = Annotator::new(library)?;
    let labels = samples
        .par_iter()
        .map(|s| annotator.annotate(&s.window, s.t_end))
        .collect::<Result<Vec<_>>>()?;
    for (s, a) in samples.iter_mut().zip(labels) {
        s.annotation = Some(a);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dtw::Band;
    use crate::motif::{extract_motifs, ExtractConfig, Motif, QualityBreakdown, QualityComponents};
    use crate::spectral::PeriodSet;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn motif(id: usize, values: Vec<f64>, resolution: usize, occurrences: Vec<Occurrence>) -> Motif {
        let q = QualityComponents {
            saliency: 1.0,
            prevalence: 1.0,
            atomicity: 1.0,
        };
        Motif {
            id,
            scale: values.len() * resolution,
            values,
            resolution,
            period: 0,
            occurrences,
            support: 1,
            quality: QualityBreakdown {
                raw: q,
                normalized: q,
                total: 1.0,
            },
            benefit: 1.0,
            refined_index: id,
        }
    }

    fn library(motifs: Vec<Motif>, series_length: usize) -> MotifLibrary {
        MotifLibrary {
            format_version: crate::motif::LIBRARY_FORMAT_VERSION,
            subject: "test".into(),
            channels: vec![0],
            series_length,
            config: ExtractConfig::default(),
            sigma: 1.0,
            band: Band::Full,
            periods: PeriodSet {
                periods: vec![],
                amplitudes: vec![],
                frequencies: vec![],
            },
            candidate_count: motifs.len(),
            refined_count: motifs.len(),
            motifs,
            selection_trace: vec![],
            warnings: vec![],
            provenance: None,
        }
    }

    /// Linear scan over every occurrence of every motif; templates are
    /// rebuilt per occurrence.
    fn oracle(lib: &MotifLibrary, window: &[f64], t_end: usize) -> Annotation {
        let sim = lib.similarity();
        let mut best: Option<Annotation> = None;
        let offer = |best: &mut Option<Annotation>, a: Annotation| {
            if best.is_none_or(|b| a.match_similarity > b.match_similarity) {
                *best = Some(a);
            }
        };
        for (k, m) in lib.motifs.iter().enumerate() {
            for o in &m.occurrences {
                if o.start <= t_end && t_end < o.start + o.len {
                    let t = upsample_template(&m.values, o.len);
                    let phase = t_end - o.start + 1;
                    offer(
                        &mut best,
                        Annotation {
                            y_class: k,
                            y_pos: phase as f64 / o.len as f64,
                            match_similarity: phase_score(window, &t, phase, &sim).unwrap(),
                            fallback: false,
                        },
                    );
                }
            }
        }
        if best.is_none() {
            for (k, m) in lib.motifs.iter().enumerate() {
                let t = upsample_template(&m.values, m.scale);
                let mut phase = m.resolution;
                while phase <= m.scale {
                    offer(
                        &mut best,
                        Annotation {
                            y_class: k,
                            y_pos: phase as f64 / m.scale as f64,
                            match_similarity: phase_score(window, &t, phase, &sim).unwrap(),
                            fallback: true,
                        },
                    );
                    phase += m.resolution;
                }
            }
        }
        best.unwrap()
    }

    #[test]
    fn upsampling_inverts_block_means_of_a_line() {
        let line: Vec<f64> = (0..12).map(f64::from).collect();
        let down = crate::series::downsample_channel(&line, 3).unwrap();
        let up = upsample_template(&down, 12);
        for (a, b) in up[1..11].iter().zip(&line[1..11]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(upsample_template(&[1.0, 2.0], 2), [1.0, 2.0]);
    }

    #[test]
    fn quarter_through_window() {
        let tmpl: Vec<f64> = (0..40).map(|i| (i as f64 * 0.4).sin() + 0.05 * i as f64).collect();
        let other: Vec<f64> = (0..40).map(|i| ((i * 7 % 11) as f64).cos()).collect();
        let occ = Occurrence { start: 100, len: 40 };
        let lib = library(
            vec![
                motif(0, other, 1, vec![Occurrence { start: 95, len: 40 }]),
                motif(1, tmpl.clone(), 1, vec![occ]),
            ],
            400,
        );
        let window = tmpl[..10].to_vec();
        let a = Annotator::new(&lib).unwrap().annotate(&window, 109).unwrap();
        assert_eq!(a.y_class, 1);
        assert_eq!(a.y_pos, 0.25);
        assert!(!a.fallback);
        assert_eq!(a.match_similarity, 1.0);
    }

    #[test]
    fn final_index_and_ties() {
        let tmpl: Vec<f64> = (0..8).map(|i| (i as f64).sin()).collect();
        let occ = vec![Occurrence { start: 0, len: 8 }];
        let lib = library(
            vec![motif(0, tmpl.clone(), 1, occ.clone()), motif(1, tmpl.clone(), 1, occ)],
            50,
        );
        let a = Annotator::new(&lib).unwrap().annotate(&tmpl, 7).unwrap();
        assert_eq!(a.y_pos, 1.0);
        assert_eq!(a.y_class, 0);
    }

    #[test]
    fn fallback_is_flagged() {
        let tmpl: Vec<f64> = (0..24).map(|i| (i as f64 * 0.5).sin()).collect();
        let lib = library(
            vec![motif(0, tmpl.clone(), 1, vec![Occurrence { start: 0, len: 24 }])],
            200,
        );
        let a = Annotator::new(&lib).unwrap().annotate(&tmpl[..12], 150).unwrap();
        assert!(a.fallback);
        assert_eq!(a.y_pos, 0.5);
    }

    #[test]
    fn agrees_with_scan_oracle_on_extracted_library() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let series: Vec<f64> = (0..1600)
            .map(|t| {
                let b = if (t / 400) % 2 == 0 {
                    (t as f64 * std::f64::consts::TAU / 20.0).sin()
                } else {
                    ((t % 30) as f64 / 15.0) - 1.0
                };
                b + 0.05 * rng.random_range(-1.0..1.0)
            })
            .collect();
        let lib = extract_motifs(&series[..1200], &ExtractConfig::default()).unwrap();
        let annotator = Annotator::new(&lib).unwrap();
        let l = 48;
        for t_end in (l - 1..series.len()).step_by(37) {
            let w = &series[t_end + 1 - l..=t_end];
            assert_eq!(
                annotator.annotate(w, t_end).unwrap(),
                oracle(&lib, w, t_end),
                "t_end {t_end}"
            );
        }
    }
}
