//! Planted-motif fixtures.
//!
//! * [`two_regime_series`]: one template tiled over the first half of the
//!   series and another over the second half, plus Gaussian noise. Used to
//!   check that extraction recovers both templates.
//! * [`episode_series`]: back-to-back episodes, each a few cycles of a
//!   randomly scaled and signed template followed by a ramp whose direction
//!   depends on which template opened the episode. The sign of the template makes the
//!   continuation non-linear in the window, so a gated model can beat a
//!   linear map.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dtw::dtw_similarity;
use crate::error::{Error, Result};
use crate::motif::MotifLibrary;
use crate::series::{downsample_channel, mean_std};

fn z(values: Vec<f64>) -> Vec<f64> {
    let (m, s) = mean_std(&values);
    values.into_iter().map(|v| (v - m) / s).collect()
}

/// Two-harmonic wave over `period` steps, z-normalized.
pub fn wave_template(period: usize) -> Vec<f64> {
    z((0..period)
        .map(|t| {
            let u = t as f64 / period as f64;
            (TAU * u).sin() + 0.5 * (2.0 * TAU * u + 0.7).sin()
        })
        .collect())
}

/// Fast rise then exponential decay over `period` steps, z-normalized.
pub fn pulse_template(period: usize) -> Vec<f64> {
    let rise = (period / 6).max(1);
    z((0..period)
        .map(|t| {
            if t < rise {
                t as f64 / rise as f64
            } else {
                (-((t - rise) as f64) / (period as f64 / 6.0)).exp()
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TwoRegimeConfig {
    pub length: usize,
    pub period_a: usize,
    pub period_b: usize,
    /// Noise standard deviation relative to the unit-variance templates.
    pub noise: f64,
    pub seed: u64,
}

impl Default for TwoRegimeConfig {
    fn default() -> Self {
        Self {
            length: 5000,
            period_a: 24,
            period_b: 36,
            noise: 0.05,
            seed: 0,
        }
    }
}

pub struct TwoRegime {
    pub series: Vec<f64>,
    pub template_a: Vec<f64>,
    pub template_b: Vec<f64>,
}

pub fn two_regime_series(cfg: &TwoRegimeConfig) -> Result<TwoRegime> {
    if cfg.period_a < 4 || cfg.period_b < 4 || cfg.length < 4 * cfg.period_a.max(cfg.period_b) {
        return Err(Error::invalid(
            "two-regime fixture needs periods >= 4 and length >= 4 periods",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, cfg.noise).map_err(|e| Error::invalid(e.to_string()))?;
    let a = wave_template(cfg.period_a);
    let b = pulse_template(cfg.period_b);
    let half = cfg.length / 2;
    let offset_a = rng.random_range(0..cfg.period_a);
    let offset_b = rng.random_range(0..cfg.period_b);
    let series = (0..cfg.length)
        .map(|t| {
            let base = if t < half {
                a[(t + offset_a) % a.len()]
            } else {
                b[(t + offset_b) % b.len()]
            };
            base + noise.sample(&mut rng)
        })
        .collect();
    Ok(TwoRegime {
        series,
        template_a: a,
        template_b: b,
    })
}

/// Best similarity, under the library's own similarity settings, between
/// any library motif and any cyclic shift of `template` tiled to the
/// motif's span and brought to the motif's resolution.
pub fn recovery_similarity(library: &MotifLibrary, template: &[f64]) -> Result<f64> {
    let sim = library.similarity();
    let mut best: f64 = 0.0;
    for m in &library.motifs {
        for shift in 0..template.len() {
            let tiled: Vec<f64> = (0..m.scale).map(|t| template[(t + shift) % template.len()]).collect();
            let reference = downsample_channel(&tiled, m.resolution)?;
            best = best.max(dtw_similarity(&m.values, &reference, &sim)?);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpisodeConfig {
    pub length: usize,
    /// Cycle length of each template.
    pub periods: [usize; 2],
    /// Cycles of the template played back to back at the start of an
    /// episode.
    pub cycles: [usize; 2],
    pub ramp_length: usize,
    /// Ramp end level; episodes opened by the first template ramp to
    /// `+ramp_height`, the others to `-ramp_height`.
    pub ramp_height: f64,
    pub min_amplitude: f64,
    pub max_amplitude: f64,
    pub noise: f64,
    pub seed: u64,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            length: 5000,
            periods: [24, 32],
            cycles: [4, 3],
            ramp_length: 96,
            ramp_height: 4.0,
            min_amplitude: 0.6,
            max_amplitude: 1.0,
            noise: 0.05,
            seed: 0,
        }
    }
}

/// Damped single sine cycle, z-normalized.
pub fn damped_template(len: usize) -> Vec<f64> {
    z((0..len)
        .map(|t| {
            let u = t as f64 / len as f64;
            (TAU * u).sin() * (-2.0 * u).exp()
        })
        .collect())
}

/// Positive half-sine followed by a negative one, z-normalized.
pub fn flipped_half_sine_template(len: usize) -> Vec<f64> {
    z((0..len)
        .map(|t| {
            let u = t as f64 / len as f64;
            let sign = if u < 0.5 { 1.0 } else { -1.0 };
            sign * (PI * ((2.0 * u) % 1.0)).sin()
        })
        .collect())
}

pub struct Episodes {
    pub series: Vec<f64>,
    /// Start index and template (0 or 1) of every episode.
    pub episodes: Vec<(usize, usize)>,
}

pub fn episode_series(cfg: &EpisodeConfig) -> Result<Episodes> {
    if cfg.periods.iter().any(|&p| p < 4) || cfg.cycles.contains(&0) || cfg.ramp_length == 0 || cfg.length == 0 {
        return Err(Error::invalid(
            "episode fixture needs periods >= 4 and positive cycles and lengths",
        ));
    }
    if !(0.0 < cfg.min_amplitude && cfg.min_amplitude <= cfg.max_amplitude) {
        return Err(Error::invalid("amplitude range must satisfy 0 < min <= max"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, cfg.noise).map_err(|e| Error::invalid(e.to_string()))?;
    let templates = [
        damped_template(cfg.periods[0]),
        flipped_half_sine_template(cfg.periods[1]),
    ];
    let longest = (0..2).map(|i| cfg.periods[i] * cfg.cycles[i]).max().unwrap_or(0);
    let mut series = Vec::with_capacity(cfg.length + longest + cfg.ramp_length);
    let mut episodes = Vec::new();
    while series.len() < cfg.length {
        let which = rng.random_range(0..2usize);
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let amp = sign * rng.random_range(cfg.min_amplitude..=cfg.max_amplitude);
        episodes.push((series.len(), which));
        for _ in 0..cfg.cycles[which] {
            series.extend(templates[which].iter().map(|v| amp * v));
        }
        let dir = if which == 0 { 1.0 } else { -1.0 };
        series.extend((1..=cfg.ramp_length).map(|i| dir * cfg.ramp_height * i as f64 / cfg.ramp_length as f64));
    }
    series.truncate(cfg.length);
    episodes.retain(|&(s, _)| s < cfg.length);
    for v in &mut series {
        *v += noise.sample(&mut rng);
    }
    Ok(Episodes { series, episodes })
}
