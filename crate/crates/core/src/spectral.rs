//! Amplitude spectra, dominant-period detection and k-dominant-frequency
//! hashing of channels.

use std::collections::BTreeMap;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::MultivariateSeries;

/// `|X_f|` for integer frequencies `f = 0..=T/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeSpectrum {
    pub amplitudes: Vec<f64>,
    pub series_length: usize,
}

/// Dominant periods in descending amplitude order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodSet {
    pub periods: Vec<usize>,
    pub amplitudes: Vec<f64>,
    /// Frequency bin each period was derived from.
    pub frequencies: Vec<usize>,
}

/// Full complex DFT of a real sequence (all `T` bins).
pub fn dft(values: &[f64]) -> Vec<Complex64> {
    let mut buffer: Vec<Complex64> = values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    if !buffer.is_empty() {
        FftPlanner::new().plan_fft_forward(buffer.len()).process(&mut buffer);
    }
    buffer
}

pub fn amplitude_spectrum(values: &[f64]) -> Result<AmplitudeSpectrum> {
    if values.len() < 4 {
        return Err(Error::invalid(format!(
            "spectrum needs at least 4 points, got {}",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("spectrum input".into()));
    }
    let n = values.len();
    let mut coeffs = dft(values);
    coeffs.truncate(n / 2 + 1);
    Ok(AmplitudeSpectrum {
        amplitudes: coeffs.iter().map(|c| c.norm()).collect(),
        series_length: n,
    })
}

/// Rank non-DC frequencies by amplitude (ties toward lower frequency), map
/// each to the period `ceil(T/f)` clamped into `[2, T/2]`, and keep the
/// first `n_periods` distinct periods.
pub fn dominant_periods(spectrum: &AmplitudeSpectrum, n_periods: usize) -> Result<PeriodSet> {
    if n_periods == 0 {
        return Err(Error::invalid("need at least one period"));
    }
    let t = spectrum.series_length;
    let mut ranked: Vec<(usize, f64)> = spectrum
        .amplitudes
        .iter()
        .copied()
        .enumerate()
        .skip(1)
        .filter(|&(_, a)| a > 0.0)
        .collect();
    if ranked.is_empty() {
        return Err(Error::invalid("no frequency with positive amplitude"));
    }
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    let upper = (t / 2).max(2);
    let mut out = PeriodSet {
        periods: Vec::new(),
        amplitudes: Vec::new(),
        frequencies: Vec::new(),
    };
    for (f, amp) in ranked {
        let period = t.div_ceil(f).clamp(2, upper);
        if out.periods.contains(&period) {
            continue;
        }
        out.periods.push(period);
        out.amplitudes.push(amp);
        out.frequencies.push(f);
        if out.periods.len() == n_periods {
            break;
        }
    }
    Ok(out)
}

/// Sorted top-`k` frequency bins (excluding DC) of one channel.
pub fn dominant_bins(values: &[f64], k: usize) -> Result<Vec<usize>> {
    let spectrum = amplitude_spectrum(values)?;
    let mut ranked: Vec<(usize, f64)> = spectrum.amplitudes.iter().copied().enumerate().skip(1).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut bins: Vec<usize> = ranked.into_iter().take(k).map(|(f, _)| f).collect();
    bins.sort_unstable();
    Ok(bins)
}

/// Group channels whose top-`k` frequency bins coincide. Groups are ordered
/// by their smallest member and partition `0..N`.
pub fn kdfh_group(series: &MultivariateSeries, k: usize) -> Result<Vec<Vec<usize>>> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let mut buckets: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for (c, ch) in series.channels().iter().enumerate() {
        buckets.entry(dominant_bins(ch, k)?).or_default().push(c);
    }
    let mut groups: Vec<Vec<usize>> = buckets.into_values().collect();
    groups.sort_by_key(|g| g[0]);
    Ok(groups)
}
