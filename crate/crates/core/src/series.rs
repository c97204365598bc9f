//! Multivariate series container and the preprocessing used before motif
//! mining and forecasting: CSV ingestion, chronological splits,
//! standardization, moving-average detrending, block downsampling and
//! sliding-window sample generation.

use std::ops::Range;
use std::path::Path;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecast::Annotation;

/// A `T x N` block of finite observations in chronological order.
///
/// Values are stored channel-major since nearly every operation in the
/// pipeline works on one channel at a time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultivariateSeries {
    channels: Vec<Vec<f64>>,
    channel_names: Vec<String>,
    step_seconds: u64,
}

impl MultivariateSeries {
    pub fn new(channels: Vec<Vec<f64>>, channel_names: Vec<String>, step_seconds: u64) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::invalid("series needs at least one channel"));
        }
        let len = channels[0].len();
        if len == 0 {
            return Err(Error::invalid("series needs at least one observation"));
        }
        if channel_names.len() != channels.len() {
            return Err(Error::DimensionMismatch {
                expected: channels.len(),
                actual: channel_names.len(),
            });
        }
        for (i, name) in channel_names.iter().enumerate() {
            if channel_names[..i].contains(name) {
                return Err(Error::invalid(format!("duplicate channel name '{name}'")));
            }
        }
        for (c, ch) in channels.iter().enumerate() {
            if ch.len() != len {
                return Err(Error::DimensionMismatch {
                    expected: len,
                    actual: ch.len(),
                });
            }
            if let Some(t) = ch.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("channel {c} at index {t}")));
            }
        }
        if step_seconds == 0 {
            return Err(Error::invalid("sampling interval must be positive"));
        }
        Ok(Self {
            channels,
            channel_names,
            step_seconds,
        })
    }

    /// Single-channel convenience constructor with unit sampling interval.
    pub fn univariate(values: Vec<f64>, name: &str) -> Result<Self> {
        Self::new(vec![values], vec![name.to_string()], 1)
    }

    /// Number of time steps `T`.
    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of channels `N`.
    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn channel(&self, index: usize) -> &[f64] {
        &self.channels[index]
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn step_seconds(&self) -> u64 {
        self.step_seconds
    }

    /// Contiguous rows `range` as a new series.
    pub fn slice(&self, range: Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.len() {
            return Err(Error::invalid(format!(
                "row range {range:?} is empty or exceeds length {}",
                self.len()
            )));
        }
        Ok(Self {
            channels: self.channels.iter().map(|c| c[range.clone()].to_vec()).collect(),
            channel_names: self.channel_names.clone(),
            step_seconds: self.step_seconds,
        })
    }

    /// Same shape and metadata, new channel values.
    fn with_channels(&self, channels: Vec<Vec<f64>>) -> Self {
        Self {
            channels,
            channel_names: self.channel_names.clone(),
            step_seconds: self.step_seconds,
        }
    }
}

/// Load a comma-separated file whose `date_column` holds timestamps and
/// every other column holds numbers.
pub fn load_csv(path: impl AsRef<Path>, date_column: &str) -> Result<MultivariateSeries> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let csv_err = |e: csv::Error| Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers = reader.headers().map_err(csv_err)?.clone();
    let date_idx = headers
        .iter()
        .position(|h| h.trim() == date_column)
        .ok_or_else(|| Error::Csv {
            path: path.to_path_buf(),
            message: format!("no '{date_column}' column in header"),
        })?;
    let names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != date_idx)
        .map(|(_, h)| h.trim().to_string())
        .collect();
    if names.is_empty() {
        return Err(Error::Csv {
            path: path.to_path_buf(),
            message: "no numeric columns".into(),
        });
    }

    let mut channels = vec![Vec::new(); names.len()];
    let mut stamps: Vec<i64> = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let row = r + 1;
        let record = record.map_err(csv_err)?;
        let mut col = 0;
        for (i, cell) in record.iter().enumerate() {
            if i == date_idx {
                let ts = parse_timestamp(cell.trim()).ok_or_else(|| Error::Timestamp {
                    row,
                    value: cell.to_string(),
                    reason: "is not a recognised timestamp".into(),
                })?;
                if let Some(&prev) = stamps.last() {
                    if ts <= prev {
                        return Err(Error::Timestamp {
                            row,
                            value: cell.to_string(),
                            reason: "is not strictly after the previous row".into(),
                        });
                    }
                }
                stamps.push(ts);
                continue;
            }
            let value: f64 = cell
                .trim()
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    row,
                    column: names[col].clone(),
                    value: cell.to_string(),
                })?;
            channels[col].push(value);
            col += 1;
        }
    }
    if stamps.is_empty() {
        return Err(Error::Csv {
            path: path.to_path_buf(),
            message: "no data rows".into(),
        });
    }
    let step = if stamps.len() >= 2 {
        (stamps[1] - stamps[0]).max(1) as u64
    } else {
        1
    };
    MultivariateSeries::new(channels, names, step)
}

/// Seconds since the epoch for the datetime layouts common in forecasting
/// benchmarks, or the integer value for purely numeric time indices.
fn parse_timestamp(s: &str) -> Option<i64> {
    const FORMATS: [&str; 5] = [
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%d %H:%M",
        "%Y-%m-%dT%H:%M:%S",
        "%Y/%m/%d %H:%M",
        "%Y/%m/%d %H:%M:%S",
    ];
    for fmt in FORMATS {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(dt.and_utc().timestamp());
        }
    }
    if let Ok(d) = chrono::NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Some(d.and_hms_opt(0, 0, 0)?.and_utc().timestamp());
    }
    s.parse::<i64>().ok()
}

/// Train/validation/test fractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl SplitSpec {
    pub fn new(train: f64, val: f64, test: f64) -> Result<Self> {
        let spec = Self { train, val, test };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for f in [self.train, self.val, self.test] {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::invalid(format!("split fraction {f} outside (0, 1)")));
            }
        }
        if (self.train + self.val + self.test - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("split fractions must sum to 1"));
        }
        Ok(())
    }

    /// Row counts for a series of length `len`: floor for train and
    /// validation, remainder to test.
    pub fn lengths(&self, len: usize) -> Result<(usize, usize, usize)> {
        self.validate()?;
        // The epsilon absorbs representation error such as 0.29 * 100 = 28.999...
        let n_train = (len as f64 * self.train + 1e-9).floor() as usize;
        let n_val = (len as f64 * self.val + 1e-9).floor() as usize;
        let n_test = len.saturating_sub(n_train + n_val);
        for (n, part) in [(n_train, "train"), (n_val, "val"), (n_test, "test")] {
            if n == 0 {
                return Err(Error::EmptySplit { part });
            }
        }
        Ok((n_train, n_val, n_test))
    }
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train: 0.7,
            val: 0.1,
            test: 0.2,
        }
    }
}

/// Three contiguous slices in chronological order.
pub fn split_chronological(
    series: &MultivariateSeries,
    spec: &SplitSpec,
) -> Result<(MultivariateSeries, MultivariateSeries, MultivariateSeries)> {
    let (a, b, _) = spec.lengths(series.len())?;
    Ok((
        series.slice(0..a)?,
        series.slice(a..a + b)?,
        series.slice(a + b..series.len())?,
    ))
}

/// Fixed-calendar split used by the ETT benchmarks: 12 months of training,
/// then 4 of validation and 4 of test (30-day months). Validation and test
/// borders reach `lookback` steps back so their first window is complete.
#[derive(Debug, Clone)]
pub struct CalendarSplit {
    pub train: Range<usize>,
    pub val: Range<usize>,
    pub test: Range<usize>,
}

impl CalendarSplit {
    pub fn new(series_len: usize, steps_per_day: usize, lookback: usize) -> Result<Self> {
        let month = 30 * steps_per_day;
        let (b1, b2, b3) = (12 * month, 16 * month, 20 * month);
        if b3 > series_len {
            return Err(Error::invalid(format!(
                "calendar split needs {b3} rows, series has {series_len}"
            )));
        }
        if lookback > b1 {
            return Err(Error::invalid("lookback longer than the training span"));
        }
        Ok(Self {
            train: 0..b1,
            val: b1 - lookback..b2,
            test: b2 - lookback..b3,
        })
    }

    /// Number of look-back window positions in each part, the figure
    /// reported as the dataset size in the benchmark tables.
    pub fn window_counts(&self, lookback: usize) -> (usize, usize, usize) {
        let count = |r: &Range<usize>| (r.end - r.start + 1).saturating_sub(lookback);
        (count(&self.train), count(&self.val), count(&self.test))
    }
}

/// Per-channel location and scale used to standardize a series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl ChannelStats {
    /// Population mean and standard deviation of every channel.
    pub fn fit(source: &MultivariateSeries) -> Result<Self> {
        let mut mean = Vec::with_capacity(source.n_channels());
        let mut std = Vec::with_capacity(source.n_channels());
        for (c, ch) in source.channels().iter().enumerate() {
            let (m, s) = mean_std(ch);
            if !(s > 0.0) {
                return Err(Error::ZeroVariance { channel: c });
            }
            mean.push(m);
            std.push(s);
        }
        Ok(Self { mean, std })
    }

    pub fn apply(&self, series: &MultivariateSeries) -> Result<MultivariateSeries> {
        self.check(series)?;
        let channels = series
            .channels()
            .iter()
            .enumerate()
            .map(|(c, ch)| ch.iter().map(|v| (v - self.mean[c]) / self.std[c]).collect())
            .collect();
        Ok(series.with_channels(channels))
    }

    pub fn inverse(&self, series: &MultivariateSeries) -> Result<MultivariateSeries> {
        self.check(series)?;
        let channels = series
            .channels()
            .iter()
            .enumerate()
            .map(|(c, ch)| self.inverse_values(c, ch))
            .collect();
        Ok(series.with_channels(channels))
    }

    pub fn inverse_values(&self, channel: usize, values: &[f64]) -> Vec<f64> {
        values
            .iter()
            .map(|v| v * self.std[channel] + self.mean[channel])
            .collect()
    }

    fn check(&self, series: &MultivariateSeries) -> Result<()> {
        if series.n_channels() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                actual: series.n_channels(),
            });
        }
        Ok(())
    }
}

/// Standardize `series` with statistics taken from `stats_source`
/// (normally the training split).
pub fn standardize(
    series: &MultivariateSeries,
    stats_source: &MultivariateSeries,
) -> Result<(MultivariateSeries, ChannelStats)> {
    let stats = ChannelStats::fit(stats_source)?;
    Ok((stats.apply(series)?, stats))
}

/// Population mean and standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Centered moving average with replicated edges, same length as input.
pub fn moving_average(values: &[f64], window: usize) -> Result<Vec<f64>> {
    if window == 0 || window % 2 == 0 {
        return Err(Error::invalid(format!(
            "moving-average window {window} must be odd and positive"
        )));
    }
    if window > values.len() {
        return Err(Error::invalid(format!(
            "moving-average window {window} exceeds series length {}",
            values.len()
        )));
    }
    let half = window / 2;
    let n = values.len();
    let at = |i: isize| values[i.clamp(0, n as isize - 1) as usize];
    let mut out = Vec::with_capacity(n);
    let mut acc: f64 = (-(half as isize)..=half as isize).map(at).sum();
    out.push(acc / window as f64);
    for t in 1..n as isize {
        acc += at(t + half as isize) - at(t - 1 - half as isize);
        out.push(acc / window as f64);
    }
    Ok(out)
}

pub fn detrend_channel(values: &[f64], window: usize) -> Result<Vec<f64>> {
    let trend = moving_average(values, window)?;
    Ok(values.iter().zip(&trend).map(|(x, m)| x - m).collect())
}

/// Subtract the centered moving average from every channel.
pub fn moving_average_detrend(series: &MultivariateSeries, window: usize) -> Result<MultivariateSeries> {
    let channels = series
        .channels()
        .iter()
        .map(|ch| detrend_channel(ch, window))
        .collect::<Result<Vec<_>>>()?;
    Ok(series.with_channels(channels))
}

pub fn downsample_channel(values: &[f64], factor: usize) -> Result<Vec<f64>> {
    if factor < 1 {
        return Err(Error::invalid("downsampling factor must be at least 1"));
    }
    let out: Vec<f64> = values
        .chunks_exact(factor)
        .map(|block| block.iter().sum::<f64>() / factor as f64)
        .collect();
    if out.is_empty() {
        return Err(Error::invalid(format!(
            "downsampling by {factor} leaves no rows from {}",
            values.len()
        )));
    }
    Ok(out)
}

/// Block means over non-overlapping groups of `factor` rows; a trailing
/// partial block is dropped.
pub fn downsample(series: &MultivariateSeries, factor: usize) -> Result<MultivariateSeries> {
    let channels = series
        .channels()
        .iter()
        .map(|ch| downsample_channel(ch, factor))
        .collect::<Result<Vec<_>>>()?;
    Ok(MultivariateSeries {
        channels,
        channel_names: series.channel_names.clone(),
        step_seconds: series.step_seconds * factor.max(1) as u64,
    })
}

/// One look-back window and the horizon that follows it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSample {
    pub window: Vec<f64>,
    pub target: Vec<f64>,
    pub channel: usize,
    /// Absolute index of the last window element.
    pub t_end: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotation: Option<Annotation>,
}

/// Windows of one channel whose targets lie entirely inside `targets`.
///
/// The look-back part may reach before `targets.start`, which is how
/// validation and test windows borrow history from the preceding split.
pub fn channel_windows(
    values: &[f64],
    channel: usize,
    lookback: usize,
    horizon: usize,
    stride: usize,
    targets: Range<usize>,
) -> Result<Vec<WindowSample>> {
    if lookback == 0 || horizon == 0 || stride == 0 {
        return Err(Error::invalid("lookback, horizon and stride must be positive"));
    }
    let first_target = targets.start.max(lookback);
    let last = targets.end.min(values.len());
    if first_target + horizon > last {
        return Err(Error::invalid(format!(
            "no complete window: need {} rows, have {}",
            lookback + horizon,
            last.saturating_sub(first_target) + lookback
        )));
    }
    Ok((first_target..=last - horizon)
        .step_by(stride)
        .map(|start| WindowSample {
            window: values[start - lookback..start].to_vec(),
            target: values[start..start + horizon].to_vec(),
            channel,
            t_end: start - 1,
            annotation: None,
        })
        .collect())
}

/// All windows of every channel, channel-major then chronological.
pub fn sliding_windows(
    series: &MultivariateSeries,
    lookback: usize,
    horizon: usize,
    stride: usize,
) -> Result<Vec<WindowSample>> {
    if series.len() < lookback + horizon {
        return Err(Error::invalid(format!(
            "series length {} shorter than lookback + horizon = {}",
            series.len(),
            lookback + horizon
        )));
    }
    let mut out = Vec::new();
    for (c, ch) in series.channels().iter().enumerate() {
        out.extend(channel_windows(ch, c, lookback, horizon, stride, 0..series.len())?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::io::Write;

    fn write_csv(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_small_csv() {
        let f = write_csv("date,a,b\n2020-01-01 00:00:00,1,2\n2020-01-01 01:00:00,3,4\n2020-01-01 02:00:00,5,6\n");
        let s = load_csv(f.path(), "date").unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.n_channels(), 2);
        assert_eq!(s.channel_names(), ["a", "b"]);
        assert_eq!(s.channel(1), [2.0, 4.0, 6.0]);
        assert_eq!(s.step_seconds(), 3600);
    }

    #[test]
    fn bad_cell_names_row() {
        let f = write_csv("date,a\n1,1\n2,2\n3,3\n4,4\n5,abc\n6,6\n");
        let err = load_csv(f.path(), "date").unwrap_err();
        match &err {
            Error::Parse { row, column, value } => {
                assert_eq!(*row, 5);
                assert_eq!(column, "a");
                assert_eq!(value, "abc");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(err.to_string().contains("row 5"));
    }

    #[test]
    fn rejects_non_monotone_and_missing() {
        let f = write_csv("date,a\n2,1\n2,2\n");
        assert!(matches!(
            load_csv(f.path(), "date"),
            Err(Error::Timestamp { row: 2, .. })
        ));
        let f = write_csv("date,a\n1,1\n2,\n");
        assert!(matches!(load_csv(f.path(), "date"), Err(Error::Parse { row: 2, .. })));
        assert!(matches!(
            load_csv("/nonexistent/file.csv", "date"),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn split_lengths() {
        let s = MultivariateSeries::univariate((0..100).map(f64::from).collect(), "x").unwrap();
        let (a, b, c) = split_chronological(&s, &SplitSpec::new(0.7, 0.1, 0.2).unwrap()).unwrap();
        assert_eq!((a.len(), b.len(), c.len()), (70, 10, 20));
        let mut joined = a.channel(0).to_vec();
        joined.extend_from_slice(b.channel(0));
        joined.extend_from_slice(c.channel(0));
        assert_eq!(joined, s.channel(0));

        let spec = SplitSpec::new(0.6, 0.2, 0.2).unwrap();
        assert_eq!(spec.lengths(10).unwrap(), (6, 2, 2));
        assert!(matches!(spec.lengths(2), Err(Error::EmptySplit { .. })));
        assert!(SplitSpec::new(0.5, 0.2, 0.2).is_err());
    }

    #[test]
    fn calendar_split_matches_ett_table() {
        let split = CalendarSplit::new(17420, 24, 96).unwrap();
        assert_eq!(split.window_counts(96), (8545, 2881, 2881));
        let split = CalendarSplit::new(69680, 96, 96).unwrap();
        assert_eq!(split.window_counts(96), (34465, 11521, 11521));
    }

    #[test]
    fn standardize_examples() {
        let s = MultivariateSeries::univariate(vec![2.0, 4.0], "x").unwrap();
        let (z, stats) = standardize(&s, &s).unwrap();
        assert_eq!(z.channel(0), [-1.0, 1.0]);
        assert_eq!(stats.mean, [3.0]);
        assert_eq!(stats.std, [1.0]);
        let again = stats.apply(&s).unwrap();
        for (a, b) in again.channel(0).iter().zip(z.channel(0)) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        let c = MultivariateSeries::univariate(vec![5.0; 4], "c").unwrap();
        assert!(matches!(standardize(&c, &c), Err(Error::ZeroVariance { channel: 0 })));
    }

    #[test]
    fn detrend_examples() {
        let d = detrend_channel(&[1.0, 2.0, 3.0, 4.0, 5.0], 3).unwrap();
        let expected = [1.0 - 4.0 / 3.0, 0.0, 0.0, 0.0, 5.0 - 14.0 / 3.0];
        for (a, b) in d.iter().zip(expected) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        let flat = detrend_channel(&[7.0; 30], 25).unwrap();
        assert!(flat.iter().all(|v| v.abs() < 1e-12));
        let ramp: Vec<f64> = (0..20).map(|t| 0.5 * t as f64 - 3.0).collect();
        let d = detrend_channel(&ramp, 3).unwrap();
        assert!(d[1..19].iter().all(|v| v.abs() < 1e-12));
        assert!(detrend_channel(&[1.0; 5], 4).is_err());
        assert!(detrend_channel(&[1.0; 5], 7).is_err());
    }

    #[test]
    fn detrend_recovers_sinusoid() {
        let t_len = 600;
        let sine: Vec<f64> = (0..t_len)
            .map(|t| (std::f64::consts::TAU * t as f64 / 12.0).sin())
            .collect();
        let x: Vec<f64> = sine
            .iter()
            .enumerate()
            .map(|(t, s)| s + 0.01 * t as f64 + 2.0)
            .collect();
        let d = detrend_channel(&x, 61).unwrap();
        let r = crate::dtw::pearson(&d[40..t_len - 40], &sine[40..t_len - 40]).unwrap();
        assert!(r > 0.99, "r = {r}");
    }

    #[test]
    fn downsample_examples() {
        assert_eq!(downsample_channel(&[1.0, 2.0, 3.0, 4.0], 2).unwrap(), [1.5, 3.5]);
        assert_eq!(downsample_channel(&[1.0, 2.0, 3.0], 1).unwrap(), [1.0, 2.0, 3.0]);
        let v: Vec<f64> = (0..10).map(f64::from).collect();
        assert_eq!(downsample_channel(&v, 3).unwrap().len(), 3);
        assert!(downsample_channel(&v, 0).is_err());
    }

    #[test]
    fn window_examples() {
        let s = MultivariateSeries::univariate((0..10).map(f64::from).collect(), "r").unwrap();
        let w = sliding_windows(&s, 3, 2, 1).unwrap();
        assert_eq!(w.len(), 6);
        assert_eq!(w[0].window, [0.0, 1.0, 2.0]);
        assert_eq!(w[0].target, [3.0, 4.0]);
        assert_eq!(w[0].t_end, 2);
        let s5 = s.slice(0..5).unwrap();
        assert_eq!(sliding_windows(&s5, 3, 2, 1).unwrap().len(), 1);
        assert!(sliding_windows(&s.slice(0..4).unwrap(), 3, 2, 1).is_err());
    }

    proptest! {
        #[test]
        fn window_count_formula(t in 2usize..200, l in 1usize..40, h in 1usize..40, stride in 1usize..10) {
            prop_assume!(t >= l + h);
            let s = MultivariateSeries::univariate((0..t).map(|v| v as f64).collect(), "x").unwrap();
            let w = sliding_windows(&s, l, h, stride).unwrap();
            prop_assert_eq!(w.len(), (t - l - h) / stride + 1);
            for sample in &w {
                prop_assert_eq!(sample.window[l - 1], sample.t_end as f64);
                prop_assert_eq!(sample.target[0], (sample.t_end + 1) as f64);
            }
        }

        #[test]
        fn standardize_roundtrip(values in proptest::collection::vec(-1e3f64..1e3, 3..50)) {
            let s = MultivariateSeries::univariate(values.clone(), "x").unwrap();
            prop_assume!(mean_std(&values).1 > 1e-6);
            let (z, stats) = standardize(&s, &s).unwrap();
            let back = stats.inverse(&z).unwrap();
            for (a, b) in back.channel(0).iter().zip(&values) {
                prop_assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0));
            }
        }

        #[test]
        fn split_concatenates(t in 10usize..500) {
            let s = MultivariateSeries::univariate((0..t).map(|v| v as f64).collect(), "x").unwrap();
            let (a, b, c) = split_chronological(&s, &SplitSpec::default()).unwrap();
            prop_assert_eq!(a.len() + b.len() + c.len(), t);
            prop_assert_eq!(b.channel(0)[0], a.len() as f64);
            prop_assert_eq!(c.channel(0)[0], (a.len() + b.len()) as f64);
        }
    }
}
