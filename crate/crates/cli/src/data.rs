//! Loading, splitting and standardizing the input series, and cutting it
//! into the per-subject inputs the commands need.
//!
//! All ranges are target ranges in absolute row indices: a window belongs
//! to a split when its horizon lies inside the range, and its look-back may
//! reach into the preceding split.

use std::ops::Range;
use std::path::Path;

use motifcast_core::series::{channel_windows, load_csv, CalendarSplit};
use motifcast_core::spectral::kdfh_group;
use motifcast_core::{ChannelStats, MultivariateSeries, WindowSample};
use serde::{Deserialize, Serialize};

use crate::config::{Grouping, RunConfig, SplitMode};
use crate::output::{fail, Classify, CmdResult, Kind};

pub struct Dataset {
    /// Selected channels in original units.
    pub raw: MultivariateSeries,
    /// Column index of each selected channel among the file's channels.
    pub source_index: Vec<usize>,
    /// Fitted on the training range.
    pub stats: ChannelStats,
    /// `raw` standardized with `stats`.
    pub standardized: MultivariateSeries,
    pub train: Range<usize>,
    pub val: Range<usize>,
    pub test: Range<usize>,
}

/// Channels that share one library and one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subject {
    pub name: String,
    /// Indices into the dataset's selected channels.
    pub members: Vec<usize>,
}

pub fn load(cfg: &RunConfig) -> CmdResult<Dataset> {
    if cfg.data.is_empty() {
        return fail(
            Kind::Config,
            "no data file given; set `data` in the config or pass --data",
        );
    }
    let path = Path::new(&cfg.data);
    if !path.is_file() {
        return fail(Kind::Config, format!("data file not found: {}", path.display()));
    }
    let full = load_csv(path, &cfg.date_column).or_data()?;
    let source_index: Vec<usize> = if cfg.channels.is_empty() {
        (0..full.n_channels()).collect()
    } else {
        let mut idx = Vec::with_capacity(cfg.channels.len());
        for name in &cfg.channels {
            match full.channel_names().iter().position(|n| n == name) {
                Some(i) => idx.push(i),
                None => return fail(Kind::Data, format!("channel '{name}' not in {}", path.display())),
            }
        }
        idx
    };
    let raw = MultivariateSeries::new(
        source_index.iter().map(|&i| full.channel(i).to_vec()).collect(),
        source_index.iter().map(|&i| full.channel_names()[i].clone()).collect(),
        full.step_seconds(),
    )
    .or_data()?;
    let (train, val, test) = split_ranges(cfg, raw.len())?;
    let stats = ChannelStats::fit(&raw.slice(train.clone()).or_data()?).or_data()?;
    let standardized = stats.apply(&raw).or_data()?;
    Ok(Dataset {
        raw,
        source_index,
        stats,
        standardized,
        train,
        val,
        test,
    })
}

pub fn split_ranges(cfg: &RunConfig, len: usize) -> CmdResult<(Range<usize>, Range<usize>, Range<usize>)> {
    match cfg.split {
        SplitMode::Ratio => {
            let (a, b, _) = cfg.split_spec().lengths(len).or_data()?;
            Ok((0..a, a..a + b, a + b..len))
        }
        SplitMode::Calendar => {
            let cs = CalendarSplit::new(len, cfg.steps_per_day, cfg.lookback).or_data()?;
            let l = cfg.lookback;
            Ok((cs.train, cs.val.start + l..cs.val.end, cs.test.start + l..cs.test.end))
        }
    }
}

impl Dataset {
    pub fn names(&self) -> &[String] {
        self.raw.channel_names()
    }

    pub fn subjects(&self, cfg: &RunConfig) -> CmdResult<Vec<Subject>> {
        match cfg.grouping {
            Grouping::Channel => Ok(self
                .names()
                .iter()
                .enumerate()
                .map(|(i, n)| Subject {
                    name: n.clone(),
                    members: vec![i],
                })
                .collect()),
            Grouping::Kdfh => {
                let train = self.standardized.slice(self.train.clone()).or_data()?;
                let groups = kdfh_group(&train, cfg.kdfh_k).or_data()?;
                Ok(groups
                    .into_iter()
                    .enumerate()
                    .map(|(g, members)| Subject {
                        name: format!("group{g}"),
                        members,
                    })
                    .collect())
            }
        }
    }

    /// Map channel names recorded in an artifact back to member indices.
    pub fn members_by_name(&self, names: &[String]) -> CmdResult<Vec<usize>> {
        names
            .iter()
            .map(|n| match self.names().iter().position(|m| m == n) {
                Some(i) => Ok(i),
                None => fail(
                    Kind::Data,
                    format!("channel '{n}' is not among the data's channels {:?}", self.names()),
                ),
            })
            .collect()
    }

    /// Extraction input of a subject: its single standardized training
    /// series, or the element-wise mean over a group's members.
    pub fn extraction_input(&self, subject: &Subject) -> Vec<f64> {
        let n = subject.members.len() as f64;
        self.train
            .clone()
            .map(|t| {
                subject
                    .members
                    .iter()
                    .map(|&c| self.standardized.channel(c)[t])
                    .sum::<f64>()
                    / n
            })
            .collect()
    }

    /// Windows of every member whose targets lie in `targets`, with the
    /// values standardized by `stats` (indexed like `members`).
    pub fn windows(
        &self,
        members: &[usize],
        stats: &ChannelStats,
        lookback: usize,
        horizon: usize,
        stride: usize,
        targets: Range<usize>,
    ) -> CmdResult<Vec<WindowSample>> {
        let mut out = Vec::new();
        for (j, &c) in members.iter().enumerate() {
            let values: Vec<f64> = self
                .raw
                .channel(c)
                .iter()
                .map(|v| (v - stats.mean[j]) / stats.std[j])
                .collect();
            let name = &self.names()[c];
            let w = channel_windows(&values, c, lookback, horizon, stride, targets.clone())
                .or_data()
                .map_err(|mut f| {
                    f.error = f.error.context(format!("channel '{name}'"));
                    f
                })?;
            out.extend(w);
        }
        Ok(out)
    }

    /// Training statistics of a subset of channels.
    pub fn member_stats(&self, members: &[usize]) -> ChannelStats {
        ChannelStats {
            mean: members.iter().map(|&c| self.stats.mean[c]).collect(),
            std: members.iter().map(|&c| self.stats.std[c]).collect(),
        }
    }
}
