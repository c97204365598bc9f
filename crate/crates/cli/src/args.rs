//! Config flags: `--config <file>` plus one `--<field>` flag per
//! [`RunConfig`] field, generated from the field list so the two never
//! drift apart.

use std::path::PathBuf;

use clap::{Arg, ArgAction, ArgMatches, Args, Command, FromArgMatches};

use crate::config::RunConfig;
use crate::output::{fail, Classify, CmdResult, Kind};

const DEFAULT_TOML: &str = include_str!("../../../configs/default.toml");

/// Help text for `key`: the trailing comment on its line in the bundled
/// config file.
fn help_for(key: &str) -> String {
    DEFAULT_TOML
        .lines()
        .find_map(|line| {
            let (lhs, rest) = line.split_once('=')?;
            if lhs.trim() != key {
                return None;
            }
            let comment = rest.split_once('#').map(|(_, c)| c.trim()).unwrap_or("");
            Some(if comment.is_empty() {
                format!("Override `{key}`")
            } else {
                format!("Override `{key}`: {comment}")
            })
        })
        .unwrap_or_else(|| format!("Override `{key}`"))
}

fn flag_name(key: &str) -> String {
    key.replace('_', "-")
}

#[derive(Debug, Clone, Default)]
pub struct ConfigArgs {
    pub file: Option<PathBuf>,
    /// `(key, raw value)` pairs in field order.
    pub overrides: Vec<(String, String)>,
}

impl ConfigArgs {
    /// Bundled defaults, then the config file, then individual flags.
    pub fn resolve(&self) -> CmdResult<RunConfig> {
        let mut cfg = match &self.file {
            Some(path) => {
                if !path.exists() {
                    return fail(Kind::Config, format!("config file not found: {}", path.display()));
                }
                RunConfig::load(path).or_config()?
            }
            None => RunConfig::default(),
        };
        for (key, raw) in &self.overrides {
            cfg.set(key, raw).or_config()?;
        }
        cfg.validate().or_config()?;
        Ok(cfg)
    }
}

impl FromArgMatches for ConfigArgs {
    fn from_arg_matches(m: &ArgMatches) -> Result<Self, clap::Error> {
        let mut out = Self::default();
        out.update_from_arg_matches(m)?;
        Ok(out)
    }

    fn update_from_arg_matches(&mut self, m: &ArgMatches) -> Result<(), clap::Error> {
        if let Some(p) = m.get_one::<PathBuf>("config") {
            self.file = Some(p.clone());
        }
        for key in RunConfig::keys() {
            if let Some(v) = m.get_one::<String>(&key) {
                self.overrides.push((key, v.clone()));
            }
        }
        Ok(())
    }
}

impl Args for ConfigArgs {
    fn augment_args(cmd: Command) -> Command {
        let cmd = cmd.arg(
            Arg::new("config")
                .long("config")
                .value_name("FILE")
                .value_parser(clap::value_parser!(PathBuf))
                .help("TOML run configuration; omitted keys keep their defaults"),
        );
        RunConfig::keys().into_iter().fold(cmd, |cmd, key| {
            cmd.arg(
                Arg::new(key.clone())
                    .long(flag_name(&key))
                    .value_name("VALUE")
                    .action(ArgAction::Set)
                    .help(help_for(&key))
                    .help_heading("Config overrides"),
            )
        })
    }

    fn augment_args_for_update(cmd: Command) -> Command {
        Self::augment_args(cmd)
    }
}
