//! Exit-code classification and atomic artifact writes.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Failure classes and their process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// Bad flags, config values or paths: exit 2.
    Config,
    /// Unreadable or inconsistent data and artifacts: exit 3.
    Data,
    /// Non-finite values or training divergence: exit 4.
    Numeric,
}

impl Kind {
    pub fn code(self) -> u8 {
        match self {
            Kind::Config => 2,
            Kind::Data => 3,
            Kind::Numeric => 4,
        }
    }
}

#[derive(Debug)]
pub struct Failure {
    pub kind: Kind,
    pub error: anyhow::Error,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

pub type CmdResult<T> = Result<T, Failure>;

pub fn fail<T>(kind: Kind, msg: impl fmt::Display) -> CmdResult<T> {
    Err(Failure {
        kind,
        error: anyhow::anyhow!("{msg}"),
    })
}

fn numeric(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<motifcast_core::Error>()
            .is_some_and(|e| e.is_numeric())
    })
}

pub trait Classify<T> {
    fn or_config(self) -> CmdResult<T>;
    /// Data failure, promoted to numeric when the cause is numerical.
    fn or_data(self) -> CmdResult<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn or_config(self) -> CmdResult<T> {
        self.map_err(|e| Failure {
            kind: Kind::Config,
            error: e.into(),
        })
    }

    fn or_data(self) -> CmdResult<T> {
        self.map_err(|e| {
            let error = e.into();
            let kind = if numeric(&error) { Kind::Numeric } else { Kind::Data };
            Failure { kind, error }
        })
    }
}

/// Write `bytes` to a temporary file beside `path`, then rename it into
/// place, so readers never observe a partial artifact.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CmdResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).or_data()?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| -> std::io::Result<()> {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = std::fs::remove_file(&tmp);
        return Err(Failure {
            kind: Kind::Data,
            error: anyhow::Error::new(e).context(format!("cannot write {}", path.display())),
        });
    }
    Ok(())
}

pub fn write_json(path: &Path, value: &impl serde::Serialize) -> CmdResult<()> {
    let mut text = serde_json::to_string_pretty(value).or_data()?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// File-name-safe form of a channel or group name.
pub fn slug(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect();
    if s.is_empty() {
        "series".into()
    } else {
        s
    }
}
