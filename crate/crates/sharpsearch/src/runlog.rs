//! Append-only experiment logs and their line format.
//!
//! One record per line, tab-separated, fields in fixed order:
//!
//! ```text
//! iteration \t phase \t name=value;name=value;... \t value \t seed \t wall_time
//! ```
//!
//! Config pairs follow spec order, numeric values in the canonical compact
//! form (`1e-8`, `0.0001`, `1024`). `wall_time` (seconds, 6 decimals) is the
//! only field that differs between reruns of the same seeded command; all
//! comparisons of log equality strip it.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::space::{format_number, Configuration, OptionValue};

#[derive(Debug, Error)]
pub enum RunLogError {
    #[error("line {line}: expected 6 tab-separated fields, got {got}")]
    FieldCount { line: usize, got: usize },
    #[error("line {line}: bad {field}: {text}")]
    BadField { line: usize, field: &'static str, text: String },
    #[error("log is empty")]
    Empty,
    #[error("iteration indices are not contiguous from 1 at line {0}")]
    NonContiguous(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Which part of a run produced a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Init,
    Bayes,
    Grid,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Init => "init",
            Phase::Bayes => "bayes",
            Phase::Grid => "grid",
        })
    }
}

impl FromStr for Phase {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "init" => Ok(Phase::Init),
            "bayes" => Ok(Phase::Bayes),
            "grid" => Ok(Phase::Grid),
            _ => Err(()),
        }
    }
}

/// One evaluated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    /// 1-based, contiguous.
    pub iteration: usize,
    pub phase: Phase,
    pub config: Configuration,
    pub value: f64,
    pub seed: u64,
    /// Seconds spent in the objective. Not covered by determinism.
    pub wall_time: f64,
    /// Set when the objective failed and the value was pinned to 0.
    /// In-memory only; the line format does not carry it.
    pub failed: bool,
}

/// Append-only list of run records.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunLog {
    records: Vec<RunRecord>,
}

impl RunLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, record: RunRecord) {
        debug_assert_eq!(record.iteration, self.records.len() + 1);
        self.records.push(record);
    }

    pub fn records(&self) -> &[RunRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Record with the largest value; earliest wins ties.
    pub fn best(&self) -> Option<&RunRecord> {
        self.records.iter().fold(None, |acc: Option<&RunRecord>, r| match acc {
            Some(best) if best.value >= r.value => Some(best),
            _ => Some(r),
        })
    }

    /// Running maximum of the value column.
    pub fn best_so_far(&self) -> Vec<f64> {
        let mut best = f64::NEG_INFINITY;
        self.records
            .iter()
            .map(|r| {
                best = best.max(r.value);
                best
            })
            .collect()
    }

    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{:.6}\n",
                r.iteration,
                r.phase,
                r.config.to_pairs(),
                format_number(r.value),
                r.seed,
                r.wall_time
            ));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, RunLogError> {
        let mut records = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 6 {
                return Err(RunLogError::FieldCount { line: lineno, got: fields.len() });
            }
            let bad = |field: &'static str, text: &str| RunLogError::BadField {
                line: lineno,
                field,
                text: text.to_string(),
            };
            let iteration =
                fields[0].parse::<usize>().map_err(|_| bad("iteration", fields[0]))?;
            let phase = fields[1].parse::<Phase>().map_err(|_| bad("phase", fields[1]))?;
            let config = parse_pairs(fields[2]).ok_or_else(|| bad("config", fields[2]))?;
            let value = fields[3].parse::<f64>().map_err(|_| bad("value", fields[3]))?;
            let seed = fields[4].parse::<u64>().map_err(|_| bad("seed", fields[4]))?;
            let wall_time = fields[5].parse::<f64>().map_err(|_| bad("wall_time", fields[5]))?;
            if iteration != records.len() + 1 {
                return Err(RunLogError::NonContiguous(lineno));
            }
            records.push(RunRecord { iteration, phase, config, value, seed, wall_time, failed: false });
        }
        Ok(Self { records })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, RunLogError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Atomic write: temp file in the same directory, then rename.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), RunLogError> {
        write_atomic(path.as_ref(), self.to_lines().as_bytes())?;
        Ok(())
    }
}

/// `name=value;...` pairs. Numeric-looking values become numbers so that the
/// round trip matches what the space would produce.
fn parse_pairs(text: &str) -> Option<Configuration> {
    let mut entries = Vec::new();
    for pair in text.split(';') {
        let (name, value) = pair.split_once('=')?;
        if name.is_empty() {
            return None;
        }
        let value = match value.parse::<f64>() {
            Ok(v) => OptionValue::Number(v),
            Err(_) => OptionValue::Symbol(value.to_string()),
        };
        entries.push((name.to_string(), value));
    }
    if entries.is_empty() {
        None
    } else {
        Some(Configuration::new(entries))
    }
}

/// Write-temp-then-rename, within the target's directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = dir.to_path_buf();
    let base = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    tmp.push(format!(".{base}.tmp-{}", std::process::id()));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)
}

/// A log line with the wall-time field removed, for determinism comparisons.
pub fn strip_wall_time(lines: &str) -> String {
    lines
        .lines()
        .map(|line| match line.rsplit_once('\t') {
            Some((rest, _)) => format!("{rest}\n"),
            None => format!("{line}\n"),
        })
        .collect()
}
