//! File-driven front end: scenarios, golden traces, waveform export,
//! timing-margin sweeps and network experiments.
//!
//! Every file is TOML with a top-level `schema = 1`. Times are written in
//! picoseconds and may be fractional; they are rounded to femtoseconds.

mod experiment;
mod scenario;
mod sweep;
mod waveform;

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use thiserror::Error;

pub use experiment::{run_experiment, ExperimentConfig, ExperimentReport};
pub use scenario::{
    compare_golden, run_scenario, ArbiterSpec, CellSpec, CycleSpec, Expect, NetlistSpec, Prepared, Scenario,
    ScenarioOutcome, StimulusSpec,
};
pub use sweep::{margin_sweep, MarginSweepSpec, ParamMargin, SweepPoint, SweepReport};
pub use waveform::{to_csv, to_vcd, WaveFormat};

use crate::kernel::{Diagnostic, SimError};
use crate::network::NetworkError;
use crate::neuron::NeuronError;

/// The only schema version understood by this build.
pub const SCHEMA_VERSION: u32 = 1;

/// Process exit codes of the command line tool.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const GOLDEN_MISMATCH: i32 = 1;
    pub const INVALID: i32 = 2;
    pub const RUNTIME: i32 = 3;
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{}: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{}:{line}:{column}: {message}", path.display())]
    Parse { path: PathBuf, line: usize, column: usize, message: String },
    #[error("{}: unsupported schema {found}, expected {SCHEMA_VERSION}", path.display())]
    Schema { path: PathBuf, found: i64 },
    #[error("{0}")]
    Invalid(String),
    #[error("invalid netlist:\n{}", .0.iter().map(|d| format!("  {d}")).collect::<Vec<_>>().join("\n"))]
    Netlist(Vec<Diagnostic>),
    #[error("{0}")]
    Sim(SimError),
    #[error("{0}")]
    Neuron(NeuronError),
    #[error("{0}")]
    Network(NetworkError),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Read { .. }
            | HarnessError::Parse { .. }
            | HarnessError::Schema { .. }
            | HarnessError::Invalid(_)
            | HarnessError::Netlist(_) => exit::INVALID,
            HarnessError::Write { .. } => exit::RUNTIME,
            HarnessError::Sim(e) => sim_code(e),
            HarnessError::Neuron(e) => neuron_code(e),
            HarnessError::Network(NetworkError::Neuron(e)) => neuron_code(e),
            HarnessError::Network(_) => exit::INVALID,
        }
    }
}

fn sim_code(e: &SimError) -> i32 {
    match e {
        SimError::Invalid(_) | SimError::UnknownWire(_) | SimError::NotAnInput(_) => exit::INVALID,
        SimError::Causality { .. } | SimError::EventStorm { .. } => exit::RUNTIME,
    }
}

fn neuron_code(e: &NeuronError) -> i32 {
    match e {
        NeuronError::Timing(_) => exit::RUNTIME,
        NeuronError::Sim(e) => sim_code(e),
        _ => exit::INVALID,
    }
}

impl From<SimError> for HarnessError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Invalid(d) => HarnessError::Netlist(d),
            e => HarnessError::Sim(e),
        }
    }
}

impl From<NeuronError> for HarnessError {
    fn from(e: NeuronError) -> Self {
        match e {
            NeuronError::Sim(e) => e.into(),
            e => HarnessError::Neuron(e),
        }
    }
}

impl From<NetworkError> for HarnessError {
    fn from(e: NetworkError) -> Self {
        match e {
            NetworkError::Neuron(e) => e.into(),
            e => HarnessError::Network(e),
        }
    }
}

pub fn read_file(path: &Path) -> Result<String, HarnessError> {
    std::fs::read_to_string(path).map_err(|source| HarnessError::Read { path: path.to_path_buf(), source })
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), HarnessError> {
    std::fs::write(path, contents).map_err(|source| HarnessError::Write { path: path.to_path_buf(), source })
}

/// 1-based line and column of byte `offset` in `text`.
pub fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

fn parse_error(path: &Path, text: &str, e: toml::de::Error) -> HarnessError {
    let (line, column) = e.span().map_or((1, 1), |s| line_column(text, s.start));
    HarnessError::Parse { path: path.to_path_buf(), line, column, message: e.message().trim().to_string() }
}

/// Parses a versioned TOML document. The schema field is checked before the
/// rest of the document so that files from a newer format fail cleanly.
pub fn parse_versioned<T: DeserializeOwned>(path: &Path, text: &str) -> Result<T, HarnessError> {
    let table: toml::Table = toml::from_str(text).map_err(|e| parse_error(path, text, e))?;
    match table.get("schema") {
        Some(toml::Value::Integer(v)) if *v == i64::from(SCHEMA_VERSION) => {}
        Some(toml::Value::Integer(v)) => return Err(HarnessError::Schema { path: path.to_path_buf(), found: *v }),
        Some(_) => {
            return Err(HarnessError::Parse {
                path: path.to_path_buf(),
                line: 1,
                column: 1,
                message: "`schema` must be an integer".into(),
            })
        }
        None => {
            return Err(HarnessError::Parse {
                path: path.to_path_buf(),
                line: 1,
                column: 1,
                message: "missing `schema` field".into(),
            })
        }
    }
    toml::from_str(text).map_err(|e| parse_error(path, text, e))
}

/// Kind of harness file, decided from its top-level keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileKind {
    Scenario,
    Sweep,
    Experiment,
}

pub fn detect_kind(path: &Path, text: &str) -> Result<FileKind, HarnessError> {
    let table: toml::Table = toml::from_str(text).map_err(|e| parse_error(path, text, e))?;
    if table.contains_key("layers") {
        Ok(FileKind::Experiment)
    } else if table.contains_key("scenarios") {
        Ok(FileKind::Sweep)
    } else if ["neuron", "arbiter", "netlist"].iter().any(|k| table.contains_key(*k)) {
        Ok(FileKind::Scenario)
    } else {
        Err(HarnessError::Invalid(format!(
            "{}: not a scenario, sweep spec or experiment config",
            path.display()
        )))
    }
}

/// Parses and fully validates a harness file without running it.
pub fn validate_file(path: &Path) -> Result<FileKind, HarnessError> {
    let text = read_file(path)?;
    let kind = detect_kind(path, &text)?;
    match kind {
        FileKind::Scenario => {
            let s: Scenario = parse_versioned(path, &text)?;
            s.prepare()?;
        }
        FileKind::Sweep => {
            let spec: MarginSweepSpec = parse_versioned(path, &text)?;
            for p in spec.scenario_paths(path) {
                let s = Scenario::load(&p)?;
                s.prepare()?;
            }
            spec.validate()?;
        }
        FileKind::Experiment => {
            let c: ExperimentConfig = parse_versioned(path, &text)?;
            c.validate()?;
        }
    }
    Ok(kind)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positions() {
        assert_eq!(line_column("ab\ncd", 0), (1, 1));
        assert_eq!(line_column("ab\ncd", 4), (2, 2));
    }

    #[test]
    fn parse_error_has_position() {
        let e = parse_versioned::<toml::Table>(Path::new("x.toml"), "schema = 1\nfoo = [1,\n").unwrap_err();
        match e {
            HarnessError::Parse { line, .. } => assert!(line >= 2),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn schema_checked() {
        let e = parse_versioned::<toml::Table>(Path::new("x.toml"), "schema = 2\n").unwrap_err();
        assert!(matches!(e, HarnessError::Schema { found: 2, .. }));
        assert_eq!(e.exit_code(), exit::INVALID);
        assert!(parse_versioned::<toml::Table>(Path::new("x.toml"), "a = 1\n").is_err());
    }
}
