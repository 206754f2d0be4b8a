//! Versioned JSON experiment files.
//!
//! Files are written to a temporary sibling and renamed into place, so a
//! reader never sees a partial file. Serialization is canonical: saving a
//! loaded experiment reproduces the original bytes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use bayesopt_core::engine::{Counters, ExperimentState, Settings, Trial};
use bayesopt_core::gp::Hyperparameters;
use bayesopt_core::space::ParameterSpace;
use serde::{Deserialize, Serialize};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("cannot access {}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed experiment file: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("unsupported experiment file version {found} (this build reads version {FORMAT_VERSION})")]
    Version { found: u64 },
    #[error("inconsistent experiment file: {0}")]
    Invalid(#[from] bayesopt_core::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub version: u32,
    pub space: ParameterSpace,
    pub settings: Settings,
    /// Random-stream positions needed to resume deterministically.
    pub counters: Counters,
    pub trials: Vec<Trial>,
    /// Last fitted GP hyperparameters; warm start for the next fit.
    pub fitted_hyperparameters: Option<Hyperparameters>,
}

impl ExperimentFile {
    pub fn from_state(state: &ExperimentState) -> Self {
        ExperimentFile {
            version: FORMAT_VERSION,
            space: state.space().clone(),
            settings: state.settings().clone(),
            counters: state.counters(),
            trials: state.trials().to_vec(),
            fitted_hyperparameters: state.hyperparameters().cloned(),
        }
    }

    pub fn into_state(self) -> Result<ExperimentState, StoreError> {
        if self.version != FORMAT_VERSION {
            return Err(StoreError::Version { found: self.version.into() });
        }
        Ok(ExperimentState::from_parts(self.space, self.settings, self.trials, self.counters, self.fitted_hyperparameters)?)
    }
}

#[derive(Deserialize)]
struct VersionProbe {
    version: Option<u64>,
}

pub fn to_json(state: &ExperimentState) -> String {
    let mut s = serde_json::to_string_pretty(&ExperimentFile::from_state(state)).expect("experiment serializes");
    s.push('\n');
    s
}

pub fn from_json(text: &str) -> Result<ExperimentState, StoreError> {
    let probe: VersionProbe = serde_json::from_str(text)?;
    match probe.version {
        Some(v) if v == u64::from(FORMAT_VERSION) => {}
        Some(found) => return Err(StoreError::Version { found }),
        None => return Err(StoreError::Malformed(serde::de::Error::missing_field("version"))),
    }
    serde_json::from_str::<ExperimentFile>(text)?.into_state()
}

/// Writes `contents` to `path` atomically.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), StoreError> {
    let io = |source| StoreError::Io { path: path.to_path_buf(), source };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

pub fn save(state: &ExperimentState, path: &Path) -> Result<(), StoreError> {
    write_atomic(path, to_json(state).as_bytes())
}

pub fn load(path: &Path) -> Result<ExperimentState, StoreError> {
    let text = fs::read_to_string(path).map_err(|source| StoreError::Io { path: path.to_path_buf(), source })?;
    from_json(&text)
}
