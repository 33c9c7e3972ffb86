use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct Artifact {
    pub path: PathBuf,
    pub sha256: String,
    pub bytes: u64,
}

/// Offline/online cost comparison on the same mesh.
#[derive(Debug, Clone, Serialize)]
pub struct TimingComparison {
    pub dofs: usize,
    pub n: usize,
    pub fem_solve_s: f64,
    pub online_solve_s: f64,
    pub speedup: f64,
}

/// Record of one invocation: what was written, from which seeds, how long it took.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub threads: usize,
    pub seeds: BTreeMap<String, u64>,
    pub artifacts: Vec<Artifact>,
    pub wall_times: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<TimingComparison>,
    pub notes: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            threads: rayon::current_num_threads(),
            seeds: BTreeMap::new(),
            artifacts: Vec::new(),
            wall_times: BTreeMap::new(),
            timing: None,
            notes: Vec::new(),
        }
    }

    pub fn seed(&mut self, what: &str, seed: u64) {
        self.seeds.insert(what.to_string(), seed);
    }

    pub fn time(&mut self, what: &str, seconds: f64) {
        self.wall_times.insert(what.to_string(), seconds);
    }

    /// Records an already written file.
    pub fn add_file(&mut self, path: &Path) -> Result<(), CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        self.artifacts.retain(|a| a.path != path);
        self.artifacts.push(Artifact {
            path: path.to_path_buf(),
            sha256: hex::encode(Sha256::digest(&bytes)),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    /// Writes `contents` to `path`, creating parent directories, and records it.
    pub fn write(&mut self, path: &Path, contents: &[u8]) -> Result<(), CliError> {
        create_parent(path)?;
        std::fs::write(path, contents).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        self.add_file(path)
    }

    pub fn has_artifact(&self, name: &str) -> bool {
        self.artifacts
            .iter()
            .any(|a| a.path.file_name().is_some_and(|f| f == name))
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        create_parent(path)?;
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, text + "\n").map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

pub fn create_parent(path: &Path) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("{}: {e}", dir.display())))?;
    }
    Ok(())
}
