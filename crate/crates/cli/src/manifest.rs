//! Per-invocation manifest: what ran, with which config and seeds, and which
//! files it produced.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::records::{
    read_aggregate, read_chromosome, read_generation_log, read_metrics, read_trajectory_rows, RecordError,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactKind {
    Metrics,
    Trajectory,
    GenerationLog,
    Aggregate,
    Chromosome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    /// Relative to the manifest's directory.
    pub path: String,
    pub kind: ArtifactKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_sha256: String,
    pub config: String,
    pub seeds: Vec<u64>,
    pub artifacts: Vec<Artifact>,
    pub wall_seconds: f64,
}

pub fn config_hash(serialized: &str) -> String {
    hex::encode(Sha256::digest(serialized.as_bytes()))
}

impl RunManifest {
    pub fn new(command: &str, config: String, seeds: Vec<u64>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config_sha256: config_hash(&config),
            config,
            seeds,
            artifacts: Vec::new(),
            wall_seconds: 0.0,
        }
    }

    pub fn add(&mut self, dir: &Path, path: &Path, kind: ArtifactKind) {
        let rel = path.strip_prefix(dir).unwrap_or(path);
        self.artifacts.push(Artifact {
            path: rel.to_string_lossy().into_owned(),
            kind,
        });
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<PathBuf> {
        let path = dir.join("manifest.json");
        let json = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        std::fs::write(&path, json + "\n")?;
        Ok(path)
    }

    pub fn read(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(std::io::Error::other)
    }

    /// Checks that every artifact exists and parses with its reader.
    pub fn verify(&self, dir: &Path) -> Result<(), RecordError> {
        for a in &self.artifacts {
            let p = dir.join(&a.path);
            match a.kind {
                ArtifactKind::Metrics => read_metrics(&p).map(drop)?,
                ArtifactKind::Trajectory => read_trajectory_rows(&p).map(drop)?,
                ArtifactKind::GenerationLog => read_generation_log(&p).map(drop)?,
                ArtifactKind::Aggregate => read_aggregate(&p).map(drop)?,
                ArtifactKind::Chromosome => read_chromosome(&p).map(drop)?,
            }
        }
        Ok(())
    }
}
