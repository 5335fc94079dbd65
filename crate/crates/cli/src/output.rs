//! Run manifests and artifact writing. Every artifact embeds the manifest:
//! JSON reports under a `manifest` key, CSV tables as a leading `#` line.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::{PointFile, ProblemFile};

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub problem_sha256: String,
    pub problem: ProblemFile,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point_sha256: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point: Option<PointFile>,
    pub seed: u64,
    /// Every option that can change the results; thread count excluded.
    pub config: Value,
}

pub fn sha256(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

impl RunManifest {
    /// Hash of the manifest's canonical JSON, a short key for a full configuration.
    pub fn hash(&self) -> String {
        sha256(&serde_json::to_string(self).expect("manifest serializes"))
    }
}

/// Ordered, single-threaded writer for one run's artifacts.
pub struct Artifacts {
    dir: PathBuf,
    manifest: RunManifest,
    written: Vec<PathBuf>,
}

impl Artifacts {
    pub fn new(dir: &Path, manifest: RunManifest) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf(), manifest, written: Vec::new() })
    }

    pub fn manifest(&self) -> &RunManifest {
        &self.manifest
    }

    pub fn json(&mut self, name: &str, result: &impl Serialize) -> Result<()> {
        let body = serde_json::json!({
            "manifest": self.manifest,
            "manifest_sha256": self.manifest.hash(),
            "result": result,
        });
        let path = self.dir.join(name);
        fs::write(&path, serde_json::to_string_pretty(&body)? + "\n").with_context(|| format!("cannot write {}", path.display()))?;
        self.written.push(path);
        Ok(())
    }

    pub fn csv(&mut self, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<()> {
        let path = self.dir.join(name);
        let mut out = format!("# manifest: {}\n", serde_json::to_string(&self.manifest)?).into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(header)?;
            for row in rows {
                w.write_record(row)?;
            }
            w.flush()?;
        }
        fs::write(&path, out).with_context(|| format!("cannot write {}", path.display()))?;
        self.written.push(path);
        Ok(())
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

/// Shortest round-trip representation, so CSV files reproduce bit-exactly.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn vector(v: &[f64]) -> String {
    v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(" ")
}
