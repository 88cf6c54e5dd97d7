//! The `metadata.json` written next to every run's outputs.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

pub const METADATA_FILE: &str = "metadata.json";

#[derive(Serialize)]
pub struct SnapshotRef {
    pub path: PathBuf,
    pub sha256: String,
}

/// Where an ingested history came from.
#[derive(Serialize)]
pub struct HistorySource {
    pub repo: PathBuf,
    #[serde(rename = "ref")]
    pub head_ref: String,
    pub head: String,
}

#[derive(Serialize)]
pub struct Metadata<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub created_unix: u64,
    pub config: &'a RunConfig,
    pub snapshot: Option<SnapshotRef>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<HistorySource>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<String>,
}

pub fn sha256_file(path: &Path) -> anyhow::Result<String> {
    let mut file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

pub fn snapshot_ref(path: &Path) -> anyhow::Result<SnapshotRef> {
    Ok(SnapshotRef { path: path.to_path_buf(), sha256: sha256_file(path)? })
}

pub fn write(dir: &Path, meta: &Metadata) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(meta)?;
    text.push('\n');
    fs::write(dir.join(METADATA_FILE), text)
        .with_context(|| format!("writing {}", dir.join(METADATA_FILE).display()))
}

pub fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}
