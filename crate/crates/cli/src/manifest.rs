use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tnn_core::encode::StreamSpec;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    pub images: PathBuf,
    pub images_sha256: String,
    pub labels: PathBuf,
    pub labels_sha256: String,
}

/// Everything needed to replay a run bit for bit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    /// Effective configuration, overrides applied.
    pub config: String,
    pub overrides: Vec<String>,
    pub stream_name: String,
    pub stream: StreamSpec,
    pub start: u64,
    pub end: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resumed_from: Option<u64>,
    pub datasets: Vec<Dataset>,
    pub interval: u64,
    pub snapshot_window: Option<(u64, u64)>,
    pub checkpoint_every: Option<usize>,
    /// Files written, relative to the output directory.
    pub artifacts: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn load(path: &Path) -> anyhow::Result<Manifest> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn render(m: &Manifest) -> String {
    let mut s = serde_json::to_string_pretty(m).expect("manifest serializes");
    s.push('\n');
    s
}
