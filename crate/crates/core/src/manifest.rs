// SPDX-License-Identifier: Apache-2.0
// Copyright The TASS Toolkit Authors

//! Run manifests: what a command read, with which parameters, and what it
//! wrote. Only `created_at` differs between runs on identical inputs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub parameters: BTreeMap<String, String>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    #[serde(default)]
    pub summary: BTreeMap<String, String>,
    pub created_at: String,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        RunManifest {
            command: command.to_string(),
            tool_version: TOOL_VERSION.to_string(),
            parameters: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            summary: BTreeMap::new(),
            created_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.parameters.insert(key.to_string(), value.to_string());
        self
    }

    pub fn note(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.summary.insert(key.to_string(), value.to_string());
        self
    }

    pub fn input(&mut self, role: &str, path: &Path, content: &[u8]) -> &mut Self {
        self.inputs.push(digest(role, path, content));
        self
    }

    pub fn output(&mut self, role: &str, path: &Path, content: &[u8]) -> &mut Self {
        self.outputs.push(digest(role, path, content));
        self
    }

    pub fn find_input(&self, role: &str) -> Option<&FileDigest> {
        self.inputs.iter().find(|d| d.role == role)
    }

    pub fn find_output(&self, role: &str) -> Option<&FileDigest> {
        self.outputs.iter().find(|d| d.role == role)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

fn digest(role: &str, path: &Path, content: &[u8]) -> FileDigest {
    FileDigest {
        role: role.to_string(),
        path: path.display().to_string(),
        sha256: sha256_hex(content),
    }
}

pub fn sha256_hex(content: &[u8]) -> String {
    Sha256::digest(content)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// `<path>.manifest.json`, next to the file it describes.
pub fn default_manifest_path(primary: &Path) -> PathBuf {
    let mut name = primary.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Resolve a path recorded in a manifest: as given if it exists, otherwise
/// relative to the manifest's directory.
pub fn resolve_recorded(recorded: &str, manifest_path: &Path) -> PathBuf {
    let direct = PathBuf::from(recorded);
    if direct.is_absolute() || direct.exists() {
        return direct;
    }
    match manifest_path.parent() {
        Some(dir) => {
            let beside = dir.join(&direct);
            if beside.exists() {
                beside
            } else {
                direct
            }
        }
        None => direct,
    }
}
