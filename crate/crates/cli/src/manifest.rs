//! Provenance record written into every output file.

use std::collections::BTreeMap;

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// Input files, in the order given; `<builtin>` marks shipped defaults.
    pub config_paths: Vec<String>,
    pub overrides: BTreeMap<String, String>,
    pub output_dir: String,
    pub tool_version: String,
    /// SHA-256 over the command, the overrides and every input's contents.
    pub input_hash: String,
}

pub struct ManifestBuilder {
    command: String,
    inputs: Vec<(String, Vec<u8>)>,
    overrides: BTreeMap<String, String>,
}

impl ManifestBuilder {
    pub fn new(command: &str) -> Self {
        ManifestBuilder { command: command.to_string(), inputs: Vec::new(), overrides: BTreeMap::new() }
    }

    pub fn input(&mut self, label: impl Into<String>, contents: impl AsRef<[u8]>) -> &mut Self {
        self.inputs.push((label.into(), contents.as_ref().to_vec()));
        self
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.overrides.insert(key.to_string(), value.to_string());
        self
    }

    pub fn finish(&self, output_dir: &str) -> RunManifest {
        let mut h = Sha256::new();
        let mut field = |bytes: &[u8]| {
            h.update((bytes.len() as u64).to_le_bytes());
            h.update(bytes);
        };
        field(self.command.as_bytes());
        for (k, v) in &self.overrides {
            field(k.as_bytes());
            field(v.as_bytes());
        }
        for (label, contents) in &self.inputs {
            field(label.as_bytes());
            field(contents);
        }
        RunManifest {
            command: self.command.clone(),
            config_paths: self.inputs.iter().map(|(l, _)| l.clone()).collect(),
            overrides: self.overrides.clone(),
            output_dir: output_dir.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            input_hash: hex::encode(h.finalize()),
        }
    }
}
