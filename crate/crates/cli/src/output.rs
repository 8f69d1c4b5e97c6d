//! Staged, atomic file output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::manifest::RunManifest;

/// Files are collected in memory and only written once the command has
/// succeeded, each through a temporary file renamed into place.
pub struct Outputs {
    dir: PathBuf,
    files: Vec<(String, String)>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Self {
        Outputs { dir: dir.to_path_buf(), files: Vec::new() }
    }

    /// JSON document `{"manifest": ..., <body fields>}`.
    pub fn json<T: Serialize>(&mut self, name: &str, manifest: &RunManifest, body: &T) -> serde_json::Result<()> {
        let mut value = serde_json::to_value(body)?;
        let object = match value.as_object_mut() {
            Some(o) => o,
            None => unreachable!("output bodies are JSON objects"),
        };
        let mut doc = serde_json::Map::new();
        doc.insert("manifest".into(), serde_json::to_value(manifest)?);
        doc.extend(std::mem::take(object));
        let mut text = serde_json::to_string_pretty(&serde_json::Value::Object(doc))?;
        text.push('\n');
        self.files.push((name.to_string(), text));
        Ok(())
    }

    /// CSV text preceded by a `# manifest: {...}` line.
    pub fn csv(&mut self, name: &str, manifest: &RunManifest, header: &str, rows: &[String]) -> serde_json::Result<()> {
        let mut text = format!("# manifest: {}\n{header}\n", serde_json::to_string(manifest)?);
        for r in rows {
            text.push_str(r);
            text.push('\n');
        }
        self.files.push((name.to_string(), text));
        Ok(())
    }

    /// Verbatim text with no manifest, for files meant to be read back as input.
    pub fn raw(&mut self, name: &str, text: String) {
        self.files.push((name.to_string(), text));
    }

    pub fn commit(self) -> std::io::Result<Vec<PathBuf>> {
        fs::create_dir_all(&self.dir)?;
        let mut written = Vec::with_capacity(self.files.len());
        for (name, text) in self.files {
            let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
            tmp.write_all(text.as_bytes())?;
            tmp.flush()?;
            let path = self.dir.join(name);
            tmp.persist(&path).map_err(|e| e.error)?;
            written.push(path);
        }
        Ok(written)
    }
}

pub fn flag(b: bool) -> u8 {
    u8::from(b)
}
