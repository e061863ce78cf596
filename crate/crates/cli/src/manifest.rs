use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Everything needed to reproduce a run, written next to its dataset.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    /// The full command line, program name first.
    pub command: Vec<String>,
    pub seed: u64,
    /// How random streams are derived from `seed`.
    pub streams: &'static str,
    pub params: serde_json::Value,
    pub outputs: Vec<FileDigest>,
}

#[derive(Debug, Serialize)]
pub struct FileDigest {
    /// File name relative to the manifest.
    pub file: String,
    pub bytes: u64,
    pub sha256: String,
}

impl RunManifest {
    pub fn new(command: &[String], seed: u64, streams: &'static str, params: serde_json::Value) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_vec(),
            seed,
            streams,
            params,
            outputs: Vec::new(),
        }
    }

    pub fn add_output(&mut self, path: &Path) -> anyhow::Result<()> {
        self.outputs.push(digest(path)?);
        Ok(())
    }

    pub fn write(&self, path: &Path) -> anyhow::Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        File::create(path)
            .and_then(|mut f| f.write_all(text.as_bytes()))
            .with_context(|| format!("cannot write {}", path.display()))
    }
}

pub fn digest(path: &Path) -> anyhow::Result<FileDigest> {
    let file = File::open(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut reader = BufReader::new(file);
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    let mut bytes = 0u64;
    loop {
        let n = reader.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
        bytes += n as u64;
    }
    Ok(FileDigest {
        file: path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        bytes,
        sha256: hex::encode(hasher.finalize()),
    })
}
