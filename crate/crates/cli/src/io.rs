use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Lines, Write};
use std::marker::PhantomData;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

use crate::domain::Domain;

/// Why a record could not be read from a dataset.
#[derive(Debug)]
pub enum ReadError {
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    Corrupt {
        path: PathBuf,
        line: usize,
        reason: String,
    },
}

impl fmt::Display for ReadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReadError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            ReadError::Corrupt { path, line, reason } => {
                write!(f, "{}:{line}: corrupt record: {reason}", path.display())
            }
        }
    }
}

impl std::error::Error for ReadError {}

/// Streams the records of a JSON-lines dataset, checking each one.
pub struct Records<D: Domain> {
    path: PathBuf,
    lines: Lines<BufReader<File>>,
    line: usize,
    _domain: PhantomData<D>,
}

impl<D: Domain> Records<D> {
    pub fn open(path: &Path) -> anyhow::Result<Self> {
        let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
        Ok(Self {
            path: path.to_owned(),
            lines: BufReader::new(file).lines(),
            line: 0,
            _domain: PhantomData,
        })
    }

    /// Lines consumed so far.
    pub fn line(&self) -> usize {
        self.line
    }

    fn corrupt(&self, reason: String) -> ReadError {
        ReadError::Corrupt {
            path: self.path.clone(),
            line: self.line,
            reason,
        }
    }
}

impl<D: Domain> Iterator for Records<D> {
    type Item = Result<D::Sample, ReadError>;

    fn next(&mut self) -> Option<Self::Item> {
        let text = match self.lines.next()? {
            Ok(t) => t,
            Err(source) => {
                return Some(Err(ReadError::Io {
                    path: self.path.clone(),
                    source,
                }))
            }
        };
        self.line += 1;
        let sample: D::Sample = match serde_json::from_str(&text) {
            Ok(s) => s,
            Err(e) => return Some(Err(self.corrupt(e.to_string()))),
        };
        Some(D::check(&sample).map(|()| sample).map_err(|r| self.corrupt(r)))
    }
}

/// Writes one JSON object per line, LF-terminated.
pub struct JsonlWriter {
    out: BufWriter<File>,
    path: PathBuf,
}

impl JsonlWriter {
    pub fn create(path: &Path) -> anyhow::Result<Self> {
        let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
        Ok(Self {
            out: BufWriter::new(file),
            path: path.to_owned(),
        })
    }

    pub fn write<S: Serialize>(&mut self, record: &S) -> anyhow::Result<()> {
        serde_json::to_writer(&mut self.out, record)?;
        self.out.write_all(b"\n")?;
        Ok(())
    }

    pub fn finish(mut self) -> anyhow::Result<()> {
        self.out
            .flush()
            .with_context(|| format!("cannot write {}", self.path.display()))
    }
}

/// `data.jsonl` with suffix `manifest.json` becomes `data.manifest.json`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}
