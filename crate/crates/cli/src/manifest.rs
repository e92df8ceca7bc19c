//! `manifest.csv`: every file of a run with its size and SHA-256, marked
//! `complete` or `partial` depending on how the run ended.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::{csv_writer, CliError, Result};

pub const MANIFEST: &str = "manifest.csv";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Complete,
    Partial,
}

impl Status {
    fn as_str(self) -> &'static str {
        match self {
            Status::Complete => "complete",
            Status::Partial => "partial",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entry {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::output(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| CliError::output(dir, err)))
        .collect::<Result<_>>()?;
    entries.sort();
    for p in entries {
        if p.is_dir() {
            walk(&p, out)?;
        } else {
            out.push(p);
        }
    }
    Ok(())
}

/// Hashes every file under `root` except an existing manifest.
pub fn collect(root: &Path) -> Result<Vec<Entry>> {
    let mut files = Vec::new();
    walk(root, &mut files)?;
    let mut entries = Vec::new();
    for f in files {
        let rel = f.strip_prefix(root).expect("walked from root");
        let path = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        if path == MANIFEST {
            continue;
        }
        let bytes = fs::read(&f).map_err(|e| CliError::output(&f, e))?;
        entries.push(Entry {
            path,
            bytes: bytes.len() as u64,
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
    }
    Ok(entries)
}

pub fn write(root: &Path, status: Status) -> Result<Vec<Entry>> {
    let entries = collect(root)?;
    let path = root.join(MANIFEST);
    let mut w = csv_writer(&path)?;
    let err = |e| CliError::csv(&path, e);
    w.write_record(["path", "bytes", "sha256", "status"]).map_err(err)?;
    for e in &entries {
        w.write_record([e.path.as_str(), &e.bytes.to_string(), &e.sha256, status.as_str()])
            .map_err(err)?;
    }
    w.flush().map_err(|e| CliError::output(&path, e))?;
    Ok(entries)
}
