//! CSV tables and run artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::Result;

/// Shortest round-trip representation, so equal values always print the
/// same bytes.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

/// An in-memory CSV table; nothing touches the disk until the whole run
/// has succeeded.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.to_string(), header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push<I, S>(&mut self, row: I)
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let row: Vec<String> = row.into_iter().map(Into::into).collect();
        debug_assert_eq!(row.len(), self.header.len(), "row width of {}", self.name);
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| crate::Error::Io(e.into_error()))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes the tables and `report.json` into `dir`, creating it if needed.
/// Each file goes through a temporary name first so a reader never sees a
/// half-written artifact.
pub fn write_artifacts(dir: &Path, tables: &[Table], report: &serde_json::Value) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut files: Vec<(PathBuf, Vec<u8>)> = Vec::with_capacity(tables.len() + 1);
    for t in tables {
        files.push((dir.join(t.file_name()), t.to_csv()?));
    }
    let mut json = serde_json::to_vec_pretty(report)?;
    json.push(b'\n');
    files.push((dir.join("report.json"), json));
    let mut written = Vec::with_capacity(files.len());
    for (path, bytes) in files {
        let tmp = path.with_extension("partial");
        fs::write(&tmp, bytes)?;
        fs::rename(&tmp, &path)?;
        written.push(path);
    }
    Ok(written)
}
