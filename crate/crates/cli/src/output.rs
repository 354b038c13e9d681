//! Tabular results and their CSV / JSON emission.

use std::io::Write;
use std::path::Path;

use serde_json::Value;
use tempfile::NamedTempFile;

use crate::config::Format;

/// A finished computation: plot-ready rows plus the nested JSON form.
pub struct Output {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub json: Value,
    /// Format used when none is requested.
    pub default_format: Format,
}

/// Shortest representation that round-trips; `-0` prints as `0`.
pub fn num(x: f64) -> String {
    (x + 0.0).to_string()
}

impl Output {
    pub fn render(&self, format: Format) -> Vec<u8> {
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&self.header).expect("in-memory write");
                for row in &self.rows {
                    w.write_record(row).expect("in-memory write");
                }
                w.into_inner().expect("in-memory write")
            }
            Format::Json => {
                let mut bytes = serde_json::to_vec_pretty(&self.json).expect("json serializes");
                bytes.push(b'\n');
                bytes
            }
        }
    }
}

/// Checks up front that `path` can be written, so a long run does not fail at the end.
pub fn preflight(path: &Path) -> std::io::Result<()> {
    if path.is_dir() {
        return Err(std::io::Error::other(format!("{} is a directory", path.display())));
    }
    NamedTempFile::new_in(parent(path)).map(drop)
}

fn parent(path: &Path) -> &Path {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    }
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let mut tmp = NamedTempFile::new_in(parent(path))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
