//! Artifact writing: CSV/JSON/SVG files and the run manifest.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;

#[derive(Debug, Clone, Serialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

/// Output directory, created on the first write.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<FileRecord>,
}

pub fn sha256_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

/// Shortest round-trip decimal form, so identical values give identical bytes.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v}")
    }
}

/// CSV bytes with a header row and one record per row.
pub fn csv_bytes<R, I>(header: &[&str], rows: I) -> Result<Vec<u8>>
where
    R: AsRef<[f64]>,
    I: IntoIterator<Item = R>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.as_ref().iter().map(|&v| fmt_f64(v)))?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

impl OutputDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        OutputDir {
            root: root.into(),
            files: Vec::new(),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Writes `data` under `name` and records its hash.
    pub fn write(&mut self, name: &str, data: &[u8]) -> Result<()> {
        let record = write_file(&self.root, name, data)?;
        self.files.push(record);
        Ok(())
    }

    pub fn record(&mut self, record: FileRecord) {
        self.files.push(record);
    }

    pub fn csv<R, I>(&mut self, name: &str, header: &[&str], rows: I) -> Result<()>
    where
        R: AsRef<[f64]>,
        I: IntoIterator<Item = R>,
    {
        let bytes = csv_bytes(header, rows)?;
        self.write(name, &bytes)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).expect("serializable");
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn files(&self) -> &[FileRecord] {
        &self.files
    }
}

pub fn write_file(root: &Path, name: &str, data: &[u8]) -> Result<FileRecord> {
    let path = root.join(name);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(&path, data)?;
    Ok(FileRecord {
        path: name.to_string(),
        sha256: sha256_hex(data),
        bytes: data.len(),
    })
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a, C: Serialize, T: Serialize> {
    pub command: &'a str,
    pub version: &'a str,
    pub config_sha256: String,
    pub config: &'a C,
    pub tolerances: &'a T,
    /// Wall-clock seconds per stage.
    pub timings: Vec<(String, f64)>,
    pub files: &'a [FileRecord],
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_is_byte_stable() {
        let rows = vec![[0.1, 1.0 / 3.0], [f64::INFINITY, -2.5e-12]];
        let a = csv_bytes(&["x", "y"], &rows).unwrap();
        let b = csv_bytes(&["x", "y"], &rows).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert_eq!(text, "x,y\n0.1,0.3333333333333333\ninf,-0.0000000000025\n");
    }

    #[test]
    fn hash_matches_known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
