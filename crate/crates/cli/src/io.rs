//! Output files: CSV with `#` provenance comments, raw snapshots with JSON
//! sidecars. Every file is written to a temporary name and renamed into place.

use std::fs;
use std::path::{Path, PathBuf};

use etdms_core::spectral::SpectralField;
use serde::Serialize;

use crate::{Error, Result};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::Io(path.display().to_string(), e)
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

/// Writes `bytes` to `path` via a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// Shortest round-trip representation, so reruns compare bit-exactly as text.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// A CSV table buffered in memory.
pub struct CsvTable {
    comments: Vec<String>,
    writer: csv::Writer<Vec<u8>>,
}

impl CsvTable {
    pub fn new(comments: Vec<String>, header: &[&str]) -> Result<Self> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header)?;
        Ok(Self { comments, writer })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        Ok(())
    }

    pub fn into_bytes(self) -> Result<Vec<u8>> {
        let body = self.writer.into_inner().map_err(|e| Error::Io("csv buffer".into(), e.into_error()))?;
        let mut out = Vec::with_capacity(body.len() + 256);
        for line in &self.comments {
            for part in line.lines() {
                out.extend_from_slice(b"# ");
                out.extend_from_slice(part.as_bytes());
                out.push(b'\n');
            }
        }
        out.extend_from_slice(&body);
        Ok(out)
    }

    pub fn write(self, path: &Path) -> Result<()> {
        let bytes = self.into_bytes()?;
        write_atomic(path, &bytes)
    }
}

/// Reads a CSV written by [`CsvTable`], skipping the comment lines.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    let header = reader.headers()?.iter().map(str::to_owned).collect();
    let mut rows = Vec::new();
    for rec in reader.records() {
        rows.push(rec?.iter().map(str::to_owned).collect());
    }
    Ok((header, rows))
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct SnapshotMeta {
    pub n: usize,
    pub length: f64,
    pub t: f64,
    pub step: usize,
    pub config_sha256: String,
    pub layout: String,
}

/// Writes `<stem>.f64` (row-major little-endian physical values) and `<stem>.json`.
pub fn write_snapshot(dir: &Path, stem: &str, u: &SpectralField, t: f64, step: usize, config_sha256: &str) -> Result<PathBuf> {
    let grid = u.grid();
    let values = u.to_physical();
    let mut bytes = Vec::with_capacity(values.len() * 8);
    for v in &values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    let data = dir.join(format!("{stem}.f64"));
    write_atomic(&data, &bytes)?;
    let meta = SnapshotMeta {
        n: grid.n(),
        length: grid.length(),
        t,
        step,
        config_sha256: config_sha256.to_owned(),
        layout: "row-major (y, x), little-endian f64".to_owned(),
    };
    write_json(&dir.join(format!("{stem}.json")), &meta)?;
    Ok(data)
}

pub fn read_snapshot(data: &Path) -> Result<(SnapshotMeta, Vec<f64>)> {
    let meta_path = data.with_extension("json");
    let text = fs::read_to_string(&meta_path).map_err(io_err(&meta_path))?;
    let meta: SnapshotMeta = serde_json::from_str(&text)?;
    let bytes = fs::read(data).map_err(io_err(data))?;
    let values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    Ok((meta, values))
}
