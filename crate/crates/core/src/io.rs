//! Readers and writers for point CSV files, fiber JSON-lines files, tree and
//! labeling documents, plus data set manifests.
//!
//! Point files are CSV with one row per point and an optional header row;
//! lines starting with `#` are comments (writers emit a `# format_version`
//! line). Fiber files hold one JSON array of `[x, y, z]` vertices per line.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::labeling::ClusterLabeling;
use crate::metrics::{FiberSet, PointCloud};
use crate::pipeline::Dataset;
use crate::scalar::Scalar;
use crate::tree::LevelSetTree;

pub const CSV_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataKind {
    Points,
    Fibers,
}

impl std::str::FromStr for DataKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "points" => Ok(DataKind::Points),
            "fibers" => Ok(DataKind::Fibers),
            other => Err(Error::invalid(format!("unknown data kind {other:?}"))),
        }
    }
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_finite(cell: &str, line: usize, col: usize) -> Result<f64> {
    let v: f64 = cell
        .trim()
        .parse()
        .map_err(|_| parse_error(line, format!("column {}: {cell:?} is not a number", col + 1)))?;
    if !v.is_finite() {
        return Err(parse_error(line, format!("column {}: non-finite value", col + 1)));
    }
    Ok(v)
}

/// Parses point CSV text. The first row is treated as a header when any of
/// its cells is not a number.
pub fn parse_points<T: Scalar>(text: &str) -> Result<PointCloud<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut dim: Option<usize> = None;
    let mut coords: Vec<T> = Vec::new();
    let mut first = true;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            parse_error(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.iter().all(|c| c.is_empty()) {
            continue;
        }
        if first {
            first = false;
            if record.iter().any(|c| c.parse::<f64>().is_err()) {
                continue;
            }
        }
        match dim {
            None => dim = Some(record.len()),
            Some(d) if d != record.len() => {
                return Err(parse_error(
                    line,
                    format!("ragged row: {} columns, expected {d}", record.len()),
                ))
            }
            _ => {}
        }
        for (col, cell) in record.iter().enumerate() {
            coords.push(T::from_f64_lossy(parse_finite(cell, line, col)?));
        }
    }
    let Some(dim) = dim else {
        return Err(Error::invalid("no points found"));
    };
    PointCloud::from_flat(dim, coords)
}

pub fn read_points<T: Scalar>(path: impl AsRef<Path>) -> Result<PointCloud<T>> {
    parse_points(&fs::read_to_string(path)?)
}

/// CSV text for `points`, shortest round-trip representation per value.
pub fn format_points<T: Scalar>(points: &PointCloud<T>) -> String {
    let mut out = format!("# format_version: {CSV_FORMAT_VERSION}\n");
    for p in points.iter() {
        let row: Vec<String> = p.iter().map(|c| c.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn write_points<T: Scalar>(path: impl AsRef<Path>, points: &PointCloud<T>) -> Result<()> {
    fs::write(path, format_points(points))?;
    Ok(())
}

/// Parses fiber JSON-lines; blank lines are skipped.
pub fn parse_fibers<T: Scalar>(reader: impl BufRead) -> Result<FiberSet<T>> {
    let mut fibers = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: Vec<[f64; 3]> = serde_json::from_str(&line)
            .map_err(|e| parse_error(line_no, format!("expected an array of [x, y, z] triplets: {e}")))?;
        if raw.len() < 2 {
            return Err(parse_error(line_no, format!("fiber has {} vertices, need at least 2", raw.len())));
        }
        if raw.iter().flatten().any(|c| !c.is_finite()) {
            return Err(parse_error(line_no, "non-finite vertex"));
        }
        fibers.push(
            raw.into_iter()
                .map(|v| v.map(T::from_f64_lossy))
                .collect::<Vec<_>>(),
        );
    }
    FiberSet::new(fibers)
}

pub fn read_fibers<T: Scalar>(path: impl AsRef<Path>) -> Result<FiberSet<T>> {
    parse_fibers(BufReader::new(fs::File::open(path)?))
}

pub fn write_fibers<T: Scalar>(path: impl AsRef<Path>, fibers: &FiberSet<T>) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    for f in fibers.fibers() {
        let line = serde_json::to_string(f).expect("fibers serialize");
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_dataset<T: Scalar>(path: impl AsRef<Path>, kind: DataKind) -> Result<Dataset<T>> {
    Ok(match kind {
        DataKind::Points => Dataset::Points(read_points(path)?),
        DataKind::Fibers => Dataset::Fibers(read_fibers(path)?),
    })
}

pub fn write_tree<T: Scalar>(path: impl AsRef<Path>, tree: &LevelSetTree<T>) -> Result<()> {
    fs::write(path, tree.to_json())?;
    Ok(())
}

pub fn read_tree<T: Scalar>(path: impl AsRef<Path>) -> Result<LevelSetTree<T>> {
    LevelSetTree::from_json(&fs::read_to_string(path)?)
}

pub fn write_labeling(path: impl AsRef<Path>, labeling: &ClusterLabeling) -> Result<()> {
    fs::write(path, labeling.to_json())?;
    Ok(())
}

pub fn read_labeling(path: impl AsRef<Path>) -> Result<ClusterLabeling> {
    ClusterLabeling::from_json(&fs::read_to_string(path)?)
}

/// Vertex-count summary of a fiber file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexStats {
    pub min: usize,
    pub max: usize,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub path: PathBuf,
    pub kind: DataKind,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vertices: Option<VertexStats>,
    /// SHA-256 of the file bytes, hex encoded.
    pub digest: String,
}

fn file_digest(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

impl DatasetManifest {
    /// Reads `path` as `kind` and records its shape and digest.
    pub fn describe(path: impl AsRef<Path>, kind: DataKind) -> Result<Self> {
        let path = path.as_ref();
        let data = read_dataset::<f64>(path, kind)?;
        let (dim, vertices) = match &data {
            Dataset::Points(p) => (Some(p.dim()), None),
            Dataset::Fibers(f) => {
                let counts: Vec<usize> = f.fibers().iter().map(Vec::len).collect();
                let stats = VertexStats {
                    min: counts.iter().copied().min().unwrap_or(0),
                    max: counts.iter().copied().max().unwrap_or(0),
                    mean: counts.iter().sum::<usize>() as f64 / counts.len().max(1) as f64,
                };
                (None, Some(stats))
            }
        };
        Ok(Self {
            path: path.to_path_buf(),
            kind,
            n: data.len(),
            dim,
            vertices,
            digest: file_digest(path)?,
        })
    }

    /// Whether the file on disk still matches the recorded digest.
    pub fn verify(&self) -> Result<bool> {
        Ok(file_digest(&self.path)? == self.digest)
    }
}
