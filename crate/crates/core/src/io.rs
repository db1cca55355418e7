//! Path ingestion from CSV files and JSON-lines datasets.
//!
//! CSV files carry a header `t,x1,...,xd` and one sample per row. Paths are
//! always rebased to start at the origin, so absolute offsets are discarded.

use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::path::PiecewiseLinearPath;

/// A path with an identifier.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledPath {
    pub id: String,
    pub path: PiecewiseLinearPath,
}

/// Parses CSV text; `source` names the input in error messages.
pub fn parse_csv_path<R: Read>(reader: R, source: &str) -> Result<PiecewiseLinearPath> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::parse(format!("{source}:1"), e.to_string()))?
        .clone();
    if headers.get(0) != Some("t") {
        return Err(Error::parse(format!("{source}:1"), "first column must be named \"t\""));
    }
    let dim = headers.len() - 1;
    if dim == 0 {
        return Err(Error::parse(format!("{source}:1"), "missing column \"x1\""));
    }
    for (k, h) in headers.iter().skip(1).enumerate() {
        let want = format!("x{}", k + 1);
        if h != want {
            return Err(Error::parse(
                format!("{source}:1"),
                format!("missing column \"{want}\" (found \"{h}\")"),
            ));
        }
    }
    let mut times = Vec::new();
    let mut points = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            Error::parse(format!("{source}:{line}"), e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let at = || format!("{source}:{line}");
        if record.len() != headers.len() {
            return Err(Error::parse(at(), format!("expected {} fields, found {}", headers.len(), record.len())));
        }
        let mut values = Vec::with_capacity(record.len());
        for (field, name) in record.iter().zip(headers.iter()) {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::parse(at(), format!("column \"{name}\": not a number: {field:?}")))?;
            if !v.is_finite() {
                return Err(Error::parse(at(), format!("column \"{name}\": value must be finite")));
            }
            values.push(v);
        }
        times.push(values[0]);
        points.push(values[1..].to_vec());
    }
    PiecewiseLinearPath::from_samples(&times, &points).map_err(|e| Error::parse(source.to_string(), e.to_string()))
}

pub fn read_csv_path(path: &Path) -> Result<PiecewiseLinearPath> {
    let file = File::open(path)?;
    parse_csv_path(BufReader::new(file), &path.display().to_string())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    id: String,
    t: Vec<f64>,
    x: Vec<Vec<f64>>,
}

/// Parses JSON lines `{"id": ..., "t": [...], "x": [[...], ...]}`; blank lines are skipped.
pub fn parse_jsonl_dataset<R: BufRead>(reader: R, source: &str) -> Result<Vec<LabeledPath>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let at = format!("{source}:{}", i + 1);
        let rec: Record = serde_json::from_str(&line).map_err(|e| Error::parse(at.clone(), e.to_string()))?;
        let path = PiecewiseLinearPath::from_samples(&rec.t, &rec.x).map_err(|e| Error::parse(at, e.to_string()))?;
        out.push(LabeledPath { id: rec.id, path });
    }
    if out.is_empty() {
        return Err(Error::parse(source.to_string(), "dataset contains no paths"));
    }
    Ok(out)
}

/// Loads a dataset: a single `.jsonl` file, or one CSV file per path (labelled by file stem).
pub fn load_dataset(files: &[impl AsRef<Path>]) -> Result<Vec<LabeledPath>> {
    if let [single] = files {
        let p = single.as_ref();
        if p.extension().and_then(|e| e.to_str()) == Some("jsonl") {
            let file = File::open(p)?;
            return parse_jsonl_dataset(BufReader::new(file), &p.display().to_string());
        }
    }
    if files.is_empty() {
        return Err(Error::invalid("no input files"));
    }
    files
        .iter()
        .map(|f| {
            let p = f.as_ref();
            Ok(LabeledPath {
                id: p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
                path: read_csv_path(p)?,
            })
        })
        .collect()
}
