//! Logits CSV and report files.
//!
//! CSV layout: a `label,z0,z1,...,z{C-1}` header, then one record per line.
//! Logits are written with 17 significant digits so a save/load round trip
//! reproduces every value bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{LogitRecord, LogitsDataset};
use crate::error::{Error, Result};
use crate::math::LogitVector;
use crate::metrics::CalibrationReport;

pub fn load_csv(path: impl AsRef<Path>) -> Result<LogitsDataset> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: u64, reason: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        reason,
    };

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(bytes.as_slice());
    let header = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    let num_classes = header.len().saturating_sub(1);
    if header.get(0) != Some("label") || num_classes < 2 {
        return Err(parse_err(
            1,
            "header must be `label,z0,z1,...` with at least two logit columns".into(),
        ));
    }
    for (j, name) in header.iter().skip(1).enumerate() {
        if name != format!("z{j}") {
            return Err(parse_err(
                1,
                format!("column {} must be named `z{j}`, found `{name}`", j + 1),
            ));
        }
    }

    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let label: usize = row[0].parse().map_err(|_| {
            parse_err(
                line,
                format!("label `{}` is not a non-negative integer", &row[0]),
            )
        })?;
        if label >= num_classes {
            return Err(parse_err(
                line,
                format!("label {label} out of range for {num_classes} classes"),
            ));
        }
        let values = row
            .iter()
            .skip(1)
            .enumerate()
            .map(|(j, field)| match field.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                Ok(v) => Err(parse_err(line, format!("z{j} is not finite ({v})"))),
                Err(_) => Err(parse_err(
                    line,
                    format!("z{j} value `{field}` is not a number"),
                )),
            })
            .collect::<Result<Vec<f64>>>()?;
        records.push(LogitRecord {
            label,
            logits: LogitVector::new(values).map_err(|e| parse_err(line, e.to_string()))?,
        });
    }
    if records.is_empty() {
        return Err(parse_err(1, "file has a header but no records".into()));
    }

    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    LogitsDataset::new(name, records)
}

/// Render the dataset in the logits CSV layout.
pub fn to_csv_string(ds: &LogitsDataset) -> String {
    let mut out = String::from("label");
    for j in 0..ds.num_classes() {
        let _ = write!(out, ",z{j}");
    }
    out.push('\n');
    for r in ds.records() {
        let _ = write!(out, "{}", r.label);
        for v in r.logits.as_slice() {
            let _ = write!(out, ",{v:.16e}");
        }
        out.push('\n');
    }
    out
}

pub fn save_csv(ds: &LogitsDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if ds.is_empty() {
        return Err(Error::InvalidInput(format!(
            "refusing to write an empty dataset to {}",
            path.display()
        )));
    }
    fs::write(path, to_csv_string(ds)).map_err(|e| Error::io(path, e))
}

pub fn save_report(report: &CalibrationReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(report).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
