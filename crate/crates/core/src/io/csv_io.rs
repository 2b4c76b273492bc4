//! Long-format CSV ingestion and the CSV outputs of the CLI.
//!
//! Input columns: `group,replicate,time,value` (UTF-8, comma-separated,
//! header required). Times are hours as decimals; an empty value cell is a
//! missing response to be predicted.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ssm::{DataRecord, Dataset};

pub fn read_long_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(false)
        .from_path(path.as_ref())?;

    let headers = reader.headers()?.clone();
    let expect = ["group", "replicate", "time", "value"];
    let got: Vec<String> = headers.iter().map(|h| h.to_ascii_lowercase()).collect();
    if got != expect {
        return Err(Error::MalformedRow {
            line: 1,
            message: format!("header must be group,replicate,time,value; got {}", got.join(",")),
        });
    }

    let mut records = Vec::new();
    let mut seen: BTreeSet<(String, String, u64)> = BTreeSet::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        if row.len() != 4 {
            return Err(Error::MalformedRow {
                line,
                message: format!("expected 4 fields, got {}", row.len()),
            });
        }
        let group = row[0].to_string();
        let replicate = row[1].to_string();
        if group.is_empty() || replicate.is_empty() {
            return Err(Error::MalformedRow { line, message: "empty group or replicate".into() });
        }
        let time: f64 = row[2]
            .parse()
            .map_err(|e| Error::MalformedRow { line, message: format!("bad time {:?}: {e}", &row[2]) })?;
        if !time.is_finite() {
            return Err(Error::MalformedRow { line, message: format!("non-finite time {time}") });
        }
        let value = if row[3].is_empty() {
            None
        } else {
            let v: f64 = row[3].parse().map_err(|e| Error::MalformedRow {
                line,
                message: format!("bad value {:?}: {e}", &row[3]),
            })?;
            if !v.is_finite() {
                return Err(Error::MalformedRow { line, message: format!("non-finite value {v}") });
            }
            Some(v)
        };
        if !seen.insert((group.clone(), replicate.clone(), time.to_bits())) {
            return Err(Error::DuplicateRecord { line });
        }
        records.push(DataRecord { group, replicate, time, value });
    }
    Dataset::new(records)
}

/// Multiply every value by `scale` (the CLI's `--scale` switch).
pub fn scale_values(data: &Dataset, scale: f64) -> Result<Dataset> {
    if !(scale.is_finite() && scale != 0.0) {
        return Err(Error::Usage(format!("scale must be finite and non-zero, got {scale}")));
    }
    let records = data
        .records()
        .iter()
        .map(|r| DataRecord { value: r.value.map(|v| v * scale), ..r.clone() })
        .collect();
    Dataset::new(records)
}

/// SHA-256 of the canonical record listing, used to tie artifacts to the
/// data file they were fitted on.
pub fn dataset_fingerprint(data: &Dataset) -> String {
    let mut hasher = Sha256::new();
    for r in data.records() {
        let value = r.value.map_or(String::new(), |v| format!("{v}"));
        hasher.update(format!("{},{},{},{}\n", r.group, r.replicate, r.time, value));
    }
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

pub fn write_dataset_csv(mut w: impl Write, data: &Dataset) -> Result<()> {
    writeln!(w, "group,replicate,time,value")?;
    for r in data.records() {
        let value = r.value.map_or(String::new(), |v| format!("{v}"));
        writeln!(w, "{},{},{},{}", r.group, r.replicate, r.time, value)?;
    }
    Ok(())
}

/// One row of the `predict` output: a component value at a time with its
/// band.
#[derive(Debug, Clone)]
pub struct ComponentRow {
    pub component: String,
    pub replicate: String,
    pub time: f64,
    pub estimate: f64,
    pub variance: f64,
    pub lower: f64,
    pub upper: f64,
}

pub fn write_component_csv(mut w: impl Write, rows: &[ComponentRow]) -> Result<()> {
    writeln!(w, "component,replicate,time,estimate,variance,lower,upper")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.component, r.replicate, r.time, r.estimate, r.variance, r.lower, r.upper
        )?;
    }
    Ok(())
}

/// One row of the `compare` output.
#[derive(Debug, Clone)]
pub struct DifferenceRow {
    pub time: f64,
    pub difference: f64,
    pub variance: f64,
    pub lower: f64,
    pub upper: f64,
}

pub fn write_difference_csv(mut w: impl Write, rows: &[DifferenceRow]) -> Result<()> {
    writeln!(w, "time,difference,variance,lower,upper")?;
    for r in rows {
        writeln!(w, "{},{},{},{},{}", r.time, r.difference, r.variance, r.lower, r.upper)?;
    }
    Ok(())
}

pub fn read_difference_csv(path: impl AsRef<Path>) -> Result<Vec<DifferenceRow>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path.as_ref())?;
    let mut rows = Vec::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize| -> Result<f64> {
            row.get(i)
                .ok_or_else(|| Error::MalformedRow { line, message: format!("missing field {i}") })?
                .parse()
                .map_err(|e| Error::MalformedRow { line, message: format!("{e}") })
        };
        rows.push(DifferenceRow {
            time: field(0)?,
            difference: field(1)?,
            variance: field(2)?,
            lower: field(3)?,
            upper: field(4)?,
        });
    }
    Ok(rows)
}
