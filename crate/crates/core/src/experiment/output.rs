//! File formats. Every table is a flat list of records written either as CSV
//! with a header row or as a JSON array of objects with the same field names.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format '{other}' (expected csv or json)")),
        }
    }
}

#[derive(Debug)]
pub enum OutputError {
    Io(std::io::Error),
    Csv(csv::Error),
    Json(serde_json::Error),
    Schema { expected: Vec<String>, found: Vec<String> },
}

impl fmt::Display for OutputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutputError::Io(e) => write!(f, "i/o: {e}"),
            OutputError::Csv(e) => write!(f, "csv: {e}"),
            OutputError::Json(e) => write!(f, "json: {e}"),
            OutputError::Schema { expected, found } => {
                write!(f, "schema mismatch: expected columns {expected:?}, found {found:?}")
            }
        }
    }
}

impl std::error::Error for OutputError {}

impl From<std::io::Error> for OutputError {
    fn from(e: std::io::Error) -> Self {
        OutputError::Io(e)
    }
}
impl From<csv::Error> for OutputError {
    fn from(e: csv::Error) -> Self {
        OutputError::Csv(e)
    }
}
impl From<serde_json::Error> for OutputError {
    fn from(e: serde_json::Error) -> Self {
        OutputError::Json(e)
    }
}

/// A record type with a fixed column list.
pub trait Table: Serialize + DeserializeOwned {
    const COLUMNS: &'static [&'static str];
    /// File stem used under the output directory.
    const STEM: &'static str;
}

/// One node of a solution snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRow {
    pub x: f64,
    pub rho: f64,
    pub rho_v: f64,
    #[serde(rename = "E")]
    pub energy: f64,
}

impl Table for SnapshotRow {
    const COLUMNS: &'static [&'static str] = &["x", "rho", "rho_v", "E"];
    const STEM: &'static str = "snapshot";
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropySample {
    pub t: f64,
    #[serde(rename = "E_total")]
    pub e_total: f64,
    /// Largest positive cell residual relative to its scale.
    pub violation_pos: f64,
    /// Most negative cell residual (strongest dissipation).
    pub residual_min: f64,
}

impl Table for EntropySample {
    const COLUMNS: &'static [&'static str] = &["t", "E_total", "violation_pos", "residual_min"];
    const STEM: &'static str = "entropy";
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRow {
    pub t: f64,
    pub cell: usize,
    #[serde(rename = "lambda_ED")]
    pub lambda_ed: f64,
    /// Sum over the two faces of the cell.
    #[serde(rename = "lambda_ER")]
    pub lambda_er: f64,
    pub residual: f64,
}

impl Table for DiagnosticRow {
    const COLUMNS: &'static [&'static str] = &["t", "cell", "lambda_ED", "lambda_ER", "residual"];
    const STEM: &'static str = "diagnostics";
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    #[serde(rename = "N")]
    pub cells: usize,
    #[serde(rename = "L1")]
    pub l1: f64,
    #[serde(rename = "L2")]
    pub l2: f64,
    #[serde(rename = "order_L1")]
    pub order_l1: Option<f64>,
    #[serde(rename = "order_L2")]
    pub order_l2: Option<f64>,
}

impl Table for ConvergenceRow {
    const COLUMNS: &'static [&'static str] = &["N", "L1", "L2", "order_L1", "order_L2"];
    const STEM: &'static str = "convergence";
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub t: f64,
    #[serde(rename = "E_DG")]
    pub e_dg: f64,
    #[serde(rename = "E_ref")]
    pub e_ref: f64,
}

impl Table for CompareRow {
    const COLUMNS: &'static [&'static str] = &["t", "E_DG", "E_ref"];
    const STEM: &'static str = "compare_entropy";
}

/// Entropy history of the finite-volume reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSample {
    pub t: f64,
    #[serde(rename = "E_total")]
    pub e_total: f64,
}

impl Table for ReferenceSample {
    const COLUMNS: &'static [&'static str] = &["t", "E_total"];
    const STEM: &'static str = "reference_entropy";
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxDtRow {
    pub order: usize,
    pub cells: usize,
    pub multiplier: f64,
    pub dt: f64,
}

impl Table for MaxDtRow {
    const COLUMNS: &'static [&'static str] = &["order", "cells", "multiplier", "dt"];
    const STEM: &'static str = "maxdt";
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxDtTrial {
    pub multiplier: f64,
    pub stable: bool,
}

impl Table for MaxDtTrial {
    const COLUMNS: &'static [&'static str] = &["multiplier", "stable"];
    const STEM: &'static str = "maxdt_trials";
}

pub fn write_table<T: Table>(path: &Path, rows: &[T], format: Format) -> Result<(), OutputError> {
    let file = BufWriter::new(File::create(path)?);
    match format {
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
            w.write_record(T::COLUMNS)?;
            for row in rows {
                w.serialize(row)?;
            }
            w.flush()?;
        }
        Format::Json => {
            let mut file = file;
            serde_json::to_writer_pretty(&mut file, rows)?;
            file.write_all(b"\n")?;
            file.flush()?;
        }
    }
    Ok(())
}

/// Reads a table back, rejecting files whose columns differ from the schema.
pub fn read_table<T: Table>(path: &Path, format: Format) -> Result<Vec<T>, OutputError> {
    let reader = BufReader::new(File::open(path)?);
    match format {
        Format::Csv => {
            let mut r = csv::Reader::from_reader(reader);
            let found: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
            check_columns::<T>(found)?;
            Ok(r.deserialize().collect::<Result<_, _>>()?)
        }
        Format::Json => {
            let values: Vec<serde_json::Map<String, serde_json::Value>> = serde_json::from_reader(reader)?;
            for v in &values {
                let mut found: Vec<String> = v.keys().cloned().collect();
                found.sort();
                let mut expected: Vec<&str> = T::COLUMNS.to_vec();
                expected.sort();
                if found != expected {
                    return Err(OutputError::Schema {
                        expected: T::COLUMNS.iter().map(|s| s.to_string()).collect(),
                        found,
                    });
                }
            }
            Ok(values
                .into_iter()
                .map(|v| serde_json::from_value(serde_json::Value::Object(v)))
                .collect::<Result<_, _>>()?)
        }
    }
}

fn check_columns<T: Table>(found: Vec<String>) -> Result<(), OutputError> {
    if found.iter().map(String::as_str).eq(T::COLUMNS.iter().copied()) {
        Ok(())
    } else {
        Err(OutputError::Schema {
            expected: T::COLUMNS.iter().map(|s| s.to_string()).collect(),
            found,
        })
    }
}

/// Writes any serialisable value as pretty JSON (run metadata, failure records, filter dumps).
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), OutputError> {
    let mut file = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut file, value)?;
    file.write_all(b"\n")?;
    file.flush()?;
    Ok(())
}
