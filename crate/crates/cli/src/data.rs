//! Two-group CSV input.

use std::path::Path;

use rancova::GroupData;
use serde::Serialize;

use crate::error::{CliError, Result};

/// Names of the columns holding the outcome, the covariates and the group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnMap {
    pub y: String,
    pub x1: String,
    pub x2: String,
    pub group: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self { y: "y".into(), x1: "x1".into(), x2: "x2".into(), group: "group".into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    pub y: f64,
    pub x1: f64,
    pub x2: f64,
    pub group: u8,
    pub line: u64,
}

/// A row left out of the analysis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DroppedRow {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub records: Vec<Record>,
    pub dropped: Vec<DroppedRow>,
}

impl Dataset {
    pub fn group_sizes(&self) -> (usize, usize) {
        let n1 = self.records.iter().filter(|r| r.group == 1).count();
        (n1, self.records.len() - n1)
    }

    pub fn split(&self) -> Result<(GroupData, GroupData)> {
        let group = |g: u8| {
            let rows: Vec<(f64, f64, f64)> =
                self.records.iter().filter(|r| r.group == g).map(|r| (r.y, r.x1, r.x2)).collect();
            GroupData::from_records(&rows)
        };
        Ok((group(1)?, group(2)?))
    }
}

fn parse_number(field: Option<&str>) -> std::result::Result<f64, &'static str> {
    let s = field.map(str::trim).unwrap_or("");
    if s.is_empty() {
        return Err("missing value");
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err("non-finite value"),
        Err(_) => Err("non-numeric value"),
    }
}

/// Reads a CSV file with a header row. Rows with a missing or non-numeric
/// outcome or covariate, or a missing group, are dropped and reported. A
/// group label other than 1 or 2 is an error.
pub fn read_dataset(path: &Path, columns: &ColumnMap) -> Result<Dataset> {
    let data_err = |message: String| CliError::Data { path: path.to_path_buf(), message };
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| data_err(e.to_string()))?;
    let headers = reader.headers().map_err(|e| data_err(e.to_string()))?.clone();
    if headers.is_empty() {
        return Err(data_err("empty file".into()));
    }
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| data_err(format!("unknown column '{name}' (have: {})", headers.iter().collect::<Vec<_>>().join(", "))))
    };
    let idx = [find(&columns.y)?, find(&columns.x1)?, find(&columns.x2)?, find(&columns.group)?];

    let mut records = Vec::new();
    let mut dropped = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| data_err(e.to_string()))?;
        let line = row.position().map_or(0, |p| p.line());
        let mut values = [0.0; 3];
        let mut problem = None;
        for (k, name) in [&columns.y, &columns.x1, &columns.x2].into_iter().enumerate() {
            match parse_number(row.get(idx[k])) {
                Ok(v) => values[k] = v,
                Err(why) => {
                    problem = Some(format!("{why} in column '{name}'"));
                    break;
                }
            }
        }
        let label = row.get(idx[3]).map(str::trim).unwrap_or("");
        if label.is_empty() && problem.is_none() {
            problem = Some(format!("missing value in column '{}'", columns.group));
        }
        if let Some(reason) = problem {
            dropped.push(DroppedRow { line, reason });
            continue;
        }
        let group = match label.parse::<f64>() {
            Ok(1.0) => 1,
            Ok(2.0) => 2,
            _ => return Err(data_err(format!("line {line}: group must be 1 or 2, found '{label}'"))),
        };
        records.push(Record { y: values[0], x1: values[1], x2: values[2], group, line });
    }
    if records.is_empty() {
        return Err(data_err("no usable rows".into()));
    }
    Ok(Dataset { records, dropped })
}
