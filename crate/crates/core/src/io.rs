//! JSON problem files and CSV traces.
//!
//! Problem files look like
//!
//! ```json
//! { "name": "simple2", "A": [[1, 1]], "b": [1], "c": [1, 2], "start": [0.5, 0.5] }
//! ```
//!
//! Trace files have a header `k|t|mu, x_0, ..., x_{n-1}, V, E, feas_residual,
//! atp_inf[, B, phi]`; reals are written with 17 significant digits so they
//! re-parse to the same binary64 values.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discrete::DiscreteTraceEntry;
use crate::entropy_path::PathPoint;
use crate::error::Error;
use crate::flow::FlowTraceEntry;
use crate::model::{LinearProgram, ValidatedLp};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<i64>>,
    pub b: Vec<i64>,
    pub c: Vec<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Vec<f64>>,
}

impl ProblemFile {
    pub fn from_lp(name: Option<String>, lp: &LinearProgram, start: Option<Vec<f64>>) -> Self {
        Self {
            name,
            a: lp.a.clone(),
            b: lp.b.clone(),
            c: lp.c.clone(),
            start,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem files always serialize")
    }
}

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed problem{}: {message}", context(.line, .field))]
    Malformed {
        line: Option<usize>,
        field: Option<String>,
        message: String,
    },
    #[error("invalid problem: {0}")]
    ValidationFailed(#[from] Error),
}

fn context(line: &Option<usize>, field: &Option<String>) -> String {
    match (line, field) {
        (Some(l), Some(f)) => format!(" (line {l}, field {f})"),
        (Some(l), None) => format!(" (line {l})"),
        (None, Some(f)) => format!(" (field {f})"),
        (None, None) => String::new(),
    }
}

/// A parsed and validated problem file.
#[derive(Debug, Clone)]
pub struct LoadedProblem {
    pub name: Option<String>,
    pub lp: ValidatedLp,
    pub start: Option<Vec<f64>>,
}

/// Line of the first occurrence of `"key"` in `text`.
fn line_of_key(text: &str, key: &str) -> Option<usize> {
    let needle = format!("\"{key}\"");
    text.lines()
        .position(|l| l.contains(&needle))
        .map(|i| i + 1)
}

pub fn parse_problem_str(text: &str) -> Result<LoadedProblem, ProblemError> {
    let file: ProblemFile = serde_json::from_str(text).map_err(|e| ProblemError::Malformed {
        line: Some(e.line()),
        field: None,
        message: e.to_string(),
    })?;
    let malformed = |field: &str, message: String| ProblemError::Malformed {
        line: line_of_key(text, field),
        field: Some(field.to_string()),
        message,
    };
    if let Some(first) = file.a.first() {
        if let Some((i, row)) = file
            .a
            .iter()
            .enumerate()
            .find(|(_, r)| r.len() != first.len())
        {
            return Err(malformed(
                "A",
                format!(
                    "row {i} has {} entries, row 0 has {}",
                    row.len(),
                    first.len()
                ),
            ));
        }
    }
    if let Some(start) = &file.start {
        if start.len() != file.c.len() {
            return Err(malformed(
                "start",
                format!("has {} entries, c has {}", start.len(), file.c.len()),
            ));
        }
        if let Some(i) = start.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(malformed(
                "start",
                format!("entry {i} is not strictly positive"),
            ));
        }
    }
    let lp = LinearProgram::new(file.a, file.b, file.c).validate()?;
    Ok(LoadedProblem {
        name: file.name,
        lp,
        start: file.start,
    })
}

pub fn parse_problem(path: impl AsRef<Path>) -> Result<LoadedProblem, ProblemError> {
    let path = path.as_ref();
    let io_err = |source| ProblemError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut text = String::new();
    File::open(path)
        .and_then(|f| BufReader::new(f).read_to_string(&mut text))
        .map_err(io_err)?;
    parse_problem_str(&text)
}

/// One trace row in the common CSV layout.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub index: f64,
    pub x: Vec<f64>,
    pub cost: f64,
    /// Empty for the entropy path.
    pub energy: Option<f64>,
    pub feas_residual: f64,
    pub atp_inf: f64,
    pub barrier: Option<f64>,
    pub potential: Option<f64>,
}

impl From<&DiscreteTraceEntry> for TraceRow {
    fn from(e: &DiscreteTraceEntry) -> Self {
        Self {
            index: e.k as f64,
            x: e.x.clone(),
            cost: e.cost,
            energy: Some(e.energy),
            feas_residual: e.feas_residual,
            atp_inf: e.atp_inf,
            barrier: e.barrier,
            potential: e.potential,
        }
    }
}

impl From<&FlowTraceEntry> for TraceRow {
    fn from(e: &FlowTraceEntry) -> Self {
        Self {
            index: e.t,
            x: e.x.clone(),
            cost: e.cost,
            energy: Some(e.energy),
            feas_residual: e.feas_residual,
            atp_inf: e.atp_inf,
            barrier: None,
            potential: None,
        }
    }
}

impl TraceRow {
    pub fn from_path_point(lp: &ValidatedLp, p: &PathPoint) -> Self {
        Self {
            index: p.mu,
            x: p.x.clone(),
            cost: lp.cost(&p.x),
            energy: None,
            feas_residual: p.feas_residual,
            atp_inf: p.atp_inf,
            barrier: None,
            potential: None,
        }
    }
}

/// Index column of a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceIndex {
    Iteration,
    Time,
    Mu,
}

impl TraceIndex {
    pub fn column(self) -> &'static str {
        match self {
            TraceIndex::Iteration => "k",
            TraceIndex::Time => "t",
            TraceIndex::Mu => "mu",
        }
    }

    fn from_column(name: &str) -> Option<Self> {
        match name {
            "k" => Some(TraceIndex::Iteration),
            "t" => Some(TraceIndex::Time),
            "mu" => Some(TraceIndex::Mu),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceTable {
    pub index: TraceIndex,
    pub n: usize,
    pub rows: Vec<TraceRow>,
}

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_error(e: csv::Error) -> Error {
    Error::InvalidArgument(format!("trace CSV: {e}"))
}

pub fn write_trace<W: Write>(writer: W, table: &TraceTable) -> crate::Result<()> {
    let with_potential = table.rows.iter().any(|r| r.potential.is_some());
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec![table.index.column().to_string()];
    header.extend((0..table.n).map(|i| format!("x_{i}")));
    header.extend(["V", "E", "feas_residual", "atp_inf"].map(String::from));
    if with_potential {
        header.extend(["B", "phi"].map(String::from));
    }
    w.write_record(&header).map_err(csv_error)?;
    for row in &table.rows {
        if row.x.len() != table.n {
            return Err(Error::DimensionMismatch(format!(
                "trace row has {} coordinates, expected {}",
                row.x.len(),
                table.n
            )));
        }
        let mut rec = Vec::with_capacity(header.len());
        rec.push(match table.index {
            TraceIndex::Iteration => format!("{}", row.index as u64),
            _ => real(row.index),
        });
        rec.extend(row.x.iter().map(|&v| real(v)));
        rec.push(real(row.cost));
        rec.push(row.energy.map(real).unwrap_or_default());
        rec.push(real(row.feas_residual));
        rec.push(real(row.atp_inf));
        if with_potential {
            rec.push(row.barrier.map(real).unwrap_or_default());
            rec.push(row.potential.map(real).unwrap_or_default());
        }
        w.write_record(&rec).map_err(csv_error)?;
    }
    w.flush()
        .map_err(|e| Error::InvalidArgument(format!("trace CSV: {e}")))?;
    Ok(())
}

pub fn write_trace_file(path: impl AsRef<Path>, table: &TraceTable) -> Result<(), ProblemError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| ProblemError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_trace(BufWriter::new(file), table)?;
    Ok(())
}

pub fn read_trace<R: Read>(reader: R) -> crate::Result<TraceTable> {
    let mut r = csv::Reader::from_reader(reader);
    let header: Vec<String> = r
        .headers()
        .map_err(csv_error)?
        .iter()
        .map(String::from)
        .collect();
    let bad = |msg: String| Error::InvalidArgument(format!("trace CSV: {msg}"));
    let index = header
        .first()
        .and_then(|h| TraceIndex::from_column(h))
        .ok_or_else(|| bad("first column must be k, t or mu".into()))?;
    let n = header.iter().filter(|h| h.starts_with("x_")).count();
    let with_potential = header.iter().any(|h| h == "phi");
    let expected = 1 + n + 4 + if with_potential { 2 } else { 0 };
    if header.len() != expected {
        return Err(bad(format!(
            "expected {expected} columns, found {}",
            header.len()
        )));
    }

    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        let num = |j: usize| -> crate::Result<f64> {
            rec[j]
                .parse::<f64>()
                .map_err(|e| bad(format!("row {}, column {}: {e}", line + 1, header[j])))
        };
        let opt = |j: usize| -> crate::Result<Option<f64>> {
            if rec[j].is_empty() {
                Ok(None)
            } else {
                num(j).map(Some)
            }
        };
        let x = (1..=n).map(&num).collect::<crate::Result<Vec<f64>>>()?;
        let base = 1 + n;
        rows.push(TraceRow {
            index: num(0)?,
            x,
            cost: num(base)?,
            energy: opt(base + 1)?,
            feas_residual: num(base + 2)?,
            atp_inf: num(base + 3)?,
            barrier: if with_potential { opt(base + 4)? } else { None },
            potential: if with_potential { opt(base + 5)? } else { None },
        });
    }
    Ok(TraceTable { index, n, rows })
}
