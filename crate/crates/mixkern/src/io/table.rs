//! CSV datasets and result tables.
//!
//! Floats are written in the shortest form that reads back to the same
//! double, so a write/read cycle is lossless.

use std::fmt;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::gp::Dataset;
use crate::linalg::Matrix;

/// Column names of a dataset file: inputs first, then responses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schema {
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

impl Schema {
    /// `x1..xp, y` for one output, `x1..xp, y1..ym` otherwise.
    pub fn standard(p: usize, m: usize) -> Self {
        let inputs = (1..=p).map(|i| format!("x{i}")).collect();
        let outputs = if m == 1 {
            vec!["y".to_string()]
        } else {
            (1..=m).map(|i| format!("y{i}")).collect()
        };
        Schema { inputs, outputs }
    }

    pub fn named(inputs: &[&str], outputs: &[&str]) -> Self {
        Schema {
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
            outputs: outputs.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Recognizes a standard header.
    pub fn infer(header: &[&str]) -> Result<Self> {
        let p = header.iter().take_while(|h| is_indexed(h, 'x')).count();
        let m = header.len() - p;
        let candidate = Schema::standard(p, m);
        if p == 0 || m == 0 || !candidate.matches(header) {
            return Err(Error::SchemaMismatch(format!(
                "header `{}` is not of the form x1..xp,y or x1..xp,y1..ym",
                header.join(",")
            )));
        }
        Ok(candidate)
    }

    fn matches(&self, header: &[&str]) -> bool {
        header.len() == self.inputs.len() + self.outputs.len()
            && self
                .inputs
                .iter()
                .chain(&self.outputs)
                .zip(header)
                .all(|(a, b)| a == b)
    }

    pub fn header(&self) -> Vec<&str> {
        self.inputs
            .iter()
            .chain(&self.outputs)
            .map(String::as_str)
            .collect()
    }
}

fn is_indexed(h: &str, prefix: char) -> bool {
    h.strip_prefix(prefix)
        .is_some_and(|rest| !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()))
}

fn parse_number(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok()
}

/// Reads a dataset. With `schema = None` the header must be standard.
///
/// Row indices in errors count data rows from 1.
pub fn read_csv_dataset(path: impl AsRef<Path>, schema: Option<&Schema>) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let header_ref: Vec<&str> = header.iter().map(String::as_str).collect();
    let schema = match schema {
        Some(s) if s.matches(&header_ref) => s.clone(),
        Some(s) => {
            return Err(Error::SchemaMismatch(format!(
                "expected header `{}`, found `{}`",
                s.header().join(","),
                header.join(",")
            )))
        }
        None => Schema::infer(&header_ref)?,
    };
    let p = schema.inputs.len();
    let m = schema.outputs.len();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 1;
        if record.len() != p + m {
            return Err(Error::SchemaMismatch(format!(
                "row {row} has {} fields, expected {}",
                record.len(),
                p + m
            )));
        }
        for (j, field) in record.iter().enumerate() {
            let v = parse_number(field).ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: row + 1,
                message: format!("`{field}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFiniteValue {
                    row,
                    column: header[j].clone(),
                });
            }
            if j < p {
                xs.push(v);
            } else {
                ys.push(v);
            }
        }
    }
    let n = xs.len() / p.max(1);
    Dataset::new(Matrix::from_vec(n, p, xs), Matrix::from_vec(n, m, ys))
}

/// One field of an output table.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Text(String),
    Int(i64),
    Float(f64),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Text(s) => f.write_str(s),
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Float(v) => f.write_str(&format_float(*v)),
        }
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

/// Shortest decimal form that parses back to `v` (at most 17 significant
/// digits), with an exponent for very large or small magnitudes.
pub fn format_float(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-5..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

/// Serializes a table with `\n` line endings and minimal quoting.
pub fn csv_bytes(header: &[&str], rows: &[Vec<Cell>]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .quote_style(csv::QuoteStyle::Necessary)
        .from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::DimensionMismatch(format!(
                "row with {} fields under a {}-column header",
                row.len(),
                header.len()
            )));
        }
        w.write_record(row.iter().map(Cell::to_string))?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn write_csv(path: impl AsRef<Path>, header: &[&str], rows: &[Vec<Cell>]) -> Result<()> {
    let bytes = csv_bytes(header, rows)?;
    File::create(path)?.write_all(&bytes)?;
    Ok(())
}

/// Writes a dataset under its standard header.
pub fn write_csv_dataset(path: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    let schema = Schema::standard(data.input_dim(), data.outputs());
    let rows: Vec<Vec<Cell>> = (0..data.len())
        .map(|i| {
            data.x
                .row(i)
                .iter()
                .chain(data.y.row(i))
                .map(|&v| Cell::Float(v))
                .collect()
        })
        .collect();
    write_csv(path, &schema.header(), &rows)
}
