//! CSV matrices for solver fields and JSON helpers.
//!
//! A matrix file has the header `t_day,<x_0>,<x_1>,...` followed by one row
//! per stored time.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::control::SolverOutput;
use crate::error::{Error, Result};

/// A field sampled on a time-population grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub times: Vec<f64>,
    pub xs: Vec<f64>,
    /// Row-major `times.len() x xs.len()`.
    pub values: Vec<f64>,
}

impl Matrix {
    pub fn row(&self, r: usize) -> &[f64] {
        let w = self.xs.len();
        &self.values[r * w..(r + 1) * w]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.xs.len() + c]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Phi,
    Theta,
    GBig,
}

impl Field {
    pub fn file_name(self) -> &'static str {
        match self {
            Field::Phi => "phi.csv",
            Field::Theta => "theta.csv",
            Field::GBig => "g_big.csv",
        }
    }
}

/// Samples a field every `stride` steps, always including the terminal row.
pub fn field_matrix(out: &SolverOutput, field: Field, stride: usize) -> Matrix {
    let l = &out.lattice;
    let stride = stride.max(1);
    let mut rows: Vec<usize> = (0..=l.n_t).step_by(stride).collect();
    if rows.last() != Some(&l.n_t) {
        rows.push(l.n_t);
    }
    let mut values = Vec::with_capacity(rows.len() * (l.n_x + 1));
    for &i in &rows {
        let row = match field {
            Field::Phi => out.phi_row(i),
            Field::Theta => out.theta_row(i),
            Field::GBig => out.g_big_row(i),
        };
        values.extend_from_slice(row);
    }
    Matrix {
        times: rows.iter().map(|&i| l.time(i)).collect(),
        xs: (0..=l.n_x).map(|j| l.x(j)).collect(),
        values,
    }
}

pub fn write_matrix(path: &Path, m: &Matrix) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let to_csv = |e: csv::Error| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        message: e.to_string(),
    };
    let mut header = vec!["t_day".to_string()];
    header.extend(m.xs.iter().map(|x| format!("{x}")));
    w.write_record(&header).map_err(to_csv)?;
    for (r, t) in m.times.iter().enumerate() {
        let mut rec = vec![format!("{t}")];
        rec.extend(m.row(r).iter().map(|v| format!("{v:e}")));
        w.write_record(&rec).map_err(to_csv)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_matrix(path: &Path) -> Result<Matrix> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let header = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    if header.get(0) != Some("t_day") || header.len() < 2 {
        return Err(parse_err(1, "expected header t_day,<x values>".into()));
    }
    let xs = header
        .iter()
        .skip(1)
        .map(|s| s.trim().parse::<f64>().map_err(|e| parse_err(1, format!("{s:?}: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let line = k as u64 + 2;
        let rec = rec.map_err(|e| parse_err(line, e.to_string()))?;
        if rec.len() != xs.len() + 1 {
            return Err(parse_err(line, format!("expected {} fields, got {}", xs.len() + 1, rec.len())));
        }
        for (c, s) in rec.iter().enumerate() {
            let v = s
                .trim()
                .parse::<f64>()
                .map_err(|e| parse_err(line, format!("{s:?}: {e}")))?;
            if c == 0 {
                times.push(v);
            } else {
                values.push(v);
            }
        }
    }
    Ok(Matrix { times, xs, values })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line() as u64,
        message: e.to_string(),
    })
}
