//! Per-cell run manifest and the binary policy file that sits next to it.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use fishery_core::calibration::GrowthParams;
use fishery_core::control::{BoundReport, ControlParams, SolverOutput};
use fishery_core::mc::PolicyGrid;
use fishery_core::spectrum::{Quantization, WeightPoint};
use fishery_core::{Error, Result};
use serde::{Deserialize, Serialize};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const POLICY_FILE: &str = "policy.bin";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub eta: f64,
    pub psi: f64,
    pub growth: GrowthParams,
    pub control: ControlParams,
    pub lattice: LatticeRecord,
    pub stability: StabilityRecord,
    pub bounds: BoundReport,
    /// Row stride of the CSV matrices.
    pub stride: usize,
    pub files: Vec<String>,
    pub policy: PolicyRecord,
    /// SHA-256 of the config file that produced this run.
    pub input_sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeRecord {
    pub dt_day: f64,
    pub dx_individuals: f64,
    pub n_t: usize,
    pub n_x: usize,
    pub n_w: usize,
    pub t0_day: f64,
    pub t_end_day: f64,
    pub quantization: Quantization,
    pub w_points: Vec<WeightPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityRecord {
    pub dt_day: f64,
    /// `1 / (u_bar + d + k u_bar^gamma)`.
    pub bound_day: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyRecord {
    pub file: String,
    /// Always `f64-le-row-major`: `(n_t + 1) x (n_x + 1)` intensities.
    pub encoding: String,
    pub sha256: String,
}

impl LatticeRecord {
    pub fn from_output(out: &SolverOutput) -> Self {
        let l = &out.lattice;
        Self {
            dt_day: l.dt,
            dx_individuals: l.dx,
            n_t: l.n_t,
            n_x: l.n_x,
            n_w: l.n_w,
            t0_day: l.t0,
            t_end_day: out.params.t_end,
            quantization: Quantization::BinMean,
            w_points: l.w_points.clone(),
        }
    }

    /// True when both describe the same time-population grid.
    pub fn same_grid(&self, other: &Self) -> bool {
        self.dt_day == other.dt_day
            && self.dx_individuals == other.dx_individuals
            && self.n_t == other.n_t
            && self.n_x == other.n_x
            && self.t0_day == other.t0_day
    }
}

impl Manifest {
    pub fn read(dir: &Path) -> Result<Self> {
        fishery_core::io::read_json(&dir.join(MANIFEST_FILE))
    }
}

pub fn write_policy(path: &Path, values: &[f64]) -> Result<Vec<u8>> {
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    let file = File::create(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut w = BufWriter::new(file);
    w.write_all(&bytes)
        .and_then(|_| w.flush())
        .map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
    Ok(bytes)
}

/// Loads the stored intensity table; returns it with the raw file bytes.
pub fn read_policy(dir: &Path, m: &Manifest) -> Result<(PolicyGrid, Vec<u8>)> {
    let path = dir.join(&m.policy.file);
    let mut bytes = Vec::new();
    File::open(&path)
        .map(BufReader::new)
        .and_then(|mut r| r.read_to_end(&mut bytes))
        .map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
    let l = &m.lattice;
    let expected = (l.n_t + 1) * (l.n_x + 1) * 8;
    if bytes.len() != expected {
        return Err(Error::Validation(format!(
            "{} holds {} bytes, manifest implies {expected}",
            path.display(),
            bytes.len()
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let grid = PolicyGrid::new(l.t0_day, l.dt_day, l.dx_individuals, l.n_t, l.n_x, values)?;
    Ok((grid, bytes))
}
