//! Experiment configuration. Every dimensional field carries its unit in its
//! name; the only defaults are `n_w = 64` and `stride = 100`.

use std::path::{Path, PathBuf};

use fishery_core::calibration::GrowthParams;
use fishery_core::control::{ControlParams, ControlProblem};
use fishery_core::io::read_json;
use fishery_core::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Fitted model document or hand-written parameters.
    pub growth: GrowthParams,
    pub control: ControlParams,
    pub lattice: LatticeConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    /// Relative paths resolve against the directory of the config file.
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub dt_day: f64,
    #[serde(default = "default_n_w")]
    pub n_w: usize,
    /// Time steps between stored CSV rows.
    #[serde(default = "default_stride")]
    pub stride: usize,
}

fn default_n_w() -> usize {
    64
}

fn default_stride() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub x0_individuals: f64,
    pub n_paths: usize,
    pub seed: u64,
    /// Defaults to the lattice step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_sim_day: Option<f64>,
}

/// One `(eta, psi)` combination of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub eta: f64,
    pub psi: f64,
}

impl Cell {
    pub fn dir_name(&self) -> String {
        format!("eta_{}_psi_{}", self.eta, self.psi)
    }
}

impl ExperimentConfig {
    /// Reads and validates a config file.
    pub fn load(path: &Path) -> Result<Self> {
        let cfg: Self = read_json(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.base_problem()?;
        if self.lattice.n_w == 0 {
            return Err(Error::Validation("lattice.n_w must be at least 1".into()));
        }
        if self.lattice.stride == 0 {
            return Err(Error::Validation("lattice.stride must be at least 1".into()));
        }
        if let Some(sweep) = &self.sweep {
            for (name, list) in [("eta", &sweep.eta), ("psi", &sweep.psi)] {
                if list.as_ref().is_some_and(|v| v.is_empty()) {
                    return Err(Error::Validation(format!("sweep.{name} must not be empty")));
                }
            }
        }
        for cell in self.cells() {
            self.base_problem()?.with_preferences(cell.eta, cell.psi)?;
        }
        if let Some(mc) = &self.mc {
            if mc.n_paths == 0 {
                return Err(Error::Validation("mc.n_paths must be at least 1".into()));
            }
            if !(mc.x0_individuals >= 0.0 && mc.x0_individuals <= self.control.x_bar) {
                return Err(Error::Validation(format!(
                    "mc.x0_individuals = {} must lie in [0, x_bar_individuals]",
                    mc.x0_individuals
                )));
            }
        }
        Ok(())
    }

    pub fn base_problem(&self) -> Result<ControlProblem> {
        ControlProblem::new(self.growth.spectrum()?, self.control)
    }

    /// Sweep cells in row-major `eta x psi` order.
    pub fn cells(&self) -> Vec<Cell> {
        let sweep = self.sweep.clone().unwrap_or_default();
        let etas = sweep.eta.unwrap_or_else(|| vec![self.control.eta]);
        let psis = sweep.psi.unwrap_or_else(|| vec![self.control.psi]);
        etas.iter()
            .flat_map(|&eta| psis.iter().map(move |&psi| Cell { eta, psi }))
            .collect()
    }

    pub fn resolve_output_dir(&self, config_path: &Path) -> PathBuf {
        if self.output_dir.is_absolute() {
            return self.output_dir.clone();
        }
        config_path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join(&self.output_dir)
    }

    /// The time-varying logistic spectrum and regime of the benchmark season.
    pub fn benchmark() -> Self {
        Self {
            growth: GrowthParams {
                variant: fishery_core::growth::GrowthVariant::LogisticTv,
                f0: 0.199,
                r: None,
                r0: Some(0.027),
                r1: Some(6.39e-4),
                alpha: 8.36,
                beta: 6.83,
                min_err: None,
                diagnostics: None,
            },
            control: ControlParams::benchmark(0.6, 0.0),
            lattice: LatticeConfig {
                dt_day: 0.01,
                n_w: default_n_w(),
                stride: default_stride(),
            },
            sweep: None,
            output_dir: PathBuf::from("runs"),
            mc: None,
        }
    }
}
