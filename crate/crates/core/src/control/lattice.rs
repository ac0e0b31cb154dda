use serde::{Deserialize, Serialize};

use super::problem::ControlProblem;
use crate::error::{Error, Result};
use crate::spectrum::{Quantization, WeightPoint};

/// Time-population grid of the explicit scheme together with the quantized
/// terminal weight law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub dt: f64,
    /// Population step; always equal to the harvest size.
    pub dx: f64,
    pub n_t: usize,
    pub n_x: usize,
    pub n_w: usize,
    pub t0: f64,
    pub w_points: Vec<WeightPoint>,
}

impl Lattice {
    pub fn new(problem: &ControlProblem, dt: f64, n_w: usize, rule: Quantization) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::validation(format!("dt must be positive, got {dt}")));
        }
        if !problem.check_stability_bound(dt) {
            return Err(Error::Stability {
                dt,
                bound: problem.stability_bound(),
            });
        }
        let p = problem.params();
        let steps = (p.t_end - p.t0) / dt;
        let n_t = steps.round();
        if n_t < 1.0 || (steps - n_t).abs() > 1e-8 * steps.max(1.0) {
            return Err(Error::validation(format!(
                "horizon [{}, {}] is not a whole number of steps of {dt}",
                p.t0, p.t_end
            )));
        }
        let n_x = (p.x_bar / p.h_bar).round() as usize;
        let w_points = problem.spectrum().quantize(p.t_end, n_w, rule)?;
        Ok(Self {
            dt,
            dx: p.h_bar,
            n_t: n_t as usize,
            n_x,
            n_w,
            t0: p.t0,
            w_points,
        })
    }

    /// Absolute day of time index `i`.
    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    /// Population of node `j`.
    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.dx
    }

    /// Probability-weighted mean of the quantized terminal weights.
    pub fn mean_terminal_weight(&self) -> f64 {
        self.w_points.iter().map(|p| p.prob * p.weight).sum()
    }

    /// Nearest population node to `x`, clamped to the grid.
    pub fn nearest_x(&self, x: f64) -> usize {
        ((x / self.dx).round().max(0.0) as usize).min(self.n_x)
    }

    /// Nearest time index to day `t`, clamped to the grid.
    pub fn nearest_t(&self, t: f64) -> usize {
        (((t - self.t0) / self.dt).round().max(0.0) as usize).min(self.n_t)
    }
}
