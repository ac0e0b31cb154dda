//! Monte Carlo simulation of the controlled population under a fixed policy.
//!
//! Time is split into steps of length `dt_sim`. In each step an arrival fires
//! with probability `theta dt` and a catastrophe with probability
//! `(d + k theta^gamma) dt`, independently; when both fire the harvest is
//! applied first. Instead of drawing two uniforms per step, each path draws an
//! exponential variate and jumps straight to the step where the accumulated
//! per-step hazard `-ln P(no event)` exceeds it, which yields the same chain.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::{ControlProblem, SolverOutput};
use crate::error::{Error, Result};
use crate::spectrum::WeightPoint;

/// Intensity table on a time-population grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyGrid {
    pub t0: f64,
    pub dt: f64,
    pub dx: f64,
    pub n_t: usize,
    pub n_x: usize,
    /// Row-major `(n_t + 1) x (n_x + 1)`.
    pub values: Vec<f64>,
}

impl PolicyGrid {
    pub fn new(t0: f64, dt: f64, dx: f64, n_t: usize, n_x: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != (n_t + 1) * (n_x + 1) {
            return Err(Error::validation(format!(
                "policy grid has {} values, expected {}",
                values.len(),
                (n_t + 1) * (n_x + 1)
            )));
        }
        if !(dt > 0.0 && dx > 0.0) {
            return Err(Error::validation("policy grid steps must be positive"));
        }
        Ok(Self {
            t0,
            dt,
            dx,
            n_t,
            n_x,
            values,
        })
    }

    pub fn from_solver(out: &SolverOutput) -> Self {
        let l = &out.lattice;
        Self {
            t0: l.t0,
            dt: l.dt,
            dx: l.dx,
            n_t: l.n_t,
            n_x: l.n_x,
            values: out.theta_hat.clone(),
        }
    }

    fn time_index(&self, t: f64) -> usize {
        (((t - self.t0) / self.dt).round().max(0.0) as usize).min(self.n_t)
    }

    fn x_index(&self, x: f64) -> usize {
        ((x / self.dx).round().max(0.0) as usize).min(self.n_x)
    }

    /// Intensity at the nearest node to `(t, x)`.
    pub fn lookup(&self, t: f64, x: f64) -> f64 {
        self.values[self.time_index(t) * (self.n_x + 1) + self.x_index(x)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    Grid(PolicyGrid),
    /// The same intensity everywhere.
    Constant(f64),
}

#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub problem: ControlProblem,
    pub policy: Policy,
    /// Quantized terminal weight law used by the terminal utility.
    pub w_points: Vec<WeightPoint>,
    pub x0: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub dt_sim: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    /// Standard error.
    pub se: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationSummary {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub n_paths: usize,
    pub seed: u64,
    pub x0: f64,
    pub t0_day: f64,
    pub j_estimate: Estimate,
    pub harvest_term: Estimate,
    pub terminal_term: Estimate,
    pub extinction_fraction: f64,
    pub terminal_population: PopulationSummary,
}

/// Outcome of one simulated path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathOutcome {
    /// Revenue collected from harvests (g).
    pub benefit: f64,
    pub x_terminal: f64,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<usize> {
        let p = self.problem.params();
        if self.n_paths == 0 {
            return Err(Error::validation("n_paths must be at least 1"));
        }
        if !(self.x0 >= 0.0) || !self.x0.is_finite() {
            return Err(Error::validation(format!("x0 must be nonnegative, got {}", self.x0)));
        }
        if self.w_points.is_empty() {
            return Err(Error::validation("terminal weight points are empty"));
        }
        if !(self.dt_sim > 0.0) || !(self.dt_sim * self.problem.max_total_rate() < 1.0) {
            return Err(Error::validation(format!(
                "dt_sim = {} must be positive and below {} so step probabilities stay below 1",
                self.dt_sim,
                self.problem.stability_bound()
            )));
        }
        match &self.policy {
            Policy::Constant(u) => {
                if !(*u >= 0.0 && *u <= p.u_bar) {
                    return Err(Error::validation(format!("constant intensity {u} outside [0, {}]", p.u_bar)));
                }
            }
            Policy::Grid(g) => {
                if g.values.iter().any(|v| !(*v >= 0.0 && *v <= p.u_bar)) {
                    return Err(Error::validation("policy grid has intensities outside [0, u_bar]"));
                }
            }
        }
        steps_between(p.t0, p.t_end, self.dt_sim)
    }
}

fn steps_between(a: f64, b: f64, dt: f64) -> Result<usize> {
    let steps = (b - a) / dt;
    let n = steps.round();
    if n < 0.0 || (steps - n).abs() > 1e-8 * steps.abs().max(1.0) {
        return Err(Error::validation(format!(
            "[{a}, {b}] is not a whole number of steps of {dt}"
        )));
    }
    Ok(n as usize)
}

/// Cumulative per-step hazards for each policy column.
struct HazardTable {
    n_steps: usize,
    columns: usize,
    /// `cum[c * (n_steps + 1) + s]` = hazard accumulated over steps `< s`.
    cum: Vec<f64>,
    /// Intensity per `(column, step)`.
    theta: Vec<f64>,
    /// Mean weight at the start of each step.
    w_bar: Vec<f64>,
}

impl HazardTable {
    fn build(cfg: &SimulationConfig, n_steps: usize) -> Self {
        let p = cfg.problem.params();
        let t0 = p.t0;
        let dt = cfg.dt_sim;
        let columns = match &cfg.policy {
            Policy::Constant(_) => 1,
            Policy::Grid(g) => g.n_x + 1,
        };
        let mut theta = vec![0.0; columns * n_steps];
        for s in 0..n_steps {
            let t = t0 + s as f64 * dt;
            for c in 0..columns {
                theta[c * n_steps + s] = match &cfg.policy {
                    Policy::Constant(u) => *u,
                    Policy::Grid(g) => g.values[g.time_index(t) * (g.n_x + 1) + c],
                };
            }
        }
        let mut cum = vec![0.0; columns * (n_steps + 1)];
        for c in 0..columns {
            let base = c * (n_steps + 1);
            for s in 0..n_steps {
                let th = theta[c * n_steps + s];
                let ph = th * dt;
                let pc = cfg.problem.catastrophe_rate(th) * dt;
                let hz = -(1.0 - ph).ln() - (1.0 - pc).ln();
                cum[base + s + 1] = cum[base + s] + hz;
            }
        }
        let w_bar = (0..n_steps)
            .map(|s| cfg.problem.mean_weight(t0 + s as f64 * dt))
            .collect();
        Self {
            n_steps,
            columns,
            cum,
            theta,
            w_bar,
        }
    }

    fn column(&self, cfg: &SimulationConfig, x: f64) -> usize {
        match &cfg.policy {
            Policy::Constant(_) => 0,
            Policy::Grid(g) => g.x_index(x).min(self.columns - 1),
        }
    }
}

fn run_path(cfg: &SimulationConfig, table: &HazardTable, start: usize, x_start: f64, path: u64) -> PathOutcome {
    let p = cfg.problem.params();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(path);
    let n = table.n_steps;
    let mut step = start;
    let mut x = x_start;
    let mut benefit = 0.0;
    while x > 0.0 && step < n {
        let c = table.column(cfg, x);
        let cum = &table.cum[c * (n + 1)..(c + 1) * (n + 1)];
        let e = -(1.0 - rng.random::<f64>()).ln();
        let target = cum[step] + e;
        if cum[n] < target {
            break;
        }
        // First step s >= step with cum[s + 1] >= target.
        let s = step + cum[step + 1..=n].partition_point(|&v| v < target);
        let th = table.theta[c * n + s];
        let ph = th * cfg.dt_sim;
        let pc = cfg.problem.catastrophe_rate(th) * cfg.dt_sim;
        let any = 1.0 - (1.0 - ph) * (1.0 - pc);
        let u = rng.random::<f64>() * any;
        let harvest_only = ph * (1.0 - pc);
        let cat_only = (1.0 - ph) * pc;
        let (harvest, catastrophe) = if u < harvest_only {
            (true, false)
        } else if u < harvest_only + cat_only {
            (false, true)
        } else {
            (true, true)
        };
        if harvest {
            let h = cfg.problem.harvest(x);
            benefit += table.w_bar[s] * h;
            x -= h;
        }
        if catastrophe {
            x = if p.kappa == 1.0 { 0.0 } else { (1.0 - p.kappa) * x };
        }
        step = s + 1;
    }
    PathOutcome {
        benefit,
        x_terminal: x.max(0.0),
    }
}

/// Simulates every path from day `t_start` and population `x_start`.
pub fn simulate_outcomes(cfg: &SimulationConfig, t_start: f64, x_start: f64) -> Result<Vec<PathOutcome>> {
    let n_steps = cfg.validate()?;
    let p = cfg.problem.params();
    if !(x_start >= 0.0) || !x_start.is_finite() {
        return Err(Error::validation(format!("start population must be nonnegative, got {x_start}")));
    }
    if t_start < p.t0 || t_start > p.t_end {
        return Err(Error::validation(format!("start day {t_start} outside the horizon")));
    }
    let start = steps_between(p.t0, t_start, cfg.dt_sim)?;
    let table = HazardTable::build(cfg, n_steps);
    Ok((0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|path| run_path(cfg, &table, start, x_start, path))
        .collect())
}

fn mean_se(values: &[f64]) -> Estimate {
    if values.iter().all(|v| *v == values[0]) {
        return Estimate {
            value: values[0],
            se: 0.0,
        };
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return Estimate { value: mean, se: 0.0 };
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Estimate {
        value: mean,
        se: (var / n).sqrt(),
    }
}

/// Certainty-equivalent terminal term and its per-path influence values.
fn terminal_term(cfg: &SimulationConfig, outcomes: &[PathOutcome]) -> (f64, Vec<f64>) {
    let problem = &cfg.problem;
    let eta = problem.params().eta;
    let n = outcomes.len() as f64;
    let mut value = 0.0;
    let mut influence = vec![0.0; outcomes.len()];
    for w in &cfg.w_points {
        let utilities: Vec<f64> = outcomes.iter().map(|o| problem.rho(w.weight * o.x_terminal)).collect();
        let m = utilities.iter().sum::<f64>() / n;
        value += w.prob * problem.rho_inv(m);
        let lam = problem.lambda(m);
        if lam.is_finite() {
            for (inf, u) in influence.iter_mut().zip(&utilities) {
                *inf += w.prob * lam * (u - m);
            }
        }
    }
    (eta * value, influence.into_iter().map(|v| eta * v).collect())
}

fn summarize(values: &[f64]) -> PopulationSummary {
    let est = mean_se(values);
    let n = values.len() as f64;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - est.value).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    PopulationSummary {
        mean: est.value,
        std,
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Estimates the objective from `(t0, x0)`.
pub fn simulate_paths(cfg: &SimulationConfig) -> Result<SimulationResult> {
    let t0 = cfg.problem.params().t0;
    let outcomes = simulate_outcomes(cfg, t0, cfg.x0)?;
    let benefits: Vec<f64> = outcomes.iter().map(|o| o.benefit).collect();
    let harvest = mean_se(&benefits);
    let (terminal, influence) = terminal_term(cfg, &outcomes);
    let terminal_se = mean_se(&influence).se;
    let combined: Vec<f64> = benefits.iter().zip(&influence).map(|(b, i)| b + i).collect();
    let j_se = mean_se(&combined).se;
    let x_t: Vec<f64> = outcomes.iter().map(|o| o.x_terminal).collect();
    let extinct = x_t.iter().filter(|&&x| x == 0.0).count();
    Ok(SimulationResult {
        n_paths: cfg.n_paths,
        seed: cfg.seed,
        x0: cfg.x0,
        t0_day: t0,
        j_estimate: Estimate {
            value: harvest.value + terminal,
            se: j_se,
        },
        harvest_term: harvest,
        terminal_term: Estimate {
            value: terminal,
            se: terminal_se,
        },
        extinction_fraction: extinct as f64 / cfg.n_paths as f64,
        terminal_population: summarize(&x_t),
    })
}

/// Estimates `g(t, x, w) = E[rho(w X_T) | X_t = x]` under the configured policy.
pub fn estimate_g(cfg: &SimulationConfig, x: f64, t: f64, w: f64) -> Result<Estimate> {
    let outcomes = simulate_outcomes(cfg, t, x)?;
    let values: Vec<f64> = outcomes.iter().map(|o| cfg.problem.rho(w * o.x_terminal)).collect();
    Ok(mean_se(&values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::ControlParams;
    use crate::growth::GrowthCurve;
    use crate::spectrum::{Quantization, SizeSpectrum};

    fn config(eta: f64, psi: f64, u: f64, d: f64) -> SimulationConfig {
        let s = SizeSpectrum::new(8.36, 6.83, GrowthCurve::logistic_tv(0.199, 0.027, 6.39e-4).unwrap())
            .unwrap();
        let params = ControlParams {
            d,
            ..ControlParams::benchmark(eta, psi)
        };
        let problem = ControlProblem::new(s, params).unwrap();
        let w_points = s.quantize(181.0, 16, Quantization::BinMean).unwrap();
        SimulationConfig {
            problem,
            policy: Policy::Constant(u),
            w_points,
            x0: 2000.0,
            n_paths: 500,
            seed: 7,
            dt_sim: 0.01,
        }
    }

    #[test]
    fn idle_policy_is_deterministic() {
        let cfg = config(0.6, 1.5, 0.0, 0.0);
        let r = simulate_paths(&cfg).unwrap();
        let w_bar: f64 = cfg.w_points.iter().map(|w| w.prob * w.weight).sum();
        assert_eq!(r.harvest_term.value, 0.0);
        assert!((r.j_estimate.value - 0.6 * w_bar * 2000.0).abs() < 1e-9 * r.j_estimate.value);
        assert_eq!(r.j_estimate.se, 0.0);
        assert_eq!(r.extinction_fraction, 0.0);
    }

    #[test]
    fn paths_are_monotone_and_seeded() {
        let cfg = config(0.6, 0.0, 0.8, 1e-3);
        let a = simulate_outcomes(&cfg, 61.0, 2000.0).unwrap();
        let b = simulate_outcomes(&cfg, 61.0, 2000.0).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|o| o.x_terminal >= 0.0 && o.x_terminal <= 2000.0));
        let r = simulate_paths(&cfg).unwrap();
        assert_eq!(r.j_estimate.value, r.harvest_term.value + r.terminal_term.value);
        assert!((0.0..=1.0).contains(&r.extinction_fraction));
    }

    #[test]
    fn terminal_day_and_extinct_start_are_exact() {
        let cfg = config(0.6, 1.5, 0.8, 1e-3);
        let g = estimate_g(&cfg, 1200.0, 181.0, 50.0).unwrap();
        assert_eq!(g.value, cfg.problem.rho(50.0 * 1200.0));
        assert_eq!(g.se, 0.0);
        let g = estimate_g(&cfg, 0.0, 100.0, 50.0).unwrap();
        assert_eq!(g.value, cfg.problem.rho(0.0));
    }

    #[test]
    fn rejects_bad_configs() {
        let mut cfg = config(0.6, 0.0, 0.5, 1e-3);
        cfg.dt_sim = 1.0;
        assert!(simulate_paths(&cfg).is_err());
        let mut cfg = config(0.6, 0.0, 2.0, 1e-3);
        assert!(simulate_paths(&cfg).is_err());
        cfg.policy = Policy::Constant(0.5);
        cfg.n_paths = 0;
        assert!(simulate_paths(&cfg).is_err());
    }
}
