//! Backward explicit sweep for the value function `Phi`, the equilibrium
//! intensity and the utility fields `g(t, x, w)`.

use serde::{Deserialize, Serialize};

use super::lattice::Lattice;
use super::maximize::maximize_theta;
use super::problem::{ControlParams, ControlProblem};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveOptions {
    /// Keep the full `g` slice every `g_stride` time steps (and at both ends).
    pub g_stride: usize,
    /// Abort on the first node that breaks the a priori bounds.
    pub enforce_bounds: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            g_stride: 100,
            enforce_bounds: true,
        }
    }
}

/// Worst-case deviations from the a priori bounds, relative to each bound's
/// scale. Zero means the bound held everywhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    /// Growth rate of the value bound per unit of remaining time.
    pub phi_bar: f64,
    /// `eta * mean terminal weight * x_bar`.
    pub phi_terminal_cap: f64,
    /// Nonnegativity of `Phi` is only guaranteed for `psi >= 0`.
    pub phi_lower_checked: bool,
    pub phi_lower_violation: f64,
    pub phi_upper_violation: f64,
    pub g_lower_violation: f64,
    pub g_upper_violation: f64,
    pub tolerance: f64,
    pub violations: usize,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct SolverOutput {
    pub params: ControlParams,
    pub lattice: Lattice,
    /// Row-major `(n_t + 1) x (n_x + 1)`.
    pub phi: Vec<f64>,
    pub theta_hat: Vec<f64>,
    /// Certainty-equivalent biomass `sum_q w_q rho_inv(g)`.
    pub g_big: Vec<f64>,
    /// Stored `g` slices as `(time index, (n_x + 1) x n_w values)`, ascending.
    pub g_slices: Vec<(usize, Vec<f64>)>,
    pub bounds: BoundReport,
}

impl SolverOutput {
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.lattice.n_x + 1) + j
    }

    pub fn phi_at(&self, i: usize, j: usize) -> f64 {
        self.phi[self.idx(i, j)]
    }

    pub fn theta_at(&self, i: usize, j: usize) -> f64 {
        self.theta_hat[self.idx(i, j)]
    }

    pub fn g_big_at(&self, i: usize, j: usize) -> f64 {
        self.g_big[self.idx(i, j)]
    }

    pub fn phi_row(&self, i: usize) -> &[f64] {
        let w = self.lattice.n_x + 1;
        &self.phi[i * w..(i + 1) * w]
    }

    pub fn theta_row(&self, i: usize) -> &[f64] {
        let w = self.lattice.n_x + 1;
        &self.theta_hat[i * w..(i + 1) * w]
    }

    pub fn g_big_row(&self, i: usize) -> &[f64] {
        let w = self.lattice.n_x + 1;
        &self.g_big[i * w..(i + 1) * w]
    }

    /// The stored `g` slice at time index `i`, if any.
    pub fn g_slice(&self, i: usize) -> Option<&[f64]> {
        self.g_slices
            .binary_search_by_key(&i, |(k, _)| *k)
            .ok()
            .map(|pos| self.g_slices[pos].1.as_slice())
    }

    /// `g(s_i, x_j, w_q)` when slice `i` was stored.
    pub fn g_at(&self, i: usize, j: usize, q: usize) -> Option<f64> {
        self.g_slice(i).map(|s| s[j * self.lattice.n_w + q])
    }
}

/// Output of the sweep without the utility fields.
#[derive(Debug, Clone)]
pub struct StandardOutput {
    pub phi: Vec<f64>,
    pub theta_hat: Vec<f64>,
}

/// Where a catastrophe from node `j` lands: `lo + frac` in node units.
#[derive(Debug, Clone, Copy)]
struct Landing {
    lo: usize,
    frac: f64,
}

fn landings(kappa: f64, n_x: usize) -> Vec<Landing> {
    (0..=n_x)
        .map(|j| {
            if kappa == 1.0 {
                return Landing { lo: 0, frac: 0.0 };
            }
            let pos = (1.0 - kappa) * j as f64;
            let lo = (pos.floor() as usize).min(j.saturating_sub(1));
            Landing {
                lo,
                frac: (pos - lo as f64).clamp(0.0, 1.0),
            }
        })
        .collect()
}

#[inline]
fn interp(row: &[f64], l: Landing, stride: usize, offset: usize) -> f64 {
    let a = row[l.lo * stride + offset];
    if l.frac == 0.0 {
        a
    } else {
        a + l.frac * (row[(l.lo + 1) * stride + offset] - a)
    }
}

fn check_lattice(problem: &ControlProblem, lattice: &Lattice) -> Result<()> {
    if !problem.check_stability_bound(lattice.dt) {
        return Err(Error::Stability {
            dt: lattice.dt,
            bound: problem.stability_bound(),
        });
    }
    let p = problem.params();
    let consistent = lattice.dx == p.h_bar
        && ((lattice.n_x as f64) * lattice.dx - p.x_bar).abs() <= 1e-9 * p.x_bar
        && lattice.w_points.len() == lattice.n_w
        && lattice.n_w > 0
        && lattice.n_t > 0
        && (lattice.time(lattice.n_t) - p.t_end).abs() <= 1e-8 * p.t_end.max(1.0)
        && lattice.t0 == p.t0;
    if consistent {
        Ok(())
    } else {
        Err(Error::validation("lattice does not match the control problem"))
    }
}

/// Harvest revenue per arrival, `h_bar * mean weight(s_i)`, for `i < n_t`.
fn harvest_values(problem: &ControlProblem, lattice: &Lattice) -> Vec<f64> {
    let h = problem.params().h_bar;
    (0..lattice.n_t)
        .map(|i| h * problem.mean_weight(lattice.time(i)))
        .collect()
}

/// Solves the coupled system backward from the terminal day.
pub fn solve(problem: &ControlProblem, lattice: &Lattice, opts: SolveOptions) -> Result<SolverOutput> {
    check_lattice(problem, lattice)?;
    let p = *problem.params();
    let (nt, nx, nw) = (lattice.n_t, lattice.n_x, lattice.n_w);
    let width = nx + 1;
    let dt = lattice.dt;
    let stride = opts.g_stride.max(1);
    let omega: Vec<f64> = lattice.w_points.iter().map(|w| w.prob).collect();
    let harvest = harvest_values(problem, lattice);
    let land = landings(p.kappa, nx);
    let w_bar_t = problem.mean_weight_terminal();
    let rho0 = problem.rho(0.0);
    let g_terms = p.eta != 0.0;

    // A priori bounds.
    let g_cap: Vec<f64> = lattice
        .w_points
        .iter()
        .map(|w| problem.rho(w.weight * p.x_bar))
        .collect();
    let lambda_sum: f64 = lattice
        .w_points
        .iter()
        .zip(&g_cap)
        .map(|(w, &cap)| w.prob * problem.lambda(cap) * (cap - rho0))
        .sum();
    let phi_cap_t = p.eta * w_bar_t * p.x_bar;
    let phi_bar = p.u_bar * p.h_bar * w_bar_t
        + problem.max_total_rate() * p.eta * (w_bar_t * p.x_bar + lambda_sum);
    let phi_scale = (phi_cap_t + phi_bar * (nt as f64) * dt).max(f64::MIN_POSITIVE);
    let tol = 1e-12;
    let check_phi_lower = p.psi >= 0.0;
    let mut report = BoundReport {
        phi_bar,
        phi_terminal_cap: phi_cap_t,
        phi_lower_checked: check_phi_lower,
        phi_lower_violation: 0.0,
        phi_upper_violation: 0.0,
        g_lower_violation: 0.0,
        g_upper_violation: 0.0,
        tolerance: tol,
        violations: 0,
        passed: true,
    };
    let mut first_violation: Option<(usize, usize, String)> = None;
    fn note(
        report: &mut BoundReport,
        first: &mut Option<(usize, usize, String)>,
        node: (usize, usize),
        what: &str,
        excess: f64,
    ) {
        if excess > report.tolerance {
            report.violations += 1;
            report.passed = false;
            if first.is_none() {
                *first = Some((node.0, node.1, format!("{what} exceeded by {excess:.3e} (relative)")));
            }
        }
    }

    let mut phi = vec![0.0; (nt + 1) * width];
    let mut theta = vec![0.0; (nt + 1) * width];
    let mut g_big = vec![0.0; (nt + 1) * width];
    let mut g_slices = Vec::new();

    // Terminal slice.
    let mut g_next = vec![rho0; width * nw];
    for j in 0..=nx {
        let x = lattice.x(j);
        phi[nt * width + j] = p.eta * w_bar_t * x;
        if j > 0 {
            for (q, w) in lattice.w_points.iter().enumerate() {
                g_next[j * nw + q] = problem.rho(w.weight * x);
            }
        }
    }
    let mut rinv_next = vec![0.0; width * nw];
    let mut lam_next = vec![0.0; width * nw];
    let mut g_cur = vec![rho0; width * nw];
    let mut rinv_cur = vec![0.0; width * nw];
    let mut lam_cur = vec![0.0; width * nw];

    let finish_slice = |g: &[f64], rinv: &mut [f64], lam: &mut [f64], big: &mut [f64]| {
        for j in 0..=nx {
            let mut s = 0.0;
            for q in 0..nw {
                let (r, l) = problem.rho_inv_and_lambda(g[j * nw + q]);
                rinv[j * nw + q] = r;
                lam[j * nw + q] = l;
                s += omega[q] * r;
            }
            big[j] = s;
        }
    };
    finish_slice(
        &g_next,
        &mut rinv_next,
        &mut lam_next,
        &mut g_big[nt * width..(nt + 1) * width],
    );
    g_slices.push((nt, g_next.clone()));

    for i in (0..nt).rev() {
        let (head, tail) = phi.split_at_mut((i + 1) * width);
        let phi_n = &tail[..width];
        let phi_i = &mut head[i * width..];
        let theta_i = &mut theta[i * width..(i + 1) * width];
        let upper = phi_cap_t + phi_bar * ((nt - i) as f64) * dt;

        for q in 0..nw {
            g_cur[q] = rho0;
        }
        phi_i[0] = 0.0;
        theta_i[0] = 0.0;
        for j in 1..=nx {
            let l = land[j];
            let phi_cat = interp(phi_n, l, 1, 0);
            let mut a = (phi_n[j - 1] - phi_n[j]) + harvest[i];
            let mut b = phi_cat - phi_n[j];
            if g_terms {
                let mut sa = 0.0;
                let mut sb = 0.0;
                for q in 0..nw {
                    let k = j * nw + q;
                    let km = (j - 1) * nw + q;
                    let (gj, rj, lj) = (g_next[k], rinv_next[k], lam_next[k]);
                    sa += omega[q] * (lj * (g_next[km] - gj) - (rinv_next[km] - rj));
                    let (gc, rc) = if l.frac == 0.0 {
                        let kc = l.lo * nw + q;
                        (g_next[kc], rinv_next[kc])
                    } else {
                        let gc = interp(&g_next, l, nw, q);
                        (gc, problem.rho_inv(gc))
                    };
                    sb += omega[q] * (lj * (gc - gj) - (rc - rj));
                }
                a += p.eta * sa;
                b += p.eta * sb;
            }
            let m = maximize_theta(a, b, p.k, p.gamma, p.u_bar);
            let v = phi_n[j] + dt * (m.value + p.d * b);
            if !v.is_finite() {
                return Err(Error::NonFinite { i, j });
            }
            phi_i[j] = v;
            theta_i[j] = m.theta;

            let cat = problem.catastrophe_rate(m.theta);
            for q in 0..nw {
                let k = j * nw + q;
                let gj = g_next[k];
                let gl = g_next[(j - 1) * nw + q];
                let gc = interp(&g_next, l, nw, q);
                let g = gj + dt * (m.theta * (gl - gj) + cat * (gc - gj));
                if !g.is_finite() {
                    return Err(Error::NonFinite { i, j });
                }
                g_cur[k] = g;
                let ge = (g - g_cap[q]) / g_cap[q];
                if ge > report.g_upper_violation {
                    report.g_upper_violation = ge;
                }
                note(&mut report, &mut first_violation, (i, j), "g upper bound", ge);
                let gl_ex = (rho0 - g) / g_cap[q];
                if gl_ex > report.g_lower_violation {
                    report.g_lower_violation = gl_ex;
                }
                note(&mut report, &mut first_violation, (i, j), "g lower bound", gl_ex);
            }

            let up = (v - upper) / phi_scale;
            if up > report.phi_upper_violation {
                report.phi_upper_violation = up;
            }
            note(&mut report, &mut first_violation, (i, j), "value upper bound", up);
            if check_phi_lower {
                let lo = -v / phi_scale;
                if lo > report.phi_lower_violation {
                    report.phi_lower_violation = lo;
                }
                note(&mut report, &mut first_violation, (i, j), "value lower bound", lo);
            }
        }
        if opts.enforce_bounds {
            if let Some((vi, vj, message)) = first_violation.take() {
                return Err(Error::BoundViolation { i: vi, j: vj, message });
            }
        }

        finish_slice(
            &g_cur,
            &mut rinv_cur,
            &mut lam_cur,
            &mut g_big[i * width..(i + 1) * width],
        );
        std::mem::swap(&mut g_next, &mut g_cur);
        std::mem::swap(&mut rinv_next, &mut rinv_cur);
        std::mem::swap(&mut lam_next, &mut lam_cur);
        if i % stride == 0 {
            g_slices.push((i, g_next.clone()));
        }
    }
    g_slices.reverse();

    Ok(SolverOutput {
        params: p,
        lattice: lattice.clone(),
        phi,
        theta_hat: theta,
        g_big,
        g_slices,
        bounds: report,
    })
}

/// The classical sweep with a linear terminal reward `terminal_slope * x`
/// and no utility fields.
pub fn solve_standard(
    problem: &ControlProblem,
    lattice: &Lattice,
    terminal_slope: f64,
) -> Result<StandardOutput> {
    check_lattice(problem, lattice)?;
    let p = *problem.params();
    let (nt, nx) = (lattice.n_t, lattice.n_x);
    let width = nx + 1;
    let dt = lattice.dt;
    let harvest = harvest_values(problem, lattice);
    let land = landings(p.kappa, nx);

    let mut phi = vec![0.0; (nt + 1) * width];
    let mut theta = vec![0.0; (nt + 1) * width];
    for j in 0..=nx {
        phi[nt * width + j] = terminal_slope * lattice.x(j);
    }
    for i in (0..nt).rev() {
        let (head, tail) = phi.split_at_mut((i + 1) * width);
        let phi_n = &tail[..width];
        let phi_i = &mut head[i * width..];
        for j in 1..=nx {
            let a = (phi_n[j - 1] - phi_n[j]) + harvest[i];
            let b = interp(phi_n, land[j], 1, 0) - phi_n[j];
            let m = maximize_theta(a, b, p.k, p.gamma, p.u_bar);
            let v = phi_n[j] + dt * (m.value + p.d * b);
            if !v.is_finite() {
                return Err(Error::NonFinite { i, j });
            }
            phi_i[j] = v;
            theta[i * width + j] = m.theta;
        }
    }
    Ok(StandardOutput { phi, theta_hat: theta })
}
