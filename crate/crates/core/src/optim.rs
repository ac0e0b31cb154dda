//! Derivative-free minimization used by the calibration routines.

/// Nelder-Mead settings.
#[derive(Debug, Clone, Copy)]
pub struct NelderMead {
    pub max_iter: usize,
    /// Stop when the spread of simplex values falls below
    /// `rel_tol * |f_best| + abs_tol`.
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Edge length of the initial simplex, per coordinate.
    pub initial_step: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            max_iter: 2000,
            rel_tol: 1e-12,
            abs_tol: 1e-24,
            initial_step: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl NelderMead {
    /// Minimizes `f` from `start`. Non-finite objective values are treated as
    /// `+inf`, so the simplex retreats from them.
    pub fn minimize<F>(&self, f: F, start: &[f64]) -> Minimum
    where
        F: Fn(&[f64]) -> f64,
    {
        let n = start.len();
        let eval = |x: &[f64]| {
            let v = f(x);
            if v.is_finite() {
                v
            } else {
                f64::INFINITY
            }
        };

        let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
        simplex.push(start.to_vec());
        for i in 0..n {
            let mut v = start.to_vec();
            v[i] += self.initial_step;
            simplex.push(v);
        }
        let mut values: Vec<f64> = simplex.iter().map(|v| eval(v)).collect();

        let mut iterations = 0;
        let mut converged = false;
        while iterations < self.max_iter {
            iterations += 1;
            // Stable ordering: value first, then coordinates.
            let mut order: Vec<usize> = (0..=n).collect();
            order.sort_by(|&a, &b| {
                values[a]
                    .total_cmp(&values[b])
                    .then_with(|| lex_cmp(&simplex[a], &simplex[b]))
            });
            simplex = order.iter().map(|&i| simplex[i].clone()).collect();
            values = order.iter().map(|&i| values[i]).collect();

            let best = values[0];
            let worst = values[n];
            if worst.is_finite() && (worst - best).abs() <= self.rel_tol * best.abs() + self.abs_tol {
                converged = true;
                break;
            }

            let mut centroid = vec![0.0; n];
            for v in &simplex[..n] {
                for (c, x) in centroid.iter_mut().zip(v) {
                    *c += x / n as f64;
                }
            }
            let along = |coef: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&simplex[n])
                    .map(|(c, w)| c + coef * (c - w))
                    .collect()
            };

            let reflected = along(1.0);
            let fr = eval(&reflected);
            if fr < values[0] {
                let expanded = along(2.0);
                let fe = eval(&expanded);
                if fe < fr {
                    simplex[n] = expanded;
                    values[n] = fe;
                } else {
                    simplex[n] = reflected;
                    values[n] = fr;
                }
                continue;
            }
            if fr < values[n - 1] {
                simplex[n] = reflected;
                values[n] = fr;
                continue;
            }
            let (contracted, fc) = if fr < values[n] {
                let c = along(0.5);
                let fc = eval(&c);
                (c, fc)
            } else {
                let c = along(-0.5);
                let fc = eval(&c);
                (c, fc)
            };
            if fc < values[n].min(fr) {
                simplex[n] = contracted;
                values[n] = fc;
                continue;
            }
            // Shrink toward the best vertex.
            let best_v = simplex[0].clone();
            for k in 1..=n {
                for (x, b) in simplex[k].iter_mut().zip(&best_v) {
                    *x = b + 0.5 * (*x - b);
                }
                values[k] = eval(&simplex[k]);
            }
        }

        let (idx, _) = values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1).then_with(|| lex_cmp(&simplex[a.0], &simplex[b.0])))
            .expect("simplex is never empty");
        Minimum {
            x: simplex[idx].clone(),
            value: values[idx],
            iterations,
            converged,
        }
    }
}

/// Lexicographic comparison of parameter vectors.
pub fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}
