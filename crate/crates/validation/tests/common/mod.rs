#![allow(dead_code)]

use fishery_core::calibration::{DailyRecord, IntensiveSurvey, SurveyDataset};
use fishery_core::control::{ControlParams, ControlProblem};
use fishery_core::growth::GrowthCurve;
use fishery_core::spectrum::SizeSpectrum;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Adaptive Simpson quadrature on `[a, b]`.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn step<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// The 2025 time-varying logistic spectrum used by the control experiments.
pub fn spectrum_2025_tv() -> SizeSpectrum {
    SizeSpectrum::new(8.36, 6.83, GrowthCurve::logistic_tv(0.199, 0.027, 6.39e-4).unwrap()).unwrap()
}

pub fn benchmark_problem(eta: f64, psi: f64) -> ControlProblem {
    ControlProblem::new(spectrum_2025_tv(), ControlParams::benchmark(eta, psi)).unwrap()
}

/// A reduced version of the benchmark (shorter horizon, fewer nodes).
pub fn small_problem(eta: f64, psi: f64) -> ControlProblem {
    let params = ControlParams {
        x_bar: 800.0,
        t0: 151.0,
        ..ControlParams::benchmark(eta, psi)
    };
    ControlProblem::new(spectrum_2025_tv(), params).unwrap()
}

/// Intensive samples with exactly the requested mean and unbiased variance.
pub fn intensive_samples(mean: f64, var: f64, n: usize) -> Vec<f64> {
    assert!(n % 2 == 0);
    let c = (var * (n as f64 - 1.0) / n as f64).sqrt();
    (0..n).map(|i| if i % 2 == 0 { mean - c } else { mean + c }).collect()
}

/// Daily means generated from `curve` and spectrum `(alpha, beta)`, with an
/// intensive survey on `t_i`, optionally perturbed by Gaussian noise.
pub fn synthetic_dataset(
    curve: GrowthCurve,
    alpha: f64,
    beta: f64,
    t_i: f64,
    days: &[f64],
    count: u32,
    noise: Option<(f64, u64)>,
) -> SurveyDataset {
    let f_i = curve.eval(t_i).unwrap();
    let mean = alpha * beta * f_i;
    let var = alpha * beta * beta * f_i * f_i;
    let mut rng = noise.map(|(_, seed)| ChaCha8Rng::seed_from_u64(seed));
    let daily = days
        .iter()
        .map(|&d| {
            let mut m = alpha * beta * curve.eval(d).unwrap();
            if let (Some((sigma, _)), Some(rng)) = (noise, rng.as_mut()) {
                m += Normal::new(0.0, sigma).unwrap().sample(rng);
            }
            DailyRecord {
                day: d,
                mean_weight: m.max(1e-3),
                count,
            }
        })
        .collect();
    SurveyDataset::new(
        daily,
        IntensiveSurvey {
            day: t_i,
            samples: intensive_samples(mean, var, 200),
        },
    )
    .unwrap()
}

/// Thirty evenly spaced survey days over the season.
pub fn season_days() -> Vec<f64> {
    (0..30).map(|i| 10.0 + 6.0 * i as f64).collect()
}
