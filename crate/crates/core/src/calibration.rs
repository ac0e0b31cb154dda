//! Two-stage calibration of the size-spectrum growth model.
//!
//! The intensive survey fixes the gamma shape and scale by moment matching;
//! the daily mean-weight records then fix the growth curve through a
//! catch-weighted least-squares fit. Because `beta` is re-derived from the
//! intensive survey for every trial curve, the model mean at the survey day
//! always equals the survey mean.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::growth::{GrowthCurve, GrowthVariant};
use crate::optim::{lex_cmp, NelderMead};
use crate::spectrum::{Allometry, SizeSpectrum};

/// Smallest `f0` the optimizer may propose.
pub const F0_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DailyRecord {
    /// Day of season.
    pub day: f64,
    /// Mean body weight of the catch (g).
    pub mean_weight: f64,
    /// Number of fish behind the mean.
    pub count: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensiveSurvey {
    pub day: f64,
    /// Individual body weights (g).
    pub samples: Vec<f64>,
}

impl IntensiveSurvey {
    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    /// Unbiased sample variance (g^2).
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        let ss: f64 = self.samples.iter().map(|w| (w - m) * (w - m)).sum();
        ss / (self.samples.len() as f64 - 1.0)
    }
}

/// Calendar date mapped to day 0 of the season.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeasonOrigin {
    pub month: u32,
    pub day: u32,
}

impl Default for SeasonOrigin {
    fn default() -> Self {
        Self { month: 5, day: 1 }
    }
}

impl SeasonOrigin {
    const MONTH_DAYS: [u32; 12] = [31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31];

    fn ordinal(month: u32, day: u32) -> Option<u32> {
        if !(1..=12).contains(&month) || day == 0 || day > Self::MONTH_DAYS[month as usize - 1] {
            return None;
        }
        Some(Self::MONTH_DAYS[..month as usize - 1].iter().sum::<u32>() + day)
    }

    /// Day index of a calendar date in a non-leap year, or `None` for dates
    /// before the origin.
    pub fn day_index(&self, month: u32, day: u32) -> Option<u32> {
        let origin = Self::ordinal(self.month, self.day)?;
        let date = Self::ordinal(month, day)?;
        date.checked_sub(origin)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyDataset {
    pub daily: Vec<DailyRecord>,
    pub intensive: IntensiveSurvey,
    #[serde(default)]
    pub season_origin: SeasonOrigin,
}

impl SurveyDataset {
    pub fn new(daily: Vec<DailyRecord>, intensive: IntensiveSurvey) -> Result<Self> {
        let ds = Self {
            daily,
            intensive,
            season_origin: SeasonOrigin::default(),
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.daily.is_empty() {
            return Err(Error::validation("daily record list is empty"));
        }
        for (i, rec) in self.daily.iter().enumerate() {
            if !(rec.day >= 0.0) || !rec.day.is_finite() {
                return Err(Error::validation(format!(
                    "daily record {}: day must be nonnegative, got {}",
                    i + 1,
                    rec.day
                )));
            }
            if !(rec.mean_weight > 0.0) || !rec.mean_weight.is_finite() {
                return Err(Error::validation(format!(
                    "daily record {}: mean weight must be positive, got {}",
                    i + 1,
                    rec.mean_weight
                )));
            }
            if rec.count == 0 {
                return Err(Error::validation(format!(
                    "daily record {}: sample count must be at least 1",
                    i + 1
                )));
            }
        }
        if !(self.intensive.day >= 0.0) || !self.intensive.day.is_finite() {
            return Err(Error::validation(format!(
                "intensive survey day must be nonnegative, got {}",
                self.intensive.day
            )));
        }
        if self.intensive.samples.len() < 2 {
            return Err(Error::validation(
                "intensive survey needs at least two samples: variance undefined",
            ));
        }
        for (i, w) in self.intensive.samples.iter().enumerate() {
            if !(*w > 0.0) || !w.is_finite() {
                return Err(Error::validation(format!(
                    "intensive sample {}: weight must be positive, got {w}",
                    i + 1
                )));
            }
        }
        if !(self.intensive.variance() > 0.0) {
            return Err(Error::validation(
                "intensive samples are all equal: variance undefined",
            ));
        }
        Ok(())
    }
}

/// Gamma shape and scale from a survey mean and variance at growth fraction
/// `f_at_survey`: `alpha = m^2 / v`, `beta = v / (m f)`.
pub fn moment_match(mean: f64, var: f64, f_at_survey: f64) -> Result<(f64, f64)> {
    if !(mean > 0.0) || !(var > 0.0) {
        return Err(Error::domain(format!(
            "moment matching needs positive mean and variance, got {mean}, {var}"
        )));
    }
    if !(f_at_survey > 0.0 && f_at_survey <= 1.0) {
        return Err(Error::domain(format!(
            "growth fraction must lie in (0,1], got {f_at_survey}"
        )));
    }
    Ok((mean * mean / var, var / (mean * f_at_survey)))
}

/// Moment-matched spectrum for `curve` against the dataset's intensive survey.
pub fn matched_spectrum(dataset: &SurveyDataset, curve: GrowthCurve) -> Result<SizeSpectrum> {
    let f_i = curve.eval(dataset.intensive.day)?;
    let (alpha, beta) = moment_match(dataset.intensive.mean(), dataset.intensive.variance(), f_i)?;
    SizeSpectrum::new(alpha, beta, curve)
}

/// Catch-weighted mean squared error between the daily means and the model
/// mean `alpha beta f(t)` (g^2).
pub fn wls_error(dataset: &SurveyDataset, curve: &GrowthCurve) -> Result<f64> {
    let f_i = curve.eval(dataset.intensive.day)?;
    // Validates the survey moments; the model mean then reduces to m f(t) / f(t_I).
    moment_match(dataset.intensive.mean(), dataset.intensive.variance(), f_i)?;
    let scale = dataset.intensive.mean() / f_i;
    let mut num = 0.0;
    let mut den = 0.0;
    for rec in &dataset.daily {
        let model = scale * curve.eval(rec.day)?;
        let n = rec.count as f64;
        num += n * (rec.mean_weight - model) * (rec.mean_weight - model);
        den += n;
    }
    Ok(num / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    /// Nelder-Mead iterations summed over all starts and restarts.
    pub iterations: usize,
    pub starts: usize,
    pub restarts: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FittedModel {
    pub spectrum: SizeSpectrum,
    /// Minimized weighted error (g^2).
    pub min_err: f64,
    pub diagnostics: FitDiagnostics,
}

/// Flat, serializable growth-model parameters. This is both the fitted-model
/// JSON document and the growth section of an experiment configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthParams {
    pub variant: GrowthVariant,
    pub f0: f64,
    #[serde(default)]
    pub r: Option<f64>,
    #[serde(default)]
    pub r0: Option<f64>,
    #[serde(default)]
    pub r1: Option<f64>,
    pub alpha: f64,
    pub beta: f64,
    #[serde(default)]
    pub min_err: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<FitDiagnostics>,
}

impl GrowthParams {
    pub fn from_spectrum(spectrum: &SizeSpectrum, min_err: Option<f64>) -> Self {
        let c = spectrum.curve();
        let tv = c.variant() == GrowthVariant::LogisticTv;
        Self {
            variant: c.variant(),
            f0: c.f0(),
            r: (!tv).then(|| c.r()),
            r0: tv.then(|| c.r0()),
            r1: tv.then(|| c.r1()),
            alpha: spectrum.alpha(),
            beta: spectrum.beta(),
            min_err,
            diagnostics: None,
        }
    }

    pub fn curve(&self) -> Result<GrowthCurve> {
        let missing = |name: &str| {
            Error::validation(format!("growth variant {} requires field '{name}'", self.variant))
        };
        match self.variant {
            GrowthVariant::VonBertalanffy => {
                GrowthCurve::von_bertalanffy(self.f0, self.r.ok_or_else(|| missing("r"))?)
            }
            GrowthVariant::Logistic => {
                GrowthCurve::logistic(self.f0, self.r.ok_or_else(|| missing("r"))?)
            }
            GrowthVariant::LogisticTv => GrowthCurve::logistic_tv(
                self.f0,
                self.r0.ok_or_else(|| missing("r0"))?,
                self.r1.ok_or_else(|| missing("r1"))?,
            ),
        }
    }

    pub fn spectrum(&self) -> Result<SizeSpectrum> {
        SizeSpectrum::new(self.alpha, self.beta, self.curve()?)
    }
}

impl FittedModel {
    pub fn to_params(&self) -> GrowthParams {
        GrowthParams {
            diagnostics: Some(self.diagnostics),
            ..GrowthParams::from_spectrum(&self.spectrum, Some(self.min_err))
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    (1.0 / (1.0 + (-z).exp())).clamp(F0_FLOOR, 1.0 - 1e-12)
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Maps unconstrained optimizer coordinates to curve parameters.
fn decode(variant: GrowthVariant, z: &[f64]) -> Result<GrowthCurve> {
    let f0 = sigmoid(z[0]);
    match variant {
        GrowthVariant::LogisticTv => GrowthCurve::logistic_tv(f0, z[1].exp(), z[2].exp()),
        _ => GrowthCurve::from_params(variant, &[f0, z[1].exp()]),
    }
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1).max(1) as f64)
        .collect()
}

/// Fixed multi-start schedule in optimizer coordinates: 8x8 over
/// `(logit f0, ln r)`, or 8x4x4 over `(logit f0, ln r0, ln r1)`.
fn start_schedule(variant: GrowthVariant) -> Vec<Vec<f64>> {
    let f0s: Vec<f64> = (0..8)
        .map(|i| logit(1e-3) + (logit(0.8) - logit(1e-3)) * i as f64 / 7.0)
        .collect();
    match variant {
        GrowthVariant::LogisticTv => {
            let r0s = log_grid(1e-3, 1e-1, 4);
            let r1s = log_grid(1e-6, 1e-3, 4);
            let mut out = Vec::with_capacity(128);
            for &a in &f0s {
                for &b in &r0s {
                    for &c in &r1s {
                        out.push(vec![a, b, c]);
                    }
                }
            }
            out
        }
        _ => {
            let rs = log_grid(1e-3, 0.3, 8);
            f0s.iter()
                .flat_map(|&a| rs.iter().map(move |&b| vec![a, b]))
                .collect()
        }
    }
}

/// Fits the growth curve of `variant` by minimizing [`wls_error`] with a
/// deterministic multi-start Nelder-Mead over log/logit parameters, then
/// moment-matches the spectrum.
pub fn fit_growth(dataset: &SurveyDataset, variant: GrowthVariant) -> Result<FittedModel> {
    dataset.validate()?;
    let nm = NelderMead::default();
    let objective = |z: &[f64]| -> f64 {
        match decode(variant, z) {
            Ok(curve) => wls_error(dataset, &curve).unwrap_or(f64::INFINITY),
            Err(_) => f64::INFINITY,
        }
    };

    let starts = start_schedule(variant);
    let mut results: Vec<_> = starts
        .par_iter()
        .map(|s| nm.minimize(objective, s))
        .collect();
    let mut iterations: usize = results.iter().map(|m| m.iterations).sum();
    results.sort_by(|a, b| a.value.total_cmp(&b.value).then_with(|| lex_cmp(&a.x, &b.x)));
    let mut best = results
        .into_iter()
        .find(|m| m.value.is_finite())
        .ok_or_else(|| {
            Error::Convergence(format!(
                "all {} starts diverged for {variant}",
                start_schedule(variant).len()
            ))
        })?;

    // Restart from the incumbent with a fresh simplex until it stops improving.
    let mut restarts = 0;
    let polish = NelderMead {
        initial_step: 0.05,
        ..nm
    };
    while restarts < 10 {
        let next = polish.minimize(objective, &best.x);
        iterations += next.iterations;
        restarts += 1;
        let improved = next.value < best.value;
        let small = best.value - next.value <= 1e-12 * best.value.abs() + 1e-24;
        if improved {
            best = next;
        }
        if !improved || small {
            break;
        }
    }

    let curve = decode(variant, &best.x)?;
    let spectrum = matched_spectrum(dataset, curve)?;
    Ok(FittedModel {
        spectrum,
        min_err: best.value,
        diagnostics: FitDiagnostics {
            iterations,
            starts: start_schedule(variant).len(),
            restarts,
            converged: best.converged,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AllometryFit {
    /// Least squares on raw weights.
    pub allometry: Allometry,
    /// Ordinary regression of `ln w` on `ln l`, used as the initial guess.
    pub loglog: Allometry,
    /// Residual sum of squares of the raw fit (g^2).
    pub sse: f64,
    pub iterations: usize,
}

/// Fits `w = a l^b` to `(length cm, weight g)` pairs by Levenberg-Marquardt
/// on raw residuals, started from the log-log regression.
pub fn fit_allometry(pairs: &[(f64, f64)]) -> Result<AllometryFit> {
    if pairs.len() < 3 {
        return Err(Error::validation("allometry fit needs at least three pairs"));
    }
    if pairs.iter().any(|&(l, w)| !(l > 0.0 && w > 0.0) || !l.is_finite() || !w.is_finite()) {
        return Err(Error::validation("allometry pairs must be positive"));
    }
    let n = pairs.len() as f64;
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 1e-12 * mx.abs().max(1.0) {
        return Err(Error::validation("allometry fit is degenerate: all lengths are equal"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b0 = sxy / sxx;
    let a0 = (my - b0 * mx).exp();
    let loglog = Allometry::new(a0, b0)?;

    let sse_of = |a: f64, b: f64| -> f64 {
        pairs
            .iter()
            .map(|&(l, w)| {
                let r = w - a * l.powf(b);
                r * r
            })
            .sum()
    };

    // Levenberg-Marquardt over (ln a, b) keeps a positive.
    let (mut la, mut b) = (a0.ln(), b0);
    let mut sse = sse_of(a0, b0);
    let mut mu = 1e-3;
    let mut iterations = 0;
    while iterations < 500 {
        iterations += 1;
        let a = la.exp();
        let (mut j11, mut j12, mut j22, mut g1, mut g2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &(l, w) in pairs {
            let m = a * l.powf(b);
            let r = w - m;
            // d m / d ln a = m, d m / d b = m ln l
            let d1 = m;
            let d2 = m * l.ln();
            j11 += d1 * d1;
            j12 += d1 * d2;
            j22 += d2 * d2;
            g1 += d1 * r;
            g2 += d2 * r;
        }
        let mut accepted = false;
        for _ in 0..50 {
            let h11 = j11 * (1.0 + mu);
            let h22 = j22 * (1.0 + mu);
            let det = h11 * h22 - j12 * j12;
            if det.abs() < 1e-300 {
                mu *= 10.0;
                continue;
            }
            let d_la = (h22 * g1 - j12 * g2) / det;
            let d_b = (h11 * g2 - j12 * g1) / det;
            let trial = sse_of((la + d_la).exp(), b + d_b);
            if trial <= sse {
                let rel = (sse - trial) / sse.max(1e-300);
                la += d_la;
                b += d_b;
                sse = trial;
                mu = (mu / 10.0).max(1e-12);
                accepted = true;
                if rel < 1e-15 || (d_la.abs() < 1e-14 && d_b.abs() < 1e-14) {
                    return Ok(AllometryFit {
                        allometry: Allometry::new(la.exp(), b)?,
                        loglog,
                        sse,
                        iterations,
                    });
                }
                break;
            }
            mu *= 10.0;
        }
        if !accepted {
            break;
        }
    }
    Ok(AllometryFit {
        allometry: Allometry::new(la.exp(), b)?,
        loglog,
        sse,
        iterations,
    })
}

const DAILY_HEADER: [&str; 3] = ["day", "mean_weight_g", "sample_count"];
const INTENSIVE_HEADER: [&str; 1] = ["weight_g"];

fn open_csv(path: &Path, expected: &[&str]) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = rdr.headers().map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: 1,
        message: e.to_string(),
    })?;
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("expected header '{}', found '{}'", expected.join(","), got.join(",")),
        });
    }
    Ok(rdr)
}

fn parse_field<T: std::str::FromStr>(path: &Path, line: u64, name: &str, raw: &str) -> Result<T> {
    raw.parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        message: format!("cannot parse {name} from '{raw}'"),
    })
}

/// Reads the daily-record CSV (`day,mean_weight_g,sample_count`) and the
/// intensive-survey CSV (`weight_g`, one weight per row) taken on day
/// `intensive_day`.
pub fn load_dataset(daily_csv: &Path, intensive_csv: &Path, intensive_day: f64) -> Result<SurveyDataset> {
    let mut daily = Vec::new();
    let mut rdr = open_csv(daily_csv, &DAILY_HEADER)?;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            path: daily_csv.to_path_buf(),
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() != 3 {
            return Err(Error::Parse {
                path: daily_csv.to_path_buf(),
                line,
                message: format!("expected 3 fields, found {}", rec.len()),
            });
        }
        let day: f64 = parse_field(daily_csv, line, "day", &rec[0])?;
        let mean_weight: f64 = parse_field(daily_csv, line, "mean_weight_g", &rec[1])?;
        let count: u32 = parse_field(daily_csv, line, "sample_count", &rec[2])?;
        if !(day >= 0.0) || !(mean_weight > 0.0) || count == 0 || !mean_weight.is_finite() {
            return Err(Error::validation(format!(
                "{} line {line}: invalid row (day={day}, mean_weight_g={mean_weight}, sample_count={count}); \
                 days must be nonnegative, weights positive and counts at least 1",
                daily_csv.display()
            )));
        }
        daily.push(DailyRecord {
            day,
            mean_weight,
            count,
        });
    }

    let mut samples = Vec::new();
    let mut rdr = open_csv(intensive_csv, &INTENSIVE_HEADER)?;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            path: intensive_csv.to_path_buf(),
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let w: f64 = parse_field(intensive_csv, line, "weight_g", &rec[0])?;
        if !(w > 0.0) || !w.is_finite() {
            return Err(Error::validation(format!(
                "{} line {line}: weight must be positive, got {w}",
                intensive_csv.display()
            )));
        }
        samples.push(w);
    }
    if samples.len() < 2 {
        return Err(Error::validation(format!(
            "{}: intensive survey has {} sample(s): variance undefined",
            intensive_csv.display(),
            samples.len()
        )));
    }

    SurveyDataset::new(
        daily,
        IntensiveSurvey {
            day: intensive_day,
            samples,
        },
    )
}
