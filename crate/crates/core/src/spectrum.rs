//! Gamma size spectrum of asymptotic body weight and the induced weight law.
//!
//! The asymptotic weight `K` follows a gamma law with shape `alpha` and scale
//! `beta`; body weight at day `t` is `W_t = K f(t)`, so `W_t` is gamma with
//! the same shape and scale `beta f(t)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::growth::GrowthCurve;
use crate::special::{gamma_density, gamma_p, gamma_p_inv};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizeSpectrum {
    alpha: f64,
    beta: f64,
    curve: GrowthCurve,
}

/// One atom of a discretized weight distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightPoint {
    /// Body weight (g).
    pub weight: f64,
    /// Probability mass.
    pub prob: f64,
}

/// How equal-probability bins are collapsed to a single weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quantization {
    /// The conditional mean of each bin. Preserves the mean exactly.
    #[default]
    BinMean,
    /// The quantile at each bin's probability midpoint `(q - 0.5)/n`.
    Midpoint,
}

impl SizeSpectrum {
    pub fn new(alpha: f64, beta: f64, curve: GrowthCurve) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::domain(format!("alpha must be positive, got {alpha}")));
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::domain(format!("beta must be positive, got {beta}")));
        }
        Ok(Self { alpha, beta, curve })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn curve(&self) -> &GrowthCurve {
        &self.curve
    }

    pub fn mean_k(&self) -> f64 {
        self.alpha * self.beta
    }

    pub fn var_k(&self) -> f64 {
        self.alpha * self.beta * self.beta
    }

    /// Density of the asymptotic weight `K` (1/g).
    pub fn pdf_k(&self, k: f64) -> Result<f64> {
        if !(k > 0.0) {
            return Err(Error::domain(format!("weight must be positive, got {k}")));
        }
        Ok(gamma_density(self.alpha, k / self.beta) / self.beta)
    }

    /// Density of body weight at day `t` (1/g).
    pub fn pdf_w(&self, t: f64, w: f64) -> Result<f64> {
        let f = self.curve.eval(t)?;
        if !(w > 0.0) {
            return Err(Error::domain(format!("weight must be positive, got {w}")));
        }
        Ok(self.pdf_k(w / f)? / f)
    }

    /// Mean body weight `alpha beta f(t)` (g).
    pub fn mean_weight(&self, t: f64) -> Result<f64> {
        Ok(self.mean_k() * self.curve.eval(t)?)
    }

    /// Variance of body weight `alpha beta^2 f(t)^2` (g^2).
    pub fn var_weight(&self, t: f64) -> Result<f64> {
        let f = self.curve.eval(t)?;
        Ok(self.var_k() * f * f)
    }

    pub fn cdf_w(&self, t: f64, w: f64) -> Result<f64> {
        let f = self.curve.eval(t)?;
        if !(w >= 0.0) {
            return Err(Error::domain(format!("weight must be nonnegative, got {w}")));
        }
        gamma_p(self.alpha, w / (f * self.beta))
    }

    /// Weight `w` with `P(W_t <= w) = p`.
    pub fn quantile_w(&self, t: f64, p: f64) -> Result<f64> {
        let f = self.curve.eval(t)?;
        Ok(f * self.beta * gamma_p_inv(self.alpha, p)?)
    }

    /// Discretizes the weight law at day `t` into `n` equally likely atoms.
    pub fn quantize(&self, t: f64, n: usize, rule: Quantization) -> Result<Vec<WeightPoint>> {
        if n == 0 {
            return Err(Error::domain("quantization needs at least one point"));
        }
        let f = self.curve.eval(t)?;
        let scale = f * self.beta;
        let prob = 1.0 / n as f64;
        let points = match rule {
            Quantization::Midpoint => (1..=n)
                .map(|q| {
                    let p = (q as f64 - 0.5) / n as f64;
                    Ok(WeightPoint {
                        weight: scale * gamma_p_inv(self.alpha, p)?,
                        prob,
                    })
                })
                .collect::<Result<Vec<_>>>()?,
            Quantization::BinMean => {
                // E[K; K < x] = alpha beta P(alpha + 1, x / beta), so each bin's
                // conditional mean is a difference of shifted-shape CDFs.
                let mut edges = Vec::with_capacity(n + 1);
                edges.push(0.0);
                for q in 1..n {
                    edges.push(gamma_p(self.alpha + 1.0, gamma_p_inv(self.alpha, q as f64 * prob)?)?);
                }
                edges.push(1.0);
                edges
                    .windows(2)
                    .map(|e| WeightPoint {
                        weight: scale * self.alpha * (e[1] - e[0]) * n as f64,
                        prob,
                    })
                    .collect()
            }
        };
        Ok(points)
    }
}

/// Allometric weight-length relation `w = a l^b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Allometry {
    /// Coefficient (g/cm^b).
    pub a: f64,
    /// Exponent.
    pub b: f64,
}

impl Allometry {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
            return Err(Error::domain(format!(
                "allometry needs a > 0 and b > 0, got a={a}, b={b}"
            )));
        }
        Ok(Self { a, b })
    }

    /// Body weight (g) at length `l` (cm).
    pub fn weight(&self, l: f64) -> Result<f64> {
        if !(l > 0.0) {
            return Err(Error::domain(format!("length must be positive, got {l}")));
        }
        Ok(self.a * l.powf(self.b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spectrum_2025() -> SizeSpectrum {
        SizeSpectrum::new(8.36, 5.76, GrowthCurve::logistic(0.0653, 0.112).unwrap()).unwrap()
    }

    fn flat_curve() -> GrowthCurve {
        // f(t) = 1 - 1e-300 for every practical t.
        GrowthCurve::logistic(1.0 - 1e-16, 50.0).unwrap()
    }

    #[test]
    fn exponential_density_at_origin() {
        let s = SizeSpectrum::new(1.0, 1.0, flat_curve()).unwrap();
        assert!((s.pdf_k(1e-12).unwrap() - 1.0).abs() < 1e-10);
        assert!(s.pdf_k(0.0).is_err());
    }

    #[test]
    fn mode_of_the_2025_spectrum() {
        let s = spectrum_2025();
        let mode = (s.alpha() - 1.0) * s.beta();
        assert!((mode - 42.39).abs() < 0.01);
        let at_mode = s.pdf_k(mode).unwrap();
        assert!(at_mode > s.pdf_k(30.0).unwrap());
        assert!(at_mode > s.pdf_k(60.0).unwrap());
        // The density scan peaks at the analytic mode.
        let best = (1..2000)
            .map(|i| i as f64 * 0.05)
            .max_by(|a, b| s.pdf_k(*a).unwrap().total_cmp(&s.pdf_k(*b).unwrap()))
            .unwrap();
        assert!((best - mode).abs() < 0.05);
    }

    #[test]
    fn weight_density_equals_k_density_at_asymptote() {
        let s = SizeSpectrum::new(8.36, 5.76, flat_curve()).unwrap();
        for &w in &[5.0, 40.0, 90.0] {
            let a = s.pdf_w(100.0, w).unwrap();
            let b = s.pdf_k(w).unwrap();
            assert!((a - b).abs() <= 1e-14 * b.max(1e-300));
        }
    }

    #[test]
    fn survey_moments_2025() {
        let s = spectrum_2025();
        let mean = s.mean_weight(113.0).unwrap();
        let std = s.var_weight(113.0).unwrap().sqrt();
        assert!((mean - 48.15).abs() < 0.01);
        assert!((std - 16.65).abs() < 0.01);
        assert!((std - 16.7).abs() / 16.7 < 0.01);
    }

    #[test]
    fn initial_mean_weights() {
        let mean = spectrum_2025().mean_weight(0.0).unwrap();
        assert!((mean - 3.15).abs() / 3.15 < 0.01, "{mean}");
        let vb = SizeSpectrum::new(9.60, 22.1, GrowthCurve::von_bertalanffy(0.0422, 0.019).unwrap())
            .unwrap();
        let mean = vb.mean_weight(0.0).unwrap();
        assert!((mean - 8.95).abs() < 0.01, "{mean}");
    }

    #[test]
    fn exponential_quantile() {
        let s = SizeSpectrum::new(1.0, 1.0, flat_curve()).unwrap();
        let q = s.quantile_w(0.0, 0.5).unwrap();
        let f = s.curve().value(0.0);
        assert!((q - f * 2f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn quantize_single_point() {
        let s = spectrum_2025();
        let mid = s.quantize(113.0, 1, Quantization::Midpoint).unwrap();
        assert_eq!(mid.len(), 1);
        assert_eq!(mid[0].prob, 1.0);
        let median = s.quantile_w(113.0, 0.5).unwrap();
        assert!((mid[0].weight - median).abs() < 1e-12);

        let bin = s.quantize(113.0, 1, Quantization::BinMean).unwrap();
        let mean = s.mean_weight(113.0).unwrap();
        assert!((bin[0].weight - mean).abs() < 1e-12 * mean);
    }

    #[test]
    fn quantize_is_increasing_and_normalized() {
        let s = spectrum_2025();
        for rule in [Quantization::Midpoint, Quantization::BinMean] {
            let pts = s.quantize(181.0, 64, rule).unwrap();
            assert!(pts.windows(2).all(|w| w[0].weight < w[1].weight));
            let total: f64 = pts.iter().map(|p| p.prob).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
        assert!(s.quantize(10.0, 0, Quantization::BinMean).is_err());
    }

    #[test]
    fn quantized_mean_converges() {
        let s = spectrum_2025();
        let exact = s.mean_weight(100.0).unwrap();
        let pts = s.quantize(100.0, 64, Quantization::Midpoint).unwrap();
        let mean: f64 = pts.iter().map(|p| p.weight * p.prob).sum();
        assert!((mean - exact).abs() / exact <= 0.02);
        let pts = s.quantize(100.0, 64, Quantization::BinMean).unwrap();
        let mean: f64 = pts.iter().map(|p| p.weight * p.prob).sum();
        assert!((mean - exact).abs() / exact <= 1e-10);
    }

    #[test]
    fn allometry_examples() {
        let am = Allometry::new(0.0054, 3.19).unwrap();
        let w = am.weight(20.0).unwrap();
        // 0.0054 * 20^3.19 evaluated independently: exp(ln 0.0054 + 3.19 ln 20).
        let expected = (0.0054f64.ln() + 3.19 * 20f64.ln()).exp();
        assert!((w - expected).abs() < 1e-9);
        assert!((w - 76.4).abs() < 0.1, "{w}");
        assert_eq!(Allometry::new(1.0, 3.0).unwrap().weight(2.0).unwrap(), 8.0);
        assert_eq!(am.weight(1.0).unwrap(), 0.0054);
        assert!(am.weight(0.0).is_err());
        assert!(Allometry::new(-1.0, 3.0).is_err());
    }
}
