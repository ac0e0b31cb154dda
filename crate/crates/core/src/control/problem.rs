use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::SizeSpectrum;

/// Scalar constants of the harvesting problem. Field names in the serialized
/// form carry their units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlParams {
    /// Natural catastrophe rate.
    #[serde(rename = "d_per_day")]
    pub d: f64,
    /// Coefficient of the effort-driven catastrophe rate `k u^gamma`.
    #[serde(rename = "k_per_day")]
    pub k: f64,
    pub gamma: f64,
    /// Fraction of the population lost at a catastrophe.
    pub kappa: f64,
    /// Weight of the terminal utility.
    pub eta: f64,
    /// Shape of the power utility `y^(psi+1) / (psi+1)`.
    pub psi: f64,
    /// Maximum arrival intensity.
    #[serde(rename = "u_bar_per_day")]
    pub u_bar: f64,
    /// Fish taken per arrival.
    #[serde(rename = "h_bar_individuals")]
    pub h_bar: f64,
    /// Population cap of the computational domain.
    #[serde(rename = "x_bar_individuals")]
    pub x_bar: f64,
    /// Opening day of the harvesting season.
    #[serde(rename = "t0_day")]
    pub t0: f64,
    /// Terminal day.
    #[serde(rename = "t_end_day")]
    pub t_end: f64,
}

impl ControlParams {
    /// The regime of the benchmark experiment: season from July 1 (day 61)
    /// to day 181, one arrival per day at most, 40 fish per arrival.
    pub fn benchmark(eta: f64, psi: f64) -> Self {
        Self {
            d: 1e-4,
            k: 2e-3,
            gamma: 2.0,
            kappa: 1.0,
            eta,
            psi,
            u_bar: 1.0,
            h_bar: 40.0,
            x_bar: 4000.0,
            t0: 61.0,
            t_end: 181.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlProblem {
    spectrum: SizeSpectrum,
    params: ControlParams,
}

impl ControlProblem {
    pub fn new(spectrum: SizeSpectrum, params: ControlParams) -> Result<Self> {
        let p = &params;
        let finite = [p.d, p.k, p.gamma, p.kappa, p.eta, p.psi, p.u_bar, p.h_bar, p.x_bar, p.t0, p.t_end]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::validation("control parameters must be finite"));
        }
        if !(p.gamma > 1.0) {
            return Err(Error::validation(format!("gamma must exceed 1, got {}", p.gamma)));
        }
        if !(p.psi > -1.0) {
            return Err(Error::validation(format!("psi must exceed -1, got {}", p.psi)));
        }
        if !(p.kappa > 0.0 && p.kappa <= 1.0) {
            return Err(Error::validation(format!("kappa must lie in (0,1], got {}", p.kappa)));
        }
        if p.d < 0.0 || p.k < 0.0 || p.u_bar < 0.0 || p.eta < 0.0 {
            return Err(Error::validation("d, k, u_bar and eta must be nonnegative"));
        }
        if !(p.t0 > 0.0 && p.t0 < p.t_end) {
            return Err(Error::validation(format!(
                "horizon must satisfy 0 < t0 < T, got [{}, {}]",
                p.t0, p.t_end
            )));
        }
        if !(p.h_bar > 0.0) {
            return Err(Error::validation(format!("h_bar must be positive, got {}", p.h_bar)));
        }
        let cells = p.x_bar / p.h_bar;
        if !(cells >= 1.0) || (cells - cells.round()).abs() > 1e-9 * cells {
            return Err(Error::validation(format!(
                "x_bar ({}) must be a positive multiple of h_bar ({})",
                p.x_bar, p.h_bar
            )));
        }
        Ok(Self { spectrum, params })
    }

    pub fn spectrum(&self) -> &SizeSpectrum {
        &self.spectrum
    }

    pub fn params(&self) -> &ControlParams {
        &self.params
    }

    /// Same problem with a different terminal weight and utility shape.
    pub fn with_preferences(&self, eta: f64, psi: f64) -> Result<Self> {
        Self::new(
            self.spectrum,
            ControlParams {
                eta,
                psi,
                ..self.params
            },
        )
    }

    /// Mean body weight (g) on absolute season day `t`.
    pub fn mean_weight(&self, t: f64) -> f64 {
        self.spectrum.mean_k() * self.spectrum.curve().value(t.max(0.0))
    }

    /// Mean body weight at the terminal day.
    pub fn mean_weight_terminal(&self) -> f64 {
        self.mean_weight(self.params.t_end)
    }

    /// Catastrophe intensity `d + k theta^gamma`.
    #[inline]
    pub fn catastrophe_rate(&self, theta: f64) -> f64 {
        self.params.d + self.params.k * theta.powf(self.params.gamma)
    }

    /// Fish removed by one arrival at population `x`.
    pub fn harvest(&self, x: f64) -> f64 {
        self.params.h_bar.min(x.max(0.0))
    }

    /// Power utility `y^(psi+1) / (psi+1)`.
    pub fn rho(&self, y: f64) -> f64 {
        let psi = self.params.psi;
        if psi == 0.0 {
            y
        } else {
            y.powf(psi + 1.0) / (psi + 1.0)
        }
    }

    /// Inverse utility `((psi+1) y)^(1/(psi+1))`.
    pub fn rho_inv(&self, y: f64) -> f64 {
        let psi = self.params.psi;
        if psi == 0.0 {
            y
        } else {
            ((psi + 1.0) * y).powf(1.0 / (psi + 1.0))
        }
    }

    /// Derivative of the inverse utility, `((psi+1) y)^(-psi/(psi+1))`.
    /// Returns `+inf` at `y = 0` when `psi > 0`.
    pub fn lambda(&self, y: f64) -> f64 {
        let psi = self.params.psi;
        if psi == 0.0 {
            return 1.0;
        }
        if y <= 0.0 {
            return if psi > 0.0 { f64::INFINITY } else { 0.0 };
        }
        ((psi + 1.0) * y).powf(-psi / (psi + 1.0))
    }

    /// [`Self::lambda`] with its argument floored at 1e-12 when `psi > 0`.
    pub fn lambda_clamped(&self, y: f64) -> f64 {
        if self.params.psi > 0.0 {
            self.lambda(y.max(1e-12))
        } else {
            self.lambda(y)
        }
    }

    /// Returns `(rho_inv(y), lambda_clamped(y))` with a single power
    /// evaluation in the common case.
    #[inline]
    pub(crate) fn rho_inv_and_lambda(&self, y: f64) -> (f64, f64) {
        let psi = self.params.psi;
        if psi == 0.0 {
            return (y, 1.0);
        }
        let c = (psi + 1.0) * y;
        let r = c.powf(1.0 / (psi + 1.0));
        if y >= 1e-12 {
            (r, r / c)
        } else {
            (r, self.lambda_clamped(y))
        }
    }

    /// Convexity gap `lambda(x)(y - x) - (rho_inv(y) - rho_inv(x))`.
    ///
    /// Nonnegative for convex utilities (`psi > 0`), nonpositive for concave
    /// ones and identically zero for `psi = 0`.
    pub fn lemma_b1_gap(&self, x: f64, y: f64) -> f64 {
        if x == y {
            return 0.0;
        }
        let lam = self.lambda(x);
        if lam.is_infinite() {
            // x = 0 < y with psi > 0.
            return f64::INFINITY;
        }
        lam * (y - x) - (self.rho_inv(y) - self.rho_inv(x))
    }

    /// Largest admissible rate sum `U + d + k U^gamma`.
    pub fn max_total_rate(&self) -> f64 {
        self.params.u_bar + self.catastrophe_rate(self.params.u_bar)
    }

    /// Upper limit on the explicit time step, `1/(U + d + k U^gamma)`.
    pub fn stability_bound(&self) -> f64 {
        1.0 / self.max_total_rate()
    }

    /// True iff `dt` is strictly inside the stability limit.
    pub fn check_stability_bound(&self, dt: f64) -> bool {
        dt > 0.0 && dt < self.stability_bound()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::growth::GrowthCurve;

    fn problem(psi: f64) -> ControlProblem {
        let s = SizeSpectrum::new(8.36, 6.83, GrowthCurve::logistic_tv(0.199, 0.027, 6.39e-4).unwrap())
            .unwrap();
        ControlProblem::new(s, ControlParams::benchmark(0.6, psi)).unwrap()
    }

    #[test]
    fn linear_utility() {
        let p = problem(0.0);
        for &y in &[0.0, 0.3, 17.0, 4.0e5] {
            assert_eq!(p.rho(y), y);
            assert_eq!(p.rho_inv(y), y);
            assert_eq!(p.lambda(y), 1.0);
        }
    }

    #[test]
    fn quadratic_utility() {
        let p = problem(1.0);
        assert!((p.rho(4.0) - 8.0).abs() < 1e-12);
        assert!((p.rho_inv(8.0) - 4.0).abs() < 1e-12);
        assert!((p.lambda(8.0) - 0.25).abs() < 1e-12);
        // lambda(rho(x)) * rho'(x) = 1, rho'(x) = x^psi.
        assert!((p.lambda(p.rho(4.0)) * 4.0 - 1.0).abs() < 1e-12);
        assert_eq!(p.lambda(0.0), f64::INFINITY);
        assert!(p.lambda_clamped(0.0).is_finite());
    }

    #[test]
    fn fused_inverse_and_derivative_agree() {
        for psi in [-0.75, -0.3, 0.0, 1.5, 4.0] {
            let p = problem(psi);
            for &y in &[1e-6, 0.5, 3.0, 1e4, 1e20] {
                let (r, l) = p.rho_inv_and_lambda(y);
                assert!((r - p.rho_inv(y)).abs() <= 1e-13 * r.abs().max(1e-300));
                assert!((l - p.lambda(y)).abs() <= 1e-12 * l.abs().max(1e-300), "psi={psi} y={y}");
            }
        }
    }

    #[test]
    fn gap_examples() {
        let p = problem(1.0);
        assert!((p.lemma_b1_gap(2.0, 8.0) - 1.0).abs() < 1e-12);
        assert_eq!(p.lemma_b1_gap(3.0, 3.0), 0.0);
        assert_eq!(p.lemma_b1_gap(0.0, 1.0), f64::INFINITY);
        let p0 = problem(0.0);
        assert_eq!(p0.lemma_b1_gap(2.0, 8.0), 0.0);
        assert_eq!(p0.lemma_b1_gap(0.0, 8.0), 0.0);
    }

    #[test]
    fn harvest_function() {
        let p = problem(0.0);
        assert_eq!(p.harvest(0.0), 0.0);
        assert_eq!(p.harvest(20.0), 20.0);
        assert_eq!(p.harvest(4000.0), 40.0);
    }

    #[test]
    fn stability_bound_benchmark() {
        let p = problem(0.0);
        let bound = p.stability_bound();
        assert!((bound - 1.0 / 1.0021).abs() < 1e-15);
        assert!((bound - 0.99790).abs() < 1e-5);
        assert!(p.check_stability_bound(0.01));
        assert!(!p.check_stability_bound(bound));
        assert!(!p.check_stability_bound(1.0));

        let s = *p.spectrum();
        let idle = ControlProblem::new(
            s,
            ControlParams {
                u_bar: 0.0,
                ..ControlParams::benchmark(0.6, 0.0)
            },
        )
        .unwrap();
        assert!((idle.stability_bound() - 1e4).abs() < 1e-8);
        assert!(idle.check_stability_bound(9999.0));
    }

    #[test]
    fn validation() {
        let s = *problem(0.0).spectrum();
        let base = ControlParams::benchmark(0.6, 0.0);
        for bad in [
            ControlParams { gamma: 1.0, ..base },
            ControlParams { psi: -1.0, ..base },
            ControlParams { kappa: 0.0, ..base },
            ControlParams { t0: 181.0, ..base },
            ControlParams { x_bar: 4010.0, ..base },
            ControlParams { h_bar: 0.0, ..base },
            ControlParams { eta: -0.1, ..base },
        ] {
            assert!(ControlProblem::new(s, bad).is_err(), "{bad:?}");
        }
    }
}
