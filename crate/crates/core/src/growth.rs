//! Normalized growth fraction `f(t)`.
//!
//! All three curves are sigmoid (or convex, for Von Bertalanffy with a large
//! `f0`) solutions of a first-order ODE started from `f(0) = f0`. They are
//! evaluated in closed form; [`GrowthCurve::eval_ode_oracle`] integrates the
//! underlying ODE numerically and exists to cross-check the closed forms.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrowthVariant {
    #[serde(alias = "vb")]
    VonBertalanffy,
    Logistic,
    /// Logistic growth with rate `r0 + r1 t`.
    #[serde(alias = "logistic_tv", alias = "logistic-time-varying")]
    LogisticTv,
}

impl GrowthVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            GrowthVariant::VonBertalanffy => "von-bertalanffy",
            GrowthVariant::Logistic => "logistic",
            GrowthVariant::LogisticTv => "logistic-tv",
        }
    }
}

impl fmt::Display for GrowthVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GrowthVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "vb" | "von-bertalanffy" | "vonbertalanffy" => Ok(GrowthVariant::VonBertalanffy),
            "logistic" => Ok(GrowthVariant::Logistic),
            "logistic-tv" | "logistic_tv" | "logistic-time-varying" => {
                Ok(GrowthVariant::LogisticTv)
            }
            other => Err(Error::validation(format!(
                "unknown growth variant '{other}' (expected vb, logistic or logistic-tv)"
            ))),
        }
    }
}

/// A validated growth curve. Construct through [`GrowthCurve::von_bertalanffy`],
/// [`GrowthCurve::logistic`] or [`GrowthCurve::logistic_tv`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthCurve {
    variant: GrowthVariant,
    f0: f64,
    r: f64,
    r0: f64,
    r1: f64,
}

fn check_f0(f0: f64) -> Result<()> {
    if !(f0 > 0.0 && f0 < 1.0) {
        return Err(Error::domain(format!("f0 must lie in (0,1), got {f0}")));
    }
    Ok(())
}

fn check_rate(name: &str, r: f64) -> Result<()> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::domain(format!("{name} must be positive and finite, got {r}")));
    }
    Ok(())
}

impl GrowthCurve {
    pub fn von_bertalanffy(f0: f64, r: f64) -> Result<Self> {
        check_f0(f0)?;
        check_rate("r", r)?;
        Ok(Self {
            variant: GrowthVariant::VonBertalanffy,
            f0,
            r,
            r0: 0.0,
            r1: 0.0,
        })
    }

    pub fn logistic(f0: f64, r: f64) -> Result<Self> {
        check_f0(f0)?;
        check_rate("r", r)?;
        Ok(Self {
            variant: GrowthVariant::Logistic,
            f0,
            r,
            r0: 0.0,
            r1: 0.0,
        })
    }

    /// Logistic curve whose rate grows linearly, `r_t = r0 + r1 t`.
    /// Either coefficient may be zero, but not both.
    pub fn logistic_tv(f0: f64, r0: f64, r1: f64) -> Result<Self> {
        check_f0(f0)?;
        if !(r0 >= 0.0 && r1 >= 0.0) || !r0.is_finite() || !r1.is_finite() {
            return Err(Error::domain(format!(
                "r0 and r1 must be finite and nonnegative, got r0={r0}, r1={r1}"
            )));
        }
        if r0 + r1 <= 0.0 {
            return Err(Error::domain("r0 and r1 cannot both be zero"));
        }
        Ok(Self {
            variant: GrowthVariant::LogisticTv,
            f0,
            r: 0.0,
            r0,
            r1,
        })
    }

    /// Builds a curve of `variant` from a flat parameter slice:
    /// `[f0, r]` for the constant-rate curves, `[f0, r0, r1]` otherwise.
    pub fn from_params(variant: GrowthVariant, params: &[f64]) -> Result<Self> {
        match (variant, params) {
            (GrowthVariant::VonBertalanffy, [f0, r]) => Self::von_bertalanffy(*f0, *r),
            (GrowthVariant::Logistic, [f0, r]) => Self::logistic(*f0, *r),
            (GrowthVariant::LogisticTv, [f0, r0, r1]) => Self::logistic_tv(*f0, *r0, *r1),
            _ => Err(Error::domain(format!(
                "wrong number of parameters ({}) for {variant}",
                params.len()
            ))),
        }
    }

    pub fn variant(&self) -> GrowthVariant {
        self.variant
    }

    pub fn f0(&self) -> f64 {
        self.f0
    }

    /// Constant growth rate; zero for the time-varying curve.
    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn r1(&self) -> f64 {
        self.r1
    }

    /// Growth fraction at day `t`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::domain(format!("time must be nonnegative, got {t}")));
        }
        Ok(self.value(t))
    }

    /// Growth fraction without the domain check. `t` must be nonnegative.
    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        if t == 0.0 {
            return self.f0;
        }
        match self.variant {
            GrowthVariant::VonBertalanffy => {
                let c = 1.0 - self.f0.cbrt();
                let base = 1.0 - c * (-self.r * t / 3.0).exp();
                base * base * base
            }
            GrowthVariant::Logistic => logistic_closed_form(self.f0, self.r * t),
            GrowthVariant::LogisticTv => {
                logistic_closed_form(self.f0, self.r0 * t + 0.5 * self.r1 * t * t)
            }
        }
    }

    /// Right-hand side of the growth ODE at time `t` and state `f`.
    fn rhs(&self, t: f64, f: f64) -> f64 {
        match self.variant {
            GrowthVariant::VonBertalanffy => {
                let c = f.max(0.0).cbrt();
                self.r * c * c * (1.0 - c)
            }
            GrowthVariant::Logistic => self.r * f * (1.0 - f),
            GrowthVariant::LogisticTv => (self.r0 + self.r1 * t) * f * (1.0 - f),
        }
    }

    /// Integrates the growth ODE from `f(0) = f0` with classical fourth-order
    /// Runge-Kutta. The step is at most 0.01 day, which keeps the local error
    /// far below 1e-10 for rates of practical size.
    pub fn eval_ode_oracle(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::domain(format!("time must be nonnegative, got {t}")));
        }
        if t == 0.0 {
            return Ok(self.f0);
        }
        let rate_scale = match self.variant {
            GrowthVariant::LogisticTv => self.r0 + self.r1 * t,
            _ => self.r,
        };
        let max_step = (0.01f64).min(0.05 / rate_scale.max(1e-12));
        let n = (t / max_step).ceil().max(1.0) as usize;
        let h = t / n as f64;
        let mut f = self.f0;
        for step in 0..n {
            let s = step as f64 * h;
            let k1 = self.rhs(s, f);
            let k2 = self.rhs(s + 0.5 * h, f + 0.5 * h * k1);
            let k3 = self.rhs(s + 0.5 * h, f + 0.5 * h * k2);
            let k4 = self.rhs(s + h, f + h * k3);
            f += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        Ok(f)
    }
}

/// `1 / ((1/f0 - 1) e^{-R} + 1)` for cumulative rate `R`.
#[inline]
fn logistic_closed_form(f0: f64, cumulative_rate: f64) -> f64 {
    1.0 / ((1.0 / f0 - 1.0) * (-cumulative_rate).exp() + 1.0)
}
