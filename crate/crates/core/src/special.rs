//! Log-gamma, the regularized lower incomplete gamma function and its inverse.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const MAX_ITER: usize = 500;
const QUANTILE_MAX_ITER: usize = 200;

// Lanczos approximation, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection keeps the series in its accurate range.
        (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x)
    } else {
        let x = x - 1.0;
        let mut a = LANCZOS_COEF[0];
        let t = x + LANCZOS_G + 0.5;
        for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
    }
}

/// Regularized lower incomplete gamma `P(a, x)`.
///
/// Series expansion below `x = a + 1`, Lentz continued fraction for the
/// upper tail above it.
pub fn gamma_p(a: f64, x: f64) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::domain(format!("gamma shape must be positive, got {a}")));
    }
    if !(x >= 0.0) {
        return Err(Error::domain(format!("gamma argument must be nonnegative, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let log_prefactor = -x + a * x.ln() - ln_gamma(a);
    if x < a + 1.0 {
        Ok((log_prefactor.exp() * series(a, x)?).min(1.0))
    } else {
        Ok((1.0 - log_prefactor.exp() * continued_fraction(a, x)?).max(0.0))
    }
}

fn series(a: f64, x: f64) -> Result<f64> {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * f64::EPSILON {
            return Ok(sum);
        }
    }
    Err(Error::Convergence(format!("incomplete gamma series a={a}, x={x}")))
}

fn continued_fraction(a: f64, x: f64) -> Result<f64> {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < f64::EPSILON {
            return Ok(h);
        }
    }
    Err(Error::Convergence(format!("incomplete gamma continued fraction a={a}, x={x}")))
}

/// Density of the standard gamma law (unit scale) at `x`.
pub fn gamma_density(a: f64, x: f64) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    if x == 0.0 {
        return match a.partial_cmp(&1.0) {
            Some(std::cmp::Ordering::Less) => f64::INFINITY,
            Some(std::cmp::Ordering::Equal) => 1.0,
            _ => 0.0,
        };
    }
    ((a - 1.0) * x.ln() - x - ln_gamma(a)).exp()
}

/// Inverse of `x -> P(a, x)` for `p` in `(0, 1)`.
///
/// Brackets the root by doubling, bisects, then polishes with Newton steps
/// that are rejected whenever they leave the bracket. Fails rather than
/// returning an unconverged value.
pub fn gamma_p_inv(a: f64, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("probability must lie in (0,1), got {p}")));
    }
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::domain(format!("gamma shape must be positive, got {a}")));
    }
    const TOL: f64 = 1e-12;

    let mut lo = 0.0_f64;
    let mut hi = a.max(1.0);
    let mut iterations = 0usize;
    while gamma_p(a, hi)? < p {
        lo = hi;
        hi *= 2.0;
        iterations += 1;
        if iterations > QUANTILE_MAX_ITER {
            return Err(Error::Convergence(format!("gamma quantile bracket a={a}, p={p}")));
        }
    }

    let mut x = 0.5 * (lo + hi);
    loop {
        iterations += 1;
        if iterations > QUANTILE_MAX_ITER {
            return Err(Error::Convergence(format!(
                "gamma quantile did not converge for a={a}, p={p}"
            )));
        }
        let err = gamma_p(a, x)? - p;
        if err.abs() <= TOL * p.min(1.0 - p).max(1e-3) {
            return Ok(x);
        }
        if err > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let dens = gamma_density(a, x);
        let newton = if dens > 0.0 && dens.is_finite() {
            x - err / dens
        } else {
            f64::NAN
        };
        // Bisect until the bracket is tight enough for Newton to be trusted.
        x = if newton > lo && newton < hi && (hi - lo) < 0.5 * hi.max(1e-300) {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= f64::EPSILON * hi {
            let err = gamma_p(a, x)? - p;
            if err.abs() <= 1e-10 {
                return Ok(x);
            }
        }
    }
}
