mod common;

use common::simpson;
use fishery_core::growth::{GrowthCurve, GrowthVariant};
use fishery_core::spectrum::{Quantization, SizeSpectrum};
use proptest::prelude::*;

fn curve_strategy() -> impl Strategy<Value = GrowthCurve> {
    prop_oneof![
        (0.01f64..0.9, 0.005f64..0.2).prop_map(|(f0, r)| GrowthCurve::von_bertalanffy(f0, r).unwrap()),
        (0.01f64..0.9, 0.005f64..0.2).prop_map(|(f0, r)| GrowthCurve::logistic(f0, r).unwrap()),
        (0.01f64..0.9, 0.0f64..0.05, 1e-6f64..1e-3)
            .prop_map(|(f0, r0, r1)| GrowthCurve::logistic_tv(f0, r0, r1).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn closed_forms_match_the_ode(curve in curve_strategy(), t in 0.0f64..200.0) {
        let exact = curve.eval(t).unwrap();
        let ode = curve.eval_ode_oracle(t).unwrap();
        prop_assert!((exact - ode).abs() <= 1e-7, "{:?} t={} {} vs {}", curve, t, exact, ode);
    }

    #[test]
    fn growth_fraction_is_increasing_and_bounded(curve in curve_strategy(), a in 0.0f64..300.0, b in 0.0f64..300.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let flo = curve.eval(lo).unwrap();
        let fhi = curve.eval(hi).unwrap();
        prop_assert!(flo <= fhi);
        prop_assert!(flo > 0.0 && fhi <= 1.0);
    }

    #[test]
    fn weight_density_integrates_to_one(alpha in 1.5f64..20.0, beta in 1.0f64..30.0, t in 0.0f64..200.0) {
        let s = SizeSpectrum::new(alpha, beta, GrowthCurve::logistic(0.1, 0.03).unwrap()).unwrap();
        let mean = s.mean_weight(t).unwrap();
        let sd = s.var_weight(t).unwrap().sqrt();
        let hi = mean + 40.0 * sd;
        let pdf = |w: f64| if w <= 0.0 { 0.0 } else { s.pdf_w(t, w).unwrap() };
        let mass = simpson(&pdf, 0.0, hi, 1e-12);
        prop_assert!((mass - 1.0).abs() <= 1e-8, "mass {}", mass);
        let m1 = simpson(&|w| w * pdf(w), 0.0, hi, 1e-12 * mean);
        let m2 = simpson(&|w| (w - mean).powi(2) * pdf(w), 0.0, hi, 1e-12 * sd * sd);
        prop_assert!((m1 - mean).abs() <= 1e-6 * mean);
        prop_assert!((m2 - sd * sd).abs() <= 1e-6 * sd * sd);
    }

    #[test]
    fn quantile_inverts_cdf(alpha in 0.5f64..30.0, p in 0.001f64..0.999, t in 0.0f64..200.0) {
        let s = SizeSpectrum::new(alpha, 5.0, GrowthCurve::von_bertalanffy(0.05, 0.02).unwrap()).unwrap();
        let w = s.quantile_w(t, p).unwrap();
        prop_assert!((s.cdf_w(t, w).unwrap() - p).abs() <= 1e-10);
    }
}

#[test]
fn cdf_agrees_with_quadrature() {
    let s = common::spectrum_2025_tv();
    for &(t, w) in &[(61.0, 20.0), (120.0, 60.0), (181.0, 150.0)] {
        let q = simpson(&|x: f64| if x <= 0.0 { 0.0 } else { s.pdf_w(t, x).unwrap() }, 0.0, w, 1e-13);
        assert!((q - s.cdf_w(t, w).unwrap()).abs() < 1e-9);
    }
}

#[test]
fn fine_quantization_preserves_moments() {
    let s = common::spectrum_2025_tv();
    let t = 181.0;
    let mean = s.mean_weight(t).unwrap();
    let var = s.var_weight(t).unwrap();
    let pts = s.quantize(t, 256, Quantization::BinMean).unwrap();
    let m: f64 = pts.iter().map(|p| p.prob * p.weight).sum();
    let v: f64 = pts.iter().map(|p| p.prob * (p.weight - m).powi(2)).sum();
    assert!((m - mean).abs() / mean < 0.005);
    assert!((v - var).abs() / var < 0.005, "variance error {}", (v - var) / var);
}

#[test]
fn midpoint_quantization_converges() {
    let s = common::spectrum_2025_tv();
    let mean = s.mean_weight(181.0).unwrap();
    let pts = s.quantize(181.0, 64, Quantization::Midpoint).unwrap();
    let m: f64 = pts.iter().map(|p| p.prob * p.weight).sum();
    assert!((m - mean).abs() / mean <= 0.02);
}

#[test]
fn mean_weight_is_nondecreasing() {
    for variant in [GrowthVariant::VonBertalanffy, GrowthVariant::Logistic, GrowthVariant::LogisticTv] {
        let params: &[f64] = match variant {
            GrowthVariant::LogisticTv => &[0.199, 0.027, 6.39e-4],
            _ => &[0.1, 0.03],
        };
        let s = SizeSpectrum::new(8.36, 6.83, GrowthCurve::from_params(variant, params).unwrap()).unwrap();
        let means: Vec<f64> = (0..=300).map(|t| s.mean_weight(t as f64).unwrap()).collect();
        assert!(means.windows(2).all(|w| w[0] <= w[1]), "{variant}");
    }
}

#[test]
fn time_varying_reduces_to_logistic() {
    let tv = GrowthCurve::logistic_tv(0.1, 0.03, 0.0).unwrap();
    let lg = GrowthCurve::logistic(0.1, 0.03).unwrap();
    for t in 0..=200 {
        let t = t as f64;
        assert!((tv.eval(t).unwrap() - lg.eval(t).unwrap()).abs() <= 1e-12);
    }
}
