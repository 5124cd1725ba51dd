//! Oracle cross-checks: quadrature, closed forms, and norm estimates.

use proptest::prelude::*;
use r1fft::freqsets::WeightFunction;
use r1fft::oracle::{
    decay_constant, exact_coeff_algebraic_1d, exact_coeff_tangens_1d, quadrature_coeff,
    quadrature_coeffs_batch, wiener_norm_estimate,
};
use r1fft::tfft::loglog_slope;
use num_complex::Complex64;
use r1fft::{Transform1D, TransformKind};

fn runge_1d(y: f64) -> Complex64 {
    Complex64::new(1.0 / (1.0 + y * y), 0.0)
}

#[test]
fn quadrature_reproduces_both_closed_forms() {
    let r = 1 << 16;
    let alg = Transform1D::new(TransformKind::Algebraic, 1.0).unwrap();
    for k in [-5i64, -1, 0, 2, 7] {
        let got = quadrature_coeff(&alg, &runge_1d, k, r).unwrap();
        assert!((got.re - exact_coeff_algebraic_1d(k)).abs() < 1e-6);
        assert!(got.im.abs() < 1e-10);
    }
    let tan = Transform1D::new(TransformKind::Tangens, 1.5).unwrap();
    for k in [-4i64, 0, 1, 3] {
        let got = quadrature_coeff(&tan, &runge_1d, k, r).unwrap();
        assert!((got.re - exact_coeff_tangens_1d(k, 1.5)).abs() < 1e-8);
    }
}

#[test]
fn coefficients_of_the_real_even_integrand_are_real_and_symmetric() {
    // no closed form exists for these kinds; symmetry is still exact
    for kind in [TransformKind::Logarithmic, TransformKind::Error] {
        let t = Transform1D::new(kind, 1.0).unwrap();
        let coeffs = quadrature_coeffs_batch(&t, &runge_1d, 16, 1 << 12).unwrap();
        // batch layout is k = -kmax..=kmax
        let kmax = 16usize;
        for off in 0..=kmax {
            let plus = coeffs[kmax + off];
            let minus = coeffs[kmax - off];
            assert!(plus.im.abs() < 1e-12);
            assert!((plus.re - minus.re).abs() < 1e-12);
        }
    }
}

#[test]
fn wiener_shells_follow_the_expected_power_law() {
    let w = WeightFunction::hc(0.95).unwrap();
    let est = wiener_norm_estimate(&exact_coeff_algebraic_1d, &w, 10_000).unwrap();
    assert!(est.total().is_finite());
    assert!(!est.diverging());
    let pts: Vec<(f64, f64)> = (100..10_000)
        .map(|r| (r as f64, est.shells()[r]))
        .collect();
    let slope = loglog_slope(&pts).unwrap();
    assert!((slope + 1.05).abs() < 0.02, "slope = {slope}");
}

proptest! {
    #![proptest_config(ProptestConfig {
        failure_persistence: None,
        cases: 32,
        ..ProptestConfig::default()
    })]

    #[test]
    fn batch_quadrature_matches_single_coefficients(
        kind in prop::sample::select(vec![
            TransformKind::Algebraic,
            TransformKind::Logarithmic,
            TransformKind::Error,
            TransformKind::Tangens,
        ]),
        c in 0.5f64..2.0,
        kmax in 1u32..12,
    ) {
        let t = Transform1D::new(kind, c).unwrap();
        let r = 1 << 10;
        let batch = quadrature_coeffs_batch(&t, &runge_1d, kmax, r).unwrap();
        for (i, k) in (-(kmax as i64)..=kmax as i64).enumerate() {
            let single = quadrature_coeff(&t, &runge_1d, k, r).unwrap();
            prop_assert!((batch[i] - single).norm() < 1e-12);
        }
    }

    #[test]
    fn decay_constant_dominates_the_exponential(
        b in 1.2f64..6.0,
        eps in 0.1f64..2.0,
        k in 1u32..2000,
    ) {
        let c = decay_constant(b, eps).unwrap();
        let k = k as f64;
        prop_assert!(b.powf(-k) <= c * k.powf(-(1.0 + eps)) * (1.0 + 1e-12));
    }
}
