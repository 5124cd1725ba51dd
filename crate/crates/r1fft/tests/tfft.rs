//! FFT evaluation and reconstruction checked against direct summation.

use num_complex::Complex64;
use proptest::prelude::*;
use r1fft::oracle::{exact_coeff_algebraic_1d, runge_product_sampler};
use r1fft::tfft::{
    approx_coefficients, evaluate, reconstruct, roundtrip_error, Provenance,
};
use r1fft::{
    search_single, CoefficientMap, FrequencySet, Rank1Lattice, SamplerHandle, SmoothingMode,
    TransformD, TransformKind, TransformedLattice,
};
use std::f64::consts::TAU;

fn naive_evaluate(coeffs: &CoefficientMap, lat: &Rank1Lattice) -> Vec<Complex64> {
    (0..lat.m())
        .map(|j| {
            let x = lat.node(j);
            coeffs
                .set()
                .iter()
                .unwrap()
                .zip(coeffs.values())
                .map(|(k, v)| {
                    let phase: f64 = k.iter().zip(&x).map(|(&ki, xi)| ki as f64 * xi).sum();
                    v * Complex64::from_polar(1.0, TAU * phase)
                })
                .sum()
        })
        .collect()
}

#[test]
fn adjoint_times_forward_is_m_times_identity() {
    let set = FrequencySet::hyperbolic_cross(2, 4.0, 1.0).unwrap();
    let lat = search_single(&set, 4.0).unwrap();
    let card = set.card();
    let m = lat.m();
    // columns of A evaluated explicitly, then A* A compared to M I
    let mut cols = Vec::with_capacity(card);
    for k in set.iter().unwrap() {
        let col: Vec<Complex64> = (0..m)
            .map(|j| {
                let x = lat.node(j);
                let phase: f64 = k.iter().zip(&x).map(|(&ki, xi)| ki as f64 * xi).sum();
                Complex64::from_polar(1.0, TAU * phase)
            })
            .collect();
        cols.push(col);
    }
    for (a, ca) in cols.iter().enumerate() {
        for (b, cb) in cols.iter().enumerate() {
            let dot: Complex64 = ca.iter().zip(cb).map(|(x, y)| x.conj() * y).sum();
            let want = if a == b { m as f64 } else { 0.0 };
            assert!(
                (dot - want).norm() < 1e-9,
                "entry ({a}, {b}) = {dot}"
            );
        }
    }
}

#[test]
fn aliasing_folds_dual_shifted_coefficients_together() {
    // t = (2, 1) satisfies t . z = 0 mod M, so k and k + t collide
    let lat = Rank1Lattice::new(vec![1, 3], 5).unwrap();
    let t = [2i64, 1];
    assert!(lat.dual_contains(&t));
    let k = [0i64, 0];
    let shifted = [k[0] + t[0], k[1] + t[1]];
    let spectrum = FrequencySet::from_freqs(2, vec![k.to_vec(), shifted.to_vec()]).unwrap();
    let c1 = Complex64::new(0.7, -0.2);
    let c2 = Complex64::new(-0.1, 0.4);
    let vals = if spectrum.freq(0).unwrap() == k {
        vec![c1, c2]
    } else {
        vec![c2, c1]
    };
    let coeffs = CoefficientMap::new(spectrum, vals, Provenance::Exact).unwrap();
    let samples = evaluate(&coeffs, &lat).unwrap();
    let target = FrequencySet::from_freqs(2, vec![k.to_vec()]).unwrap();
    let rec = reconstruct(&samples, &target, &lat).unwrap();
    assert!((rec.values()[0] - (c1 + c2)).norm() < 1e-12);
}

#[test]
fn reconstructed_runge_slice_equals_the_alias_series() {
    let set = FrequencySet::hyperbolic_cross(1, 4.0, 1.0).unwrap();
    let lat = search_single(&set, 4.0).unwrap();
    let transform = TransformD::uniform(TransformKind::Algebraic, 1.0, 1).unwrap();
    let tl = TransformedLattice::new(lat.clone(), transform).unwrap();
    let sampler = SamplerHandle::new(&runge_product_sampler);
    let rec = approx_coefficients(&sampler, &set, &tl).unwrap();
    let m = lat.m() as i64;
    for (k, v) in rec.set().iter().unwrap().zip(rec.values()) {
        let mut alias = 0.0;
        let mut t = k[0];
        while t <= 100_000 {
            alias += exact_coeff_algebraic_1d(t);
            t += m;
        }
        let mut t = k[0] - m;
        while t >= -100_000 {
            alias += exact_coeff_algebraic_1d(t);
            t -= m;
        }
        assert!((v.re - alias).abs() < 1e-5, "k = {}, got {} want {alias}", k[0], v.re);
        assert!(v.im.abs() < 1e-10);
    }
}

#[test]
fn band_limited_transformed_functions_roundtrip_exactly() {
    let set = FrequencySet::full_grid(2, 1).unwrap();
    let lat = search_single(&set, 4.0).unwrap();
    let transform = TransformD::uniform(TransformKind::Tangens, 1.0, 2).unwrap();
    let sampler = SamplerHandle::new(&runge_product_sampler);
    let rec = roundtrip_error(&sampler, &set, &lat, &transform, &SmoothingMode::Plain).unwrap();
    assert!(rec.verified);
    assert!(rec.rel_err.unwrap() < 1e-13);
}

#[test]
fn riesz_with_unit_exponents_equals_fejer() {
    use r1fft::tfft::LqNorm;
    let fejer = SmoothingMode::fejer(LqNorm::L2, 6.0).unwrap();
    let riesz = SmoothingMode::riesz(LqNorm::L2, 6.0, 1.0, 1.0).unwrap();
    for k in [[0i64, 0], [1, 2], [3, -4], [6, 0], [5, 5]] {
        assert!((fejer.weight(&k) - riesz.weight(&k)).abs() < 1e-15);
    }
}

#[test]
fn coefficient_map_serde_rejects_corrupted_payloads() {
    let set = FrequencySet::full_grid(1, 1).unwrap();
    let coeffs = CoefficientMap::new(
        set,
        vec![Complex64::new(1.0, 0.0); 3],
        Provenance::Exact,
    )
    .unwrap();
    let json = serde_json::to_string(&coeffs).unwrap();
    let back: CoefficientMap = serde_json::from_str(&json).unwrap();
    assert_eq!(back.values(), coeffs.values());
    let wrong_len = json.replace("[1.0,0.0],", "");
    assert!(serde_json::from_str::<CoefficientMap>(&wrong_len).is_err());
    let non_finite = json.replacen("1.0", "null", 1);
    assert!(serde_json::from_str::<CoefficientMap>(&non_finite).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig {
        failure_persistence: None,
        cases: 48,
        ..ProptestConfig::default()
    })]

    #[test]
    fn evaluate_agrees_with_direct_summation(
        freqs in prop::collection::vec(prop::collection::vec(-8i64..9, 2), 1..12),
        res in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 12),
        zs in prop::collection::vec(0i64..50, 2),
        m in 2u64..70,
    ) {
        let set = FrequencySet::from_freqs(2, freqs).unwrap();
        let values: Vec<Complex64> = res[..set.card()]
            .iter()
            .map(|&(re, im)| Complex64::new(re, im))
            .collect();
        let coeffs = CoefficientMap::new(set, values, Provenance::Exact).unwrap();
        let lat = Rank1Lattice::new(zs, m).unwrap();
        let fast = evaluate(&coeffs, &lat).unwrap();
        let slow = naive_evaluate(&coeffs, &lat);
        for (f, s) in fast.iter().zip(&slow) {
            prop_assert!((f - s).norm() < 1e-9);
        }
    }

    #[test]
    fn roundtrip_recovers_random_spectra(
        freqs in prop::collection::vec(prop::collection::vec(-6i64..7, 2), 2..16),
        res in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 16),
    ) {
        let set = FrequencySet::from_freqs(2, freqs).unwrap();
        let values: Vec<Complex64> = res[..set.card()]
            .iter()
            .map(|&(re, im)| Complex64::new(re, im))
            .collect();
        let coeffs = CoefficientMap::new(set.clone(), values, Provenance::Exact).unwrap();
        let lat = search_single(&set, 4.0).unwrap();
        let samples = evaluate(&coeffs, &lat).unwrap();
        let rec = reconstruct(&samples, &set, &lat).unwrap();
        for (a, b) in rec.values().iter().zip(coeffs.values()) {
            prop_assert!((a - b).norm() < 1e-10);
        }
    }
}
