// Acceptance gate: end-to-end reproduction of the reference cardinalities,
// error levels, and decay rates, with factor-3 bands absorbing the
// lattice-dependent variation of individual error values.

use num_complex::Complex64;
use r1fft::freqsets::{FrequencySet, WeightFunction};
use r1fft::oracle::{
    exact_coeff_algebraic_1d, exact_coeff_tangens, exact_coeff_tangens_1d, quadrature_coeffs_batch,
    runge_product_sampler, wiener_norm_estimate,
};
use r1fft::sparse::{detect_full, SparseConfig};
use r1fft::tfft::{
    approx_coefficients, evaluate, loglog_slope, reconstruct, roundtrip_error,
    roundtrip_error_multiple, LqNorm, Provenance,
};
use r1fft::transforms::Transform1D;
use r1fft::{
    search_multiple, search_single, CoefficientMap, Rank1Lattice, SamplerHandle, SmoothingMode,
    TransformD, TransformKind, TransformedLattice,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

#[test]
fn cardinality_table_for_two_dimensional_sets() {
    let hc = |beta: f64| FrequencySet::hyperbolic_cross(2, 4.0, beta).unwrap().card();
    assert_eq!(hc(0.5), 265);
    assert_eq!(hc(1.0), 49);
    assert_eq!(hc(2.0), 21);
    let lp = |p: f64| FrequencySet::lp_ball(2, 4.0, p).unwrap().card();
    assert_eq!(lp(f64::INFINITY), 81);
    assert_eq!(lp(10.0), 53);
    assert_eq!(lp(2.0), 49);
    assert_eq!(lp(1.0), 41);
}

/// Random hc or lp set with 2 <= |I| <= 600; rejected draws are cheap
/// because enumeration aborts at the cap.
fn random_set(rng: &mut ChaCha8Rng, d: usize) -> FrequencySet {
    loop {
        let set = if rng.gen_bool(0.5) {
            let n = match d {
                1 => rng.gen_range(2..=250),
                2 => rng.gen_range(2..=30),
                3 => rng.gen_range(2..=12),
                _ => rng.gen_range(2..=8),
            } as f64;
            let beta = rng.gen_range(0.5..=2.0);
            FrequencySet::hyperbolic_cross_capped(d, n, beta, 600)
        } else {
            let n = match d {
                1 => rng.gen_range(2..=250),
                2 => rng.gen_range(2..=11),
                3 => rng.gen_range(2..=6),
                _ => rng.gen_range(2..=4),
            } as f64;
            let ps = [1.0, 1.5, 2.0, 3.0, f64::INFINITY];
            FrequencySet::lp_ball_capped(d, n, ps[rng.gen_range(0..ps.len())], 600)
        };
        if let Ok(s) = set {
            if s.card() >= 2 && !s.is_lazy() {
                return s;
            }
        }
    }
}

#[test]
fn random_polynomials_roundtrip_and_columns_stay_orthogonal() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC2);
    for trial in 0..200usize {
        let d = trial % 4 + 1;
        let set = random_set(&mut rng, d);
        let card = set.card();
        let values: Vec<Complex64> = (0..card)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let coeffs = CoefficientMap::new(set.clone(), values, Provenance::Exact).unwrap();
        let lat = search_single(&set, 4.0).unwrap();
        let samples = evaluate(&coeffs, &lat).unwrap();
        let rec = reconstruct(&samples, &set, &lat).unwrap();
        let err = rec
            .values()
            .iter()
            .zip(coeffs.values())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err <= 1e-10, "trial {trial}: roundtrip error {err:.3e}");

        // Gram spot check on random columns of A: the normalized inner
        // product of columns k and l is 1{k = l} when all residues differ.
        let m = lat.m();
        let ncols = if m > 50_000 { 8 } else { card.min(25) };
        let residues: Vec<u64> = (0..ncols)
            .map(|_| lat.residue(set.freq(rng.gen_range(0..card)).unwrap()))
            .collect();
        for a in 0..ncols {
            for b in a..ncols {
                let delta = (residues[b] + m - residues[a]) % m;
                let mut sum = Complex64::default();
                for j in 0..m {
                    sum += Complex64::from_polar(1.0, TAU * ((delta * j) % m) as f64 / m as f64);
                }
                let expect = if delta == 0 { 1.0 } else { 0.0 };
                let dev = (sum / m as f64 - expect).norm();
                assert!(dev <= 1e-10, "trial {trial}: gram deviation {dev:.3e}");
            }
        }
    }
}

#[test]
fn geometric_sums_detect_dual_lattice_membership() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6E0);
    for _ in 0..10_000 {
        let m = rng.gen_range(2..=200u64);
        let z: Vec<i64> = (0..2).map(|_| rng.gen_range(0..m as i64)).collect();
        let lat = Rank1Lattice::new(z, m).unwrap();
        let t = [rng.gen_range(-50..=50i64), rng.gen_range(-50..=50i64)];
        let mut sum = Complex64::default();
        for j in 0..m {
            let x = lat.node(j);
            let phase = TAU * (t[0] as f64 * x[0] + t[1] as f64 * x[1]);
            sum += Complex64::from_polar(1.0, phase);
        }
        let expect = if lat.dual_contains(&t) { m as f64 } else { 0.0 };
        let dev = (sum - expect).norm();
        assert!(dev <= 1e-10, "M = {m}, t = {t:?}: deviation {dev:.3e}");
    }
}

#[test]
fn quadrature_agrees_with_closed_form_coefficients() {
    let r = 1 << 16;
    let runge = |y: f64| Complex64::new(1.0 / (1.0 + y * y), 0.0);
    let t = Transform1D::new(TransformKind::Algebraic, 1.0).unwrap();
    for (i, v) in quadrature_coeffs_batch(&t, &runge, 32, r)
        .unwrap()
        .iter()
        .enumerate()
    {
        let k = i as i64 - 32;
        let dev = (v - exact_coeff_algebraic_1d(k)).norm();
        assert!(dev <= 1e-6, "algebraic k = {k}: deviation {dev:.3e}");
    }
    for c in [0.5, 1.0, 1.5] {
        let t = Transform1D::new(TransformKind::Tangens, c).unwrap();
        for (i, v) in quadrature_coeffs_batch(&t, &runge, 32, r)
            .unwrap()
            .iter()
            .enumerate()
        {
            let k = i as i64 - 32;
            let dev = (v - exact_coeff_tangens_1d(k, c)).norm();
            assert!(dev <= 1e-6, "tangens c = {c}, k = {k}: deviation {dev:.3e}");
        }
    }
}

#[test]
fn tangens_noise_floor_depends_on_the_width_parameter() {
    let sampler = SamplerHandle::new(&runge_product_sampler);
    let exact_width = TransformD::uniform(TransformKind::Tangens, 1.0, 2).unwrap();
    let off_width = TransformD::uniform(TransformKind::Tangens, 0.8, 2).unwrap();
    let mut floor_rows = 0usize;
    for n in 2..=50u32 {
        let set = FrequencySet::hyperbolic_cross(2, n as f64, 0.9).unwrap();
        let lat = search_single(&set, 4.0).unwrap();
        // c = 1 makes the transformed integrand a degree-1 tensor
        // polynomial, so every truncation error sits at roundoff.
        let exact = roundtrip_error(&sampler, &set, &lat, &exact_width, &SmoothingMode::Plain)
            .unwrap()
            .rel_err
            .unwrap();
        assert!(exact <= 1e-12, "c = 1, N = {n}: rel error {exact:.3e}");
        let off = roundtrip_error(&sampler, &set, &lat, &off_width, &SmoothingMode::Plain)
            .unwrap()
            .rel_err
            .unwrap();
        if n == 2 {
            assert_eq!(set.card(), 21);
            assert!(off >= 1e-4, "c = 4/5 starts at {off:.3e}");
        }
        if set.card() >= 1400 {
            floor_rows += 1;
            assert!(off <= 1e-12, "c = 4/5, |I| = {}: rel error {off:.3e}", set.card());
        }
    }
    assert!(floor_rows >= 1);
}

#[test]
fn algebraic_runge_sweep_matches_reference_decay() {
    let sampler = SamplerHandle::new(&runge_product_sampler);
    let transform = TransformD::uniform(TransformKind::Algebraic, 1.0, 2).unwrap();
    let mut rows = Vec::new();
    for n in 2..=120u32 {
        let set = FrequencySet::hyperbolic_cross(2, n as f64, 0.95).unwrap();
        let lat = search_single(&set, 4.0).unwrap();
        let rec =
            roundtrip_error(&sampler, &set, &lat, &transform, &SmoothingMode::Plain).unwrap();
        assert!(rec.verified, "N = {n}: lattice failed verification");
        rows.push((n, set.card(), rec.rel_err.unwrap()));
    }
    // pinned reference levels; factor 3 absorbs the z, M dependence
    let (_, first_card, first_rel) = rows[0];
    assert_eq!(first_card, 21);
    assert!(
        (3.73e-2 / 3.0..=3.73e-2 * 3.0).contains(&first_rel),
        "first row rel error {first_rel:.4e}"
    );
    let &(_, last_card, last_rel) = rows.last().unwrap();
    assert_eq!(last_card, 3833);
    assert!(
        (3.1e-3 / 3.0..=3.1e-3 * 3.0).contains(&last_rel),
        "last row rel error {last_rel:.4e}"
    );
    // decay rate over the asymptotic half of the sweep
    let tail: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.0 >= 60)
        .map(|r| (r.0 as f64, r.2))
        .collect();
    let slope = loglog_slope(&tail).unwrap();
    assert!((-1.5..=-0.6).contains(&slope), "tail slope {slope:.4}");

    let set5 = FrequencySet::hyperbolic_cross(5, 18.0, 0.95).unwrap();
    assert_eq!(set5.card(), 54393);
    let t5 = TransformD::uniform(TransformKind::Algebraic, 1.0, 5).unwrap();
    let lat5 = search_single(&set5, 4.0).unwrap();
    let rel5 = roundtrip_error(&sampler, &set5, &lat5, &t5, &SmoothingMode::Plain)
        .unwrap()
        .rel_err
        .unwrap();
    assert!(
        (1.29e-2 / 3.0..=1.29e-2 * 3.0).contains(&rel5),
        "d = 5 endpoint rel error {rel5:.4e}"
    );
}

#[test]
fn multiple_lattices_cover_verify_and_track_single_accuracy() {
    let sampler = SamplerHandle::new(&runge_product_sampler);
    let transform = TransformD::uniform(TransformKind::Algebraic, 1.0, 2).unwrap();
    let mut first_rel = None;
    for n in [2u32, 20, 40, 60, 90, 120] {
        let set = FrequencySet::hyperbolic_cross(2, n as f64, 0.95).unwrap();
        let card = set.card() as f64;
        let mlat = search_multiple(&set, 30.0, 30, 0.5, 0x5eed).unwrap();
        let multi =
            roundtrip_error_multiple(&sampler, &set, &mlat, &transform, &SmoothingMode::Plain)
                .unwrap();
        assert!(multi.verified, "N = {n}: coverage or verification lost");
        let budget = 30.0 * card * card.ln();
        assert!(
            (mlat.total_m() as f64) <= budget,
            "N = {n}: total M {} exceeds budget {budget:.0}",
            mlat.total_m()
        );
        let mrel = multi.rel_err.unwrap();
        first_rel.get_or_insert(mrel);
        // the band holds only once both series leave the pre-asymptotic
        // regime; early rows run 4x to 6x above the single-lattice error
        if n >= 20 {
            let lat = search_single(&set, 4.0).unwrap();
            let srel = roundtrip_error(&sampler, &set, &lat, &transform, &SmoothingMode::Plain)
                .unwrap()
                .rel_err
                .unwrap();
            let ratio = mrel / srel;
            assert!(
                (1.0 / 3.0..=3.0).contains(&ratio),
                "N = {n}: multiple/single ratio {ratio:.3}"
            );
        }
    }
    // pinned reference level for the first row
    let f = first_rel.unwrap();
    assert!(
        (1.44221e-1 / 3.0..=1.44221e-1 * 3.0).contains(&f),
        "first multiple row rel error {f:.4e}"
    );
}

/// Sup error of the damped polynomial against reference values on the
/// uniform r x r grid, via one 2d FFT. Grid points are i/r - 1/2, hence
/// the (-1)^(k0+k1) twist per coefficient.
fn grid_sup_err(coeffs: &CoefficientMap, mode: &SmoothingMode, href: &[f64], r: usize) -> f64 {
    let mut g = vec![Complex64::default(); r * r];
    for (k, v) in coeffs.set().iter().unwrap().zip(coeffs.values()) {
        let sign = if (k[0] + k[1]).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        let i0 = (k[0].rem_euclid(r as i64)) as usize;
        let i1 = (k[1].rem_euclid(r as i64)) as usize;
        g[i0 * r + i1] += v * sign * mode.weight(k);
    }
    let mut planner = rustfft::FftPlanner::<f64>::new();
    let fft = planner.plan_fft_inverse(r);
    for row in g.chunks_mut(r) {
        fft.process(row);
    }
    let mut col = vec![Complex64::default(); r];
    for j in 0..r {
        for i in 0..r {
            col[i] = g[i * r + j];
        }
        fft.process(&mut col);
        for i in 0..r {
            g[i * r + j] = col[i];
        }
    }
    g.iter()
        .zip(href)
        .map(|(p, h)| (p - h).norm())
        .fold(0.0, f64::max)
}

#[test]
fn fejer_damping_restores_monotone_decay() {
    const R: usize = 128;
    let sampler = SamplerHandle::new(&runge_product_sampler);
    let transform = TransformD::uniform(TransformKind::Logarithmic, 1.0, 2).unwrap();
    // reference values of h on the grid; h vanishes at the chart boundary
    let t1 = &transform.components()[0];
    let mut axis = vec![0f64; R];
    for (j, a) in axis.iter_mut().enumerate().skip(1) {
        let y = t1.forward(j as f64 / R as f64 - 0.5).unwrap();
        *a = 1.0 / (1.0 + y * y);
    }
    let href: Vec<f64> = (0..R * R).map(|i| axis[i / R] * axis[i % R]).collect();

    let mut plain = Vec::new();
    let mut damped = Vec::new();
    for n in 2..=60u32 {
        let set = FrequencySet::lp_ball(2, n as f64, 2.0).unwrap();
        let lat = search_single(&set, 4.0).unwrap();
        let rec =
            roundtrip_error(&sampler, &set, &lat, &transform, &SmoothingMode::Plain).unwrap();
        plain.push((n, rec.rel_err.unwrap()));
        let tl = TransformedLattice::new(lat, transform.clone()).unwrap();
        let coeffs = approx_coefficients(&sampler, &set, &tl).unwrap();
        let mode = SmoothingMode::fejer(LqNorm::L2, n as f64).unwrap();
        damped.push((n, grid_sup_err(&coeffs, &mode, &href, R)));
    }
    // plain partial sums stall: the node error spreads over a factor >= 2
    // with no trend, because the boundary singularity never decays
    let band: Vec<f64> = plain.iter().filter(|p| p.0 >= 10).map(|p| p.1).collect();
    let spread = band.iter().fold(0.0f64, |a, &b| a.max(b))
        / band.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    assert!(spread >= 2.0, "plain error spread {spread:.3}");
    // damping restores convergence up to 5% jitter: every grid error stays
    // within (1.05 / 0.95) of the running minimum, which is exactly the
    // existence of a nonincreasing sequence within 5% of each value
    let mut floor = f64::INFINITY;
    for &(n, v) in damped.iter().filter(|p| p.0 >= 10) {
        floor = floor.min(v);
        assert!(
            v <= floor * (1.05 / 0.95),
            "N = {n}: grid error {v:.4e} vs floor {floor:.4e}"
        );
    }
}

#[test]
fn sparse_detection_recovers_the_tensor_support() {
    let sampler = SamplerHandle::new(&runge_product_sampler);
    let transform = TransformD::uniform(TransformKind::Tangens, 1.0, 12).unwrap();
    let cfg = SparseConfig::new(12, 4, 1_000_000, 1e-6, 42).unwrap();
    let det = detect_full(&sampler, &transform, &cfg).unwrap();
    // support cardinality 3^12 plus max norm 1 pins the set {-1,0,1}^12
    assert_eq!(det.support.card(), 531_441);
    assert_eq!(det.support.max_abs(), 1);
    assert_eq!(det.report.support_card, 531_441);
    let cs = [1.0f64; 12];
    let mut worst = 0.0f64;
    for (k, v) in det.support.iter().unwrap().zip(det.coefficients.values()) {
        let exact = exact_coeff_tangens(k, &cs).unwrap();
        worst = worst.max((v - exact).norm());
    }
    assert!(worst <= 1e-8, "worst coefficient deviation {worst:.3e}");
}

#[test]
fn node_errors_respect_the_wiener_bound() {
    let sampler = SamplerHandle::new(&runge_product_sampler);
    let transform = TransformD::uniform(TransformKind::Tangens, 1.0, 2).unwrap();
    let coeff = |k: i64| exact_coeff_tangens_1d(k, 1.0);
    for beta in [0.5, 0.9] {
        let w = WeightFunction::hc(beta).unwrap();
        let norm1 = wiener_norm_estimate(&coeff, &w, 64).unwrap().total();
        // coefficients and weight both factor over coordinates, so the
        // 2d weighted norm is the square of the 1d norm
        let norm2 = norm1 * norm1;
        for n in [2u32, 4, 8] {
            let set = FrequencySet::hyperbolic_cross(2, n as f64, beta).unwrap();
            let lat = search_single(&set, 4.0).unwrap();
            let rec =
                roundtrip_error(&sampler, &set, &lat, &transform, &SmoothingMode::Plain).unwrap();
            let bound = 2.0 / n as f64 * norm2;
            assert!(
                rec.abs_err <= bound,
                "beta = {beta}, N = {n}: sup error {:.3e} vs bound {bound:.3e}",
                rec.abs_err
            );
        }
    }
}
