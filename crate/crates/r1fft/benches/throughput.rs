//! Parallel vs sequential throughput of the node, sampling, and
//! reconstruction hot paths.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use num_complex::Complex64;
use r1fft::tfft::{evaluate, reconstruct, CoefficientMap, Provenance, SamplerHandle};
use r1fft::{bench_support as bs, FrequencySet, Rank1Lattice, TransformD, TransformKind, TransformedLattice};

fn fixed_lattice(d: usize, m: u64) -> Rank1Lattice {
    // generator values only drive memory traffic here; reconstruction
    // properties are irrelevant for throughput
    let z: Vec<i64> = (0..d as i64).map(|j| 1 + j * j * 7919 % m as i64).collect();
    Rank1Lattice::new(z, m).unwrap()
}

fn bench_nodes(c: &mut Criterion) {
    let mut group = c.benchmark_group("nodes");
    for &m in &[1u64 << 14, 1 << 18] {
        let lat = fixed_lattice(6, m - 3);
        group.throughput(Throughput::Elements(lat.m()));
        group.bench_with_input(BenchmarkId::new("parallel", m), &lat, |b, lat| {
            b.iter(|| bs::nodes(lat))
        });
        group.bench_with_input(BenchmarkId::new("sequential", m), &lat, |b, lat| {
            b.iter(|| bs::nodes_seq(lat))
        });
    }
    group.finish();
}

fn bench_sampling(c: &mut Criterion) {
    let mut group = c.benchmark_group("sampling");
    group.sample_size(20);
    let runge = |y: &[f64]| {
        let mut v = 1.0;
        for &yi in y {
            v /= 1.0 + yi * yi;
        }
        Complex64::new(v, 0.0)
    };
    let sampler = SamplerHandle::new(&runge);
    for &m in &[1u64 << 14, 1 << 18] {
        let lat = fixed_lattice(6, m - 3);
        let transform = TransformD::uniform(TransformKind::Tangens, 1.0, 6).unwrap();
        let tl = TransformedLattice::new(lat, transform).unwrap();
        group.throughput(Throughput::Elements(m));
        group.bench_with_input(BenchmarkId::new("parallel", m), &tl, |b, tl| {
            b.iter(|| bs::sample(tl, &sampler, true).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("sequential", m), &tl, |b, tl| {
            b.iter(|| bs::sample(tl, &sampler, false).unwrap())
        });
    }
    group.finish();
}

fn bench_transform_roundtrip(c: &mut Criterion) {
    let mut group = c.benchmark_group("fft_roundtrip");
    group.sample_size(20);
    let set = FrequencySet::hyperbolic_cross(3, 16.0, 1.0).unwrap();
    let lat = r1fft::search_single(&set, 4.0).unwrap();
    let values: Vec<Complex64> = (0..set.card())
        .map(|i| Complex64::new((i as f64).sin(), (i as f64).cos()))
        .collect();
    let coeffs = CoefficientMap::new(set.clone(), values, Provenance::Exact).unwrap();
    let samples = evaluate(&coeffs, &lat).unwrap();
    group.throughput(Throughput::Elements(lat.m()));
    group.bench_function("evaluate", |b| b.iter(|| evaluate(&coeffs, &lat).unwrap()));
    group.bench_function("reconstruct", |b| {
        b.iter(|| reconstruct(&samples, &set, &lat).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_nodes, bench_sampling, bench_transform_roundtrip);
criterion_main!(benches);
