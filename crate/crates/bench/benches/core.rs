use std::hint::black_box;

use biphoton_core::extraction::{extract_phasematch, extract_pump};
use biphoton_core::modes::{default_zernike_indices, gaussian};
use biphoton_core::propagation::{fresnel_propagate, propagate_biphoton};
use biphoton_core::retrieval::{ga_run, plane_loss};
use biphoton_core::spdc::{build_biphoton, coincidence_distribution, sample_coincidences};
use biphoton_core::{BiphotonState, Curvature, GAConfig, GridSpec};
use criterion::{criterion_group, criterion_main, Criterion};

const LAMBDA: f64 = 810e-9;

fn state(n: usize, pitch: f64) -> BiphotonState {
    let g = GridSpec::new(n, pitch).unwrap();
    let pump = gaussian(&g, 8.0 * pitch, Curvature::Radius(0.2), LAMBDA).unwrap();
    let pm = gaussian(&g, 3.0 * pitch, Curvature::Flat, LAMBDA).unwrap();
    build_biphoton(&pump, &pm).unwrap()
}

fn propagation(c: &mut Criterion) {
    let g = GridSpec::new(256, 5e-6).unwrap();
    let beam = gaussian(&g, 1e-4, Curvature::Flat, LAMBDA).unwrap();
    c.bench_function("fresnel_propagate 256", |b| {
        b.iter(|| fresnel_propagate(black_box(&beam), 0.02))
    });
}

fn coincidences(c: &mut Criterion) {
    let s = propagate_biphoton(&state(64, 2.75e-5), 0.19).unwrap();
    c.bench_function("coincidence_distribution 64 -> 32", |b| {
        b.iter(|| coincidence_distribution(black_box(&s), 32).unwrap())
    });
    let ideal = coincidence_distribution(&s, 32).unwrap();
    c.bench_function("sample_coincidences 1e6 events", |b| {
        b.iter(|| sample_coincidences(black_box(&ideal), 1_000_000, 7).unwrap())
    });
}

fn extraction(c: &mut Criterion) {
    let s = propagate_biphoton(&state(64, 2.75e-5), 0.19).unwrap();
    let h = coincidence_distribution(&s, 32).unwrap();
    c.bench_function("extract pump + phasematch 32", |b| {
        b.iter(|| {
            (
                extract_pump(black_box(&h), 1).unwrap(),
                extract_phasematch(black_box(&h), 1).unwrap(),
            )
        })
    });
}

fn retrieval(c: &mut Criterion) {
    let g = GridSpec::new(32, 2e-5).unwrap();
    let beam = gaussian(&g, 1.2e-4, Curvature::Radius(0.3), LAMBDA / 2.0).unwrap();
    let i1 = beam.intensity();
    let i2 = fresnel_propagate(&beam, 0.1).intensity();
    let probe = fresnel_propagate(&i1.sqrt_field(LAMBDA / 2.0, 0.0).unwrap(), 0.1);
    c.bench_function("plane_loss 32", |b| {
        b.iter(|| plane_loss(black_box(&probe), black_box(&i2)).unwrap())
    });
    let config = GAConfig {
        population: 20,
        generations: 5,
        ..GAConfig::default()
    };
    let genes = default_zernike_indices();
    let mut group = c.benchmark_group("ga");
    group.sample_size(10);
    group.bench_function("ga_run 32 grid, 20 x 5", |b| {
        b.iter(|| {
            ga_run(&i1, &i2, 0.0, 0.1, &genes, g.extent() / 2.0, LAMBDA / 2.0, &config).unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, propagation, coincidences, extraction, retrieval);
criterion_main!(benches);
