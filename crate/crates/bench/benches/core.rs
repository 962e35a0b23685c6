use std::hint::black_box;

use criterion::{Criterion, criterion_group, criterion_main};
use rach_core::design::{self, DEFAULT_ENUM_CAP, bundled};
use rach_core::search::{SearchOptions, search_max_3ic};
use rach_core::sim::{self, SimConfig, Source, sic_decode, simulate_per};
use rach_core::verify::{self, DEFAULT_BUDGET};

fn search(c: &mut Criterion) {
    let mut g = c.benchmark_group("search");
    g.sample_size(10);
    g.bench_function("max_3ic_n6", |b| b.iter(|| search_max_3ic(black_box(6), &SearchOptions::default()).unwrap()));
    g.finish();
}

fn verify_steiner_code(c: &mut Criterion) {
    let code = design::design_to_codebook(&bundled::steiner_3_5_26()).unwrap();
    let mut g = c.benchmark_group("verify");
    g.sample_size(10);
    g.bench_function("is_3ic_s35_26", |b| b.iter(|| verify::is_m_ic(black_box(&code), 3, DEFAULT_BUDGET).unwrap()));
    g.finish();
}

fn peeling(c: &mut Criterion) {
    let code = design::enumerate_constant_weight(24, 3, DEFAULT_ENUM_CAP).unwrap();
    let mut rng = sim::frame_rng(1, 0);
    let sets: Vec<Vec<_>> = (0..256)
        .map(|_| rand::seq::index::sample(&mut rng, code.size(), 24).into_iter().map(|i| code.patterns()[i]).collect())
        .collect();
    c.bench_function("sic_decode_24_users", |b| {
        b.iter(|| sets.iter().map(|s| sic_decode(black_box(s)).len()).sum::<usize>())
    });
}

fn simulate(c: &mut Criterion) {
    let code = design::enumerate_constant_weight(24, 3, DEFAULT_ENUM_CAP).unwrap();
    let cfg = SimConfig { source: Source::Deterministic(code), lambda: 0.5, trials: 20_000, seed: 1 };
    let mut g = c.benchmark_group("simulate");
    g.sample_size(10);
    g.bench_function("dcrdsa_k3_20k_frames", |b| b.iter(|| simulate_per(black_box(&cfg)).unwrap()));
    g.finish();
}

criterion_group!(benches, search, verify_steiner_code, peeling, simulate);
criterion_main!(benches);
