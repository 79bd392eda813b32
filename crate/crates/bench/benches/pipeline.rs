use criterion::{black_box, criterion_group, criterion_main, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use griddefense_bench::data_file;
use griddefense_core::cas::{enumerate_cas, StopRule};
use griddefense_core::dcopf::{solve_dcopf, AttackVector};
use griddefense_core::grid::{parse_grid, Component, GridCase};
use griddefense_core::protect::optimal_protection;
use griddefense_core::synthetic::{random_cas_list, CasShape};

fn load(name: &str) -> GridCase {
    parse_grid(&std::fs::read_to_string(data_file(name)).unwrap()).unwrap()
}

fn dcopf(c: &mut Criterion) {
    let g = load("ieee30.json");
    let attack = AttackVector::from_components(&[Component::Branch("6-8".into()), Component::Generator("G2".into())]);
    c.bench_function("dcopf/ieee30", |b| b.iter(|| solve_dcopf(black_box(&g), black_box(&attack)).unwrap()));
}

fn enumerate(c: &mut Criterion) {
    let ieee9 = load("ieee9.json");
    let ieee30 = load("ieee30.json");
    let mut group = c.benchmark_group("enumerate");
    group.sample_size(10);
    group.bench_function("ieee9_z2_unbounded", |b| {
        b.iter(|| enumerate_cas(&ieee9, 2, StopRule::unbounded()).unwrap())
    });
    group.bench_function("ieee30_z2_default", |b| {
        b.iter(|| enumerate_cas(&ieee30, 2, StopRule::default()).unwrap())
    });
    group.finish();
}

fn protect(c: &mut Criterion) {
    let cas = random_cas_list(
        &mut ChaCha8Rng::seed_from_u64(526),
        CasShape {
            records: 526,
            components: 272,
            z_max: 4,
            skew: 1.0,
        },
    );
    let mut group = c.benchmark_group("protect");
    for x in [1, 3, 5] {
        group.bench_function(format!("526x272_x{x}"), |b| b.iter(|| optimal_protection(black_box(&cas), x)));
    }
    group.finish();
}

criterion_group!(benches, dcopf, enumerate, protect);
criterion_main!(benches);
