use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, Criterion};

use hubmagic::dimer::{ground_state, thermal_state, DimerParams};
use hubmagic::magic::{mixed_sre_2, sre};
use hubmagic::pauli::pauli_decompose;
use hubmagic::stabilizer::build_a_matrix;
use hubmagic::MagicContext;

fn catalog(c: &mut Criterion) {
    let mut g = c.benchmark_group("catalog");
    g.sample_size(10);
    for n in [3, 4] {
        g.bench_function(format!("build_n{n}"), |b| b.iter(|| build_a_matrix(black_box(n)).unwrap()));
    }
    g.finish();
}

fn robustness(c: &mut Criterion) {
    let a4 = build_a_matrix(4).unwrap();
    let a2 = build_a_matrix(2).unwrap();
    let psi = ground_state(&DimerParams::new(1.0, 4.0).unwrap());
    let hot = thermal_state(&DimerParams::new(1.0, 4.0).unwrap().with_temperature(1.0).unwrap()).unwrap();
    let mut g = c.benchmark_group("robustness");
    g.sample_size(10).measurement_time(Duration::from_secs(40));
    g.bench_function("n4_ground_cold", |b| b.iter(|| MagicContext::new(&a4).robustness(black_box(&psi)).unwrap()));
    g.bench_function("n4_thermal_cold", |b| b.iter(|| MagicContext::new(&a4).robustness(black_box(&hot)).unwrap()));
    let mut warm = MagicContext::new(&a4);
    warm.robustness(&psi).unwrap();
    g.bench_function("n4_ground_warm", |b| b.iter(|| warm.robustness(black_box(&psi)).unwrap()));
    g.finish();

    let site = hubmagic::dimer::local_rdm(&psi).unwrap();
    c.bench_function("robustness/n2_site_cold", |b| {
        b.iter(|| MagicContext::new(&a2).robustness(black_box(&site)).unwrap())
    });
}

fn pauli(c: &mut Criterion) {
    let psi = ground_state(&DimerParams::new(1.0, 2.0).unwrap());
    c.bench_function("pauli/decompose_n4", |b| b.iter(|| pauli_decompose(black_box(&psi))));
    c.bench_function("pauli/sre2_n4", |b| b.iter(|| sre(black_box(&psi), 2.0).unwrap()));
    c.bench_function("pauli/mixed_sre2_n4", |b| b.iter(|| mixed_sre_2(black_box(&psi))));
}

criterion_group!(benches, catalog, robustness, pauli);
criterion_main!(benches);
