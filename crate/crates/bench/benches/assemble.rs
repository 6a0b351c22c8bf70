use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use iqae_bench::{ising_fixture, random_fixture};
use iqae_core::solver::sweep;
use iqae_core::{Backend, OverlapSet, SolverConfig};

fn assemble(c: &mut Criterion) {
    let (h, basis, state) = ising_fixture(8, 2);
    c.bench_function("assemble_ising8_k2", |b| {
        b.iter(|| black_box(OverlapSet::assemble(&basis, &h, &state, &Backend::Exact).unwrap()))
    });
    let (h, basis, state) = random_fixture(1000, 8, 256);
    c.bench_function("assemble_random1000_m256", |b| {
        b.iter(|| black_box(OverlapSet::assemble(&basis, &h, &state, &Backend::Product).unwrap()))
    });
}

fn solve_sweep(c: &mut Criterion) {
    let (h, basis, state) = ising_fixture(8, 3);
    let set = OverlapSet::assemble(&basis, &h, &state, &Backend::Exact).unwrap();
    let grid: Vec<Vec<f64>> = (1..=20)
        .map(|i| {
            let field = 0.1 * i as f64;
            h.terms()
                .iter()
                .map(|(b, t)| if t.x_mask().iter().any(|w| *w != 0) { *b } else { -field })
                .collect()
        })
        .collect();
    let config = SolverConfig::exact(3);
    c.bench_function("sweep_ising8_k3_20pts", |b| b.iter(|| black_box(sweep(&set, &grid, &config).unwrap())));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = assemble, solve_sweep
}
criterion_main!(benches);
