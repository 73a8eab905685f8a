use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use logistic_chain::passage::{mean_exit_symmetric, mean_passage_to_zero};
use logistic_chain::rng::stream_rng;
use logistic_chain::simulation::{run_chain, DEFAULT_EVENT_CAP};
use logistic_chain::special::{hypergeom_asymptotic, hypergeom_series, hypergeom_via_gamma};
use logistic_chain::{StationaryLaw, StopRule};
use logistic_chain_bench::{reference_params, regime_points};

fn hypergeom(c: &mut Criterion) {
    let mut g = c.benchmark_group("hypergeom");
    for (name, a, z) in regime_points() {
        g.bench_with_input(BenchmarkId::new("series", name), &(a, z), |b, &(a, z)| {
            b.iter(|| hypergeom_series(black_box(a), black_box(z), 1e-15).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("incomplete_gamma", name), &(a, z), |b, &(a, z)| {
            b.iter(|| hypergeom_via_gamma(black_box(a), black_box(z)).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("asymptotic", name), &(a, z), |b, &(a, z)| {
            b.iter(|| hypergeom_asymptotic(black_box(a), black_box(z), 4.5).unwrap())
        });
    }
    g.finish();
}

fn stationary(c: &mut Criterion) {
    let mut g = c.benchmark_group("stationary_build");
    for l in [1_000u64, 100_000] {
        let p = reference_params(l);
        g.bench_with_input(BenchmarkId::from_parameter(l), &p, |b, p| {
            b.iter(|| StationaryLaw::build(black_box(p), 1e-15).unwrap())
        });
    }
    g.finish();
}

fn passage(c: &mut Criterion) {
    let mut g = c.benchmark_group("passage");
    let p = reference_params(1_000);
    g.bench_function("to_zero_L1000", |b| b.iter(|| mean_passage_to_zero(black_box(&p)).unwrap()));
    g.bench_function("symmetric_exit_L1000", |b| {
        b.iter(|| mean_exit_symmetric(black_box(&p), 0.5).unwrap())
    });
    g.finish();
}

fn simulate(c: &mut Criterion) {
    let mut g = c.benchmark_group("simulate");
    let p = reference_params(1_000);
    let stop = StopRule::TimeLimit(1.0);
    // About 4·10³ jumps per unit time at n* = 10³.
    g.bench_function("gillespie_L1000_T1", |b| {
        let mut seed = 0u64;
        b.iter(|| {
            seed += 1;
            let mut rng = stream_rng(seed, 0);
            run_chain(&p, 1_000, &stop, &mut rng, DEFAULT_EVENT_CAP, |_, _| {}).unwrap()
        })
    });
    g.finish();
}

criterion_group!(benches, hypergeom, stationary, passage, simulate);
criterion_main!(benches);
