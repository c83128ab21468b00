use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use qfound::bell::{chsh_optimize_with, deterministic_sweep, singlet, stochastic_sweep, DEFAULT_REFINEMENT_ITERS};
use qfound::ghz::{transverse_sweep, AllOrNothingState};
use qfound::nosignal::random_sweep;
use qfound::par::Exec;
use qfound::rng::DEFAULT_SEED;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn local_models(c: &mut Criterion) {
    let mut g = c.benchmark_group("local_models_10k");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new("deterministic", name), |b| {
            b.iter(|| deterministic_sweep(black_box(DEFAULT_SEED), 10_000, exec))
        });
        g.bench_function(BenchmarkId::new("stochastic", name), |b| {
            b.iter(|| stochastic_sweep(black_box(DEFAULT_SEED), 10_000, exec))
        });
    }
    g.finish();
}

fn chsh_optimizer(c: &mut Criterion) {
    let psi = singlet();
    let mut g = c.benchmark_group("chsh_optimize_grid64");
    for (name, exec) in MODES {
        g.bench_function(name, |b| {
            b.iter(|| chsh_optimize_with(black_box(&psi), 64, DEFAULT_REFINEMENT_ITERS, exec).unwrap())
        });
    }
    g.finish();
}

fn transverse(c: &mut Criterion) {
    let n = 10;
    let psi = AllOrNothingState::with_phase(n, 0.3).unwrap().state();
    let sets: Vec<Vec<f64>> = (0..100).map(|k| vec![0.01 * k as f64; n]).collect();
    let mut g = c.benchmark_group("transverse_n10_x100");
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| transverse_sweep(black_box(&psi), &sets, exec).unwrap()));
    }
    g.finish();
}

fn no_signaling(c: &mut Criterion) {
    let mut g = c.benchmark_group("nosignal_100_states");
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| random_sweep(black_box(DEFAULT_SEED), 100, exec).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, local_models, chsh_optimizer, transverse, no_signaling);
criterion_main!(benches);
