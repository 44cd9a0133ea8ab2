//! Single-thread against multi-thread throughput of the parallel paths.
//!
//! `cargo bench -p promot` compares rayon pools of 1 and all threads;
//! `cargo bench -p promot --no-default-features` measures the sequential
//! fallback.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use promot::harness::{run_protocol, InitSpec, MethodSpec};
use promot::objectives::ackley;
use promot::optimizer::{RunOptions, Schedule, StepNorm};
use promot::smoothing::{paired_second_moments, Scaling};
use promot::{par, Estimator, Kernel, Objective, SmoothingSpec, Transform};

fn thread_counts() -> Vec<usize> {
    let all = std::thread::available_parallelism().map_or(1, |n| n.get());
    if par::is_parallel() && all > 1 {
        vec![1, all]
    } else {
        vec![1]
    }
}

fn backend() -> &'static str {
    if par::is_parallel() {
        "rayon"
    } else {
        "sequential"
    }
}

fn spec(dim: usize, batch: usize) -> SmoothingSpec {
    let f = ackley(dim).unwrap();
    SmoothingSpec::isotropic(
        Kernel::Logistic,
        Transform::PowerExpHybrid { c: 600.0, beta: 10.0 },
        1.0,
        0.5,
        batch,
        f.domain().clone(),
    )
    .unwrap()
}

fn moments(c: &mut Criterion) {
    let f = ackley(50).unwrap();
    let s = spec(50, 50);
    let mu = vec![2.0; 50];
    let mut g = c.benchmark_group(format!("paired_moments_d50_b50_{}", backend()));
    g.sample_size(10);
    for jobs in thread_counts() {
        g.bench_with_input(BenchmarkId::new("threads", jobs), &jobs, |b, &jobs| {
            b.iter(|| par::with_jobs(jobs, || black_box(paired_second_moments(&s, &f, &mu, 200, 7).unwrap())))
        });
    }
    g.finish();
}

fn protocol(c: &mut Criterion) {
    let f = ackley(50).unwrap();
    let method = MethodSpec::Promot {
        label: "promot_loo".into(),
        spec: spec(50, 50),
        schedule: Schedule::Constant { eta: 0.1 },
        options: RunOptions {
            estimator: Estimator::LeaveOneOut,
            scaling: Scaling::BatchMax,
            step_norm: StepNorm::Rms,
        },
    };
    let init = InitSpec { mean: 5.0, std: 0.01 };
    let seeds: Vec<u64> = (0..8).collect();
    let mut g = c.benchmark_group(format!("protocol_8_seeds_t50_{}", backend()));
    g.sample_size(10);
    for jobs in thread_counts() {
        g.bench_with_input(BenchmarkId::new("threads", jobs), &jobs, |b, &jobs| {
            b.iter(|| par::with_jobs(jobs, || black_box(run_protocol(&method, &f, &init, 50, &seeds).unwrap())))
        });
    }
    g.finish();
}

criterion_group!(benches, moments, protocol);
criterion_main!(benches);
