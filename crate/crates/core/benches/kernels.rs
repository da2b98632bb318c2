use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use isqa::parallel::Parallelism;
use isqa::problem::LogisticLoss;
use isqa::verify::{a9a_like, inequality_suite};
use isqa::SmoothFunction;

fn loss(rows: usize, mode: Parallelism) -> LogisticLoss {
    let (a, y) = a9a_like(rows, 1);
    LogisticLoss::new(a.with_parallelism(mode), y).unwrap()
}

fn logistic_kernels(c: &mut Criterion) {
    let mut group = c.benchmark_group("logistic");
    for rows in [2_000, 32_000] {
        for (name, mode) in [("sequential", Parallelism::Sequential), ("parallel", Parallelism::Rows)] {
            let f = loss(rows, mode);
            let x: Vec<f64> = (0..f.dim()).map(|i| ((i % 7) as f64 - 3.0) / 10.0).collect();
            let mut out = vec![0.0; f.dim()];
            group.bench_with_input(BenchmarkId::new(format!("gradient/{name}"), rows), &rows, |b, _| {
                b.iter(|| f.gradient(black_box(&x), &mut out))
            });
            group.bench_with_input(BenchmarkId::new(format!("hess_vec/{name}"), rows), &rows, |b, _| {
                b.iter(|| f.hess_vec(black_box(&x), black_box(&x), &mut out))
            });
        }
    }
    group.finish();
}

// Build with `--no-default-features` for the sequential audit baseline.
fn audit_batch(c: &mut Criterion) {
    let label = if cfg!(feature = "parallel") { "parallel" } else { "sequential" };
    c.bench_function(&format!("inequality_audit/{label}"), |b| b.iter(|| inequality_suite(black_box(40), 20, 0)));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = logistic_kernels, audit_batch
}
criterion_main!(benches);
