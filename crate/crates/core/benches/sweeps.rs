use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use trunc_cgf::oracle::mc_sample_truncated_with;
use trunc_cgf::{Distribution, ExactTruncation, Exec, LrTruncation, Window};

const POLICIES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn grid(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn curve_sweeps(c: &mut Criterion) {
    let window = Window::new(-1.0, 2.0).expect("valid");
    let thetas = grid(200, -5.0, 6.0);
    let exact = ExactTruncation::new(Distribution::gumbel(0.0, 1.0).expect("valid"), window).expect("valid");
    let lr = LrTruncation::new(Distribution::gumbel(0.0, 1.0).expect("valid"), window).expect("valid");
    let mut group = c.benchmark_group("curve_sweep");
    for (name, exec) in POLICIES {
        group.bench_with_input(BenchmarkId::new("exact", name), &exec, |b, &exec| {
            b.iter(|| exec.map(&thetas, |&t| exact.eval(black_box(t)).ok()))
        });
        group.bench_with_input(BenchmarkId::new("lr", name), &exec, |b, &exec| {
            b.iter(|| exec.map(&thetas, |&t| lr.eval(black_box(t)).ok()))
        });
    }
    group.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let model = Distribution::standard_normal();
    let window = Window::new(-1.0, 2.0).expect("valid");
    let mut group = c.benchmark_group("truncated_sampling");
    group.sample_size(20);
    for (name, exec) in POLICIES {
        group.bench_with_input(BenchmarkId::new("normal_1e6", name), &exec, |b, &exec| {
            b.iter(|| mc_sample_truncated_with(exec, &model, window, 1_000_000, black_box(7)).expect("sample"))
        });
    }
    group.finish();
}

criterion_group!(benches, curve_sweeps, monte_carlo);
criterion_main!(benches);
