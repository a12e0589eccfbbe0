use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use holistic_bench::{construct, Truncation};
use num_rational::BigRational;
use std::hint::black_box;

fn bench_construct(c: &mut Criterion) {
    let mut group = c.benchmark_group("construct");
    group.sample_size(10);
    for n in [2, 4] {
        group.bench_with_input(BenchmarkId::new("rational", n), &n, |b, &n| {
            b.iter(|| construct::<BigRational>(black_box(n), Truncation::total(3)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("float", n), &n, |b, &n| {
            b.iter(|| construct::<f64>(black_box(n), Truncation::total(3)).unwrap())
        });
    }
    group.bench_function("float/8", |b| b.iter(|| construct::<f64>(black_box(8), Truncation::total(3)).unwrap()));
    group.finish();
}

criterion_group!(benches, bench_construct);
criterion_main!(benches);
