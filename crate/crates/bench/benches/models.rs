use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use holistic::catalogue::AnalyticModel;
use holistic_bench::{odd_field, ModelSpec};
use std::hint::black_box;

fn bench_models(c: &mut Criterion) {
    let u = odd_field(16, 0.8);
    let mut rhs = c.benchmark_group("rhs");
    for model in AnalyticModel::ALL {
        let spec = ModelSpec::analytic(model, 1.0, 6.0, u.grid);
        rhs.bench_with_input(BenchmarkId::from_parameter(model.name()), &spec, |b, s| {
            b.iter(|| s.rhs(black_box(&u)).unwrap())
        });
    }
    rhs.finish();

    let mut jac = c.benchmark_group("jacobian");
    for model in [AnalyticModel::Centered2, AnalyticModel::HolisticG4A4] {
        let spec = ModelSpec::analytic(model, 1.0, 6.0, u.grid);
        jac.bench_with_input(BenchmarkId::new("analytic", model.name()), &spec, |b, s| {
            b.iter(|| s.jacobian(black_box(&u)).unwrap())
        });
        jac.bench_with_input(BenchmarkId::new("fd", model.name()), &spec, |b, s| {
            b.iter(|| s.jacobian_fd(black_box(&u)).unwrap())
        });
    }
    jac.finish();
}

criterion_group!(benches, bench_models);
criterion_main!(benches);
