use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use proxmo_bench::hull_generators;
use proxmo_core::driver::{default_config, solve};
use proxmo_core::subproblem::{solve_inner, InnerOptions, ProxInstance};
use proxmo_core::{builtin, min_norm_point, Expression};

fn hull(c: &mut Criterion) {
    let mut group = c.benchmark_group("min_norm_point");
    for (count, dim) in [(2, 1), (4, 3), (8, 5), (16, 10)] {
        let gens = hull_generators(count, dim, 1);
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{count}x{dim}")),
            &gens,
            |b, g| b.iter(|| min_norm_point(black_box(g)).unwrap()),
        );
    }
    group.finish();
}

fn expression(c: &mut Criterion) {
    let text = "2*sqrt(x1) + 1/x1 - ln(x1)^2 + exp(-x1)";
    c.bench_function("expr_parse", |b| {
        b.iter(|| Expression::parse(black_box(text), 1).unwrap())
    });
    let e = Expression::parse(text, 1).unwrap();
    c.bench_function("expr_eval_grad", |b| {
        b.iter(|| e.eval_grad(black_box(&[1.7])).unwrap())
    });
}

fn subproblem(c: &mut Criterion) {
    let p = builtin::example31();
    let cfg = default_config(&p);
    let inst = ProxInstance::new(
        &p,
        vec![2.5],
        *cfg.lambda.at(0),
        cfg.weights_e.at(0).clone(),
    )
    .unwrap();
    c.bench_function("solve_inner_example31", |b| {
        b.iter(|| solve_inner(black_box(&inst), &InnerOptions::default()).unwrap())
    });
}

fn outer(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve");
    group.sample_size(10);
    let p = builtin::example31();
    let cfg = default_config(&p);
    group.bench_function("example31_from_2.5", |b| {
        b.iter(|| solve(&p, black_box(&[2.5]), &cfg).unwrap())
    });
    let q = builtin::quad2d();
    let cfg = default_config(&q);
    group.bench_function("quad2d_from_origin", |b| {
        b.iter(|| solve(&q, black_box(&[0.0, 0.0]), &cfg).unwrap())
    });
    group.finish();
}

criterion_group!(benches, hull, expression, subproblem, outer);
criterion_main!(benches);
