use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ipaal::acg::{acg_solve, CompositeSubproblem};
use ipaal::lcqm::{generate_instance, lcqm_problem, random_start, spectraplex_prox, RhsRule};
use ipaal::oracles::{BoxIndicator, Quadratic};
use ipaal::{dynamic_solve, Curvature, Point, SolverConfig, Variant};
use nalgebra::DMatrix;

fn acg(c: &mut Criterion) {
    let mut group = c.benchmark_group("acg_solve");
    for dim in [10usize, 50] {
        let hess = DMatrix::from_fn(dim, dim, |i, j| if i == j { 2.0 + i as f64 / dim as f64 } else { 0.1 / (1.0 + (i as f64 - j as f64).abs()) });
        let smooth = Quadratic::new(hess, Point::from_element(dim, -1.0), Curvature::new(3.5, 3.5).unwrap());
        let h = BoxIndicator::uniform(dim, -0.5, 0.5).unwrap();
        let x0 = Point::zeros(dim);
        let sub = CompositeSubproblem {
            smooth: &smooth,
            nonsmooth_prox: &h,
            prox_scale: 1.0,
            quad_coeff: 0.5,
            quad_center: x0.clone(),
            upper_curvature: 3.5,
            strong_convexity: 0.5,
        };
        group.bench_with_input(BenchmarkId::from_parameter(dim), &dim, |b, _| {
            b.iter(|| acg_solve(black_box(&sub), black_box(&x0), 0.1, None).unwrap())
        });
    }
    group.finish();
}

fn spectraplex(c: &mut Criterion) {
    let mut group = c.benchmark_group("spectraplex_prox");
    for n in [20usize, 100] {
        let w = DMatrix::from_fn(n, n, |i, j| ((i * 7 + j * 3) % 11) as f64 / 11.0 + ((j * 7 + i * 3) % 11) as f64 / 11.0);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| spectraplex_prox(black_box(&w), 1.0).unwrap())
        });
    }
    group.finish();
}

fn dynamic(c: &mut Criterion) {
    let inst = generate_instance(1, 2, 5, 0.4, 100.0, 1.0, RhsRule::Feasible).unwrap();
    let problem = lcqm_problem(&inst).unwrap();
    let z0 = random_start(1, inst.n);
    let mut config = SolverConfig::new(0.5, Variant::Constant, 1.0);
    config.rho_hat = 1e-3;
    config.eta_hat = 1e-3;
    c.bench_function("dynamic_solve/lcqm_2x5", |b| b.iter(|| dynamic_solve(black_box(&problem), &z0, &config).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = acg, spectraplex, dynamic
}
criterion_main!(benches);
