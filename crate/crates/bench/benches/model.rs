use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use vepc_bench::{metro_problem, tiny_problem};
use vepc_core::ilp::build_model;
use vepc_core::solve::{export_mps, solve_exhaustive, solve_greedy};
use vepc_core::verify::check_solution;

fn model(c: &mut Criterion) {
    let metro = metro_problem();
    c.bench_function("build_model/metro", |b| b.iter(|| build_model(black_box(&metro)).unwrap()));
    let m = build_model(&metro).unwrap();
    c.bench_function("export_mps/metro", |b| b.iter(|| export_mps(black_box(&m))));
}

fn solvers(c: &mut Criterion) {
    let tiny = tiny_problem();
    c.bench_function("exhaustive/tiny", |b| b.iter(|| solve_exhaustive(black_box(&tiny)).unwrap()));
    let metro = metro_problem();
    let mut g = c.benchmark_group("metro");
    g.sample_size(10);
    g.bench_function("greedy", |b| b.iter(|| solve_greedy(black_box(&metro))));
    let s = solve_greedy(&metro);
    g.bench_function("verify", |b| b.iter(|| check_solution(black_box(&metro), black_box(&s))));
    g.finish();
}

criterion_group!(benches, model, solvers);
criterion_main!(benches);
