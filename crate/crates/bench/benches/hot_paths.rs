//! Criterion benchmarks for the three hot paths: operator assembly and
//! eigensolve, one explicit flow step, and the weighted cone-norm.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use shrinker_lab::fields::ScalarField;
use shrinker_lab::flow::{step_rescaled_flow, StepMode};
use shrinker_lab::grid::BaseGrid;
use shrinker_lab::operators::{assemble_l, spectrum};
use shrinker_lab::shrinkers::{canonical_shrinker, GridSpec, Shrinker, ShrinkerKind};
use shrinker_lab::weighted_spaces::{cone_decompose, cs_norm, PairSpec};

fn line_base() -> Shrinker {
    canonical_shrinker(ShrinkerKind::Line, 1, &GridSpec::default()).unwrap()
}

fn mode2(base: &Shrinker, eps: f64) -> ScalarField {
    let xs = match &base.surface.grid {
        BaseGrid::Line { xs } => xs.clone(),
        _ => unreachable!(),
    };
    ScalarField::new(xs.iter().map(|&x| eps * (x * x - 2.0)).collect())
}

fn bench_operator(c: &mut Criterion) {
    let base = line_base();
    c.bench_function("assemble_l_line", |b| {
        b.iter(|| assemble_l(black_box(&base), 0.5, None).unwrap())
    });
    let op = assemble_l(&base, 0.5, None).unwrap();
    c.bench_function("spectrum_line_top5", |b| {
        b.iter(|| spectrum(black_box(&op), 5).unwrap())
    });
}

fn bench_flow_step(c: &mut Criterion) {
    let base = line_base();
    let u = mode2(&base, 5e-4);
    c.bench_function("explicit_flow_step_line", |b| {
        b.iter(|| step_rescaled_flow(black_box(&base), black_box(&u), 5e-4, StepMode::Explicit).unwrap())
    });
}

fn bench_cone_norm(c: &mut Criterion) {
    let base = line_base();
    let u = mode2(&base, 1e-5);
    let dec = cone_decompose(&base.surface, &u, 4.0).unwrap();
    c.bench_function("cs_norm_line", |b| {
        b.iter(|| cs_norm(&base.surface, black_box(&dec), 0.5, &PairSpec::default()).unwrap())
    });
}

criterion_group!(benches, bench_operator, bench_flow_step, bench_cone_norm);
criterion_main!(benches);
