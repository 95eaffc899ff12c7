use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use raresens_core::ldp::{markov_cgf, sum_distribution};
use raresens_core::{cgf_discrete, cgf_expfam, minimize_bound, DiscreteDist, ExpFamModel, MarkovModel, Sign};

fn optimizer(c: &mut Criterion) {
    let bern = cgf_expfam(&ExpFamModel::bernoulli(0.3).unwrap(), &[1.0]).unwrap();
    c.bench_function("minimize_bound/bernoulli", |b| b.iter(|| minimize_bound(&bern, black_box(1.0), Sign::Plus).unwrap()));

    let n = 64;
    let dist = DiscreteDist::uniform(n).unwrap();
    let g: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
    let h = cgf_discrete(&dist, &g).unwrap();
    c.bench_function("minimize_bound/discrete64", |b| b.iter(|| minimize_bound(&h, black_box(2.0), Sign::Plus).unwrap()));
}

fn markov(c: &mut Criterion) {
    let chain = MarkovModel::five_state([0.2, 0.5, 0.7]).unwrap();
    let h = markov_cgf(&chain, &[1.0, 0.0, 0.0]).unwrap();
    c.bench_function("markov_cgf/eval", |b| b.iter(|| h.eval(black_box(0.7))));
    c.bench_function("markov_cgf/minimize", |b| b.iter(|| minimize_bound(&h, black_box(0.5), Sign::Plus).unwrap()));
    c.bench_function("dp/n500", |b| b.iter(|| sum_distribution(&chain, black_box(500)).unwrap()));
}

criterion_group!(benches, optimizer, markov);
criterion_main!(benches);
