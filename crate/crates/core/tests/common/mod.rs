#![allow(dead_code)]

use proptest::prelude::*;
use raresens_core::{CgfHandle, DiscreteDist};

/// Minimum of `(H(α)+M)/α` over a geometric grid on `(0, hi]`.
pub fn grid_min(h: &CgfHandle, m: f64, lo: f64, hi: f64, points: usize) -> (f64, f64) {
    let ratio = (hi / lo).ln();
    (0..=points)
        .map(|i| lo * (ratio * i as f64 / points as f64).exp())
        .map(|a| ((h.eval(a) + m) / a, a))
        .filter(|(v, _)| v.is_finite())
        .fold((f64::INFINITY, f64::NAN), |best, cur| if cur.0 < best.0 { cur } else { best })
}

/// Golden-section refinement of a unimodal function on `[lo, hi]`.
pub fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let a = hi - r * (hi - lo);
        let b = lo + r * (hi - lo);
        if f(a) < f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    f(0.5 * (lo + hi))
}

/// Grid plus golden-section minimum of `(H(α)+M)/α` on `(0, hi]`.
pub fn refined_min(h: &CgfHandle, m: f64, hi: f64) -> f64 {
    let obj = |a: f64| (h.eval(a) + m) / a;
    let (best, at) = grid_min(h, m, 1e-6 * hi, hi, 4000);
    let step = 10f64.powf(((hi / (1e-6 * hi)).log10()) / 4000.0);
    let refined = golden_min(obj, at / step, (at * step).min(hi));
    best.min(refined).min(obj(hi))
}

/// All nonempty subsets of `{0, …, n−1}`.
pub fn subsets(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (1u32..(1 << n)).map(move |mask| (0..n).filter(|i| mask & (1 << i) != 0).collect())
}

/// Composite Simpson rule on `[a, b]` with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let x = a + h * i as f64;
        s += if i % 2 == 1 { 4.0 * f(x) } else { 2.0 * f(x) };
    }
    s * h / 3.0
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Direct `log Σ p e^{αg}`.
pub fn direct_cgf(p: &[f64], g: &[f64], alpha: f64) -> f64 {
    let terms: Vec<f64> = p.iter().zip(g).filter(|(p, _)| **p > 0.0).map(|(p, g)| p.ln() + alpha * g).collect();
    log_sum_exp(&terms)
}

pub fn kl(q: &[f64], p: &[f64]) -> f64 {
    q.iter().zip(p).filter(|(q, _)| **q > 0.0).map(|(q, p)| q * (q / p).ln()).sum()
}

pub fn weights(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..1.0, n)
}

pub fn normalize(w: &[f64]) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

pub fn dist(w: &[f64]) -> DiscreteDist {
    DiscreteDist::from_probs(normalize(w)).unwrap()
}

/// A probability vector with an observable on the same atoms; the
/// observable is kept non-constant.
pub fn dist_and_g(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    n.prop_flat_map(|k| (prop::collection::vec(0.05f64..1.0, k), prop::collection::vec(-3.0f64..3.0, k)))
        .prop_filter("non-constant observable", |(_, g)| {
            let lo = g.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            hi - lo > 1e-3
        })
        .prop_map(|(w, g)| (normalize(&w), g))
}
