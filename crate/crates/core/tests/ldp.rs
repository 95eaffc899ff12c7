mod common;

use proptest::prelude::*;
use raresens_core::distributions::FiniteExpFamily;
use raresens_core::ldp::{
    dp_probability, edge_cgf, fd_sensitivity, iid_sensitivity, kernel_relative_entropy, markov_cgf, markov_rate,
    markov_sensitivity, pair_mean, sum_distribution, twisted_kernel,
};
use raresens_core::{cgf_discrete, Error, ExpFamModel, MarkovModel, ScoreModel};

fn bernoulli_family() -> FiniteExpFamily {
    FiniteExpFamily::new(vec![0.0, 1.0], vec![1.0, 1.0], vec![vec![0.0], vec![1.0]]).unwrap()
}

fn three_state() -> MarkovModel {
    MarkovModel::from_matrix(
        vec![vec![0.5, 0.3, 0.2], vec![0.1, 0.6, 0.3], vec![0.4, 0.4, 0.2]],
        vec![-1.0, 0.0, 1.0],
        1,
    )
    .unwrap()
}

/// Largest root of `λ² − tr·λ + det` for a nonnegative 2×2 matrix.
fn perron_2x2(a: [[f64; 2]; 2]) -> f64 {
    let tr = a[0][0] + a[1][1];
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    0.5 * (tr + (tr * tr - 4.0 * det).sqrt())
}

#[test]
fn rate_vanishes_only_at_the_stationary_mean() {
    let m = three_state();
    let pi = m.stationary().unwrap();
    let mean: f64 = pi.iter().zip(m.observable()).map(|(p, f)| p * f).sum();
    assert!((m.stationary_mean().unwrap() - mean).abs() < 1e-14);
    assert!(markov_rate(&m, mean).unwrap().value.abs() < 1e-10);
    for dz in [-0.5, -0.1, 0.1, 0.5] {
        assert!(markov_rate(&m, mean + dz).unwrap().value > 1e-6);
    }
    let edge = markov_rate(&m, 1.5).unwrap();
    assert!(!edge.attainable && edge.value == f64::INFINITY);
}

#[test]
fn rate_matches_exact_sum_law() {
    let m = three_state();
    let z = 0.4;
    let ns = [250usize, 500, 1000];
    // (1/n) log P(S_n = z) = −I(z) + b·log(n)/n + c/n + o(1/n)
    let rows: Vec<[f64; 4]> = ns
        .iter()
        .map(|&n| {
            let nf = n as f64;
            [1.0, nf.ln() / nf, 1.0 / nf, dp_probability(&m, n, z).unwrap().ln() / nf]
        })
        .collect();
    let det3 = |c: [[f64; 3]; 3]| {
        c[0][0] * (c[1][1] * c[2][2] - c[1][2] * c[2][1]) - c[0][1] * (c[1][0] * c[2][2] - c[1][2] * c[2][0])
            + c[0][2] * (c[1][0] * c[2][1] - c[1][1] * c[2][0])
    };
    let a = [rows[0], rows[1], rows[2]].map(|r| [r[0], r[1], r[2]]);
    let a0 = [rows[0], rows[1], rows[2]].map(|r| [r[3], r[1], r[2]]);
    let fitted = det3(a0) / det3(a);
    let rate = markov_rate(&m, z).unwrap().value;
    assert!((fitted + rate).abs() < 1e-3, "fit {fitted}, rate {rate}");
    assert!((rows[2][3] + rate).abs() < 1e-2);
}

#[test]
fn iid_two_point_rate_is_relative_entropy() {
    let m = MarkovModel::iid(bernoulli_family(), vec![0.0]).unwrap();
    let r = markov_rate(&m, 0.9).unwrap();
    let kl = 0.9 * 1.8f64.ln() + 0.1 * 0.2f64.ln();
    assert!((r.value - kl).abs() < 1e-10);
    assert!((r.value - 0.3681).abs() < 1e-4);
    assert!((r.argmax_alpha - 9f64.ln()).abs() < 1e-8);
}

#[test]
fn gaussian_iid_indices_are_plus_minus_z() {
    let model = ScoreModel::ExpFam(ExpFamModel::gaussian(0.0, 1.0).unwrap());
    for z in [0.3, 1.0, 2.5] {
        let r = iid_sensitivity(&model, &[1.0], 0.5 * z * z).unwrap();
        assert!((r.index_plus - z).abs() < 1e-9);
        assert!((r.index_minus + z).abs() < 1e-9);
    }
}

#[test]
fn iid_chain_agrees_with_single_sample_indices() {
    let fam = FiniteExpFamily::new(
        vec![-1.0, 0.0, 2.0],
        vec![1.0, 3.0, 0.5],
        vec![vec![-1.0, 1.0], vec![0.0, 0.0], vec![2.0, -1.0]],
    )
    .unwrap();
    let theta = vec![0.2, -0.4];
    let chain = MarkovModel::iid(fam.clone(), theta.clone()).unwrap();
    let model = ScoreModel::discrete(fam.dist_at(&theta).unwrap(), fam.scores_at(&theta).unwrap()).unwrap();
    for v in [[1.0, 0.0], [0.0, 1.0], [0.6, -0.8]] {
        for z in [-0.5, 0.1, 1.2] {
            let lr = markov_sensitivity(&chain, &v, z).unwrap();
            let sr = iid_sensitivity(&model, &v, lr.rate).unwrap();
            assert!((lr.index_plus - sr.index_plus).abs() < 1e-8, "v {v:?}, z {z}");
            assert!((lr.index_minus - sr.index_minus).abs() < 1e-8, "v {v:?}, z {z}");
        }
    }
}

#[test]
fn rank_one_cgf_is_the_single_sample_cgf() {
    let fam = bernoulli_family();
    let chain = MarkovModel::iid(fam.clone(), vec![0.7]).unwrap();
    let h = markov_cgf(&chain, &[1.0]).unwrap();
    let d = fam.dist_at(&[0.7]).unwrap();
    let p = d.probs()[1];
    let hd = cgf_discrete(&d, &[-p, 1.0 - p]).unwrap();
    for a in [-5.0, -1.0, 0.5, 3.0] {
        assert!((h.eval(a) - hd.eval(a)).abs() < 1e-12);
    }
}

#[test]
fn twisted_kernel_at_zero_is_the_chain() {
    let m = three_state();
    let g = m.observable_edges();
    let k = twisted_kernel(m.transition(), &g, 0.0).unwrap();
    for (a, b) in k.iter().flatten().zip(m.transition().iter().flatten()) {
        assert!((a - b).abs() < 1e-14);
    }
    assert!(kernel_relative_entropy(&k, m.transition()).unwrap().abs() < 1e-14);
}

#[test]
fn degenerate_directions_are_rejected() {
    let m = MarkovModel::five_state([0.2, 0.5, 0.7]).unwrap();
    assert!(matches!(markov_sensitivity(&m, &[0.0, 0.0, 0.0], 0.3), Err(Error::DegenerateDirection)));
    assert!(matches!(markov_sensitivity(&m, &[1.0, 0.0], 0.3), Err(Error::InvalidInput(_))));
    assert!(matches!(markov_sensitivity(&m, &[1.0, 0.0, 0.0], 2.5), Err(Error::Domain(_))));
}

#[test]
fn reducible_chains_are_rejected() {
    let r = MarkovModel::from_matrix(vec![vec![1.0, 0.0], vec![0.5, 0.5]], vec![0.0, 1.0], 0);
    assert_eq!(r.unwrap_err(), Error::Reducible);
}

#[test]
fn exact_sum_law_examples() {
    let m = MarkovModel::five_state([0.2, 0.5, 0.7]).unwrap();
    let d = sum_distribution(&m, 1).unwrap();
    assert!((d.prob(1.0) - 0.5).abs() < 1e-15 && (d.prob(-1.0) - 0.5).abs() < 1e-15);
    let coin = MarkovModel::from_matrix(vec![vec![0.5, 0.5], vec![0.5, 0.5]], vec![-1.0, 1.0], 0).unwrap();
    assert!((dp_probability(&coin, 10, 0.0).unwrap() - 252.0 / 1024.0).abs() < 1e-14);
    assert!((dp_probability(&coin, 10, 0.2).unwrap() - 210.0 / 1024.0).abs() < 1e-14);
    assert_eq!(dp_probability(&coin, 10, 0.1).unwrap(), 0.0);
}

#[test]
fn fd_sensitivity_lies_between_the_indices() {
    let m = MarkovModel::five_state([0.2, 0.5, 0.7]).unwrap();
    let zs = [-1.0, -0.3, 0.3, 1.0];
    for v in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] {
        let fd = fd_sensitivity(&m, &v, 200, &zs, 1e-4).unwrap();
        for p in fd {
            let r = markov_sensitivity(&m, &v, p.z_lattice).unwrap();
            assert!(r.index_minus - 0.05 <= p.value && p.value <= r.index_plus + 0.05, "{v:?} {p:?}");
            assert!((p.value - p.value_half_step).abs() < 1e-6);
        }
    }
}

#[test]
fn fd_sensitivity_needs_a_parametric_chain() {
    let m = three_state();
    assert!(matches!(fd_sensitivity(&m, &[], 10, &[0.0], 1e-4), Err(Error::Unsupported(_))));
}

fn chain_strategy() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
    (3usize..=5).prop_flat_map(|n| {
        (
            prop::collection::vec(prop::collection::vec(0.05f64..1.0, n), n),
            prop::collection::vec(-2.0f64..2.0, n),
        )
            .prop_map(|(w, f)| {
                let pi = w.iter().map(|r| common::normalize(r)).collect();
                (pi, f)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]
    #[test]
    fn legendre_value_equals_twisted_kernel_objective((pi, f) in chain_strategy(), u in 0.1f64..0.9) {
        let lo = f.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = f.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assume!(hi - lo > 0.1);
        let m = MarkovModel::from_matrix(pi.clone(), f.clone(), 0).unwrap();
        let z = lo + u * (hi - lo);
        let r = markov_rate(&m, z).unwrap();
        let g = m.observable_edges();
        let k = twisted_kernel(&pi, &g, r.argmax_alpha).unwrap();
        prop_assert!((pair_mean(&k, &g).unwrap() - z).abs() < 1e-7);
        prop_assert!((kernel_relative_entropy(&k, &pi).unwrap() - r.value).abs() < 1e-7);
        prop_assert!(markov_rate(&m, m.stationary_mean().unwrap()).unwrap().value.abs() < 1e-10);
    }

    #[test]
    fn rate_is_convex_and_nonnegative((pi, f) in chain_strategy(), u in 0.05f64..0.95, w in 0.05f64..0.95, t in 0.0f64..1.0) {
        let lo = f.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = f.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assume!(hi - lo > 0.1);
        let m = MarkovModel::from_matrix(pi, f, 0).unwrap();
        let (z1, z2) = (lo + u * (hi - lo), lo + w * (hi - lo));
        let i = |z: f64| markov_rate(&m, z).unwrap().value;
        let mid = t * z1 + (1.0 - t) * z2;
        prop_assert!(i(z1) >= -1e-12 && i(z2) >= -1e-12);
        prop_assert!(i(mid) <= t * i(z1) + (1.0 - t) * i(z2) + 1e-9);
    }

    #[test]
    fn two_state_eigenvalue_closed_form(p in 0.05f64..0.95, q in 0.05f64..0.95, a in -3.0f64..3.0, g in prop::collection::vec(-2.0f64..2.0, 4)) {
        let pi = vec![vec![1.0 - p, p], vec![q, 1.0 - q]];
        let gm = vec![vec![g[0], g[1]], vec![g[2], g[3]]];
        let h = edge_cgf(&pi, &gm).unwrap();
        let t = [[(1.0 - p) * (a * g[0]).exp(), p * (a * g[1]).exp()], [q * (a * g[2]).exp(), (1.0 - q) * (a * g[3]).exp()]];
        prop_assert!((h.eval(a) - perron_2x2(t).ln()).abs() < 1e-10);
        prop_assert!(h.eval(0.0).abs() < 1e-14);
    }

    #[test]
    fn twisted_kernel_is_stochastic((pi, f) in chain_strategy(), a in -3.0f64..3.0) {
        let m = MarkovModel::from_matrix(pi.clone(), f, 0).unwrap();
        let g = m.observable_edges();
        let k = twisted_kernel(&pi, &g, a).unwrap();
        for row in &k {
            prop_assert!(row.iter().all(|x| *x >= 0.0));
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let h = edge_cgf(&pi, &g).unwrap();
        prop_assert!((pair_mean(&k, &g).unwrap() - h.deriv1(a)).abs() < 1e-6);
    }
}
