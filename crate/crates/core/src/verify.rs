//! Self-contained oracle suite: every bound is recomputed on small random
//! instances and compared with brute force (event enumeration, direct
//! summation, dynamic programming).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::cgf::{cgf_discrete, tilt};
use crate::distributions::{exact_conditional_score_mean, DiscreteDist, FiniteExpFamily};
use crate::error::Result;
use crate::ldp::{fd_sensitivity, kernel_relative_entropy, markov_rate, markov_sensitivity, pair_mean, twisted_kernel, MarkovModel};
use crate::optimizer::{minimize_bound, solve_by_kl, BoundCase, Sign};
use crate::renyi::{relative_entropy, variational_gap};
use crate::sensitivity::{bennett_bound, bernstein_bound, sensitivity_indices, ConcentrationParams, ScoreModel};
use crate::uq::optimal_bounds;
use crate::ExpFamModel;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub cases: usize,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn random_dist(rng: &mut ChaCha8Rng, n: usize) -> DiscreteDist {
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    DiscreteDist::from_weights((0..n).map(|i| i as f64).collect(), &w).expect("positive weights")
}

pub fn random_family(rng: &mut ChaCha8Rng, atoms: usize, dim: usize) -> (FiniteExpFamily, Vec<f64>) {
    let base: Vec<f64> = (0..atoms).map(|_| rng.random_range(0.2..2.0)).collect();
    let stats: Vec<Vec<f64>> = (0..atoms).map(|_| (0..dim).map(|_| normal(rng)).collect()).collect();
    let theta: Vec<f64> = (0..dim).map(|_| 0.5 * normal(rng)).collect();
    let fam = FiniteExpFamily::new((0..atoms).map(|i| i as f64).collect(), base, stats).expect("valid family");
    (fam, theta)
}

pub fn random_chain(rng: &mut ChaCha8Rng, n: usize) -> MarkovModel {
    loop {
        let pi: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let w: Vec<f64> = (0..n).map(|_| if rng.random::<f64>() < 0.25 { 0.0 } else { rng.random_range(0.1..1.0) }).collect();
                let s: f64 = w.iter().sum();
                if s == 0.0 { vec![1.0 / n as f64; n] } else { w.iter().map(|x| x / s).collect() }
            })
            .collect();
        let f: Vec<f64> = (0..n).map(|_| rng.random_range(-2i32..=2) as f64).collect();
        if let Ok(m) = MarkovModel::from_matrix(pi, f, 0) {
            if m.observable().iter().any(|x| *x != m.observable()[0]) {
                return m;
            }
        }
    }
}

fn check(name: &'static str, cases: usize, failures: Vec<String>) -> Check {
    let passed = failures.is_empty();
    let detail = if passed { "ok".to_string() } else { failures.into_iter().take(3).collect::<Vec<_>>().join("; ") };
    Check { name, passed, cases, detail }
}

fn sandwich(rng: &mut ChaCha8Rng) -> Result<Check> {
    let mut failures = Vec::new();
    let mut cases = 0;
    for _ in 0..10 {
        let atoms = rng.random_range(3..=8);
        let (fam, theta) = random_family(rng, atoms, 2);
        let dist = fam.dist_at(&theta)?;
        let scores = fam.scores_at(&theta)?;
        let model = ScoreModel::discrete(dist.clone(), scores.clone())?;
        let v = [normal(rng), normal(rng)];
        for mask in 1usize..(1 << atoms) {
            let event: Vec<usize> = (0..atoms).filter(|i| mask >> i & 1 == 1).collect();
            let m = (-dist.prob_of(&event).ln()).max(0.0);
            let exact = exact_conditional_score_mean(&dist, &scores, &event, &v)?;
            let r = sensitivity_indices(&model, &v, m)?;
            cases += 1;
            if exact < r.index_minus - 1e-8 || exact > r.index_plus + 1e-8 {
                failures.push(format!("S = {exact} outside [{}, {}] at M = {m}", r.index_minus, r.index_plus));
            }
        }
    }
    Ok(check("sandwich", cases, failures))
}

fn optimality(rng: &mut ChaCha8Rng) -> Result<Check> {
    let mut failures = Vec::new();
    let n_cases = 50;
    for _ in 0..n_cases {
        let n = rng.random_range(2..=8);
        let dist = random_dist(rng, n);
        let g: Vec<f64> = (0..n).map(|_| normal(rng)).collect();
        let h = cgf_discrete(&dist, &g)?;
        let m_plus = minimize_bound(&h, 0.0, Sign::Plus)?.m_threshold;
        let m = rng.random_range(0.0..1.0) * m_plus.min(5.0);
        let r = minimize_bound(&h, m, Sign::Plus)?;
        let k = solve_by_kl(&dist, &g, m, Sign::Plus)?;
        let a = r.alpha_star;
        let resid = a * h.deriv1(a) - h.eval(a) - m;
        let kl = relative_entropy(&tilt(&dist, &g, a)?, &dist);
        if resid.abs() > 1e-10 || (kl - m).abs() > 1e-8 || (r.value - k.value).abs() > 1e-8 {
            failures.push(format!("M = {m}: residual {resid:e}, KL gap {:e}, path gap {:e}", kl - m, r.value - k.value));
        }
    }
    Ok(check("optimality", n_cases, failures))
}

fn gaussian_closed_form() -> Result<Check> {
    let mut failures = Vec::new();
    let mut cases = 0;
    for sigma in [0.5f64, 1.0, 2.0] {
        let model = ScoreModel::ExpFam(ExpFamModel::gaussian(0.0, sigma * sigma)?);
        for m in [0.5, 1.0, 2.0, 5.0, 10.0] {
            let r = sensitivity_indices(&model, &[1.0], m)?;
            let want = sigma * (2.0 * m).sqrt();
            cases += 1;
            if (r.index_plus - want).abs() > 1e-9 || (r.index_minus + want).abs() > 1e-9 {
                failures.push(format!("σ = {sigma}, M = {m}: got {} want {want}", r.index_plus));
            }
        }
    }
    Ok(check("gaussian_closed_form", cases, failures))
}

fn uq_soundness(rng: &mut ChaCha8Rng) -> Result<Check> {
    let mut failures = Vec::new();
    let mut cases = 0;
    for _ in 0..5 {
        let n = rng.random_range(3..=8);
        let p = random_dist(rng, n);
        let q = random_dist(rng, n);
        for mask in 1usize..(1 << n) {
            let event: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            let m = (-p.prob_of(&event).ln()).max(0.0);
            let lq = q.prob_of(&event).ln();
            let r = optimal_bounds(&p, &q, m)?;
            cases += 1;
            if lq < r.lower - 1e-9 || lq > r.upper + 1e-9 {
                failures.push(format!("log Q(A) = {lq} outside [{}, {}]", r.lower, r.upper));
            }
        }
    }
    Ok(check("uq_soundness", cases, failures))
}

fn concentration_ordering() -> Result<Check> {
    let mut failures = Vec::new();
    let mut cases = 0;
    for theta in [-2.0f64, -0.5, 0.0, 1.0, 2.5] {
        let model = ScoreModel::ExpFam(ExpFamModel::new(crate::Family::Bernoulli, vec![theta])?);
        for v in [1.0, -1.0] {
            let c = ConcentrationParams::for_model(&model, &[v])?;
            for i in 0..20 {
                let m = 0.1 * 100f64.powf(i as f64 / 19.0);
                let idx = sensitivity_indices(&model, &[v], m)?.index_plus;
                let ben = bennett_bound(&c, m)?;
                let ber = bernstein_bound(&c, m)?;
                cases += 1;
                if idx > ben + 1e-9 || ben > ber + 1e-9 {
                    failures.push(format!("θ = {theta}, v = {v}, M = {m}: {idx} / {ben} / {ber}"));
                }
            }
        }
    }
    Ok(check("concentration_ordering", cases, failures))
}

fn renyi_variational(rng: &mut ChaCha8Rng) -> Result<Check> {
    let mut failures = Vec::new();
    let n_cases = 200;
    for _ in 0..n_cases {
        let q = random_dist(rng, 5);
        let p = random_dist(rng, 5);
        let f: Vec<f64> = (0..5).map(|_| normal(rng)).collect();
        let beta = rng.random_range(-3.0..3.0);
        let gamma = beta + rng.random_range(0.1..3.0);
        if beta == 0.0 || gamma == 0.0 {
            continue;
        }
        let gap = variational_gap(&q, &p, &f, beta, gamma)?;
        if gap < -1e-10 {
            failures.push(format!("gap {gap} at β = {beta}, γ = {gamma}"));
        }
    }
    Ok(check("renyi_variational", n_cases, failures))
}

fn markov_duality(rng: &mut ChaCha8Rng) -> Result<Check> {
    let mut failures = Vec::new();
    let n_cases = 5;
    for _ in 0..n_cases {
        let n = rng.random_range(3..=5);
        let chain = random_chain(rng, n);
        let mean = chain.stationary_mean()?;
        let at_mean = markov_rate(&chain, mean)?.value;
        if at_mean.abs() > 1e-10 {
            failures.push(format!("rate at stationary mean is {at_mean}"));
        }
        let g = chain.observable_edges();
        let z = mean + 0.3 * rng.random_range(-1.0..1.0);
        let r = markov_rate(&chain, z)?;
        if !(r.attainable && r.argmax_alpha.is_finite()) {
            continue;
        }
        let k = twisted_kernel(chain.transition(), &g, r.argmax_alpha)?;
        let obj = kernel_relative_entropy(&k, chain.transition())?;
        let tilted_mean = pair_mean(&k, &g)?;
        if (obj - r.value).abs() > 1e-7 || (tilted_mean - z).abs() > 1e-7 {
            failures.push(format!("rate {} vs kernel objective {obj}", r.value));
        }
    }
    Ok(check("markov_duality", n_cases, failures))
}

fn ldp_sandwich() -> Result<Check> {
    let chain = MarkovModel::five_state([0.2, 0.5, 0.7])?;
    let zs = [-1.2, -0.6, -0.1, 0.4, 0.9, 1.3];
    let v = [1.0, 0.0, 0.0];
    let fd = fd_sensitivity(&chain, &v, 500, &zs, 1e-4)?;
    let mut failures = Vec::new();
    for p in &fd {
        let r = markov_sensitivity(&chain, &v, p.z_lattice)?;
        if p.value < r.index_minus - 0.05 || p.value > r.index_plus + 0.05 {
            failures.push(format!("z = {}: fd {} outside [{}, {}]", p.z_lattice, p.value, r.index_minus, r.index_plus));
        }
    }
    Ok(check("ldp_sandwich", fd.len(), failures))
}

fn plateau_case() -> Result<Check> {
    let d = DiscreteDist::from_probs(vec![0.5, 0.5])?;
    let h = cgf_discrete(&d, &[1.0, -1.0])?;
    let r = minimize_bound(&h, 10.0, Sign::Plus)?;
    let ok = r.case == BoundCase::EssSupPlateau && r.value == 1.0;
    let failures = if ok { vec![] } else { vec![format!("{r:?}")] };
    Ok(check("plateau_case", 1, failures))
}

/// Runs the whole suite with instances drawn from `seed`.
pub fn run(seed: u64) -> Result<VerifyReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let checks = vec![
        sandwich(&mut rng)?,
        optimality(&mut rng)?,
        gaussian_closed_form()?,
        uq_soundness(&mut rng)?,
        concentration_ordering()?,
        renyi_variational(&mut rng)?,
        markov_duality(&mut rng)?,
        ldp_sandwich()?,
        plateau_case()?,
    ];
    Ok(VerifyReport { seed, checks })
}
