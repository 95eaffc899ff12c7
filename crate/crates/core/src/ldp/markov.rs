use serde::Serialize;

use super::perron::{is_irreducible, perron, stationary, tilted_asymptote};
use crate::cgf::{CgfHandle, CumulantFn};
use crate::distributions::FiniteExpFamily;
use crate::error::{Error, Result};
use crate::numeric::dot;
use crate::optimizer::{legendre, minimize_bound, BoundCase, LegendreResult, Sign};

const ROW_TOLERANCE: f64 = 1e-12;

/// How the transition matrix depends on the parameter.
#[derive(Debug, Clone, PartialEq)]
pub enum ChainFamily {
    /// Nearest-neighbour walk on `values`; interior state `i` steps up with
    /// probability `θ[i−1]` and down otherwise, the two end states step inward.
    ReflectingWalk { values: Vec<f64> },
    /// IID draws from a finite exponential family: every row equals `p^θ`.
    Iid(FiniteExpFamily),
    /// A fixed matrix with optional user-supplied per-edge scores.
    Fixed,
}

/// Finite Markov chain `π^θ(i,j)` with per-edge scores
/// `W(i,j) = ∇_θ log π^θ(i,j)` (zero off the support) and a per-state
/// observable `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovModel {
    family: ChainFamily,
    pi: Vec<Vec<f64>>,
    scores: Vec<Vec<Vec<f64>>>,
    f: Vec<f64>,
    initial_state: usize,
    theta: Vec<f64>,
}

impl MarkovModel {
    fn build(
        family: ChainFamily,
        pi: Vec<Vec<f64>>,
        scores: Vec<Vec<Vec<f64>>>,
        f: Vec<f64>,
        initial_state: usize,
        theta: Vec<f64>,
    ) -> Result<Self> {
        let n = pi.len();
        if n == 0 || pi.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("transition matrix must be square and nonempty".into()));
        }
        for (i, row) in pi.iter().enumerate() {
            if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                return Err(Error::InvalidDistribution(format!("row {i} has a negative or non-finite entry")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ROW_TOLERANCE {
                return Err(Error::InvalidDistribution(format!("row {i} sums to {s}")));
            }
        }
        if f.len() != n {
            return Err(Error::InvalidInput(format!("observable has {} entries for {n} states", f.len())));
        }
        if initial_state >= n {
            return Err(Error::InvalidInput(format!("initial state {initial_state} out of range")));
        }
        if !is_irreducible(&pi) {
            return Err(Error::Reducible);
        }
        Ok(Self { family, pi, scores, f, initial_state, theta })
    }

    /// Reflecting nearest-neighbour walk on `values` started at `initial_state`.
    pub fn reflecting_walk(values: Vec<f64>, theta: Vec<f64>, initial_state: usize) -> Result<Self> {
        let n = values.len();
        if n < 3 {
            return Err(Error::InvalidInput("a reflecting walk needs at least three states".into()));
        }
        if theta.len() != n - 2 {
            return Err(Error::InvalidInput(format!("{} interior states but {} parameters", n - 2, theta.len())));
        }
        if let Some(t) = theta.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
            return Err(Error::Domain(format!("step probability {t} must lie strictly inside (0, 1)")));
        }
        let k = theta.len();
        let mut pi = vec![vec![0.0; n]; n];
        let mut scores = vec![vec![vec![0.0; k]; n]; n];
        pi[0][1] = 1.0;
        pi[n - 1][n - 2] = 1.0;
        for i in 1..n - 1 {
            let p = theta[i - 1];
            pi[i][i + 1] = p;
            pi[i][i - 1] = 1.0 - p;
            scores[i][i + 1][i - 1] = 1.0 / p;
            scores[i][i - 1][i - 1] = -1.0 / (1.0 - p);
        }
        Self::build(ChainFamily::ReflectingWalk { values: values.clone() }, pi, scores, values, initial_state, theta)
    }

    /// The five-state walk on `{−2, …, 2}` started at 0, with `θ` the up-step
    /// probabilities at `−1, 0, 1`.
    pub fn five_state(theta: [f64; 3]) -> Result<Self> {
        Self::reflecting_walk(vec![-2.0, -1.0, 0.0, 1.0, 2.0], theta.to_vec(), 2)
    }

    /// IID sequence from a finite exponential family, viewed as a chain whose
    /// rows all equal `p^θ`; the observable is the atom label.
    pub fn iid(family: FiniteExpFamily, theta: Vec<f64>) -> Result<Self> {
        let dist = family.dist_at(&theta)?;
        let sc = family.scores_at(&theta)?;
        let n = dist.len();
        let pi = vec![dist.probs().to_vec(); n];
        let scores = vec![sc; n];
        let f = dist.atoms().to_vec();
        Self::build(ChainFamily::Iid(family), pi, scores, f, 0, theta)
    }

    /// Parameter-free chain; attach scores with [`MarkovModel::with_scores`].
    pub fn from_matrix(pi: Vec<Vec<f64>>, f: Vec<f64>, initial_state: usize) -> Result<Self> {
        let n = pi.len();
        Self::build(ChainFamily::Fixed, pi, vec![vec![Vec::new(); n]; n], f, initial_state, Vec::new())
    }

    pub fn with_scores(mut self, scores: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let n = self.pi.len();
        if scores.len() != n || scores.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("need one score vector per edge".into()));
        }
        let k = scores[0][0].len();
        if scores.iter().flatten().any(|s| s.len() != k) {
            return Err(Error::InvalidInput("edge scores must share one dimension".into()));
        }
        for i in 0..n {
            for j in 0..n {
                if self.pi[i][j] == 0.0 && scores[i][j].iter().any(|x| *x != 0.0) {
                    return Err(Error::InvalidInput(format!("nonzero score on the impossible transition {i}→{j}")));
                }
            }
        }
        self.scores = scores;
        Ok(self)
    }

    pub fn n_states(&self) -> usize {
        self.pi.len()
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.pi
    }

    pub fn observable(&self) -> &[f64] {
        &self.f
    }

    pub fn initial_state(&self) -> usize {
        self.initial_state
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn family(&self) -> &ChainFamily {
        &self.family
    }

    pub fn score_dim(&self) -> usize {
        self.scores[0][0].len()
    }

    pub fn edge_scores(&self) -> &[Vec<Vec<f64>>] {
        &self.scores
    }

    /// Same family at another parameter value.
    pub fn at_theta(&self, theta: Vec<f64>) -> Result<Self> {
        match &self.family {
            ChainFamily::ReflectingWalk { values } => Self::reflecting_walk(values.clone(), theta, self.initial_state),
            ChainFamily::Iid(fam) => Self::iid(fam.clone(), theta),
            ChainFamily::Fixed => Err(Error::Unsupported("a fixed matrix has no parameter to move".into())),
        }
    }

    /// `vᵀW(i,j)` on every edge.
    pub fn projected_scores(&self, v: &[f64]) -> Result<Vec<Vec<f64>>> {
        if v.len() != self.score_dim() {
            return Err(Error::InvalidInput(format!("direction has {} entries, scores have {}", v.len(), self.score_dim())));
        }
        Ok(self.scores.iter().map(|row| row.iter().map(|s| dot(v, s)).collect()).collect())
    }

    /// `g(i,j) = f(j)`.
    pub fn observable_edges(&self) -> Vec<Vec<f64>> {
        let n = self.n_states();
        vec![self.f.clone(); n]
    }

    pub fn stationary(&self) -> Result<Vec<f64>> {
        stationary(&self.pi)
    }

    /// Stationary mean of `f`.
    pub fn stationary_mean(&self) -> Result<f64> {
        Ok(dot(&self.stationary()?, &self.f))
    }
}

/// `h(α) = log λ_max(π(i,j)·e^{αg(i,j)})`.
struct MarkovCgf {
    pi: Vec<Vec<f64>>,
    g: Vec<Vec<f64>>,
    upper: (f64, f64),
    lower: (f64, f64),
    degenerate: bool,
}

impl MarkovCgf {
    fn tilted(&self, a: f64) -> (Vec<Vec<f64>>, f64) {
        let n = self.pi.len();
        let mut shift = f64::NEG_INFINITY;
        for i in 0..n {
            for j in 0..n {
                if self.pi[i][j] > 0.0 {
                    shift = shift.max(a * self.g[i][j]);
                }
            }
        }
        let m = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if self.pi[i][j] > 0.0 { self.pi[i][j] * (a * self.g[i][j] - shift).exp() } else { 0.0 })
                    .collect()
            })
            .collect();
        (m, shift)
    }
}

impl CumulantFn for MarkovCgf {
    fn value(&self, a: f64) -> f64 {
        if a == 0.0 {
            return 0.0;
        }
        let (m, shift) = self.tilted(a);
        match perron(&m) {
            Ok(p) => shift + p.lambda.ln(),
            Err(_) => f64::NAN,
        }
    }

    fn deriv1(&self, a: f64) -> f64 {
        let (m, _) = self.tilted(a);
        let Ok(p) = perron(&m) else { return f64::NAN };
        let n = m.len();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += p.left[i] * m[i][j] * self.g[i][j] * p.right[j];
            }
        }
        acc / p.lambda
    }

    fn deriv2(&self, a: f64) -> f64 {
        if self.degenerate {
            return 0.0;
        }
        let step = 1e-4 * a.abs().max(1.0);
        ((self.deriv1(a + step) - self.deriv1(a - step)) / (2.0 * step)).max(0.0)
    }

    fn asymptote(&self, upper: bool) -> Option<(f64, f64)> {
        Some(if upper { self.upper } else { self.lower })
    }
}

/// CGF of the additive functional `Σ g(X_{k−1}, X_k)`, per step, on the chain `pi`.
pub fn edge_cgf(pi: &[Vec<f64>], g: &[Vec<f64>]) -> Result<CgfHandle> {
    if !is_irreducible(pi) {
        return Err(Error::Reducible);
    }
    let upper = tilted_asymptote(pi, g)?;
    let neg: Vec<Vec<f64>> = g.iter().map(|r| r.iter().map(|x| -x).collect()).collect();
    let (mu_lo, gap_lo) = tilted_asymptote(pi, &neg)?;
    let lower = (-mu_lo, gap_lo);
    let scale = g.iter().flatten().fold(1.0f64, |s, x| s.max(x.abs()));
    let degenerate = (upper.0 - lower.0).abs() <= 1e-12 * scale;
    Ok(CgfHandle::new(MarkovCgf { pi: pi.to_vec(), g: g.to_vec(), upper, lower, degenerate }))
}

/// `h_v(α)`, the per-step CGF of the score functional along `v`.
pub fn markov_cgf(model: &MarkovModel, v: &[f64]) -> Result<CgfHandle> {
    let g = model.projected_scores(v)?;
    let any = (0..model.n_states()).any(|i| (0..model.n_states()).any(|j| model.pi[i][j] > 0.0 && g[i][j] != 0.0));
    if !any {
        return Err(Error::DegenerateDirection);
    }
    edge_cgf(&model.pi, &g)
}

/// Rate function `I(z) = sup_α {αz − log λ(α)}` of the empirical mean of `f`.
pub fn markov_rate(model: &MarkovModel, z: f64) -> Result<LegendreResult> {
    let h = edge_cgf(&model.pi, &model.observable_edges())?;
    legendre(&h, z)
}

/// `π_α(i,j) = π(i,j)e^{αg(i,j)} r(j) / (λ r(i))`.
pub fn twisted_kernel(pi: &[Vec<f64>], g: &[Vec<f64>], alpha: f64) -> Result<Vec<Vec<f64>>> {
    let n = pi.len();
    let cgf = MarkovCgf { pi: pi.to_vec(), g: g.to_vec(), upper: (0.0, 0.0), lower: (0.0, 0.0), degenerate: false };
    let (m, _) = cgf.tilted(alpha);
    let p = perron(&m)?;
    Ok((0..n)
        .map(|i| {
            let row: Vec<f64> = (0..n).map(|j| m[i][j] * p.right[j] / (p.lambda * p.right[i])).collect();
            let s: f64 = row.iter().sum();
            row.iter().map(|x| x / s).collect()
        })
        .collect())
}

/// `Σ_i l(i) R(π_α(i,·) ‖ π(i,·))` with `l` the stationary law of `π_α`.
pub fn kernel_relative_entropy(pi_alpha: &[Vec<f64>], pi: &[Vec<f64>]) -> Result<f64> {
    let l = stationary(pi_alpha)?;
    let mut acc = 0.0;
    for (i, li) in l.iter().enumerate() {
        for (q, p) in pi_alpha[i].iter().zip(&pi[i]) {
            if *q > 0.0 {
                acc += li * q * (q / p).ln();
            }
        }
    }
    Ok(acc)
}

/// Stationary mean of `g(i,j)` under the pair law `l(i)π_α(i,j)`.
pub fn pair_mean(pi_alpha: &[Vec<f64>], g: &[Vec<f64>]) -> Result<f64> {
    let l = stationary(pi_alpha)?;
    Ok(l.iter().enumerate().map(|(i, li)| li * dot(&pi_alpha[i], &g[i])).sum())
}

#[derive(Debug, Clone, Serialize)]
pub struct LdpReport {
    pub z: f64,
    #[serde(with = "crate::ext_real")]
    pub rate: f64,
    #[serde(rename = "M", with = "crate::ext_real")]
    pub m: f64,
    pub index_minus: f64,
    pub index_plus: f64,
    #[serde(with = "crate::ext_real")]
    pub alpha_minus: f64,
    #[serde(with = "crate::ext_real")]
    pub alpha_plus: f64,
    pub case_minus: BoundCase,
    pub case_plus: BoundCase,
    #[serde(skip)]
    pub h_v: Option<CgfHandle>,
}

/// LDP-scale indices for `{S_n ≈ z}`: `M = I(z)` and `±inf (h_v(±α)+M)/α`.
pub fn markov_sensitivity(model: &MarkovModel, v: &[f64], z: f64) -> Result<LdpReport> {
    let rate = markov_rate(model, z)?;
    if !(rate.attainable && rate.value.is_finite()) {
        return Err(Error::Domain(format!("z = {z} is outside the range of attainable means")));
    }
    let h = markov_cgf(model, v)?;
    report_for(h, z, rate.value)
}

fn report_for(h: CgfHandle, z: f64, m: f64) -> Result<LdpReport> {
    let plus = minimize_bound(&h, m, Sign::Plus)?;
    let minus = minimize_bound(&h, m, Sign::Minus)?;
    Ok(LdpReport {
        z,
        rate: m,
        m,
        index_minus: minus.index(),
        index_plus: plus.index(),
        alpha_minus: minus.alpha_star,
        alpha_plus: plus.alpha_star,
        case_minus: minus.case,
        case_plus: plus.case,
        h_v: Some(h),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cgf::cgf_discrete;
    use crate::distributions::DiscreteDist;

    #[test]
    fn cgf_vanishes_at_zero() {
        let m = MarkovModel::five_state([0.2, 0.5, 0.7]).unwrap();
        let h = markov_cgf(&m, &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(h.eval(0.0), 0.0);
        assert!(h.eval(1e-9).abs() < 1e-12);
    }

    #[test]
    fn two_state_symmetric_closed_form() {
        let p = 0.3;
        let pi = vec![vec![1.0 - p, p], vec![p, 1.0 - p]];
        let g = vec![vec![1.0, 1.0], vec![-1.0, -1.0]];
        let h = edge_cgf(&pi, &g).unwrap();
        for a in [-2.0, -0.3, 0.5, 1.7] {
            // eigenvalues of [[(1−p)e^a, p e^a], [p e^{−a}, (1−p)e^{−a}]]
            let tr = (1.0 - p) * 2.0 * f64::cosh(a);
            let det = (1.0 - p) * (1.0 - p) - p * p;
            let lam = 0.5 * (tr + (tr * tr - 4.0 * det).sqrt());
            assert!((h.eval(a) - lam.ln()).abs() < 1e-10, "α = {a}");
        }
    }

    #[test]
    fn rank_one_chain_matches_discrete_cgf() {
        let fam = FiniteExpFamily::new(vec![0.0, 1.0, 2.0], vec![1.0, 2.0, 1.0], vec![vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let m = MarkovModel::iid(fam.clone(), vec![0.4]).unwrap();
        let h = markov_cgf(&m, &[1.0]).unwrap();
        let d: DiscreteDist = fam.dist_at(&[0.4]).unwrap();
        let s: Vec<f64> = fam.scores_at(&[0.4]).unwrap().iter().map(|x| x[0]).collect();
        let hd = cgf_discrete(&d, &s).unwrap();
        for a in [-3.0, -0.5, 0.25, 2.0] {
            assert!((h.eval(a) - hd.eval(a)).abs() < 1e-12);
            assert!((h.deriv1(a) - hd.deriv1(a)).abs() < 1e-10);
        }
    }

    #[test]
    fn rate_zero_at_stationary_mean() {
        let m = MarkovModel::five_state([0.2, 0.5, 0.7]).unwrap();
        let mean = m.stationary_mean().unwrap();
        assert!(markov_rate(&m, mean).unwrap().value.abs() < 1e-10);
        assert!(!markov_rate(&m, 1.6).unwrap().attainable);
        assert!(markov_rate(&m, 1.49).unwrap().value.is_finite());
    }

    #[test]
    fn twisted_kernel_is_stochastic_and_matches_objective() {
        let pi = vec![vec![0.6, 0.4], vec![0.2, 0.8]];
        let f = vec![-1.0, 1.0];
        let g = vec![f.clone(), f.clone()];
        assert!(twisted_kernel(&pi, &g, 0.0).unwrap().iter().flatten().zip(pi.iter().flatten()).all(|(a, b)| (a - b).abs() < 1e-15));
        let k = twisted_kernel(&pi, &g, 1.0).unwrap();
        for row in &k {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let h = edge_cgf(&pi, &g).unwrap();
        let delta = pair_mean(&k, &g).unwrap();
        let obj = kernel_relative_entropy(&k, &pi).unwrap();
        assert!((obj - (delta - h.eval(1.0))).abs() < 1e-8);
    }

    #[test]
    fn orthogonal_direction_is_rejected() {
        let m = MarkovModel::from_matrix(vec![vec![0.5, 0.5], vec![0.5, 0.5]], vec![0.0, 1.0], 0)
            .unwrap()
            .with_scores(vec![vec![vec![0.0], vec![0.0]], vec![vec![0.0], vec![0.0]]])
            .unwrap();
        assert_eq!(markov_cgf(&m, &[1.0]).unwrap_err(), Error::DegenerateDirection);
    }

    #[test]
    fn reducible_chain_is_rejected() {
        let r = MarkovModel::from_matrix(vec![vec![1.0, 0.0], vec![0.5, 0.5]], vec![0.0, 1.0], 0);
        assert_eq!(r.unwrap_err(), Error::Reducible);
    }

    #[test]
    fn zero_rate_gives_zero_indices() {
        let m = MarkovModel::five_state([0.2, 0.5, 0.7]).unwrap();
        let mean = m.stationary_mean().unwrap();
        let r = markov_sensitivity(&m, &[0.0, 1.0, 0.0], mean).unwrap();
        assert!(r.m < 1e-14);
        assert!(r.index_plus.abs() < 1e-6 && r.index_minus.abs() < 1e-6);
    }
}
