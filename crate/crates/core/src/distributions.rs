//! Parametric models: one-parameter and two-parameter exponential families,
//! finite exponential families over labelled atoms, and plain finite
//! distributions used as the exact-computation substrate for every oracle.
//!
//! Exponential families have densities `p^θ(x) = exp(θᵀt(x) − F(θ))` with
//! respect to a family-specific reference measure. The score is
//! `W^θ(x) = t(x) − ∇F(θ)` and the Fisher information is `∇²F(θ)`.
//!
//! Built-in families (all with scalar observations `x`):
//!
//! | family            | t(x)        | F(θ)                               | domain  |
//! |-------------------|-------------|------------------------------------|---------|
//! | `Gaussian`        | x           | σ²θ²/2  (θ = μ/σ², σ² fixed)       | ℝ       |
//! | `GaussianNatural` | (x, x²/2)   | −θ₁²/(2θ₂) + ½ log(2π/(−θ₂))       | θ₂ < 0  |
//! | `Poisson`         | x           | e^θ                                | ℝ       |
//! | `Bernoulli`       | x           | log(1 + e^θ)                       | ℝ       |
//! | `CenteredLaplace` | \|x\|       | log(−1/θ)                          | θ < 0   |
//!
//! `Custom` families take user-supplied `t`, `F` and `∇F`; their Hessian is
//! obtained by central differences.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal, Poisson};

use crate::error::{Error, Result};
use crate::numeric::{dot, sigmoid, softplus};

/// Tolerance on the total mass of a [`DiscreteDist`].
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Finite probability vector over numerically labelled atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDist {
    atoms: Vec<f64>,
    probs: Vec<f64>,
}

impl DiscreteDist {
    pub fn new(atoms: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if atoms.len() != probs.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} atoms but {} probabilities",
                atoms.len(),
                probs.len()
            )));
        }
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("no atoms".into()));
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::InvalidDistribution(format!("probability {p} is not a nonnegative number")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("total mass {total} differs from 1")));
        }
        Ok(Self { atoms, probs })
    }

    /// Atoms labelled `0, 1, …, n−1`.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        let atoms = (0..probs.len()).map(|i| i as f64).collect();
        Self::new(atoms, probs)
    }

    /// Normalizes nonnegative weights into a distribution.
    pub fn from_weights(atoms: Vec<f64>, weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total.is_finite() && total > 0.0) || weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidDistribution("weights must be nonnegative with positive finite sum".into()));
        }
        Self::new(atoms, weights.iter().map(|w| w / total).collect())
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::from_probs(vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `P(A)` for an event given as atom indices.
    pub fn prob_of(&self, event: &[usize]) -> f64 {
        event.iter().map(|&i| self.probs[i]).sum()
    }

    /// `E[g]` for per-atom values `g`.
    pub fn expect(&self, g: &[f64]) -> f64 {
        self.probs.iter().zip(g).filter(|(p, _)| **p > 0.0).map(|(p, x)| p * x).sum()
    }

    /// `E[g]` where `g` is evaluated at the atom labels.
    pub fn expect_fn(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.atoms
            .iter()
            .zip(&self.probs)
            .filter(|(_, p)| **p > 0.0)
            .map(|(x, p)| p * g(*x))
            .sum()
    }

    pub fn variance(&self, g: &[f64]) -> f64 {
        let mean = self.expect(g);
        self.probs
            .iter()
            .zip(g)
            .filter(|(p, _)| **p > 0.0)
            .map(|(p, x)| p * (x - mean).powi(2))
            .sum()
    }
}

/// User-supplied exponential family.
#[derive(Clone)]
pub struct CustomFamily {
    pub dim: usize,
    pub statistic: Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>,
    /// `F(θ)`; must return a non-finite value outside the natural domain.
    pub log_normalizer: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    pub gradient: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
    /// Optional support indicator; points outside have zero density.
    pub support: Option<Arc<dyn Fn(f64) -> bool + Send + Sync>>,
    /// Largest |α| probed when locating the finiteness domain along a direction.
    pub search_limit: f64,
}

impl fmt::Debug for CustomFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomFamily").field("dim", &self.dim).finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum Family {
    /// Mean-direction Gaussian with fixed variance, `θ = μ/σ²`.
    Gaussian { sigma2: f64 },
    /// Two-parameter Gaussian in natural form, `θ = (μ/σ², −1/σ²)`.
    GaussianNatural,
    Poisson,
    Bernoulli,
    CenteredLaplace,
    Custom(CustomFamily),
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Gaussian { .. } => "gaussian",
            Family::GaussianNatural => "gaussian2",
            Family::Poisson => "poisson",
            Family::Bernoulli => "bernoulli",
            Family::CenteredLaplace => "laplace",
            Family::Custom(_) => "custom",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Family::GaussianNatural => 2,
            Family::Custom(c) => c.dim,
            _ => 1,
        }
    }
}

/// An exponential-family member `P^θ`.
#[derive(Debug, Clone)]
pub struct ExpFamModel {
    family: Family,
    theta: Vec<f64>,
}

impl ExpFamModel {
    pub fn new(family: Family, theta: Vec<f64>) -> Result<Self> {
        if theta.len() != family.dim() {
            return Err(Error::InvalidInput(format!(
                "{} family takes {} parameters, got {}",
                family.name(),
                family.dim(),
                theta.len()
            )));
        }
        if let Family::Gaussian { sigma2 } = family {
            if !(sigma2 > 0.0 && sigma2.is_finite()) {
                return Err(Error::Domain(format!("variance {sigma2} must be positive")));
            }
        }
        Ok(Self { family, theta })
    }

    /// Gaussian `N(μ, σ²)` in the mean-direction form `θ = μ/σ²`.
    pub fn gaussian(mu: f64, sigma2: f64) -> Result<Self> {
        Self::new(Family::Gaussian { sigma2 }, vec![mu / sigma2])
    }

    pub fn poisson(rate: f64) -> Result<Self> {
        if !(rate > 0.0) {
            return Err(Error::Domain(format!("Poisson rate {rate} must be positive")));
        }
        Self::new(Family::Poisson, vec![rate.ln()])
    }

    /// Bernoulli with success probability `p`; `p ∈ {0, 1}` gives an infinite
    /// natural parameter, which can be sampled but has no score.
    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("probability {p} outside [0, 1]")));
        }
        Self::new(Family::Bernoulli, vec![(p / (1.0 - p)).ln()])
    }

    pub fn laplace(theta: f64) -> Result<Self> {
        Self::new(Family::CenteredLaplace, vec![theta])
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    /// Same family at another parameter value.
    pub fn with_theta(&self, theta: Vec<f64>) -> Result<Self> {
        Self::new(self.family.clone(), theta)
    }

    pub fn in_domain(&self, theta: &[f64]) -> bool {
        if theta.iter().any(|t| !t.is_finite()) {
            return false;
        }
        match &self.family {
            Family::GaussianNatural => theta[1] < 0.0,
            Family::CenteredLaplace => theta[0] < 0.0,
            Family::Custom(c) => (c.log_normalizer)(theta).is_finite(),
            _ => true,
        }
    }

    fn check_domain(&self) -> Result<()> {
        if self.in_domain(&self.theta) {
            Ok(())
        } else {
            Err(Error::Domain(format!("θ = {:?} outside the natural domain of the {} family", self.theta, self.family.name())))
        }
    }

    pub fn sufficient_statistic(&self, x: f64) -> Vec<f64> {
        match &self.family {
            Family::GaussianNatural => vec![x, 0.5 * x * x],
            Family::CenteredLaplace => vec![x.abs()],
            Family::Custom(c) => (c.statistic)(x),
            _ => vec![x],
        }
    }

    /// Whether `x` is in the support of the reference measure.
    pub fn in_support(&self, x: f64) -> bool {
        match &self.family {
            Family::Poisson => x >= 0.0 && x.fract() == 0.0,
            Family::Bernoulli => x == 0.0 || x == 1.0,
            Family::Custom(c) => c.support.as_ref().is_none_or(|s| s(x)),
            _ => x.is_finite(),
        }
    }

    /// `F(θ)`, `+∞` outside the natural domain.
    pub fn log_normalizer(&self, theta: &[f64]) -> f64 {
        if let Family::Custom(c) = &self.family {
            let v = (c.log_normalizer)(theta);
            return if v.is_finite() { v } else { f64::INFINITY };
        }
        if !self.in_domain(theta) {
            return f64::INFINITY;
        }
        let t = theta[0];
        match &self.family {
            Family::Gaussian { sigma2 } => 0.5 * sigma2 * t * t,
            Family::GaussianNatural => {
                let t2 = theta[1];
                -t * t / (2.0 * t2) + 0.5 * (2.0 * std::f64::consts::PI / -t2).ln()
            }
            Family::Poisson => t.exp(),
            Family::Bernoulli => softplus(t),
            Family::CenteredLaplace => (-1.0 / t).ln(),
            Family::Custom(_) => unreachable!(),
        }
    }

    /// `∇F(θ) = E_θ[t]`.
    pub fn grad_log_normalizer(&self, theta: &[f64]) -> Vec<f64> {
        let t = theta[0];
        match &self.family {
            Family::Gaussian { sigma2 } => vec![sigma2 * t],
            Family::GaussianNatural => {
                let t2 = theta[1];
                vec![-t / t2, t * t / (2.0 * t2 * t2) - 0.5 / t2]
            }
            Family::Poisson => vec![t.exp()],
            Family::Bernoulli => vec![sigmoid(t)],
            Family::CenteredLaplace => vec![-1.0 / t],
            Family::Custom(c) => (c.gradient)(theta),
        }
    }

    /// `∇²F(θ)`; central differences of the gradient for custom families with
    /// step `cbrt(ε_mach)·max(1, |θᵢ|)`.
    pub fn hessian_log_normalizer(&self, theta: &[f64]) -> Vec<Vec<f64>> {
        let t = theta[0];
        match &self.family {
            Family::Gaussian { sigma2 } => vec![vec![*sigma2]],
            Family::GaussianNatural => {
                let t2 = theta[1];
                let h11 = -1.0 / t2;
                let h12 = t / (t2 * t2);
                let h22 = -t * t / (t2 * t2 * t2) + 0.5 / (t2 * t2);
                vec![vec![h11, h12], vec![h12, h22]]
            }
            Family::Poisson => vec![vec![t.exp()]],
            Family::Bernoulli => {
                let s = sigmoid(t);
                vec![vec![s * (1.0 - s)]]
            }
            Family::CenteredLaplace => vec![vec![1.0 / (t * t)]],
            Family::Custom(c) => {
                let k = theta.len();
                let mut h = vec![vec![0.0; k]; k];
                for j in 0..k {
                    let step = f64::EPSILON.cbrt() * theta[j].abs().max(1.0);
                    let mut up = theta.to_vec();
                    let mut dn = theta.to_vec();
                    up[j] += step;
                    dn[j] -= step;
                    let gu = (c.gradient)(&up);
                    let gd = (c.gradient)(&dn);
                    for i in 0..k {
                        h[i][j] = (gu[i] - gd[i]) / (2.0 * step);
                    }
                }
                // symmetrize
                for i in 0..k {
                    for j in 0..i {
                        let m = 0.5 * (h[i][j] + h[j][i]);
                        h[i][j] = m;
                        h[j][i] = m;
                    }
                }
                h
            }
        }
    }

    /// Mean of the sufficient statistic, `∇F(θ)` at the model's parameter.
    pub fn mean_statistic(&self) -> Vec<f64> {
        self.grad_log_normalizer(&self.theta)
    }

    /// `log p^θ(x)` against Lebesgue measure (continuous built-ins), counting
    /// measure (discrete built-ins) or the user's reference measure (custom).
    pub fn log_density(&self, x: f64) -> f64 {
        if !self.in_support(x) {
            return f64::NEG_INFINITY;
        }
        let lp = dot(&self.theta, &self.sufficient_statistic(x)) - self.log_normalizer(&self.theta);
        lp + match &self.family {
            Family::Gaussian { sigma2 } => -0.5 * x * x / sigma2 - 0.5 * (2.0 * std::f64::consts::PI * sigma2).ln(),
            Family::Poisson => -ln_factorial(x as u64),
            Family::CenteredLaplace => -std::f64::consts::LN_2,
            _ => 0.0,
        }
    }

    /// Score `W^θ(x) = t(x) − ∇F(θ)`; the zero vector where the density vanishes.
    pub fn score(&self, x: f64) -> Result<Vec<f64>> {
        self.check_domain()?;
        if !self.in_support(x) {
            return Ok(vec![0.0; self.dim()]);
        }
        let t = self.sufficient_statistic(x);
        let mean = self.mean_statistic();
        Ok(t.iter().zip(&mean).map(|(a, b)| a - b).collect())
    }

    /// Fisher information `E[W Wᵀ] = ∇²F(θ)`.
    pub fn fisher_information(&self) -> Result<Vec<Vec<f64>>> {
        self.check_domain()?;
        let h = self.hessian_log_normalizer(&self.theta);
        if h.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Domain("non-finite second derivative of the log-normalizer".into()));
        }
        Ok(h)
    }

    /// `vᵀ F(P^θ) v`.
    pub fn fisher_quadratic(&self, v: &[f64]) -> Result<f64> {
        let f = self.fisher_information()?;
        Ok(quadratic_form(&f, v))
    }

    /// Relative entropy `R(P^{θ'} ‖ P^θ) = F(θ) − F(θ') − (θ − θ')ᵀ∇F(θ')`,
    /// the Bregman divergence of `F`.
    pub fn relative_entropy_from(&self, theta_q: &[f64]) -> f64 {
        if !self.in_domain(theta_q) {
            return f64::INFINITY;
        }
        let grad = self.grad_log_normalizer(theta_q);
        let diff: Vec<f64> = self.theta.iter().zip(theta_q).map(|(a, b)| a - b).collect();
        self.log_normalizer(&self.theta) - self.log_normalizer(theta_q) - dot(&diff, &grad)
    }

    /// Interval of `α` for which `θ + αv` stays in the natural domain.
    pub fn direction_domain(&self, v: &[f64]) -> (f64, f64) {
        match &self.family {
            Family::CenteredLaplace => half_line(self.theta[0], v[0]),
            Family::GaussianNatural => half_line(self.theta[1], v[1]),
            Family::Custom(c) => {
                let probe = |a: f64| {
                    let th: Vec<f64> = self.theta.iter().zip(v).map(|(t, d)| t + a * d).collect();
                    (c.log_normalizer)(&th).is_finite()
                };
                (-search_edge(|a| probe(-a), c.search_limit), search_edge(probe, c.search_limit))
            }
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Essential range of `vᵀW` as `(inf, sup)`; `None` when unknown.
    pub fn score_range(&self, v: &[f64]) -> Option<(f64, f64)> {
        let shift = dot(v, &self.mean_statistic());
        let (lo, hi) = match &self.family {
            Family::Gaussian { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Family::GaussianNatural => {
                let (a, b) = (v[0], v[1]);
                if b < 0.0 {
                    (f64::NEG_INFINITY, -a * a / (2.0 * b))
                } else if b > 0.0 {
                    (-a * a / (2.0 * b), f64::INFINITY)
                } else if a != 0.0 {
                    (f64::NEG_INFINITY, f64::INFINITY)
                } else {
                    (0.0, 0.0)
                }
            }
            Family::Poisson | Family::CenteredLaplace => {
                if v[0] >= 0.0 {
                    (0.0, if v[0] > 0.0 { f64::INFINITY } else { 0.0 })
                } else {
                    (f64::NEG_INFINITY, 0.0)
                }
            }
            Family::Bernoulli => (v[0].min(0.0), v[0].max(0.0)),
            Family::Custom(_) => return None,
        };
        Some((lo - shift, hi - shift))
    }

    /// Probability mass sitting exactly at the essential inf / sup of `vᵀW`.
    pub fn score_extreme_masses(&self, v: &[f64]) -> Option<(f64, f64)> {
        match &self.family {
            Family::Bernoulli => {
                let p = sigmoid(self.theta[0]);
                Some(if v[0] >= 0.0 { (1.0 - p, p) } else { (p, 1.0 - p) })
            }
            Family::Poisson => {
                let p0 = (-self.theta[0].exp()).exp();
                Some(if v[0] >= 0.0 { (p0, 0.0) } else { (0.0, p0) })
            }
            Family::Custom(_) => None,
            _ => Some((0.0, 0.0)),
        }
    }

    /// `n` deterministic draws given `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = self.theta[0];
        let bad = |e: &dyn fmt::Display| Error::Domain(e.to_string());
        match &self.family {
            Family::Gaussian { sigma2 } => {
                let d = Normal::new(sigma2 * t, sigma2.sqrt()).map_err(|e| bad(&e))?;
                Ok((0..n).map(|_| d.sample(&mut rng)).collect())
            }
            Family::GaussianNatural => {
                self.check_domain()?;
                let g = GaussianTwoParam::from_natural(&self.theta)?;
                let d = Normal::new(g.mu, g.sigma2.sqrt()).map_err(|e| bad(&e))?;
                Ok((0..n).map(|_| d.sample(&mut rng)).collect())
            }
            Family::Poisson => {
                let d = Poisson::new(t.exp()).map_err(|e| bad(&e))?;
                Ok((0..n).map(|_| d.sample(&mut rng)).collect())
            }
            Family::Bernoulli => {
                let p = sigmoid(t);
                Ok((0..n).map(|_| if rng.random::<f64>() < p { 1.0 } else { 0.0 }).collect())
            }
            Family::CenteredLaplace => {
                self.check_domain()?;
                let d = Exp::new(-t).map_err(|e| bad(&e))?;
                Ok((0..n)
                    .map(|_| {
                        let r: f64 = d.sample(&mut rng);
                        if rng.random::<bool>() { r } else { -r }
                    })
                    .collect())
            }
            Family::Custom(_) => Err(Error::Unsupported("sampling from a custom family".into())),
        }
    }
}

fn half_line(coord: f64, dir: f64) -> (f64, f64) {
    // α with coord + α·dir < 0
    if dir > 0.0 {
        (f64::NEG_INFINITY, -coord / dir)
    } else if dir < 0.0 {
        (-coord / dir, f64::INFINITY)
    } else {
        (f64::NEG_INFINITY, f64::INFINITY)
    }
}

/// Largest `a ∈ [0, limit]` with `finite(a)`, assuming finiteness on an
/// interval containing 0. Returns `+∞` if no divergence is seen up to `limit`.
fn search_edge(finite: impl Fn(f64) -> bool, limit: f64) -> f64 {
    let mut good = 0.0;
    let mut probe = 1.0_f64.min(limit);
    while probe <= limit {
        if !finite(probe) {
            let mut bad = probe;
            for _ in 0..200 {
                let mid = 0.5 * (good + bad);
                if mid <= good || mid >= bad {
                    break;
                }
                if finite(mid) {
                    good = mid;
                } else {
                    bad = mid;
                }
            }
            return bad;
        }
        good = probe;
        probe *= 2.0;
    }
    f64::INFINITY
}

pub(crate) fn quadratic_form(m: &[Vec<f64>], v: &[f64]) -> f64 {
    m.iter().zip(v).map(|(row, vi)| vi * dot(row, v)).sum()
}

fn ln_factorial(k: u64) -> f64 {
    (1..=k).map(|i| (i as f64).ln()).sum()
}

/// Gaussian `N(μ, σ²)` with its natural parameters `θ = (μ/σ², −1/σ²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianTwoParam {
    pub mu: f64,
    pub sigma2: f64,
}

impl GaussianTwoParam {
    pub fn new(mu: f64, sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite() && mu.is_finite()) {
            return Err(Error::Domain(format!("N({mu}, {sigma2}) is not a valid Gaussian")));
        }
        Ok(Self { mu, sigma2 })
    }

    pub fn natural(&self) -> [f64; 2] {
        [self.mu / self.sigma2, -1.0 / self.sigma2]
    }

    pub fn from_natural(theta: &[f64]) -> Result<Self> {
        if theta.len() != 2 || !(theta[1] < 0.0) {
            return Err(Error::Domain(format!("θ = {theta:?} is not a Gaussian natural parameter")));
        }
        let sigma2 = -1.0 / theta[1];
        Self::new(theta[0] * sigma2, sigma2)
    }

    pub fn to_model(&self) -> ExpFamModel {
        ExpFamModel { family: Family::GaussianNatural, theta: self.natural().to_vec() }
    }

    /// Tilted distribution `P^{θ+αv}` written in `(μ, σ²)` form:
    /// `N((μ + ασ²v₁)/(1 − ασ²v₂), σ²/(1 − ασ²v₂))`.
    pub fn tilted(&self, alpha: f64, v: [f64; 2]) -> Result<Self> {
        let c = 1.0 - alpha * self.sigma2 * v[1];
        if !(c > 0.0) {
            return Err(Error::Domain(format!("tilt α = {alpha} leaves the natural domain")));
        }
        Self::new((self.mu + alpha * self.sigma2 * v[0]) / c, self.sigma2 / c)
    }

    /// Closed-form `R(self ‖ other)` for two Gaussians.
    pub fn relative_entropy_to(&self, other: &Self) -> f64 {
        0.5 * ((other.sigma2 / self.sigma2).ln() + (self.sigma2 + (self.mu - other.mu).powi(2)) / other.sigma2 - 1.0)
    }
}

/// Exponential family over finitely many atoms:
/// `p^θ(a) ∝ base(a)·exp(θᵀt(a))`, score `t(a) − E_θ[t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteExpFamily {
    atoms: Vec<f64>,
    base: Vec<f64>,
    stats: Vec<Vec<f64>>,
}

impl FiniteExpFamily {
    pub fn new(atoms: Vec<f64>, base: Vec<f64>, stats: Vec<Vec<f64>>) -> Result<Self> {
        if atoms.len() != base.len() || atoms.len() != stats.len() || atoms.is_empty() {
            return Err(Error::InvalidInput("atoms, base weights and statistics must have equal nonzero length".into()));
        }
        let k = stats[0].len();
        if k == 0 || stats.iter().any(|s| s.len() != k) {
            return Err(Error::InvalidInput("statistics must share one positive dimension".into()));
        }
        if base.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
            return Err(Error::InvalidInput("base weights must be positive".into()));
        }
        Ok(Self { atoms, base, stats })
    }

    /// `n` IID Bernoulli trials sharing the log-odds `θ`, enumerated over all
    /// `2ⁿ` outcomes. Atom `i` encodes the outcome bits of `i`; `t = Σ xₖ`.
    pub fn product_bernoulli(n: u32) -> Result<Self> {
        let size = 1usize << n;
        let atoms = (0..size).map(|i| i as f64).collect();
        let stats = (0..size).map(|i: usize| vec![i.count_ones() as f64]).collect();
        Self::new(atoms, vec![1.0; size], stats)
    }

    pub fn dim(&self) -> usize {
        self.stats[0].len()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn stats(&self) -> &[Vec<f64>] {
        &self.stats
    }

    pub fn dist_at(&self, theta: &[f64]) -> Result<DiscreteDist> {
        if theta.len() != self.dim() {
            return Err(Error::InvalidInput(format!("expected {} parameters, got {}", self.dim(), theta.len())));
        }
        let logw: Vec<f64> = self.base.iter().zip(&self.stats).map(|(b, t)| b.ln() + dot(theta, t)).collect();
        let m = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = logw.iter().map(|l| (l - m).exp()).collect();
        DiscreteDist::from_weights(self.atoms.clone(), &w)
    }

    /// `log P^θ(A)`.
    pub fn log_prob(&self, theta: &[f64], event: &[usize]) -> Result<f64> {
        Ok(self.dist_at(theta)?.prob_of(event).ln())
    }

    /// Per-atom scores `t(a) − E_θ[t]`.
    pub fn scores_at(&self, theta: &[f64]) -> Result<Vec<Vec<f64>>> {
        let dist = self.dist_at(theta)?;
        let k = self.dim();
        let mean: Vec<f64> = (0..k)
            .map(|j| dist.probs().iter().zip(&self.stats).map(|(p, t)| p * t[j]).sum())
            .collect();
        Ok(self.stats.iter().map(|t| t.iter().zip(&mean).map(|(a, b)| a - b).collect()).collect())
    }
}

/// `E_{P|A}[vᵀW] = Σ_{a∈A} p(a) vᵀW(a) / P(A)`: the exact gradient index of
/// `log P(A)` along `v` for a finite model.
pub fn exact_conditional_score_mean(dist: &DiscreteDist, scores: &[Vec<f64>], event: &[usize], v: &[f64]) -> Result<f64> {
    if scores.len() != dist.len() {
        return Err(Error::InvalidInput("one score vector per atom is required".into()));
    }
    let pa = dist.prob_of(event);
    if !(pa > 0.0) {
        return Err(Error::EmptyEvent);
    }
    let num: f64 = event.iter().map(|&i| dist.probs()[i] * dot(v, &scores[i])).sum();
    Ok(num / pa)
}
