//! Cumulant generating functions `H(α) = log E_P[e^{αg}]` and exponential tilting.
//!
//! A [`CgfHandle`] wraps any [`CumulantFn`] and adds the reflection `g → −g`
//! used by the lower-sign problems, plus boundary limits at finite domain
//! endpoints.

use std::fmt;
use std::sync::Arc;

use crate::distributions::{DiscreteDist, ExpFamModel};
use crate::error::{Error, Result};
use crate::numeric::dot;

/// Minimum effective sample size of tilted empirical weights.
pub const MIN_EFFECTIVE_SAMPLES: f64 = 30.0;

/// Interval of `α` on which `H` is finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub lower: f64,
    pub upper: f64,
    pub lower_closed: bool,
    pub upper_closed: bool,
}

impl Domain {
    pub const REAL_LINE: Domain = Domain {
        lower: f64::NEG_INFINITY,
        upper: f64::INFINITY,
        lower_closed: false,
        upper_closed: false,
    };

    pub fn open(lower: f64, upper: f64) -> Self {
        Self { lower, upper, lower_closed: false, upper_closed: false }
    }

    pub fn contains(&self, a: f64) -> bool {
        let above = a > self.lower || (self.lower_closed && a == self.lower);
        let below = a < self.upper || (self.upper_closed && a == self.upper);
        above && below
    }

    fn reflect(&self) -> Self {
        Self {
            lower: -self.upper,
            upper: -self.lower,
            lower_closed: self.upper_closed,
            upper_closed: self.lower_closed,
        }
    }
}

/// A cumulant generating function with its first two derivatives.
///
/// `value` returns `+∞` outside the domain. Implementations may override
/// `tilt_gap` when `αH'(α) − H(α)` can be evaluated without cancellation.
pub trait CumulantFn: Send + Sync {
    fn value(&self, alpha: f64) -> f64;
    fn deriv1(&self, alpha: f64) -> f64;
    fn deriv2(&self, alpha: f64) -> f64;

    fn domain(&self) -> Domain {
        Domain::REAL_LINE
    }

    /// Essential `(inf, sup)` of `g`, when known.
    fn ess_bounds(&self) -> Option<(f64, f64)> {
        None
    }

    /// Probability that `g` equals its essential inf / sup, when known.
    fn extreme_masses(&self) -> Option<(f64, f64)> {
        None
    }

    /// `(lim H'(α), lim αH'(α) − H(α))` as `α → +∞` (or `−∞` when
    /// `upper` is false), for CGFs that know their asymptotics without a
    /// bounded observable.
    fn asymptote(&self, _upper: bool) -> Option<(f64, f64)> {
        None
    }

    /// Range of `α` on which the function is a trustworthy estimate.
    fn trust_interval(&self) -> Option<(f64, f64)> {
        None
    }

    /// `αH'(α) − H(α)`, the relative entropy of the tilted measure.
    fn tilt_gap(&self, alpha: f64) -> f64 {
        if alpha == 0.0 {
            return 0.0;
        }
        alpha * self.deriv1(alpha) - self.value(alpha)
    }
}

/// Shared, immutable CGF, optionally reflected (`g → −g`).
#[derive(Clone)]
pub struct CgfHandle {
    inner: Arc<dyn CumulantFn>,
    reflected: bool,
}

impl fmt::Debug for CgfHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CgfHandle")
            .field("domain", &self.domain())
            .field("ess_bounds", &self.ess_bounds())
            .field("reflected", &self.reflected)
            .finish()
    }
}

impl CgfHandle {
    pub fn new(inner: impl CumulantFn + 'static) -> Self {
        Self { inner: Arc::new(inner), reflected: false }
    }

    /// CGF of `−g`.
    pub fn reflect(&self) -> Self {
        Self { inner: self.inner.clone(), reflected: !self.reflected }
    }

    fn s(&self) -> f64 {
        if self.reflected { -1.0 } else { 1.0 }
    }

    pub fn eval(&self, alpha: f64) -> f64 {
        self.inner.value(self.s() * alpha)
    }

    pub fn deriv1(&self, alpha: f64) -> f64 {
        self.s() * self.inner.deriv1(self.s() * alpha)
    }

    pub fn deriv2(&self, alpha: f64) -> f64 {
        self.inner.deriv2(self.s() * alpha)
    }

    pub fn tilt_gap(&self, alpha: f64) -> f64 {
        self.inner.tilt_gap(self.s() * alpha)
    }

    pub fn domain(&self) -> Domain {
        let d = self.inner.domain();
        if self.reflected { d.reflect() } else { d }
    }

    pub fn ess_bounds(&self) -> Option<(f64, f64)> {
        let b = self.inner.ess_bounds()?;
        Some(if self.reflected { (-b.1, -b.0) } else { b })
    }

    pub fn extreme_masses(&self) -> Option<(f64, f64)> {
        let m = self.inner.extreme_masses()?;
        Some(if self.reflected { (m.1, m.0) } else { m })
    }

    /// `(lim H'(α), lim αH'(α) − H(α))` as `α → +∞`.
    pub fn asymptote(&self) -> Option<(f64, f64)> {
        if self.reflected {
            self.inner.asymptote(false).map(|(slope, gap)| (-slope, gap))
        } else {
            self.inner.asymptote(true)
        }
    }

    pub fn trust_interval(&self) -> Option<(f64, f64)> {
        let t = self.inner.trust_interval()?;
        Some(if self.reflected { (-t.1, -t.0) } else { t })
    }

    /// `E_P[g] = H'(0)`.
    pub fn mean(&self) -> f64 {
        self.deriv1(0.0)
    }

    /// `(H(d₊), H'(d₊))` as monotone limits; `None` if `d₊ = ∞`.
    /// Infinite components signal divergence.
    pub fn upper_limits(&self) -> Option<(f64, f64)> {
        let d = self.domain();
        if !d.upper.is_finite() {
            return None;
        }
        Some(if d.upper_closed {
            (self.eval(d.upper), self.deriv1(d.upper))
        } else {
            monotone_limit(|a| (self.eval(a), self.deriv1(a)), d.upper)
        })
    }

    /// `(H(d₋), H'(d₋))`; `None` if `d₋ = −∞`.
    pub fn lower_limits(&self) -> Option<(f64, f64)> {
        self.reflect().upper_limits().map(|(h, dh)| (h, -dh))
    }

    /// Builds a handle from closures.
    pub fn from_fns<V, D1, D2>(value: V, deriv1: D1, deriv2: D2, domain: Domain) -> FnCgf
    where
        V: Fn(f64) -> f64 + Send + Sync + 'static,
        D1: Fn(f64) -> f64 + Send + Sync + 'static,
        D2: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        FnCgf {
            value: Box::new(value),
            deriv1: Box::new(deriv1),
            deriv2: Box::new(deriv2),
            domain,
            ess_bounds: None,
            extreme_masses: None,
        }
    }
}

/// Limit of `f(α)` as `α ↑ edge`, probing `edge − |edge|·10⁻ᵏ` until both
/// components stabilize. A component whose increments stop shrinking
/// geometrically is reported as `+∞`.
fn monotone_limit(f: impl Fn(f64) -> (f64, f64), edge: f64) -> (f64, f64) {
    let scale = edge.abs().max(f64::MIN_POSITIVE);
    let mut hs = Vec::new();
    let mut ds = Vec::new();
    for k in 1..=15 {
        let (h, dh) = f(edge - scale * 10f64.powi(-k));
        if !h.is_finite() || !dh.is_finite() {
            let h = if h.is_finite() { h } else { f64::INFINITY };
            return (h, f64::INFINITY);
        }
        hs.push(h);
        ds.push(dh);
        if k >= 2 && settled(&hs, 1e-12) && settled(&ds, 1e-10) {
            return (h, dh);
        }
    }
    (sequence_limit(&hs), sequence_limit(&ds))
}

fn settled(xs: &[f64], tol: f64) -> bool {
    let n = xs.len();
    (xs[n - 1] - xs[n - 2]).abs() <= tol * xs[n - 1].abs().max(1.0)
}

fn sequence_limit(xs: &[f64]) -> f64 {
    let n = xs.len();
    let last = xs[n - 1];
    if settled(xs, 1e-8) {
        return last;
    }
    let steps: Vec<f64> = xs.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let shrinking = steps.windows(2).rev().take(3).all(|w| w[1] < 0.5 * w[0]);
    if shrinking { last } else { f64::INFINITY }
}

/// Closure-backed [`CumulantFn`].
pub struct FnCgf {
    value: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    deriv1: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    deriv2: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    domain: Domain,
    ess_bounds: Option<(f64, f64)>,
    extreme_masses: Option<(f64, f64)>,
}

impl FnCgf {
    pub fn with_ess_bounds(mut self, lo: f64, hi: f64) -> Self {
        self.ess_bounds = Some((lo, hi));
        self
    }

    pub fn with_extreme_masses(mut self, lo: f64, hi: f64) -> Self {
        self.extreme_masses = Some((lo, hi));
        self
    }

    pub fn into_handle(self) -> CgfHandle {
        CgfHandle::new(self)
    }
}

impl CumulantFn for FnCgf {
    fn value(&self, a: f64) -> f64 {
        if !self.domain.contains(a) {
            return f64::INFINITY;
        }
        (self.value)(a)
    }
    fn deriv1(&self, a: f64) -> f64 {
        (self.deriv1)(a)
    }
    fn deriv2(&self, a: f64) -> f64 {
        (self.deriv2)(a)
    }
    fn domain(&self) -> Domain {
        self.domain
    }
    fn ess_bounds(&self) -> Option<(f64, f64)> {
        self.ess_bounds
    }
    fn extreme_masses(&self) -> Option<(f64, f64)> {
        self.extreme_masses
    }
}

struct ExpFamCgf {
    model: ExpFamModel,
    v: Vec<f64>,
    f0: f64,
    mean_v: f64,
    domain: Domain,
    ess: Option<(f64, f64)>,
    masses: Option<(f64, f64)>,
}

impl ExpFamCgf {
    fn shifted(&self, a: f64) -> Vec<f64> {
        self.model.theta().iter().zip(&self.v).map(|(t, d)| t + a * d).collect()
    }
}

impl CumulantFn for ExpFamCgf {
    fn value(&self, a: f64) -> f64 {
        if a == 0.0 {
            return 0.0;
        }
        if !self.domain.contains(a) {
            return f64::INFINITY;
        }
        let f = self.model.log_normalizer(&self.shifted(a));
        if !f.is_finite() {
            return f64::INFINITY;
        }
        f - self.f0 - a * self.mean_v
    }

    fn deriv1(&self, a: f64) -> f64 {
        if !self.domain.contains(a) {
            return f64::INFINITY * a.signum();
        }
        dot(&self.v, &self.model.grad_log_normalizer(&self.shifted(a))) - self.mean_v
    }

    fn deriv2(&self, a: f64) -> f64 {
        if !self.domain.contains(a) {
            return f64::INFINITY;
        }
        crate::distributions::quadratic_form(&self.model.hessian_log_normalizer(&self.shifted(a)), &self.v)
    }

    fn domain(&self) -> Domain {
        self.domain
    }

    fn ess_bounds(&self) -> Option<(f64, f64)> {
        self.ess
    }

    fn extreme_masses(&self) -> Option<(f64, f64)> {
        self.masses
    }
}

/// `H(α) = F(θ+αv) − F(θ) − α vᵀ∇F(θ)`, the CGF of `vᵀW` under `P^θ`.
pub fn cgf_expfam(model: &ExpFamModel, v: &[f64]) -> Result<CgfHandle> {
    if v.len() != model.dim() {
        return Err(Error::InvalidInput(format!("direction has {} entries, model has {} parameters", v.len(), model.dim())));
    }
    if v.iter().all(|x| *x == 0.0) {
        return Err(Error::DegenerateDirection);
    }
    if !model.in_domain(model.theta()) {
        return Err(Error::Domain(format!("θ = {:?} outside the natural domain", model.theta())));
    }
    let (lo, hi) = model.direction_domain(v);
    Ok(CgfHandle::new(ExpFamCgf {
        f0: model.log_normalizer(model.theta()),
        mean_v: dot(v, &model.mean_statistic()),
        domain: Domain::open(lo, hi),
        ess: model.score_range(v),
        masses: model.score_extreme_masses(v),
        model: model.clone(),
        v: v.to_vec(),
    }))
}

/// Exact CGF of per-atom values under a finite distribution.
struct DiscreteCgf {
    probs: Vec<f64>,
    g: Vec<f64>,
    lo: f64,
    hi: f64,
    trust: Option<(f64, f64)>,
}

impl DiscreteCgf {
    fn build(probs: &[f64], g: &[f64]) -> Result<Self> {
        if probs.len() != g.len() {
            return Err(Error::InvalidInput(format!("{} probabilities but {} values", probs.len(), g.len())));
        }
        let (p, x): (Vec<f64>, Vec<f64>) = probs.iter().zip(g).filter(|(p, _)| **p > 0.0).map(|(p, x)| (*p, *x)).unzip();
        if let Some(bad) = x.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!("observable value {bad} is not finite")));
        }
        let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self { probs: p, g: x, lo, hi, trust: None })
    }

    /// Unnormalized tilted weights shifted so the largest exponent is 0,
    /// together with the shift.
    fn weights(&self, a: f64) -> (Vec<f64>, f64) {
        let c = if a >= 0.0 { self.hi } else { self.lo };
        (self.probs.iter().zip(&self.g).map(|(p, x)| p * (a * (x - c)).exp()).collect(), c)
    }

    /// `(Σw, tilted mean − c, tilted variance)` for the shifted weights.
    fn moments(&self, a: f64) -> (f64, f64, f64) {
        let (w, c) = self.weights(a);
        let z: f64 = w.iter().sum();
        let off: f64 = w.iter().zip(&self.g).map(|(w, x)| w * (x - c)).sum::<f64>() / z;
        let var: f64 = w.iter().zip(&self.g).map(|(w, x)| w * (x - c - off).powi(2)).sum::<f64>() / z;
        (z, off, var.max(0.0))
    }
}

impl CumulantFn for DiscreteCgf {
    fn value(&self, a: f64) -> f64 {
        if a == 0.0 {
            return 0.0;
        }
        let (w, c) = self.weights(a);
        a * c + w.iter().sum::<f64>().ln()
    }

    fn deriv1(&self, a: f64) -> f64 {
        let c = if a >= 0.0 { self.hi } else { self.lo };
        c + self.moments(a).1
    }

    fn deriv2(&self, a: f64) -> f64 {
        self.moments(a).2
    }

    fn ess_bounds(&self) -> Option<(f64, f64)> {
        Some((self.lo, self.hi))
    }

    fn extreme_masses(&self) -> Option<(f64, f64)> {
        let mass = |target: f64| -> f64 { self.probs.iter().zip(&self.g).filter(|(_, x)| **x == target).map(|(p, _)| p).sum() };
        let total: f64 = self.probs.iter().sum();
        Some((mass(self.lo) / total, mass(self.hi) / total))
    }

    fn trust_interval(&self) -> Option<(f64, f64)> {
        self.trust
    }

    fn tilt_gap(&self, a: f64) -> f64 {
        if a == 0.0 {
            return 0.0;
        }
        let (z, off, _) = self.moments(a);
        (a * off - z.ln()).max(0.0)
    }
}

/// Exact `log Σ p(a) e^{αg(a)}` over the atoms of positive probability.
pub fn cgf_discrete(dist: &DiscreteDist, g: &[f64]) -> Result<CgfHandle> {
    Ok(CgfHandle::new(DiscreteCgf::build(dist.probs(), g)?))
}

/// Empirical CGF `log((1/n) Σ e^{αgᵢ})`. Results at `|α|` beyond the range
/// where the tilted weights keep an effective sample size of at least
/// [`MIN_EFFECTIVE_SAMPLES`] are reported as untrusted.
pub fn cgf_empirical(samples: &[f64]) -> Result<CgfHandle> {
    if samples.len() < 2 {
        return Err(Error::InvalidInput("the empirical CGF needs at least two samples".into()));
    }
    let n = samples.len();
    let mut cgf = DiscreteCgf::build(&vec![1.0 / n as f64; n], samples)?;
    let hi = trust_radius(&cgf, 1.0);
    let lo = -trust_radius(&cgf, -1.0);
    cgf.trust = Some((lo, hi));
    Ok(CgfHandle::new(cgf))
}

fn effective_sample_size(cgf: &DiscreteCgf, a: f64) -> f64 {
    let (w, _) = cgf.weights(a);
    let s: f64 = w.iter().sum();
    let s2: f64 = w.iter().map(|x| x * x).sum();
    s * s / s2
}

/// Largest `t ≥ 0` with ESS(`dir·t`) ≥ the threshold.
fn trust_radius(cgf: &DiscreteCgf, dir: f64) -> f64 {
    if (cgf.probs.len() as f64) < MIN_EFFECTIVE_SAMPLES {
        return 0.0;
    }
    let ok = |t: f64| effective_sample_size(cgf, dir * t) >= MIN_EFFECTIVE_SAMPLES;
    let mut lo = 0.0;
    let mut hi = 1.0;
    while ok(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return f64::INFINITY;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Exponentially tilted measure `P_α` with `dP_α/dP = e^{αg − H(α)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TiltedMeasure {
    pub dist: DiscreteDist,
    pub alpha: f64,
    pub log_norm: f64,
}

impl TiltedMeasure {
    pub fn new(base: &DiscreteDist, g: &[f64], alpha: f64) -> Result<Self> {
        if g.len() != base.len() {
            return Err(Error::InvalidInput(format!("{} atoms but {} values", base.len(), g.len())));
        }
        let exps: Vec<f64> = base
            .probs()
            .iter()
            .zip(g)
            .map(|(p, x)| if *p > 0.0 { p.ln() + alpha * x } else { f64::NEG_INFINITY })
            .collect();
        let m = exps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !m.is_finite() {
            return Err(Error::Domain(format!("tilt at α = {alpha} is not finite")));
        }
        let w: Vec<f64> = exps.iter().map(|e| (e - m).exp()).collect();
        let z: f64 = w.iter().sum();
        let probs: Vec<f64> = w.iter().map(|x| x / z).collect();
        Ok(Self {
            dist: DiscreteDist::new(base.atoms().to_vec(), probs)?,
            alpha,
            log_norm: m + z.ln(),
        })
    }
}

/// `P_α` with `p_α(a) ∝ p(a)e^{αg(a)}`, computed with a max-shift.
pub fn tilt(dist: &DiscreteDist, g: &[f64], alpha: f64) -> Result<DiscreteDist> {
    if alpha == 0.0 {
        if g.len() != dist.len() {
            return Err(Error::InvalidInput(format!("{} atoms but {} values", dist.len(), g.len())));
        }
        return Ok(dist.clone());
    }
    Ok(TiltedMeasure::new(dist, g, alpha)?.dist)
}
