//! The one-dimensional problem `inf_{α>0} (H(α)+M)/α`, its Legendre dual and
//! the small-`M` linearization.
//!
//! With `φ(α) = αH'(α) − H(α)` strictly increasing from 0, the infimum is at
//! the root of `φ(α) = M` when `M < M₊ = lim_{α↑d₊} φ(α)`, and the value there
//! is `H'(α*)`. For `M ≥ M₊` the infimum sits at the right end of the domain:
//! `(H(d₊)+M)/d₊` when `d₊` is finite, and `ess sup g` otherwise.

use serde::{Deserialize, Serialize};

use crate::cgf::{tilt, CgfHandle};
use crate::distributions::DiscreteDist;
use crate::error::{Error, Result};
use crate::numeric::bisect_increasing;
use crate::renyi::relative_entropy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundCase {
    ZeroM,
    Interior,
    DomainBoundary,
    EssSupPlateau,
}

/// Solution of `inf_{α>0} (H(±α)+M)/α`.
///
/// `value` is the infimum itself; the signed index is [`BoundResult::index`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub sign: Sign,
    #[serde(with = "crate::ext_real")]
    pub value: f64,
    #[serde(with = "crate::ext_real")]
    pub alpha_star: f64,
    pub case: BoundCase,
    /// `R(P_{α*} ‖ P)`.
    #[serde(with = "crate::ext_real")]
    pub kl_at_optimum: f64,
    /// `M₊` for this sign: the largest `M` with an interior minimizer.
    #[serde(with = "crate::ext_real")]
    pub m_threshold: f64,
    /// Set when `α*` lies outside the range where the CGF is trusted.
    pub flagged: bool,
}

impl BoundResult {
    /// `±value`, i.e. `I+(M)` or `I−(M)`.
    pub fn index(&self) -> f64 {
        self.sign.factor() * self.value
    }
}

/// `inf_{α>0} (H(±α)+M)/α` with the full case analysis.
pub fn minimize_bound(h: &CgfHandle, m: f64, sign: Sign) -> Result<BoundResult> {
    if !(m >= 0.0) {
        return Err(Error::InvalidInput(format!("M = {m} must be nonnegative")));
    }
    let h = match sign {
        Sign::Plus => h.clone(),
        Sign::Minus => h.reflect(),
    };
    if let Some((lo, hi)) = h.ess_bounds() {
        if lo == hi {
            return Err(Error::ConstantObservable);
        }
    }
    if !(h.deriv2(0.0) > 0.0) {
        return Err(Error::ConstantObservable);
    }
    let limits = upper_threshold(&h);
    let m_plus = limits.gap;
    let mut res = BoundResult {
        sign,
        value: h.mean(),
        alpha_star: 0.0,
        case: BoundCase::ZeroM,
        kl_at_optimum: 0.0,
        m_threshold: m_plus,
        flagged: false,
    };
    if m == 0.0 {
        return Ok(res);
    }
    let d = h.domain().upper;
    if m >= m_plus {
        res.kl_at_optimum = m_plus;
        if d.is_finite() {
            res.case = BoundCase::DomainBoundary;
            res.alpha_star = d;
            res.value = (limits.value + m) / d;
        } else {
            res.case = BoundCase::EssSupPlateau;
            res.alpha_star = f64::INFINITY;
            res.value = limits.slope;
        }
    } else {
        let alpha = solve_gap(&h, m, d)?;
        res.case = BoundCase::Interior;
        res.alpha_star = alpha;
        res.value = h.deriv1(alpha);
        res.kl_at_optimum = h.tilt_gap(alpha);
    }
    if let Some((_, t)) = h.trust_interval() {
        res.flagged = res.alpha_star > t;
    }
    Ok(res)
}

/// Root of `αH'(α) − H(α) = M` on `(0, d₊)`, assuming `0 < M < M₊`.
fn solve_gap(h: &CgfHandle, m: f64, d: f64) -> Result<f64> {
    let next = |a: f64| if d.is_finite() { 0.5 * (a + d) } else { 2.0 * a };
    let mut lo = 0.0;
    let mut hi = if d.is_finite() { d.min(2.0) * 0.5 } else { 1.0 };
    let mut gap = h.tilt_gap(hi);
    let mut steps = 0;
    while gap < m {
        lo = hi;
        hi = next(hi);
        gap = h.tilt_gap(hi);
        steps += 1;
        if steps > 3000 || hi == lo {
            return Err(Error::NonConvergence { iterations: steps, residual: m - gap });
        }
    }
    Ok(bisect_increasing(|a| h.tilt_gap(a) - m, lo, hi))
}

/// Values of `H`, `H'` and `φ = αH' − H` at the right end of the domain.
struct Edge {
    value: f64,
    slope: f64,
    gap: f64,
}

fn upper_threshold(h: &CgfHandle) -> Edge {
    const INF: f64 = f64::INFINITY;
    let d = h.domain().upper;
    if d.is_finite() {
        let (hv, dv) = h.upper_limits().expect("finite edge");
        let gap = if hv.is_finite() && dv.is_finite() { d * dv - hv } else { INF };
        return Edge { value: hv, slope: dv, gap };
    }
    if let Some((slope, gap)) = h.asymptote() {
        return Edge { value: INF, slope, gap };
    }
    match (h.ess_bounds(), h.extreme_masses()) {
        (Some((_, sup)), _) if sup == INF => Edge { value: INF, slope: INF, gap: INF },
        (Some((_, sup)), Some((_, mass))) => Edge {
            value: INF,
            slope: sup,
            gap: if mass > 0.0 { -mass.ln() } else { INF },
        },
        _ => scan_plateau(h),
    }
}

/// Numerical `lim φ(α)` and `lim H'(α)` for `α → ∞` when nothing is known
/// about the range of `g`.
fn scan_plateau(h: &CgfHandle) -> Edge {
    let mut prev: Option<(f64, f64)> = None;
    let mut settled = 0;
    let mut a = 1.0;
    for _ in 0..60 {
        let gap = h.tilt_gap(a);
        let slope = h.deriv1(a);
        if !gap.is_finite() || !slope.is_finite() {
            break;
        }
        if let Some((pg, ps)) = prev {
            if (gap - pg).abs() <= 1e-12 * gap.abs().max(1.0) && (slope - ps).abs() <= 1e-12 * slope.abs().max(1.0) {
                settled += 1;
                if settled >= 2 {
                    return Edge { value: f64::INFINITY, slope, gap };
                }
            } else {
                settled = 0;
            }
        }
        prev = Some((gap, slope));
        a *= 2.0;
    }
    Edge { value: f64::INFINITY, slope: f64::INFINITY, gap: f64::INFINITY }
}

/// Solves `R(P_α ‖ P) = M` directly on the exactly computed relative entropy
/// of the tilted measure `P_α ∝ P e^{±αg}`, independently of any CGF code.
pub fn solve_by_kl(base: &DiscreteDist, g: &[f64], m: f64, sign: Sign) -> Result<BoundResult> {
    if g.len() != base.len() {
        return Err(Error::InvalidInput(format!("{} atoms but {} values", base.len(), g.len())));
    }
    if !(m >= 0.0) {
        return Err(Error::InvalidInput(format!("M = {m} must be nonnegative")));
    }
    let gs: Vec<f64> = g.iter().map(|x| sign.factor() * x).collect();
    let support: Vec<usize> = (0..g.len()).filter(|&i| base.probs()[i] > 0.0).collect();
    let sup = support.iter().map(|&i| gs[i]).fold(f64::NEG_INFINITY, f64::max);
    let inf = support.iter().map(|&i| gs[i]).fold(f64::INFINITY, f64::min);
    if sup == inf {
        return Err(Error::ConstantObservable);
    }
    let top: f64 = support.iter().filter(|&&i| gs[i] == sup).map(|&i| base.probs()[i]).sum();
    let m_plus = -top.ln();
    let mean = base.expect(&gs);
    let mut res = BoundResult {
        sign,
        value: mean,
        alpha_star: 0.0,
        case: BoundCase::ZeroM,
        kl_at_optimum: 0.0,
        m_threshold: m_plus,
        flagged: false,
    };
    if m == 0.0 {
        return Ok(res);
    }
    if m >= m_plus {
        return Err(Error::NoFiniteRoot { target: m, threshold: m_plus });
    }
    let kl = |a: f64| -> f64 {
        match tilt(base, &gs, a) {
            Ok(t) => relative_entropy(&t, base),
            Err(_) => f64::INFINITY,
        }
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut steps = 0;
    while kl(hi) < m {
        lo = hi;
        hi *= 2.0;
        steps += 1;
        if steps > 1100 {
            return Err(Error::NonConvergence { iterations: steps, residual: m - kl(hi) });
        }
    }
    let alpha = bisect_increasing(|a| kl(a) - m, lo, hi);
    let tilted = tilt(base, &gs, alpha)?;
    res.case = BoundCase::Interior;
    res.alpha_star = alpha;
    res.value = tilted.expect(&gs);
    res.kl_at_optimum = kl(alpha);
    Ok(res)
}

/// `L(δ) = sup_α {αδ − H(α)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegendreResult {
    pub delta: f64,
    #[serde(with = "crate::ext_real")]
    pub value: f64,
    #[serde(with = "crate::ext_real")]
    pub argmax_alpha: f64,
    /// False when `δ` lies outside the closure of the range of `H'`; the
    /// value is then `+∞`.
    pub attainable: bool,
}

pub fn legendre(h: &CgfHandle, delta: f64) -> Result<LegendreResult> {
    if !delta.is_finite() {
        return Err(Error::InvalidInput(format!("δ = {delta} must be finite")));
    }
    let mean = h.mean();
    if delta == mean {
        return Ok(LegendreResult { delta, value: 0.0, argmax_alpha: 0.0, attainable: true });
    }
    if delta < mean {
        let r = legendre_right(&h.reflect(), -delta);
        return Ok(LegendreResult { delta, argmax_alpha: -r.argmax_alpha, ..r });
    }
    Ok(legendre_right(h, delta))
}

/// `L(δ)` for `δ > H'(0)`, where the maximizer is at `α ≥ 0`.
fn legendre_right(h: &CgfHandle, delta: f64) -> LegendreResult {
    let unattainable = LegendreResult { delta, value: f64::INFINITY, argmax_alpha: f64::INFINITY, attainable: false };
    let d = h.domain().upper;
    if !d.is_finite() {
        let edge = upper_threshold(h);
        if delta > edge.slope {
            return unattainable;
        }
        if delta == edge.slope {
            return LegendreResult { delta, value: edge.gap, argmax_alpha: f64::INFINITY, attainable: edge.gap.is_finite() };
        }
    }
    if d.is_finite() {
        let (hd, dd) = h.upper_limits().expect("finite edge");
        if dd <= delta {
            let value = d * delta - hd;
            return LegendreResult { delta, value, argmax_alpha: d, attainable: value.is_finite() };
        }
    }
    let next = |a: f64| if d.is_finite() { 0.5 * (a + d) } else { 2.0 * a };
    let mut lo = 0.0;
    let mut hi = if d.is_finite() { d.min(2.0) * 0.5 } else { 1.0 };
    let mut steps = 0;
    while h.deriv1(hi) < delta {
        lo = hi;
        hi = next(hi);
        steps += 1;
        if steps > 2000 || hi == lo || hi > 1e300 {
            return unattainable;
        }
    }
    let alpha = bisect_increasing(|a| h.deriv1(a) - delta, lo, hi);
    LegendreResult { delta, value: (alpha * delta - h.eval(alpha)).max(0.0), argmax_alpha: alpha, attainable: true }
}

/// Leading term `√(2·Var·M)` of the bound for a centered observable.
pub fn linearized_value(variance: f64, m: f64) -> Result<f64> {
    if !(variance > 0.0) {
        return Err(Error::InvalidInput(format!("variance {variance} must be positive")));
    }
    if !(m >= 0.0) {
        return Err(Error::InvalidInput(format!("M = {m} must be nonnegative")));
    }
    Ok((2.0 * variance * m).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cgf::{cgf_discrete, cgf_expfam};
    use crate::distributions::ExpFamModel;

    fn two_point() -> (DiscreteDist, Vec<f64>) {
        (DiscreteDist::from_probs(vec![0.5, 0.5]).unwrap(), vec![1.0, -1.0])
    }

    fn grid_min(h: &CgfHandle, m: f64, hi: f64) -> f64 {
        (1..=200_000)
            .map(|i| hi * i as f64 / 200_000.0)
            .map(|a| (h.eval(a) + m) / a)
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn unit_gaussian_interior() {
        let h = cgf_expfam(&ExpFamModel::gaussian(0.0, 1.0).unwrap(), &[1.0]).unwrap();
        let r = minimize_bound(&h, 2.0, Sign::Plus).unwrap();
        assert_eq!(r.case, BoundCase::Interior);
        assert!((r.alpha_star - 2.0).abs() < 1e-12);
        assert!((r.value - 2.0).abs() < 1e-12);
        assert!((r.value - linearized_value(1.0, 2.0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn zero_m_returns_mean() {
        let h = cgf_expfam(&ExpFamModel::poisson(3.0).unwrap(), &[1.0]).unwrap();
        let r = minimize_bound(&h, 0.0, Sign::Plus).unwrap();
        assert_eq!(r.case, BoundCase::ZeroM);
        assert_eq!(r.alpha_star, 0.0);
        assert!(r.value.abs() < 1e-12);
    }

    #[test]
    fn two_point_plateau() {
        let (d, g) = two_point();
        let h = cgf_discrete(&d, &g).unwrap();
        let r = minimize_bound(&h, 10.0, Sign::Plus).unwrap();
        assert_eq!(r.case, BoundCase::EssSupPlateau);
        assert_eq!(r.value, 1.0);
        assert!((r.m_threshold - 2f64.ln()).abs() < 1e-15);
        let grid = grid_min(&h, 10.0, 1e6);
        assert!(grid >= r.value && grid - r.value < 1e-4);
    }

    #[test]
    fn laplace_interior_everywhere() {
        let h = cgf_expfam(&ExpFamModel::laplace(-1.0).unwrap(), &[1.0]).unwrap();
        let r = minimize_bound(&h, 50.0, Sign::Plus).unwrap();
        assert_eq!(r.case, BoundCase::Interior);
        assert_eq!(r.m_threshold, f64::INFINITY);
        assert!(r.alpha_star < 1.0);
    }

    #[test]
    fn poisson_minus_side_plateaus_at_zero_count() {
        // −W = λ − x ≤ λ with P(x = 0) = e^{−λ}
        let h = cgf_expfam(&ExpFamModel::poisson(2.0).unwrap(), &[1.0]).unwrap();
        let r = minimize_bound(&h, 3.0, Sign::Minus).unwrap();
        assert_eq!(r.case, BoundCase::EssSupPlateau);
        assert!((r.m_threshold - 2.0).abs() < 1e-12);
        assert!((r.index() + 2.0).abs() < 1e-12);
    }

    #[test]
    fn constant_observable_is_rejected() {
        let h = cgf_discrete(&DiscreteDist::from_probs(vec![0.5, 0.5]).unwrap(), &[2.0, 2.0]).unwrap();
        assert_eq!(minimize_bound(&h, 1.0, Sign::Plus).unwrap_err(), Error::ConstantObservable);
    }

    #[test]
    fn kl_path_agrees_on_two_point() {
        let (d, g) = two_point();
        let h = cgf_discrete(&d, &g).unwrap();
        for m in [0.1, 0.5, 0.69] {
            let a = minimize_bound(&h, m, Sign::Plus).unwrap();
            let b = solve_by_kl(&d, &g, m, Sign::Plus).unwrap();
            assert!((a.value - b.value).abs() < 1e-8, "M = {m}");
            assert!((a.alpha_star - b.alpha_star).abs() < 1e-6 * a.alpha_star.max(1.0));
        }
        assert_eq!(solve_by_kl(&d, &g, 0.0, Sign::Plus).unwrap().alpha_star, 0.0);
        let err = solve_by_kl(&d, &g, 1.0, Sign::Plus).unwrap_err();
        assert!(matches!(err, Error::NoFiniteRoot { threshold, .. } if (threshold - 2f64.ln()).abs() < 1e-15));
    }

    #[test]
    fn legendre_examples() {
        let h = cgf_expfam(&ExpFamModel::gaussian(0.0, 1.0).unwrap(), &[1.0]).unwrap();
        let r = legendre(&h, 1.0).unwrap();
        assert!((r.value - 0.5).abs() < 1e-12 && (r.argmax_alpha - 1.0).abs() < 1e-12);
        assert_eq!(legendre(&h, 0.0).unwrap().value, 0.0);

        let (d, g) = two_point();
        let h = cgf_discrete(&d, &g).unwrap();
        let r = legendre(&h, 0.5).unwrap();
        let grid = (0..=400_000)
            .map(|i| i as f64 * 1e-5)
            .map(|a| a * 0.5 - h.eval(a))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((r.value - grid).abs() < 1e-9);
        assert!(!legendre(&h, 1.5).unwrap().attainable);
        assert!((legendre(&h, 1.0).unwrap().value - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn linearized_examples() {
        assert_eq!(linearized_value(1.0, 0.0).unwrap(), 0.0);
        assert_eq!(linearized_value(1.0, 2.0).unwrap(), 2.0);
        assert!(linearized_value(0.0, 1.0).is_err());
    }
}
