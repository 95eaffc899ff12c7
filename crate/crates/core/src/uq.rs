//! Bounds on the probability of an event `A` under an alternative model `Q`,
//! given only `M = −log P(A)` under the nominal model `P`.
//!
//! All bounds are driven by the CGF of the log-likelihood ratio
//! `H(α) = log E_P[(dQ/dP)^α]` and the geometric interpolation
//! `P_α ∝ p^{1−α} q^α` between `P = P_0` and `Q = P_1`.

use serde::{Deserialize, Serialize};

use crate::cgf::{cgf_discrete, tilt};
use crate::distributions::DiscreteDist;
use crate::error::{Error, Result};
use crate::optimizer::{minimize_bound, Sign};
use crate::renyi::{relative_entropy, renyi_divergence};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UqBoundReport {
    #[serde(rename = "M")]
    pub m: f64,
    /// Lower bound on `log Q(A)`.
    pub lower: f64,
    /// Upper bound on `log Q(A)`.
    pub upper: f64,
    pub upper_is_trivial: bool,
    #[serde(with = "crate::ext_real")]
    pub alpha_minus: f64,
    #[serde(with = "crate::ext_real")]
    pub alpha_plus: f64,
    #[serde(rename = "kl_QP")]
    pub kl_qp: f64,
    /// `R(Q‖P)/M`; the upper bound is trivial exactly when this exceeds 1.
    #[serde(with = "crate::ext_real")]
    pub threshold_ratio: f64,
}

/// `log(q/p)` on the common support, failing unless `P` and `Q` are
/// mutually absolutely continuous.
pub fn log_likelihood_ratio(p: &DiscreteDist, q: &DiscreteDist) -> Result<Vec<f64>> {
    if p.len() != q.len() {
        return Err(Error::InvalidInput("P and Q must share their atoms".into()));
    }
    p.probs()
        .iter()
        .zip(q.probs())
        .map(|(pi, qi)| match (*pi > 0.0, *qi > 0.0) {
            (true, true) => Ok((qi / pi).ln()),
            (false, false) => Ok(0.0),
            _ => Err(Error::Domain("P and Q are not mutually absolutely continuous".into())),
        })
        .collect()
}

/// The geometric interpolation `P_α ∝ p^{1−α} q^α`.
pub fn interpolate(p: &DiscreteDist, q: &DiscreteDist, alpha: f64) -> Result<DiscreteDist> {
    tilt(p, &log_likelihood_ratio(p, q)?, alpha)
}

/// α-indexed bounds on `log Q(A) − log P(A)` for an event with `P(A) = e^{−M}`:
///
/// ```text
/// −(α+1) R_{α+1}(P‖Q) − M/α  ≤  log Q(A) − log P(A)  ≤  α R_{α+1}(Q‖P) + M/(α+1)
/// ```
pub fn raw_bounds(p: &DiscreteDist, q: &DiscreteDist, m: f64, alpha: f64) -> Result<(f64, f64)> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidInput(format!("α = {alpha} must be positive")));
    }
    if !(m >= 0.0) {
        return Err(Error::InvalidInput(format!("M = {m} must be nonnegative")));
    }
    let lower = -(alpha + 1.0) * renyi_divergence(p, q, alpha + 1.0)? - m / alpha;
    let upper = alpha * renyi_divergence(q, p, alpha + 1.0)? + m / (alpha + 1.0);
    Ok((lower, upper))
}

/// `(inf log dQ/dP, sup log dQ/dP)`, bounding `log Q(A) − log P(A)` for every event.
pub fn crude_bounds(p: &DiscreteDist, q: &DiscreteDist) -> Result<(f64, f64)> {
    let g = log_likelihood_ratio(p, q)?;
    let on_support = g.iter().zip(p.probs()).filter(|(_, pi)| **pi > 0.0).map(|(x, _)| *x);
    let lo = on_support.clone().fold(f64::INFINITY, f64::min);
    let hi = on_support.fold(f64::NEG_INFINITY, f64::max);
    Ok((lo, hi))
}

/// Optimized bounds on `log Q(A)` for events with `P(A) = e^{−M}`.
///
/// The lower bound is `−R(P_{−α₋}‖Q)` with `R(P_{−α₋}‖P) = M`. The upper bound
/// is the trivial `0` while `M < R(Q‖P)` and `−R(P_{α₊}‖Q)` with
/// `R(P_{α₊}‖P) = M` otherwise.
pub fn optimal_bounds(p: &DiscreteDist, q: &DiscreteDist, m: f64) -> Result<UqBoundReport> {
    if !(m >= 0.0 && m.is_finite()) {
        return Err(Error::InvalidInput(format!("M = {m} must be finite and nonnegative")));
    }
    let g = log_likelihood_ratio(p, q)?;
    let kl_qp = relative_entropy(q, p);
    let threshold_ratio = if m > 0.0 {
        kl_qp / m
    } else if kl_qp > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let (lo, hi) = crude_bounds(p, q)?;
    if lo == hi {
        return Ok(UqBoundReport {
            m,
            lower: -m,
            upper: -m,
            upper_is_trivial: false,
            alpha_minus: 0.0,
            alpha_plus: 0.0,
            kl_qp,
            threshold_ratio,
        });
    }
    let h = cgf_discrete(p, &g)?;
    let minus = minimize_bound(&h, m, Sign::Minus)?;
    let lower = (-minus.value - m).min(0.0);
    let (upper, upper_is_trivial, alpha_plus) = if m < kl_qp {
        (0.0, true, 1.0)
    } else {
        let plus = minimize_bound(&h, m, Sign::Plus)?;
        ((plus.value - m).min(0.0), false, plus.alpha_star)
    };
    Ok(UqBoundReport {
        m,
        lower,
        upper,
        upper_is_trivial,
        alpha_minus: minus.alpha_star,
        alpha_plus,
        kl_qp,
        threshold_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(p: &[f64]) -> DiscreteDist {
        DiscreteDist::from_probs(p.to_vec()).unwrap()
    }

    #[test]
    fn identical_models_give_exact_answer() {
        let p = d(&[0.2, 0.3, 0.5]);
        let r = optimal_bounds(&p, &p, 1.7).unwrap();
        assert_eq!((r.lower, r.upper), (-1.7, -1.7));
        for a in [0.5, 1.0, 10.0] {
            let (lo, hi) = raw_bounds(&p, &p, 1.7, a).unwrap();
            assert!(lo <= 0.0 && hi >= 0.0);
        }
        assert_eq!(crude_bounds(&p, &p).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn two_point_raw_and_crude() {
        let p = d(&[0.5, 0.5]);
        let q = d(&[0.9, 0.1]);
        let m = 2f64.ln();
        let (lo, hi) = raw_bounds(&p, &q, m, 1.0).unwrap();
        // α = 1: −2 R_2(P‖Q) − M and R_2(Q‖P) + M/2
        let r2_pq = 0.5 * (0.5f64 * (0.5f64 / 0.9).powi(2) * 0.9 / 0.5 + 0.5 * (0.5f64 / 0.1).powi(2) * 0.1 / 0.5).ln();
        let r2_qp = 0.5 * (0.5f64 * 1.8 * 1.8 + 0.5 * 0.2 * 0.2).ln();
        assert!((lo - (-2.0 * r2_pq - m)).abs() < 1e-14);
        assert!((hi - (r2_qp + m / 2.0)).abs() < 1e-14);
        let (clo, chi) = crude_bounds(&p, &q).unwrap();
        assert!((clo - 0.2f64.ln()).abs() < 1e-15 && (chi - 1.8f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn interpolation_endpoints() {
        let p = d(&[0.1, 0.6, 0.3]);
        let q = d(&[0.5, 0.25, 0.25]);
        let p0 = interpolate(&p, &q, 0.0).unwrap();
        let p1 = interpolate(&p, &q, 1.0).unwrap();
        for i in 0..3 {
            assert!((p0.probs()[i] - p.probs()[i]).abs() < 1e-15);
            assert!((p1.probs()[i] - q.probs()[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn threshold_continuity() {
        let p = d(&[0.1, 0.6, 0.3]);
        let q = d(&[0.5, 0.25, 0.25]);
        let kl = relative_entropy(&q, &p);
        let at = optimal_bounds(&p, &q, kl).unwrap();
        assert!(!at.upper_is_trivial);
        assert!((at.alpha_plus - 1.0).abs() < 1e-8);
        assert!(at.upper.abs() < 1e-12);
        let below = optimal_bounds(&p, &q, kl * 0.999).unwrap();
        assert!(below.upper_is_trivial && below.upper == 0.0);
    }

    #[test]
    fn singular_pairs_are_rejected() {
        let p = d(&[1.0, 0.0]);
        let q = d(&[0.5, 0.5]);
        assert!(optimal_bounds(&p, &q, 1.0).is_err());
    }
}
