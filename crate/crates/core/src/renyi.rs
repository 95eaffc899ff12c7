//! Rényi divergences, relative entropy and worst-case regret between finite
//! distributions, plus the slack of the Rényi variational inequality.
//!
//! Orders follow the `1/(α(α−1))` normalization:
//! `R_α(Q‖P) = (1/(α(α−1))) log Σ q^α p^{1−α}`, so that `R_α → R` as `α → 1`
//! and `R_α(Q‖P) = R_{1−α}(P‖Q)`.

use serde::{Deserialize, Serialize};

use crate::distributions::DiscreteDist;
use crate::error::{Error, Result};
use crate::numeric::log_sum_exp;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Divergence {
    Renyi { order: f64 },
    Kl,
    WorstCaseRegret,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceValue {
    pub kind: Divergence,
    #[serde(with = "crate::ext_real")]
    pub value: f64,
}

pub fn divergence(kind: Divergence, q: &DiscreteDist, p: &DiscreteDist) -> Result<DivergenceValue> {
    let value = match kind {
        Divergence::Renyi { order } => renyi_divergence(q, p, order)?,
        Divergence::Kl => relative_entropy(q, p),
        Divergence::WorstCaseRegret => worst_case_regret(q, p),
    };
    Ok(DivergenceValue { kind, value })
}

fn pairs<'a>(q: &'a DiscreteDist, p: &'a DiscreteDist) -> impl Iterator<Item = (f64, f64)> + Clone + 'a {
    assert_eq!(q.len(), p.len(), "distributions must share their atoms");
    q.probs().iter().cloned().zip(p.probs().iter().cloned())
}

/// `R_α(Q‖P)`; `+∞` when the required absolute continuity fails.
pub fn renyi_divergence(q: &DiscreteDist, p: &DiscreteDist, order: f64) -> Result<f64> {
    if order == 0.0 || order == 1.0 || !order.is_finite() {
        return Err(Error::InvalidInput(format!("Rényi order {order} must be finite and differ from 0 and 1")));
    }
    if q.len() != p.len() {
        return Err(Error::InvalidInput("distributions must share their atoms".into()));
    }
    let q_not_ac = pairs(q, p).any(|(qi, pi)| qi > 0.0 && pi == 0.0);
    let p_not_ac = pairs(q, p).any(|(qi, pi)| pi > 0.0 && qi == 0.0);
    if (order > 1.0 && q_not_ac) || (order < 0.0 && (q_not_ac || p_not_ac)) {
        return Ok(f64::INFINITY);
    }
    let terms = pairs(q, p)
        .filter(|(qi, pi)| *qi > 0.0 && *pi > 0.0)
        .map(move |(qi, pi)| order * qi.ln() + (1.0 - order) * pi.ln());
    let log_moment = log_sum_exp(terms);
    let r = log_moment / (order * (order - 1.0));
    // rounding can leave a tiny negative value where the divergence vanishes
    Ok(if r < 0.0 && r > -1e-15 { 0.0 } else { r })
}

/// `R(Q‖P) = Σ q log(q/p)`, `+∞` unless `Q ≪ P`.
pub fn relative_entropy(q: &DiscreteDist, p: &DiscreteDist) -> f64 {
    let mut acc = 0.0;
    for (qi, pi) in pairs(q, p) {
        if qi > 0.0 {
            if pi == 0.0 {
                return f64::INFINITY;
            }
            acc += qi * (qi / pi).ln();
        }
    }
    acc.max(0.0)
}

/// `D_∞(Q‖P) = max log(q/p)` over atoms charged by `Q`.
pub fn worst_case_regret(q: &DiscreteDist, p: &DiscreteDist) -> f64 {
    pairs(q, p)
        .filter(|(qi, _)| *qi > 0.0)
        .map(|(qi, pi)| if pi == 0.0 { f64::INFINITY } else { (qi / pi).ln() })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn log_mgf(d: &DiscreteDist, f: &[f64], t: f64) -> f64 {
    log_sum_exp(
        d.probs()
            .iter()
            .zip(f)
            .filter(|(p, _)| **p > 0.0)
            .map(|(p, x)| p.ln() + t * x)
            .collect::<Vec<_>>(),
    )
}

/// Slack of the Rényi variational inequality
///
/// ```text
/// (1/γ) log E_P[e^{γf}] + (1/(γ−β)) R_{γ/(γ−β)}(Q‖P) − (1/β) log E_Q[e^{βf}] ≥ 0
/// ```
///
/// for `β < γ`, both nonzero.
pub fn variational_gap(q: &DiscreteDist, p: &DiscreteDist, f: &[f64], beta: f64, gamma: f64) -> Result<f64> {
    if !(beta < gamma) || beta == 0.0 || gamma == 0.0 {
        return Err(Error::InvalidInput(format!("need β < γ with both nonzero, got β = {beta}, γ = {gamma}")));
    }
    if f.len() != p.len() || q.len() != p.len() {
        return Err(Error::InvalidInput("f, Q and P must share their atoms".into()));
    }
    let order = gamma / (gamma - beta);
    let r = renyi_divergence(q, p, order)?;
    Ok(log_mgf(p, f, gamma) / gamma + r / (gamma - beta) - log_mgf(q, f, beta) / beta)
}

/// Donsker–Varadhan slack `log E_P[e^f] − E_Q[f] + R(Q‖P) ≥ 0`, the
/// `β → 0`, `γ = 1` limit of [`variational_gap`].
pub fn donsker_varadhan_gap(q: &DiscreteDist, p: &DiscreteDist, f: &[f64]) -> f64 {
    log_mgf(p, f, 1.0) - q.expect(f) + relative_entropy(q, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(p: &[f64]) -> DiscreteDist {
        DiscreteDist::from_probs(p.to_vec()).unwrap()
    }

    #[test]
    fn renyi_examples() {
        let p = d(&[0.5, 0.5]);
        let q = d(&[0.9, 0.1]);
        assert_eq!(renyi_divergence(&p, &p, 2.0).unwrap(), 0.0);
        let want = 0.5 * (0.5f64 * 1.8 * 1.8 + 0.5 * 0.2 * 0.2).ln();
        assert!((renyi_divergence(&q, &p, 2.0).unwrap() - want).abs() < 1e-15);
        assert!((0.5f64 * 1.64f64.ln() - want).abs() < 1e-15);
        assert!(renyi_divergence(&q, &p, 1.0).is_err());
        assert!(renyi_divergence(&q, &p, 0.0).is_err());
    }

    #[test]
    fn absolute_continuity_violations_give_infinity() {
        let p = d(&[1.0, 0.0]);
        let q = d(&[0.5, 0.5]);
        assert_eq!(renyi_divergence(&q, &p, 2.0).unwrap(), f64::INFINITY);
        assert_eq!(renyi_divergence(&p, &q, -1.0).unwrap(), f64::INFINITY);
        assert!(renyi_divergence(&q, &p, 0.5).unwrap().is_finite());
        assert_eq!(relative_entropy(&q, &p), f64::INFINITY);
        assert_eq!(worst_case_regret(&q, &p), f64::INFINITY);
    }

    #[test]
    fn relative_entropy_examples() {
        let p = d(&[0.5, 0.5]);
        assert_eq!(relative_entropy(&p, &p), 0.0);
        assert!((relative_entropy(&d(&[1.0, 0.0]), &p) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn worst_case_regret_examples() {
        let p = d(&[0.5, 0.5]);
        assert_eq!(worst_case_regret(&p, &p), 0.0);
        assert!((worst_case_regret(&d(&[0.9, 0.1]), &p) - 1.8f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn order_continuity_at_one() {
        let p = d(&[0.2, 0.3, 0.5]);
        let q = d(&[0.4, 0.4, 0.2]);
        let kl = relative_entropy(&q, &p);
        for a in [0.999, 1.001] {
            assert!((renyi_divergence(&q, &p, a).unwrap() - kl).abs() < 1e-3);
        }
        for a in [0.999_99, 1.000_01] {
            assert!((renyi_divergence(&q, &p, a).unwrap() - kl).abs() < 1e-6);
        }
    }

    #[test]
    fn variational_gap_trivial_and_limit() {
        let p = d(&[0.2, 0.3, 0.5]);
        assert!(variational_gap(&p, &p, &[0.0; 3], 1.0, 2.0).unwrap().abs() < 1e-15);
        let q = d(&[0.4, 0.4, 0.2]);
        let f = [0.3, -1.2, 2.0];
        let dv = donsker_varadhan_gap(&q, &p, &f);
        assert!(dv >= 0.0);
        let near = variational_gap(&q, &p, &f, 1e-7, 1.0).unwrap();
        assert!((near - dv).abs() < 1e-5);
        assert!(variational_gap(&q, &p, &f, 2.0, 1.0).is_err());
    }
}
