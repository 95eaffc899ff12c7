//! Rare-event sensitivity indices and the quantities they are compared with.
//!
//! For an event `A` with `P(A) ≥ e^{−M}`, the gradient index
//! `S_v(A) = v·∇_θ log P^θ(A) = E[vᵀW | A]` satisfies
//! `I−(M) ≤ S_v(A) ≤ I+(M)`. The indices come from the score CGF through
//! [`minimize_bound`]; the concentration surrogates replace that CGF by an
//! upper bound that only needs `sup vᵀW` and `Var(vᵀW)`.

use serde::{Deserialize, Serialize};

use crate::cgf::{cgf_discrete, cgf_expfam, tilt, CgfHandle};
use crate::distributions::{exact_conditional_score_mean, DiscreteDist, ExpFamModel};
use crate::error::{Error, Result};
use crate::numeric::dot;
use crate::optimizer::{linearized_value, minimize_bound, BoundCase, BoundResult, Sign};

/// Tolerance between the variational value and the tilted-mean recomputation.
pub const SELF_CHECK_TOLERANCE: f64 = 1e-6;

/// A parametric model together with its score.
#[derive(Debug, Clone)]
pub enum ScoreModel {
    ExpFam(ExpFamModel),
    /// Finite model with one score vector per atom.
    Discrete { dist: DiscreteDist, scores: Vec<Vec<f64>> },
}

impl ScoreModel {
    pub fn discrete(dist: DiscreteDist, scores: Vec<Vec<f64>>) -> Result<Self> {
        if scores.len() != dist.len() {
            return Err(Error::InvalidInput(format!("{} atoms but {} score vectors", dist.len(), scores.len())));
        }
        let k = scores.first().map_or(0, Vec::len);
        if k == 0 || scores.iter().any(|s| s.len() != k) {
            return Err(Error::InvalidInput("score vectors must share one positive dimension".into()));
        }
        Ok(Self::Discrete { dist, scores })
    }

    pub fn dim(&self) -> usize {
        match self {
            ScoreModel::ExpFam(m) => m.dim(),
            ScoreModel::Discrete { scores, .. } => scores[0].len(),
        }
    }

    fn check_direction(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::InvalidInput(format!("direction has {} entries, model has {} parameters", v.len(), self.dim())));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("direction must be finite".into()));
        }
        Ok(())
    }

    /// Per-atom `vᵀW` for finite models.
    fn projected(scores: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
        scores.iter().map(|s| dot(v, s)).collect()
    }

    /// CGF of `vᵀW`.
    pub fn score_cgf(&self, v: &[f64]) -> Result<CgfHandle> {
        self.check_direction(v)?;
        match self {
            ScoreModel::ExpFam(m) => cgf_expfam(m, v),
            ScoreModel::Discrete { dist, scores } => cgf_discrete(dist, &Self::projected(scores, v)),
        }
    }

    /// `vᵀ F v`, the variance of `vᵀW`.
    pub fn fisher_quadratic(&self, v: &[f64]) -> Result<f64> {
        self.check_direction(v)?;
        match self {
            ScoreModel::ExpFam(m) => m.fisher_quadratic(v),
            ScoreModel::Discrete { dist, scores } => Ok(dist.variance(&Self::projected(scores, v))),
        }
    }

    /// `E_{P_α}[vᵀW]` under the tilted measure `dP_α ∝ e^{α vᵀW} dP`, computed
    /// without the CGF: as a natural-parameter shift for exponential families
    /// and by explicit reweighting for finite models.
    pub fn tilted_score_mean(&self, v: &[f64], alpha: f64) -> Result<f64> {
        match self {
            ScoreModel::ExpFam(m) => {
                let shifted: Vec<f64> = m.theta().iter().zip(v).map(|(t, d)| t + alpha * d).collect();
                if !m.in_domain(&shifted) {
                    return Err(Error::Domain(format!("θ + αv leaves the natural domain at α = {alpha}")));
                }
                let now = m.grad_log_normalizer(&shifted);
                let base = m.mean_statistic();
                Ok(dot(v, &now) - dot(v, &base))
            }
            ScoreModel::Discrete { dist, scores } => {
                let g = Self::projected(scores, v);
                Ok(tilt(dist, &g, alpha)?.expect(&g))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    #[serde(rename = "M")]
    pub m: f64,
    pub v: Vec<f64>,
    pub index_minus: f64,
    pub index_plus: f64,
    #[serde(with = "crate::ext_real")]
    pub alpha_minus: f64,
    #[serde(with = "crate::ext_real")]
    pub alpha_plus: f64,
    pub case_minus: BoundCase,
    pub case_plus: BoundCase,
    /// Tilted means of `vᵀW` at `−α₋` and `α₊`; `NaN` where `α` is infinite.
    #[serde(with = "crate::ext_real::pair")]
    pub tilted_mean_check: (f64, f64),
    /// Set when the self-check disagrees or an optimizer result is untrusted.
    pub flagged: bool,
}

/// `I±(M)` for direction `v`.
pub fn sensitivity_indices(model: &ScoreModel, v: &[f64], m: f64) -> Result<SensitivityReport> {
    if !(model.fisher_quadratic(v)? > 0.0) {
        return Err(Error::DegenerateDirection);
    }
    let h = model.score_cgf(v)?;
    let plus = minimize_bound(&h, m, Sign::Plus)?;
    let minus = minimize_bound(&h, m, Sign::Minus)?;
    let check = |r: &BoundResult| -> Result<f64> {
        if r.alpha_star.is_finite() {
            model.tilted_score_mean(v, r.sign.factor() * r.alpha_star)
        } else {
            Ok(f64::NAN)
        }
    };
    let (cm, cp) = (check(&minus)?, check(&plus)?);
    let disagrees = |r: &BoundResult, c: f64| {
        matches!(r.case, BoundCase::Interior | BoundCase::ZeroM) && (r.index() - c).abs() > SELF_CHECK_TOLERANCE
    };
    Ok(SensitivityReport {
        m,
        v: v.to_vec(),
        index_minus: minus.index(),
        index_plus: plus.index(),
        alpha_minus: minus.alpha_star,
        alpha_plus: plus.alpha_star,
        case_minus: minus.case,
        case_plus: plus.case,
        tilted_mean_check: (cm, cp),
        flagged: disagrees(&minus, cm) || disagrees(&plus, cp) || minus.flagged || plus.flagged,
    })
}

/// Exact `S_v(A) = E[vᵀW | A]` on a finite model.
pub fn exact_index(dist: &DiscreteDist, scores: &[Vec<f64>], event: &[usize], v: &[f64]) -> Result<f64> {
    exact_conditional_score_mean(dist, scores, event, v)
}

/// `√((1−P(A))/P(A))·√(vᵀFv)`, the Cauchy–Schwarz bound on `|S_v(A)|`.
pub fn cramer_rao_baseline(fisher_quad: f64, p_a: f64) -> Result<f64> {
    if !(p_a > 0.0 && p_a < 1.0) {
        return Err(Error::Domain(format!("P(A) = {p_a} must lie strictly between 0 and 1")));
    }
    if !(fisher_quad >= 0.0) {
        return Err(Error::InvalidInput(format!("Fisher quadratic form {fisher_quad} must be nonnegative")));
    }
    Ok(((1.0 - p_a) / p_a).sqrt() * fisher_quad.sqrt())
}

/// Upper bound `b` on `vᵀW` and variance proxy `σ²` for the concentration surrogates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationParams {
    pub b_v: f64,
    pub sigma2_v: f64,
}

impl ConcentrationParams {
    pub fn new(b_v: f64, sigma2_v: f64) -> Result<Self> {
        if !(b_v > 0.0 && b_v.is_finite()) {
            return Err(Error::InvalidInput(format!("score bound b = {b_v} must be positive and finite")));
        }
        if !(sigma2_v > 0.0 && sigma2_v.is_finite()) {
            return Err(Error::InvalidInput(format!("variance proxy {sigma2_v} must be positive and finite")));
        }
        Ok(Self { b_v, sigma2_v })
    }

    /// `b = ess sup vᵀW`, `σ² = vᵀFv`; fails when the score is unbounded above.
    pub fn for_model(model: &ScoreModel, v: &[f64]) -> Result<Self> {
        let h = model.score_cgf(v)?;
        let b = match h.ess_bounds() {
            Some((_, hi)) if hi.is_finite() => hi,
            _ => return Err(Error::UnboundedScore),
        };
        Self::new(b, model.fisher_quadratic(v)?)
    }

    /// The extremal two-point law behind Bennett's inequality: mean 0,
    /// variance `σ²`, values `−σ²/b` and `b`.
    pub fn bennett_law(&self) -> Result<(DiscreteDist, Vec<f64>)> {
        let (b, s2) = (self.b_v, self.sigma2_v);
        let total = b * b + s2;
        let dist = DiscreteDist::new(vec![-s2 / b, b], vec![b * b / total, s2 / total])?;
        Ok((dist, vec![-s2 / b, b]))
    }
}

/// `b·M + √(2σ²M)`.
pub fn bernstein_bound(params: &ConcentrationParams, m: f64) -> Result<f64> {
    if !(m >= 0.0) {
        return Err(Error::InvalidInput(format!("M = {m} must be nonnegative")));
    }
    Ok(params.b_v * m + (2.0 * params.sigma2_v * m).sqrt())
}

/// `inf_{α>0} (H_b(α) + M)/α` for Bennett's CGF majorant
/// `H_b(α) = log(b²/(b²+σ²)·e^{−ασ²/b} + σ²/(b²+σ²)·e^{αb})`.
pub fn bennett_bound(params: &ConcentrationParams, m: f64) -> Result<f64> {
    let (dist, g) = params.bennett_law()?;
    let h = cgf_discrete(&dist, &g)?;
    Ok(minimize_bound(&h, m, Sign::Plus)?.value)
}

/// `√(2·vᵀFv·M)`, the leading small-`M` term of both indices.
pub fn linearized_index(fisher_quad: f64, m: f64) -> Result<f64> {
    linearized_value(fisher_quad, m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_m_gives_zero_indices() {
        let r = sensitivity_indices(&ScoreModel::ExpFam(ExpFamModel::poisson(2.0).unwrap()), &[1.0], 0.0).unwrap();
        assert!(r.index_plus.abs() < 1e-15 && r.index_minus.abs() < 1e-15);
    }

    #[test]
    fn gaussian_indices() {
        for sigma2 in [0.25, 1.0, 4.0] {
            let m = ScoreModel::ExpFam(ExpFamModel::gaussian(0.3, sigma2).unwrap());
            let r = sensitivity_indices(&m, &[1.0], 2.0).unwrap();
            let want = sigma2.sqrt() * 2.0;
            assert!((r.index_plus - want).abs() < 1e-9);
            assert!((r.index_minus + want).abs() < 1e-9);
            assert!((r.alpha_plus - 2.0 / sigma2.sqrt()).abs() < 1e-9);
            assert!(!r.flagged);
        }
    }

    #[test]
    fn bernoulli_index_is_mean_parameter_shift() {
        let model = ExpFamModel::bernoulli(0.5).unwrap();
        let r = sensitivity_indices(&ScoreModel::ExpFam(model.clone()), &[1.0], 0.05).unwrap();
        assert_eq!(r.case_plus, BoundCase::Interior);
        let shift = crate::numeric::sigmoid(r.alpha_plus) - 0.5;
        assert!((r.index_plus - shift).abs() < 1e-12);
        assert!((r.tilted_mean_check.1 - r.index_plus).abs() < 1e-12);
    }

    #[test]
    fn zero_direction_is_degenerate() {
        let m = ScoreModel::ExpFam(ExpFamModel::gaussian(0.0, 1.0).unwrap());
        assert_eq!(sensitivity_indices(&m, &[0.0], 1.0).unwrap_err(), Error::DegenerateDirection);
    }

    #[test]
    fn exact_index_of_full_space_is_zero() {
        let fam = crate::distributions::FiniteExpFamily::product_bernoulli(3).unwrap();
        let d = fam.dist_at(&[0.4]).unwrap();
        let s = fam.scores_at(&[0.4]).unwrap();
        let all: Vec<usize> = (0..8).collect();
        assert!(exact_index(&d, &s, &all, &[1.0]).unwrap().abs() < 1e-14);
    }

    #[test]
    fn cramer_rao_examples() {
        assert!((cramer_rao_baseline(1.0, 0.5).unwrap() - 1.0).abs() < 1e-15);
        let p = (-8f64).exp();
        assert!((cramer_rao_baseline(1.0, p).unwrap() - ((1.0 - p) / p).sqrt()).abs() < 1e-12);
        assert!((cramer_rao_baseline(1.0, p).unwrap() - 54.6).abs() < 0.05);
        assert!(cramer_rao_baseline(1.0, 0.0).is_err());
        assert!(cramer_rao_baseline(1.0, 1.0).is_err());
    }

    #[test]
    fn bernstein_examples() {
        let c = ConcentrationParams::new(1.0, 1.0).unwrap();
        assert_eq!(bernstein_bound(&c, 0.0).unwrap(), 0.0);
        assert_eq!(bernstein_bound(&c, 2.0).unwrap(), 4.0);
    }

    #[test]
    fn bennett_examples() {
        let c = ConcentrationParams::new(1.0, 0.25).unwrap();
        assert!(bennett_bound(&c, 0.0).unwrap().abs() < 1e-15);
        let far = bennett_bound(&c, 100.0).unwrap();
        assert!((far - 1.0).abs() <= 0.05);
        for i in 1..=20 {
            let m = 0.5 * i as f64;
            assert!(bennett_bound(&c, m).unwrap() <= bernstein_bound(&c, m).unwrap() + 1e-12);
        }
    }

    #[test]
    fn bounded_score_parameters() {
        let b = ScoreModel::ExpFam(ExpFamModel::bernoulli(0.5).unwrap());
        let c = ConcentrationParams::for_model(&b, &[1.0]).unwrap();
        assert!((c.b_v - 0.5).abs() < 1e-15 && (c.sigma2_v - 0.25).abs() < 1e-15);
        let g = ScoreModel::ExpFam(ExpFamModel::gaussian(0.0, 1.0).unwrap());
        assert_eq!(ConcentrationParams::for_model(&g, &[1.0]).unwrap_err(), Error::UnboundedScore);
        let p = ScoreModel::ExpFam(ExpFamModel::poisson(1.0).unwrap());
        assert_eq!(ConcentrationParams::for_model(&p, &[1.0]).unwrap_err(), Error::UnboundedScore);
    }

    #[test]
    fn linearized_examples() {
        assert_eq!(linearized_index(1.0, 0.0).unwrap(), 0.0);
        let g = ScoreModel::ExpFam(ExpFamModel::gaussian(0.0, 2.0).unwrap());
        for m in [0.1, 1.0, 7.0] {
            let r = sensitivity_indices(&g, &[1.0], m).unwrap();
            assert!((r.index_plus - linearized_index(2.0, m).unwrap()).abs() < 1e-9);
        }
    }
}
