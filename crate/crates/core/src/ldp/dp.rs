//! Exact law of `S_n = (1/n) Σ_{t=1}^n f(X_t)` for integer-valued `f`, by
//! dynamic programming over (state, running sum) in log space.

use super::markov::MarkovModel;
use crate::error::{Error, Result};
use crate::numeric::log_add_exp;

/// `log P(Σ f(X_t) = k)` for every integer `k` in `[offset, offset + len)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SumDistribution {
    pub n: usize,
    pub offset: i64,
    pub log_probs: Vec<f64>,
}

impl SumDistribution {
    pub fn log_prob_of_sum(&self, k: i64) -> f64 {
        let idx = k - self.offset;
        if idx < 0 || idx as usize >= self.log_probs.len() {
            return f64::NEG_INFINITY;
        }
        self.log_probs[idx as usize]
    }

    /// `P(S_n = z)`; zero unless `nz` is an integer.
    pub fn prob(&self, z: f64) -> f64 {
        let nz = z * self.n as f64;
        let k = nz.round();
        if (nz - k).abs() > 1e-9 * nz.abs().max(1.0) {
            return 0.0;
        }
        self.log_prob_of_sum(k as i64).exp()
    }

    /// Integer sum `k` with positive probability whose mean `k/n` is nearest
    /// to `z`; ties go to the smaller `k`.
    pub fn nearest_attainable(&self, z: f64) -> Option<i64> {
        let target = z * self.n as f64;
        (0..self.log_probs.len())
            .filter(|&i| self.log_probs[i] > f64::NEG_INFINITY)
            .map(|i| i as i64 + self.offset)
            .min_by(|a, b| {
                let da = (*a as f64 - target).abs();
                let db = (*b as f64 - target).abs();
                da.partial_cmp(&db).unwrap().then(a.cmp(b))
            })
    }
}

fn integer_observable(model: &MarkovModel) -> Result<Vec<i64>> {
    model
        .observable()
        .iter()
        .map(|x| {
            if x.is_finite() && x.fract() == 0.0 && x.abs() < 1e9 {
                Ok(*x as i64)
            } else {
                Err(Error::Unsupported(format!("exact sum law needs an integer-valued observable, got {x}")))
            }
        })
        .collect()
}

/// Law of `Σ_{t=1}^n f(X_t)` started from the model's initial state.
pub fn sum_distribution(model: &MarkovModel, n: usize) -> Result<SumDistribution> {
    if n == 0 {
        return Err(Error::InvalidInput("horizon must be positive".into()));
    }
    let f = integer_observable(model)?;
    let s = model.n_states();
    let fmin = *f.iter().min().unwrap();
    let fmax = *f.iter().max().unwrap();
    let nn = n as i64;
    let offset = (nn * fmin).min(0);
    let width = ((nn * fmax).max(0) - offset + 1) as usize;
    let log_pi: Vec<Vec<f64>> = model.transition().iter().map(|r| r.iter().map(|p| p.ln()).collect()).collect();
    let edges: Vec<Vec<usize>> = (0..s).map(|j| (0..s).filter(|&i| model.transition()[i][j] > 0.0).collect()).collect();

    let mut cur = vec![vec![f64::NEG_INFINITY; width]; s];
    cur[model.initial_state()][(-offset) as usize] = 0.0;
    let (mut lo, mut hi) = (0i64, 0i64);
    for _ in 0..n {
        let (nlo, nhi) = (lo + fmin, hi + fmax);
        let mut next = vec![vec![f64::NEG_INFINITY; width]; s];
        for j in 0..s {
            for &i in &edges[j] {
                let lp = log_pi[i][j];
                for k in lo..=hi {
                    let src = cur[i][(k - offset) as usize];
                    if src == f64::NEG_INFINITY {
                        continue;
                    }
                    let dst = &mut next[j][(k + f[j] - offset) as usize];
                    *dst = log_add_exp(*dst, src + lp);
                }
            }
        }
        cur = next;
        lo = nlo;
        hi = nhi;
    }
    let log_probs = (0..width)
        .map(|idx| cur.iter().fold(f64::NEG_INFINITY, |acc, row| log_add_exp(acc, row[idx])))
        .collect();
    Ok(SumDistribution { n, offset, log_probs })
}

/// `P_n(S_n = z)`; zero for unattainable lattice points.
pub fn dp_probability(model: &MarkovModel, n: usize, z: f64) -> Result<f64> {
    Ok(sum_distribution(model, n)?.prob(z))
}

/// Finite-difference LDP sensitivity at one lattice point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdPoint {
    /// Requested mean.
    pub z: f64,
    /// Attainable lattice mean `k/n` used in place of `z`.
    pub z_lattice: f64,
    /// `(log P^{θ+εv}(S_n = z_n) − log P^{θ−εv}(S_n = z_n)) / (2nε)`.
    pub value: f64,
    /// Same quantity at step `ε/2`.
    pub value_half_step: f64,
}

/// Central-difference sensitivity of `(1/n) log P_n^θ(S_n = z_n)` along `v`
/// for every `z` in `zs`, where `z_n` is the nearest attainable lattice mean.
pub fn fd_sensitivity(model: &MarkovModel, v: &[f64], n: usize, zs: &[f64], eps: f64) -> Result<Vec<FdPoint>> {
    if v.len() != model.theta().len() {
        return Err(Error::InvalidInput(format!("direction has {} entries, model has {} parameters", v.len(), model.theta().len())));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!("step {eps} must be positive")));
    }
    let shifted = |t: f64| -> Result<SumDistribution> {
        let th: Vec<f64> = model.theta().iter().zip(v).map(|(a, b)| a + t * b).collect();
        sum_distribution(&model.at_theta(th)?, n)
    };
    let base = sum_distribution(model, n)?;
    let (up, dn) = (shifted(eps)?, shifted(-eps)?);
    let (up2, dn2) = (shifted(0.5 * eps)?, shifted(-0.5 * eps)?);
    let nf = n as f64;
    zs.iter()
        .map(|&z| {
            let k = base.nearest_attainable(z).ok_or(Error::EmptyEvent)?;
            let value = (up.log_prob_of_sum(k) - dn.log_prob_of_sum(k)) / (2.0 * nf * eps);
            let value_half_step = (up2.log_prob_of_sum(k) - dn2.log_prob_of_sum(k)) / (nf * eps);
            Ok(FdPoint { z, z_lattice: k as f64 / nf, value, value_half_step })
        })
        .collect()
}
