//! Large-deviation-scale sensitivity indices for IID sequences and finite
//! Markov chains.
//!
//! For a chain, the per-step score CGF is the log Perron root
//! `h_v(α) = log λ(π(i,j)e^{α vᵀW(i,j)})` and the rate of the empirical mean of
//! `f` is its Legendre transform with `g(i,j) = f(j)`. The indices at `M = I(z)`
//! bound the exponential-scale sensitivity of `P_n(S_n ≈ z)`.

pub mod dp;
pub mod markov;
pub mod perron;

pub use dp::{dp_probability, fd_sensitivity, sum_distribution, FdPoint, SumDistribution};
pub use markov::{
    edge_cgf, kernel_relative_entropy, markov_cgf, markov_rate, markov_sensitivity, pair_mean, twisted_kernel,
    ChainFamily, LdpReport, MarkovModel,
};

use crate::error::Result;
use crate::sensitivity::{sensitivity_indices, ScoreModel, SensitivityReport};

/// IID indices at rate level `M`: the per-sample CGF of the score governs the
/// whole sequence, so this is [`sensitivity_indices`] at `M`.
pub fn iid_sensitivity(model: &ScoreModel, v: &[f64], rate_value: f64) -> Result<SensitivityReport> {
    sensitivity_indices(model, v, rate_value)
}
