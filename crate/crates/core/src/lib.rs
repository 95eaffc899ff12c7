//! Information-theoretic bounds for the sensitivity of rare-event probabilities.
//!
//! The central objects are the rare-event sensitivity indices
//!
//! ```text
//! I±(M) = ± inf_{α>0} (H(±α) + M) / α,      H(α) = log E_P[exp(α vᵀW)],
//! ```
//!
//! where `W` is the score of a parametric model. For every event `A` with
//! `P(A) ≥ exp(−M)` the gradient index `vᵀ∇ log P(A)` lies between `I−(M)` and
//! `I+(M)`. The crate computes these indices, the Rényi-divergence UQ bounds
//! they are derived from, cheaper concentration surrogates, and their
//! large-deviation analogues for IID and finite Markov sequences. Every
//! finite-model quantity also has an exact oracle (summation, enumeration or
//! dynamic programming) so the bounds can be checked rather than trusted.
//!
//! Module map:
//!
//! - [`distributions`]: exponential families, finite distributions, scores.
//! - [`cgf`]: cumulant generating functions and exponential tilting.
//! - [`optimizer`]: the one-dimensional problem `inf (H(α)+M)/α` and friends.
//! - [`renyi`]: Rényi divergence, relative entropy, worst-case regret.
//! - [`uq`]: bounds on `log Q(A)` from a nominal model `P`.
//! - [`sensitivity`]: the indices, the exact oracle, concentration surrogates.
//! - [`ldp`]: large-deviation indices, Perron eigenvalues, exact chain DP.

pub mod cgf;
pub mod distributions;
pub mod error;
pub mod ldp;
pub mod optimizer;
pub mod renyi;
pub mod sensitivity;
pub mod specs;
pub mod uq;
pub mod verify;

mod ext_real;
mod numeric;

pub use cgf::{cgf_discrete, cgf_empirical, cgf_expfam, tilt, CgfHandle, CumulantFn, Domain, TiltedMeasure};
pub use distributions::{DiscreteDist, ExpFamModel, Family, FiniteExpFamily, GaussianTwoParam};
pub use error::{Error, Result};
pub use ldp::{MarkovModel, LdpReport};
pub use optimizer::{legendre, linearized_value, minimize_bound, solve_by_kl, BoundCase, BoundResult, LegendreResult, Sign};
pub use sensitivity::{ConcentrationParams, ScoreModel, SensitivityReport};
pub use uq::UqBoundReport;
