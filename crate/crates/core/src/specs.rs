//! JSON descriptions of models and chains.
//!
//! ```json
//! {"family": "gaussian",  "params": {"mu": 0.0, "sigma2": 1.0}}
//! {"family": "gaussian2", "params": {"mu": 0.0, "sigma2": 1.0}}
//! {"family": "poisson",   "params": {"rate": 2.0}}
//! {"family": "bernoulli", "params": {"p": 0.3}}
//! {"family": "laplace",   "params": {"theta": -1.0}}
//! {"family": "discrete",  "params": {"probs": [0.5, 0.5], "scores": [[1.0], [-1.0]]}}
//! {"family": "finite_expfam", "params": {"base": [1, 1, 1], "stats": [[0], [1], [2]], "theta": [0.3]}}
//! ```
//!
//! Chains:
//!
//! ```json
//! {"kind": "reflecting_walk", "values": [-2, -1, 0, 1, 2], "theta": [0.2, 0.5, 0.7], "initial_state": 2}
//! {"kind": "matrix", "transition": [[0.5, 0.5], [0.2, 0.8]], "f": [0, 1], "initial_state": 0}
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::distributions::{DiscreteDist, ExpFamModel, FiniteExpFamily, GaussianTwoParam};
use crate::error::{Error, Result};
use crate::ldp::MarkovModel;
use crate::sensitivity::ScoreModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Gaussian {
        mu: f64,
        sigma2: f64,
    },
    #[serde(rename = "gaussian2")]
    GaussianTwoParam {
        mu: f64,
        sigma2: f64,
    },
    Poisson {
        rate: f64,
    },
    Bernoulli {
        p: f64,
    },
    Laplace {
        theta: f64,
    },
    Discrete {
        probs: Vec<f64>,
        #[serde(default)]
        atoms: Option<Vec<f64>>,
        #[serde(default)]
        scores: Option<Vec<Vec<f64>>>,
    },
    FiniteExpfam {
        #[serde(default)]
        atoms: Option<Vec<f64>>,
        base: Vec<f64>,
        stats: Vec<Vec<f64>>,
        theta: Vec<f64>,
    },
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

impl ModelSpec {
    pub fn from_path(path: &Path) -> Result<Self> {
        read_json(path)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(e.to_string()))
    }

    fn finite_family(atoms: &Option<Vec<f64>>, base: &[f64], stats: &[Vec<f64>]) -> Result<FiniteExpFamily> {
        let atoms = atoms.clone().unwrap_or_else(|| (0..base.len()).map(|i| i as f64).collect());
        FiniteExpFamily::new(atoms, base.to_vec(), stats.to_vec())
    }

    /// The model with its score, as consumed by the index computations.
    pub fn score_model(&self) -> Result<ScoreModel> {
        Ok(match self {
            ModelSpec::Gaussian { mu, sigma2 } => ScoreModel::ExpFam(ExpFamModel::gaussian(*mu, *sigma2)?),
            ModelSpec::GaussianTwoParam { mu, sigma2 } => ScoreModel::ExpFam(GaussianTwoParam::new(*mu, *sigma2)?.to_model()),
            ModelSpec::Poisson { rate } => ScoreModel::ExpFam(ExpFamModel::poisson(*rate)?),
            ModelSpec::Bernoulli { p } => ScoreModel::ExpFam(ExpFamModel::bernoulli(*p)?),
            ModelSpec::Laplace { theta } => ScoreModel::ExpFam(ExpFamModel::laplace(*theta)?),
            ModelSpec::Discrete { scores: None, .. } => {
                return Err(Error::InvalidInput("a discrete model needs per-atom scores for sensitivity indices".into()))
            }
            ModelSpec::Discrete { scores: Some(scores), .. } => ScoreModel::discrete(self.distribution()?, scores.clone())?,
            ModelSpec::FiniteExpfam { atoms, base, stats, theta } => {
                let fam = Self::finite_family(atoms, base, stats)?;
                ScoreModel::discrete(fam.dist_at(theta)?, fam.scores_at(theta)?)?
            }
        })
    }

    /// The model as a finite distribution (discrete families only).
    pub fn distribution(&self) -> Result<DiscreteDist> {
        match self {
            ModelSpec::Bernoulli { p } => DiscreteDist::new(vec![0.0, 1.0], vec![1.0 - p, *p]),
            ModelSpec::Discrete { probs, atoms, .. } => {
                let atoms = atoms.clone().unwrap_or_else(|| (0..probs.len()).map(|i| i as f64).collect());
                DiscreteDist::new(atoms, probs.clone())
            }
            ModelSpec::FiniteExpfam { atoms, base, stats, theta } => Self::finite_family(atoms, base, stats)?.dist_at(theta),
            other => Err(Error::Unsupported(format!("{} is not a finite model", other.name()))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Gaussian { .. } => "gaussian",
            ModelSpec::GaussianTwoParam { .. } => "gaussian2",
            ModelSpec::Poisson { .. } => "poisson",
            ModelSpec::Bernoulli { .. } => "bernoulli",
            ModelSpec::Laplace { .. } => "laplace",
            ModelSpec::Discrete { .. } => "discrete",
            ModelSpec::FiniteExpfam { .. } => "finite_expfam",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChainSpec {
    ReflectingWalk {
        values: Vec<f64>,
        theta: Vec<f64>,
        initial_state: usize,
        #[serde(default)]
        v: Option<Vec<f64>>,
    },
    Matrix {
        transition: Vec<Vec<f64>>,
        f: Vec<f64>,
        #[serde(default)]
        initial_state: usize,
        #[serde(default)]
        scores: Option<Vec<Vec<Vec<f64>>>>,
        #[serde(default)]
        v: Option<Vec<f64>>,
    },
}

impl ChainSpec {
    pub fn from_path(path: &Path) -> Result<Self> {
        read_json(path)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(e.to_string()))
    }

    pub fn model(&self) -> Result<MarkovModel> {
        match self {
            ChainSpec::ReflectingWalk { values, theta, initial_state, .. } => {
                MarkovModel::reflecting_walk(values.clone(), theta.clone(), *initial_state)
            }
            ChainSpec::Matrix { transition, f, initial_state, scores, .. } => {
                let m = MarkovModel::from_matrix(transition.clone(), f.clone(), *initial_state)?;
                match scores {
                    Some(s) => m.with_scores(s.clone()),
                    None => Ok(m),
                }
            }
        }
    }

    /// Direction stored in the spec, if any.
    pub fn direction(&self) -> Option<&[f64]> {
        match self {
            ChainSpec::ReflectingWalk { v, .. } | ChainSpec::Matrix { v, .. } => v.as_deref(),
        }
    }
}
