//! Stochastic reward environments and their ground-truth gap structure.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::combinat::{Action, ActionSet, CombinatError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvError {
    #[error("invalid environment: {0}")]
    InvalidModel(String),
    #[error("optimal action is not unique: {first} and {second} both attain {value}")]
    NonUniqueOptimum {
        first: Action,
        second: Action,
        value: f64,
    },
    #[error("environment has {env} items but the action set has {actions}")]
    DimensionMismatch { env: usize, actions: usize },
    #[error(transparent)]
    Combinat(#[from] CombinatError),
}

pub type Result<T> = std::result::Result<T, EnvError>;

/// Mean vector as written in configs: either explicit values or constant blocks,
/// e.g. `{"blocks": [[25, 0.7], [25, 0.9]]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeanSpec {
    Values(Vec<f64>),
    Blocks { blocks: Vec<(usize, f64)> },
}

impl MeanSpec {
    pub fn expand(&self) -> Vec<f64> {
        match self {
            MeanSpec::Values(v) => v.clone(),
            MeanSpec::Blocks { blocks } => blocks
                .iter()
                .flat_map(|&(n, v)| std::iter::repeat_n(v, n))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VarianceSpec {
    Shared(f64),
    PerItem(Vec<f64>),
}

/// Environment description as written in configs:
/// `{"family":"bernoulli","mu":[...],"sigma":0.5}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum EnvSpec {
    Bernoulli {
        mu: MeanSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma: Option<f64>,
    },
    Gaussian {
        mu: MeanSpec,
        variance: VarianceSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma: Option<f64>,
    },
    BoundedUniform {
        mu: MeanSpec,
        a: f64,
        b: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum RewardFamily {
    Bernoulli,
    /// Independent normals with the given per-item variances.
    Gaussian {
        variances: Vec<f64>,
    },
    /// `X_i` uniform on `[μ_i − r_i, μ_i + r_i]` with `r_i = min(μ_i − a, b − μ_i)`,
    /// so every reward lies in `[a, b]` and has mean `μ_i`.
    BoundedUniform {
        a: f64,
        b: f64,
    },
}

/// Reward model with independent items: means `μ⋆`, family and subgaussian
/// parameter `σ`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvModel {
    mu_star: Vec<f64>,
    family: RewardFamily,
    sigma: f64,
}

impl EnvModel {
    pub fn bernoulli(mu_star: Vec<f64>) -> Result<Self> {
        Self::new(mu_star, RewardFamily::Bernoulli, None)
    }

    pub fn gaussian(mu_star: Vec<f64>, variances: Vec<f64>) -> Result<Self> {
        Self::new(mu_star, RewardFamily::Gaussian { variances }, None)
    }

    /// Validates the model. A missing `sigma` takes the family default:
    /// 1/2 for Bernoulli, `(b − a)/2` for bounded-uniform and the largest
    /// standard deviation for Gaussian rewards.
    pub fn new(mu_star: Vec<f64>, family: RewardFamily, sigma: Option<f64>) -> Result<Self> {
        let invalid = |msg: String| Err(EnvError::InvalidModel(msg));
        if mu_star.is_empty() {
            return invalid("mu must have at least one item".into());
        }
        if let Some(i) = mu_star.iter().position(|m| !m.is_finite()) {
            return invalid(format!("mu[{i}] is not finite"));
        }
        let default_sigma = match &family {
            RewardFamily::Bernoulli => {
                if let Some(i) = mu_star.iter().position(|m| !(0.0..=1.0).contains(m)) {
                    return invalid(format!(
                        "bernoulli mean mu[{i}] = {} outside [0,1]",
                        mu_star[i]
                    ));
                }
                0.5
            }
            RewardFamily::Gaussian { variances } => {
                if variances.len() != mu_star.len() {
                    return invalid(format!(
                        "{} variances for {} items",
                        variances.len(),
                        mu_star.len()
                    ));
                }
                if let Some(i) = variances.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
                    return invalid(format!("variance[{i}] must be finite and >= 0"));
                }
                variances.iter().cloned().fold(0.0, f64::max).sqrt()
            }
            RewardFamily::BoundedUniform { a, b } => {
                if !(a.is_finite() && b.is_finite() && a < b) {
                    return invalid(format!("bounded-uniform requires a < b, got a={a}, b={b}"));
                }
                if let Some(i) = mu_star.iter().position(|m| !(*a..=*b).contains(m)) {
                    return invalid(format!("mu[{i}] = {} outside [{a},{b}]", mu_star[i]));
                }
                (b - a) / 2.0
            }
        };
        let sigma = sigma.unwrap_or(default_sigma);
        if !(sigma.is_finite() && sigma >= 0.0) {
            return invalid(format!("sigma must be finite and >= 0, got {sigma}"));
        }
        if let RewardFamily::Gaussian { variances } = &family {
            if let Some(i) = variances.iter().position(|v| *v > sigma * sigma) {
                return invalid(format!(
                    "variance[{i}] = {} exceeds sigma^2 = {}",
                    variances[i],
                    sigma * sigma
                ));
            }
        }
        Ok(Self {
            mu_star,
            family,
            sigma,
        })
    }

    pub fn from_spec(spec: &EnvSpec) -> Result<Self> {
        match spec {
            EnvSpec::Bernoulli { mu, sigma } => {
                Self::new(mu.expand(), RewardFamily::Bernoulli, *sigma)
            }
            EnvSpec::Gaussian {
                mu,
                variance,
                sigma,
            } => {
                let mu = mu.expand();
                let variances = match variance {
                    VarianceSpec::Shared(v) => vec![*v; mu.len()],
                    VarianceSpec::PerItem(v) => v.clone(),
                };
                Self::new(mu, RewardFamily::Gaussian { variances }, *sigma)
            }
            EnvSpec::BoundedUniform { mu, a, b, sigma } => Self::new(
                mu.expand(),
                RewardFamily::BoundedUniform { a: *a, b: *b },
                *sigma,
            ),
        }
    }

    pub fn mu_star(&self) -> &[f64] {
        &self.mu_star
    }

    pub fn family(&self) -> &RewardFamily {
        &self.family
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn dim(&self) -> usize {
        self.mu_star.len()
    }

    /// Draws the full reward vector `X(t)`.
    pub fn sample_rewards<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.sample_into(rng, &mut out);
        out
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim());
        match &self.family {
            RewardFamily::Bernoulli => {
                for (x, &mu) in out.iter_mut().zip(&self.mu_star) {
                    *x = if rng.random::<f64>() < mu { 1.0 } else { 0.0 };
                }
            }
            RewardFamily::Gaussian { variances } => {
                for ((x, &mu), &var) in out.iter_mut().zip(&self.mu_star).zip(variances) {
                    let z: f64 = rng.sample(StandardNormal);
                    *x = mu + var.sqrt() * z;
                }
            }
            RewardFamily::BoundedUniform { a, b } => {
                for (x, &mu) in out.iter_mut().zip(&self.mu_star) {
                    let r = (mu - a).min(b - mu);
                    *x = mu + r * (2.0 * rng.random::<f64>() - 1.0);
                }
            }
        }
    }
}

/// Exact gap structure of an instance: `A⋆`, `Δ_A` for every action,
/// `Δ_min` and `Δ_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct GapStructure {
    pub optimal_action: Action,
    pub optimal_value: f64,
    pub delta_by_action: BTreeMap<Action, f64>,
    /// Smallest positive gap; `None` when the set holds a single action.
    pub delta_min: Option<f64>,
    pub delta_max: f64,
}

impl GapStructure {
    /// Builds the structure from an explicit list of actions, in any order.
    pub fn from_actions(mu_star: &[f64], actions: &[Action]) -> Result<Self> {
        let mut values: Vec<(&Action, f64)> = actions.iter().map(|a| (a, a.dot(mu_star))).collect();
        if values.is_empty() {
            return Err(EnvError::InvalidModel("no actions".into()));
        }
        values.sort_by(|x, y| y.1.total_cmp(&x.1).then_with(|| x.0.cmp(y.0)));
        let (best, best_value) = values[0];
        if let Some(&(second, value)) = values.get(1) {
            if value == best_value {
                return Err(EnvError::NonUniqueOptimum {
                    first: best.clone(),
                    second: second.clone(),
                    value,
                });
            }
        }
        let delta_by_action: BTreeMap<Action, f64> = values
            .iter()
            .map(|&(a, v)| (a.clone(), best_value - v))
            .collect();
        let delta_min = values.get(1).map(|&(_, v)| best_value - v);
        let delta_max = values.last().map(|&(_, v)| best_value - v).unwrap_or(0.0);
        Ok(Self {
            optimal_action: best.clone(),
            optimal_value: best_value,
            delta_by_action,
            delta_min,
            delta_max,
        })
    }

    pub fn gap_of(&self, action: &Action) -> Option<f64> {
        self.delta_by_action.get(action).copied()
    }
}

/// Ground-truth gaps of `model` over `actions`, by enumeration.
pub fn gaps(model: &EnvModel, actions: &ActionSet) -> Result<GapStructure> {
    if model.dim() != actions.dim() {
        return Err(EnvError::DimensionMismatch {
            env: model.dim(),
            actions: actions.dim(),
        });
    }
    GapStructure::from_actions(model.mu_star(), &actions.enumerate()?)
}
