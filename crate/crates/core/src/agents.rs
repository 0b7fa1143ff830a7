//! Bandit policies over a shared sufficient-statistic record.
//!
//! * B-CTS: Beta prior, Bernoulli likelihood; `θ_i ~ Beta(α_i, β_i)`.
//! * G-CTS: improper flat prior, Gaussian likelihood; `θ ~ N(μ̂, σ² V)`.
//! * BG-CTS: G-CTS with the boost `g(t)`; `θ = μ̂ + σ √(2 g(t)) V^{1/2} Z`.
//! * ESCB: deterministic index `A^⊤μ̂ + σ √(8 f̃(t) A^⊤ V A)` maximized by
//!   enumeration.
//!
//! Every policy then plays an action maximizing `A^⊤θ` (or the index). The
//! Gaussian policies and ESCB first play a covering sequence so that every
//! item has been observed once. Gaussian policies consume exactly `d`
//! standard normals per step, init steps included, so the noise stream stays
//! aligned with the time index whatever actions are chosen.

use std::collections::{BTreeMap, VecDeque};
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::combinat::{Action, ActionSet, CombinatError};
use crate::schedules::{ScheduleConfig, ScheduleError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AgentError {
    #[error("item {item} has no observation yet and the initialization queue is empty")]
    NotInitialized { item: usize },
    #[error("B-CTS needs binary observations, item {item} observed {value}")]
    NonBinaryObservation { item: usize, value: f64 },
    #[error("observation {value} on item {item}, which is not in the played action")]
    MaskViolation { item: usize, value: f64 },
    #[error("observation on item {item} is not finite")]
    NonFiniteObservation { item: usize },
    #[error("expected vectors of length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("{0} does not take an injected Gaussian noise vector")]
    UnsupportedNoise(&'static str),
    #[error("invalid agent configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Combinat(#[from] CombinatError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

pub type Result<T> = std::result::Result<T, AgentError>;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BetaPrior {
    /// `α(0) = β(0) = 1`.
    #[default]
    Uniform,
    /// `α(0) = β(0) = 1/2`.
    Jeffreys,
}

impl BetaPrior {
    pub fn value(self) -> f64 {
        match self {
            BetaPrior::Uniform => 1.0,
            BetaPrior::Jeffreys => 0.5,
        }
    }
}

fn default_lambda() -> f64 {
    1.0
}

/// Policy and its parameters: `{"agent":"bg-cts","lambda":1.0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "agent", rename_all = "kebab-case")]
pub enum AgentKind {
    BCts {
        #[serde(default)]
        prior: BetaPrior,
    },
    GCts,
    BgCts {
        #[serde(default = "default_lambda")]
        lambda: f64,
        /// Replaces `g(t)` by a constant; `0.5` recovers G-CTS.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        boost: Option<f64>,
    },
    Escb {
        #[serde(default = "default_lambda")]
        lambda: f64,
    },
}

impl AgentKind {
    pub fn default_label(&self) -> String {
        match self {
            AgentKind::BCts {
                prior: BetaPrior::Uniform,
            } => "b-cts-uniform".into(),
            AgentKind::BCts {
                prior: BetaPrior::Jeffreys,
            } => "b-cts-jeffreys".into(),
            AgentKind::GCts => "g-cts".into(),
            AgentKind::BgCts { .. } => "bg-cts".into(),
            AgentKind::Escb { .. } => "escb".into(),
        }
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, AgentKind::GCts | AgentKind::BgCts { .. })
    }

    fn lambda(&self) -> f64 {
        match self {
            AgentKind::BgCts { lambda, .. } | AgentKind::Escb { lambda } => *lambda,
            _ => 1.0,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            AgentKind::BCts { .. } => "b-cts",
            AgentKind::GCts => "g-cts",
            AgentKind::BgCts { .. } => "bg-cts",
            AgentKind::Escb { .. } => "escb",
        }
    }
}

/// Agent entry of an experiment config. `sigma` overrides the environment's
/// subgaussian parameter and `label` names the agent in outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    #[serde(flatten)]
    pub kind: AgentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl AgentSpec {
    pub fn new(kind: AgentKind) -> Self {
        Self {
            kind,
            sigma: None,
            label: None,
        }
    }

    pub fn label(&self) -> String {
        self.label
            .clone()
            .unwrap_or_else(|| self.kind.default_label())
    }
}

/// Thompson sample `θ(t)` and the Gaussian noise `Z(t)` that produced it
/// (empty for B-CTS).
#[derive(Debug, Clone, PartialEq)]
pub struct ThompsonDraw {
    pub theta: Vec<f64>,
    pub z: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SelectionDetail {
    /// Played from the covering initialization queue; `z` holds the noise
    /// drawn (and discarded) by Gaussian policies.
    Init {
        z: Vec<f64>,
    },
    Thompson(ThompsonDraw),
    /// ESCB index of the chosen action.
    Index {
        value: f64,
    },
}

impl SelectionDetail {
    /// Gaussian noise drawn at this step, if any.
    pub fn z(&self) -> Option<&[f64]> {
        match self {
            SelectionDetail::Init { z } if !z.is_empty() => Some(z),
            SelectionDetail::Thompson(draw) if !draw.z.is_empty() => Some(&draw.z),
            _ => None,
        }
    }

    pub fn theta(&self) -> Option<&[f64]> {
        match self {
            SelectionDetail::Thompson(draw) => Some(&draw.theta),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub action: Action,
    pub detail: SelectionDetail,
}

#[derive(Debug, Clone, PartialEq)]
struct BetaCounts {
    prior: f64,
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

/// Sufficient statistics of the history plus the policy configuration.
#[derive(Debug, Clone)]
pub struct AgentState {
    kind: AgentKind,
    actions: Arc<ActionSet>,
    /// ESCB scans every action.
    enumerated: Option<Arc<Vec<Action>>>,
    schedule: ScheduleConfig,
    sigma: f64,
    n_counts: Vec<u64>,
    reward_sums: Vec<f64>,
    mu_hat: Vec<f64>,
    beta: Option<BetaCounts>,
    play_counts: BTreeMap<Action, u64>,
    t: u64,
    init_queue: VecDeque<Action>,
}

impl AgentState {
    pub fn new(kind: AgentKind, actions: Arc<ActionSet>, sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(AgentError::InvalidConfig(format!(
                "sigma must be >= 0, got {sigma}"
            )));
        }
        if let AgentKind::BgCts { boost: Some(b), .. } = kind {
            if !(b.is_finite() && b >= 0.0) {
                return Err(AgentError::InvalidConfig(format!(
                    "boost must be >= 0, got {b}"
                )));
            }
        }
        let d = actions.dim();
        let schedule =
            ScheduleConfig::new(kind.lambda(), actions.max_size(), d, actions.count(), sigma)?;
        let beta = match kind {
            AgentKind::BCts { prior } => Some(BetaCounts {
                prior: prior.value(),
                alpha: vec![prior.value(); d],
                beta: vec![prior.value(); d],
            }),
            _ => None,
        };
        let init_queue = match kind {
            AgentKind::BCts { .. } => VecDeque::new(),
            _ => actions.covering_init_sequence()?.into(),
        };
        let enumerated = match kind {
            AgentKind::Escb { .. } => Some(Arc::new(actions.enumerate()?)),
            _ => None,
        };
        Ok(Self {
            kind,
            actions,
            enumerated,
            schedule,
            sigma,
            n_counts: vec![0; d],
            reward_sums: vec![0.0; d],
            mu_hat: vec![0.0; d],
            beta,
            play_counts: BTreeMap::new(),
            t: 0,
            init_queue,
        })
    }

    /// State with given counts `N`, empirical means `μ̂` and number of
    /// completed steps; the initialization queue is empty and action play
    /// counts start at zero. For B-CTS the Beta counts are reconstructed from
    /// the implied success counts.
    pub fn from_statistics(
        kind: AgentKind,
        actions: Arc<ActionSet>,
        sigma: f64,
        n_counts: Vec<u64>,
        mu_hat: Vec<f64>,
        completed_steps: u64,
    ) -> Result<Self> {
        let mut state = Self::new(kind, actions, sigma)?;
        let d = state.dim();
        for len in [n_counts.len(), mu_hat.len()] {
            if len != d {
                return Err(AgentError::DimensionMismatch {
                    expected: d,
                    got: len,
                });
            }
        }
        state.reward_sums = n_counts
            .iter()
            .zip(&mu_hat)
            .map(|(&n, &m)| n as f64 * m)
            .collect();
        if let Some(b) = state.beta.as_mut() {
            for (i, (&n, &sum)) in n_counts.iter().zip(&state.reward_sums).enumerate() {
                b.alpha[i] = b.prior + sum;
                b.beta[i] = b.prior + n as f64 - sum;
            }
        }
        state.mu_hat = mu_hat;
        state.n_counts = n_counts;
        state.t = completed_steps;
        state.init_queue.clear();
        Ok(state)
    }

    pub fn kind(&self) -> &AgentKind {
        &self.kind
    }

    pub fn actions(&self) -> &Arc<ActionSet> {
        &self.actions
    }

    pub fn schedule(&self) -> &ScheduleConfig {
        &self.schedule
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn dim(&self) -> usize {
        self.n_counts.len()
    }

    /// `N(t)`.
    pub fn n_counts(&self) -> &[u64] {
        &self.n_counts
    }

    /// `μ̂(t)`; zero for items never observed.
    pub fn mu_hat(&self) -> &[f64] {
        &self.mu_hat
    }

    pub fn alpha_counts(&self) -> Option<&[f64]> {
        self.beta.as_ref().map(|b| b.alpha.as_slice())
    }

    pub fn beta_counts(&self) -> Option<&[f64]> {
        self.beta.as_ref().map(|b| b.beta.as_slice())
    }

    /// `M_A(t)` for every action played so far.
    pub fn play_counts(&self) -> &BTreeMap<Action, u64> {
        &self.play_counts
    }

    /// Number of completed steps.
    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn init_queue(&self) -> &VecDeque<Action> {
        &self.init_queue
    }

    /// Multiplier of `σ V^{1/2} Z` in the Gaussian samplers at step `t`:
    /// `√(2 g(t))` for BG-CTS, 1 for G-CTS.
    pub fn noise_scale(&self, t: u64) -> f64 {
        match self.kind {
            AgentKind::BgCts { boost, .. } => {
                (2.0 * boost.unwrap_or_else(|| self.schedule.g(t))).sqrt()
            }
            _ => 1.0,
        }
    }

    /// Gaussian Thompson sample at step `t` for a given noise vector.
    pub fn gaussian_theta(&self, t: u64, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.dim() {
            return Err(AgentError::DimensionMismatch {
                expected: self.dim(),
                got: z.len(),
            });
        }
        if let Some(item) = self.n_counts.iter().position(|&n| n == 0) {
            return Err(AgentError::NotInitialized { item });
        }
        let scale = self.sigma * self.noise_scale(t);
        Ok(self
            .mu_hat
            .iter()
            .zip(&self.n_counts)
            .zip(z)
            .map(|((&mu, &n), &z)| mu + scale * (1.0 / n as f64).sqrt() * z)
            .collect())
    }

    /// ESCB index `A^⊤μ̂ + σ √(8 f̃(t) A^⊤VA)`.
    pub fn escb_index(&self, t: u64, action: &Action) -> f64 {
        let width: f64 = action
            .items()
            .iter()
            .map(|&i| 1.0 / self.n_counts[i] as f64)
            .sum();
        action.dot(&self.mu_hat) + self.sigma * (8.0 * self.schedule.f_tilde(t) * width).sqrt()
    }

    /// Chooses the action of the next step, drawing algorithm noise from `rng`.
    pub fn select_action<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Selection> {
        match &self.kind {
            AgentKind::GCts | AgentKind::BgCts { .. } => {
                let z: Vec<f64> = (0..self.dim())
                    .map(|_| rng.sample(StandardNormal))
                    .collect();
                self.select_with_noise(z)
            }
            AgentKind::BCts { .. } => {
                let counts = self.beta.as_ref().expect("B-CTS keeps Beta counts");
                let theta = counts
                    .alpha
                    .iter()
                    .zip(&counts.beta)
                    .map(|(&a, &b)| {
                        Beta::new(a, b)
                            .map(|dist| dist.sample(rng))
                            .map_err(|e| AgentError::InvalidConfig(format!("Beta({a}, {b}): {e}")))
                    })
                    .collect::<Result<Vec<f64>>>()?;
                let action = self.actions.argmax_linear(&theta)?;
                Ok(Selection {
                    action,
                    detail: SelectionDetail::Thompson(ThompsonDraw {
                        theta,
                        z: Vec::new(),
                    }),
                })
            }
            AgentKind::Escb { .. } => {
                if let Some(action) = self.init_queue.pop_front() {
                    return Ok(Selection {
                        action,
                        detail: SelectionDetail::Init { z: Vec::new() },
                    });
                }
                if let Some(item) = self.n_counts.iter().position(|&n| n == 0) {
                    return Err(AgentError::NotInitialized { item });
                }
                let t = self.t + 1;
                let actions = self
                    .enumerated
                    .as_ref()
                    .expect("ESCB keeps its enumeration");
                let mut best = &actions[0];
                let mut best_value = self.escb_index(t, best);
                for action in &actions[1..] {
                    let value = self.escb_index(t, action);
                    if value > best_value {
                        best = action;
                        best_value = value;
                    }
                }
                Ok(Selection {
                    action: best.clone(),
                    detail: SelectionDetail::Index { value: best_value },
                })
            }
        }
    }

    /// Gaussian policies only: chooses the next action using the supplied
    /// standard-normal vector `Z(t)`.
    pub fn select_with_noise(&mut self, z: Vec<f64>) -> Result<Selection> {
        if !self.kind.is_gaussian() {
            return Err(AgentError::UnsupportedNoise(self.kind.name()));
        }
        if z.len() != self.dim() {
            return Err(AgentError::DimensionMismatch {
                expected: self.dim(),
                got: z.len(),
            });
        }
        if let Some(action) = self.init_queue.pop_front() {
            return Ok(Selection {
                action,
                detail: SelectionDetail::Init { z },
            });
        }
        let theta = self.gaussian_theta(self.t + 1, &z)?;
        let action = self.actions.argmax_linear(&theta)?;
        Ok(Selection {
            action,
            detail: SelectionDetail::Thompson(ThompsonDraw { theta, z }),
        })
    }

    /// Incorporates the semi-bandit feedback `Y = A ⊙ X` of the played action.
    pub fn update(&mut self, action: &Action, observed: &[f64]) -> Result<()> {
        let d = self.dim();
        for len in [action.dim(), observed.len()] {
            if len != d {
                return Err(AgentError::DimensionMismatch {
                    expected: d,
                    got: len,
                });
            }
        }
        for (item, &value) in observed.iter().enumerate() {
            if !value.is_finite() {
                return Err(AgentError::NonFiniteObservation { item });
            }
            if value != 0.0 && !action.contains(item) {
                return Err(AgentError::MaskViolation { item, value });
            }
        }
        if self.beta.is_some() {
            if let Some(&item) = action
                .items()
                .iter()
                .find(|&&i| observed[i] != 0.0 && observed[i] != 1.0)
            {
                return Err(AgentError::NonBinaryObservation {
                    item,
                    value: observed[item],
                });
            }
        }
        for &i in action.items() {
            let x = observed[i];
            self.n_counts[i] += 1;
            self.reward_sums[i] += x;
            self.mu_hat[i] = self.reward_sums[i] / self.n_counts[i] as f64;
            if let Some(b) = self.beta.as_mut() {
                b.alpha[i] += x;
                b.beta[i] += 1.0 - x;
            }
        }
        *self.play_counts.entry(action.clone()).or_insert(0) += 1;
        self.t += 1;
        Ok(())
    }

    /// Checks the count identities: `N = Σ_A M_A · A`, `Σ_A M_A = t` and,
    /// for B-CTS, `α + β − α(0) − β(0) = N`.
    pub fn count_identities_hold(&self) -> bool {
        let mut n = vec![0u64; self.dim()];
        let mut total = 0;
        for (action, &count) in &self.play_counts {
            total += count;
            for &i in action.items() {
                n[i] += count;
            }
        }
        let beta_ok = self.beta.as_ref().is_none_or(|b| {
            (0..self.dim())
                .all(|i| b.alpha[i] + b.beta[i] - 2.0 * b.prior == self.n_counts[i] as f64)
        });
        n == self.n_counts && total == self.t && beta_ok
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinat::ActionSetSpec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_block(d: usize) -> Arc<ActionSet> {
        Arc::new(ActionSet::new(ActionSetSpec::TwoBlock { d }).unwrap())
    }

    fn bg() -> AgentKind {
        AgentKind::BgCts {
            lambda: 1.0,
            boost: None,
        }
    }

    #[test]
    fn beta_priors() {
        let s = AgentState::new(
            AgentKind::BCts {
                prior: BetaPrior::Uniform,
            },
            two_block(4),
            0.5,
        )
        .unwrap();
        assert_eq!(s.alpha_counts().unwrap(), &[1.0; 4]);
        assert_eq!(s.beta_counts().unwrap(), &[1.0; 4]);
        assert!(s.init_queue().is_empty());
        let s = AgentState::new(
            AgentKind::BCts {
                prior: BetaPrior::Jeffreys,
            },
            two_block(4),
            0.5,
        )
        .unwrap();
        assert_eq!(s.alpha_counts().unwrap(), &[0.5; 4]);
        assert_eq!(s.beta_counts().unwrap(), &[0.5; 4]);
    }

    #[test]
    fn gaussian_init_queue() {
        let s = AgentState::new(bg(), two_block(4), 0.5).unwrap();
        assert_eq!(s.init_queue().len(), 2);
        assert_eq!(s.n_counts(), &[0; 4]);
        let s = AgentState::new(AgentKind::Escb { lambda: 1.0 }, two_block(4), 0.5).unwrap();
        assert_eq!(s.init_queue().len(), 2);
    }

    #[test]
    fn uncoverable_set_is_rejected_for_gaussian_agents() {
        let set = Arc::new(
            ActionSet::new(ActionSetSpec::Explicit {
                actions: vec![Action::from_items(3, &[0]), Action::from_items(3, &[1])],
            })
            .unwrap(),
        );
        assert!(matches!(
            AgentState::new(bg(), set.clone(), 0.5),
            Err(AgentError::Combinat(CombinatError::UncoverableItem(2)))
        ));
        assert!(AgentState::new(
            AgentKind::BCts {
                prior: BetaPrior::Uniform
            },
            set,
            0.5
        )
        .is_ok());
    }

    #[test]
    fn zero_noise_is_greedy() {
        let set = Arc::new(ActionSet::new(ActionSetSpec::TopM { d: 4, m: 2 }).unwrap());
        let mu = vec![0.2, 0.9, 0.4, 0.8];
        let mut s =
            AgentState::from_statistics(bg(), set, 0.5, vec![3, 1, 7, 2], mu.clone(), 20).unwrap();
        let sel = s.select_with_noise(vec![0.0; 4]).unwrap();
        assert_eq!(sel.action, Action::from_items(4, &[1, 3]));
        match sel.detail {
            SelectionDetail::Thompson(draw) => assert_eq!(draw.theta, mu),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn theta_decomposition_is_exact() {
        let set = two_block(2);
        let s =
            AgentState::from_statistics(bg(), set, 0.5, vec![2, 5], vec![0.5, 0.25], 9).unwrap();
        let z = [0.3, -1.7];
        let theta = s.gaussian_theta(10, &z).unwrap();
        let scale = 0.5 * (2.0 * s.schedule().g(10)).sqrt();
        assert_eq!(theta[0], 0.5 + scale * 0.5f64.sqrt() * 0.3);
        assert_eq!(theta[1], 0.25 + scale * 0.2f64.sqrt() * -1.7);
    }

    #[test]
    fn gaussian_agent_without_observations() {
        let mut s = AgentState::new(AgentKind::GCts, two_block(4), 0.5).unwrap();
        s.select_with_noise(vec![0.0; 4]).unwrap();
        s.select_with_noise(vec![0.0; 4]).unwrap();
        assert_eq!(
            s.select_with_noise(vec![0.0; 4]).unwrap_err(),
            AgentError::NotInitialized { item: 0 }
        );
    }

    #[test]
    fn noise_injection_rejected_for_non_gaussian() {
        let mut s = AgentState::new(
            AgentKind::BCts {
                prior: BetaPrior::Uniform,
            },
            two_block(2),
            0.5,
        )
        .unwrap();
        assert!(matches!(
            s.select_with_noise(vec![0.0; 2]),
            Err(AgentError::UnsupportedNoise(_))
        ));
    }

    #[test]
    fn beta_update_counts_successes() {
        let mut s = AgentState::new(
            AgentKind::BCts {
                prior: BetaPrior::Uniform,
            },
            two_block(4),
            0.5,
        )
        .unwrap();
        let a = Action::from_items(4, &[0, 1]);
        s.update(&a, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(s.alpha_counts().unwrap(), &[2.0, 1.0, 1.0, 1.0]);
        assert_eq!(s.beta_counts().unwrap(), &[1.0, 2.0, 1.0, 1.0]);
        assert!(s.count_identities_hold());
    }

    #[test]
    fn update_is_local_to_the_action() {
        let set = Arc::new(ActionSet::new(ActionSetSpec::TopM { d: 4, m: 2 }).unwrap());
        for kind in [
            AgentKind::BCts {
                prior: BetaPrior::Uniform,
            },
            AgentKind::GCts,
            bg(),
            AgentKind::Escb { lambda: 1.0 },
        ] {
            let mut s = AgentState::new(kind, set.clone(), 0.5).unwrap();
            s.update(&Action::from_items(4, &[2, 3]), &[0.0, 0.0, 1.0, 0.0])
                .unwrap();
            let before = (
                s.n_counts()[2..].to_vec(),
                s.mu_hat()[2..]
                    .iter()
                    .map(|x| x.to_bits())
                    .collect::<Vec<_>>(),
                s.alpha_counts().map(|a| a[2..].to_vec()),
                s.beta_counts().map(|b| b[2..].to_vec()),
            );
            s.update(&Action::from_items(4, &[0, 1]), &[1.0, 1.0, 0.0, 0.0])
                .unwrap();
            let after = (
                s.n_counts()[2..].to_vec(),
                s.mu_hat()[2..]
                    .iter()
                    .map(|x| x.to_bits())
                    .collect::<Vec<_>>(),
                s.alpha_counts().map(|a| a[2..].to_vec()),
                s.beta_counts().map(|b| b[2..].to_vec()),
            );
            assert_eq!(before, after);
        }
    }

    #[test]
    fn running_mean() {
        let mut s = AgentState::new(bg(), two_block(2), 0.5).unwrap();
        let a = Action::from_items(2, &[0]);
        for x in [1.0, 0.0, 1.0] {
            s.update(&a, &[x, 0.0]).unwrap();
        }
        assert_eq!(s.n_counts()[0], 3);
        assert!((s.mu_hat()[0] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn observation_contract() {
        let mut s = AgentState::new(
            AgentKind::BCts {
                prior: BetaPrior::Uniform,
            },
            two_block(4),
            0.5,
        )
        .unwrap();
        let a = Action::from_items(4, &[0, 1]);
        assert_eq!(
            s.update(&a, &[0.5, 0.0, 0.0, 0.0]).unwrap_err(),
            AgentError::NonBinaryObservation {
                item: 0,
                value: 0.5
            }
        );
        assert_eq!(
            s.update(&a, &[1.0, 0.0, 1.0, 0.0]).unwrap_err(),
            AgentError::MaskViolation {
                item: 2,
                value: 1.0
            }
        );
        assert!(matches!(
            s.update(&a, &[1.0, 0.0]),
            Err(AgentError::DimensionMismatch { .. })
        ));
        assert_eq!(s.steps(), 0);
        let mut g = AgentState::new(bg(), two_block(4), 0.5).unwrap();
        g.update(&a, &[0.5, -0.25, 0.0, 0.0]).unwrap();
        assert!(matches!(
            g.update(&a, &[f64::NAN, 0.0, 0.0, 0.0]),
            Err(AgentError::NonFiniteObservation { item: 0 })
        ));
    }

    #[test]
    fn escb_prefers_greedy_with_tiny_variance() {
        let set = Arc::new(ActionSet::new(ActionSetSpec::TopM { d: 5, m: 2 }).unwrap());
        let mu = vec![0.3, 0.6, 0.5, 0.1, 0.59];
        let mut s = AgentState::from_statistics(
            AgentKind::Escb { lambda: 1.0 },
            set.clone(),
            0.5,
            vec![u64::MAX / 4; 5],
            mu.clone(),
            1_000_000,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let sel = s.select_action(&mut rng).unwrap();
        assert_eq!(sel.action, set.argmax_linear(&mu).unwrap());
    }

    #[test]
    fn escb_explores_undersampled_actions() {
        let set = two_block(4);
        let mut s = AgentState::from_statistics(
            AgentKind::Escb { lambda: 1.0 },
            set,
            0.5,
            vec![1, 1, 1000, 1000],
            vec![0.6, 0.6, 0.7, 0.7],
            2000,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            s.select_action(&mut rng).unwrap().action,
            Action::from_items(4, &[0, 1])
        );
    }

    #[test]
    fn count_identities_over_runs() {
        let set = Arc::new(ActionSet::new(ActionSetSpec::TopM { d: 5, m: 2 }).unwrap());
        let mu = [0.2, 0.8, 0.5, 0.6, 0.3];
        for kind in [
            AgentKind::BCts {
                prior: BetaPrior::Jeffreys,
            },
            AgentKind::GCts,
            bg(),
            AgentKind::Escb { lambda: 1.0 },
        ] {
            let mut s = AgentState::new(kind, set.clone(), 0.5).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            for _ in 0..2000 {
                let sel = s.select_action(&mut rng).unwrap();
                let y: Vec<f64> = (0..5)
                    .map(|i| {
                        if sel.action.contains(i) && rng.random::<f64>() < mu[i] {
                            1.0
                        } else {
                            0.0
                        }
                    })
                    .collect();
                s.update(&sel.action, &y).unwrap();
                assert!(s.count_identities_hold());
            }
        }
    }

    #[test]
    fn agent_config_json() {
        let spec: AgentSpec = serde_json::from_str(r#"{"agent":"bg-cts","lambda":1.0}"#).unwrap();
        assert_eq!(spec.kind, bg());
        assert_eq!(spec.label(), "bg-cts");
        let spec: AgentSpec =
            serde_json::from_str(r#"{"agent":"b-cts","prior":"jeffreys"}"#).unwrap();
        assert_eq!(spec.label(), "b-cts-jeffreys");
        let spec: AgentSpec =
            serde_json::from_str(r#"{"agent":"escb","sigma":0.25,"label":"E"}"#).unwrap();
        assert_eq!(spec.kind, AgentKind::Escb { lambda: 1.0 });
        assert_eq!(spec.sigma, Some(0.25));
        assert_eq!(spec.label(), "E");
        let spec: AgentSpec = serde_json::from_str(r#"{"agent":"b-cts"}"#).unwrap();
        assert_eq!(
            spec.kind,
            AgentKind::BCts {
                prior: BetaPrior::Uniform
            }
        );
        assert!(serde_json::from_str::<AgentSpec>(r#"{"agent":"cucb"}"#).is_err());
    }
}
