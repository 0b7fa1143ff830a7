//! Episode and experiment orchestration.
//!
//! One step of an episode: draw the full reward vector `X(t)` from the
//! environment stream, let the agent select `A(t)` using its own noise stream,
//! deliver the masked feedback `Y(t) = A(t) ⊙ X(t)`, update the agent and
//! accumulate the pseudo-regret `Δ(t)`. All agents of a replication read the
//! same environment stream, so their reward draws coincide step by step.

mod config;
mod results;

use std::path::PathBuf;
use std::sync::Arc;

use thiserror::Error;

use crate::agents::{AgentError, AgentKind, AgentSpec, AgentState, SelectionDetail};
use crate::combinat::{Action, ActionSet, ActionSetSpec, CombinatError};
use crate::envs::{self, EnvError, EnvModel, GapStructure};
use crate::rng::{self, Role};

pub use config::{checkpoint_grid, ExperimentConfig, DEFAULT_THIN};
pub use results::{
    run_experiment, AggregateRow, CellFailure, ExperimentOutcome, ExportFormat, ResultRow,
    ResultsMetadata, ResultsTable, COMMON_RANDOM_NUMBERS_NOTE,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Combinat(#[from] CombinatError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("malformed results file {path}: {reason}")]
    MalformedResults { path: PathBuf, reason: String },
    #[error("could not build the worker pool: {0}")]
    ThreadPool(String),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

/// An action set, a reward model on it, and the exact gaps.
#[derive(Debug, Clone)]
pub struct Instance {
    actions: Arc<ActionSet>,
    env: EnvModel,
    gaps: GapStructure,
}

impl Instance {
    pub fn new(actions: ActionSet, env: EnvModel) -> Result<Self> {
        let gaps = envs::gaps(&env, &actions)?;
        Ok(Self {
            actions: Arc::new(actions),
            env,
            gaps,
        })
    }

    pub fn from_specs(actions: &ActionSetSpec, env: &envs::EnvSpec) -> Result<Self> {
        Self::new(ActionSet::new(actions.clone())?, EnvModel::from_spec(env)?)
    }

    pub fn actions(&self) -> &Arc<ActionSet> {
        &self.actions
    }

    pub fn env(&self) -> &EnvModel {
        &self.env
    }

    pub fn gaps(&self) -> &GapStructure {
        &self.gaps
    }

    /// `Δ_A`, computed exactly as in the gap structure.
    pub fn gap(&self, action: &Action) -> f64 {
        self.gaps.optimal_value - action.dot(self.env.mu_star())
    }

    /// Fresh agent state; `σ` defaults to the environment's.
    pub fn agent(&self, spec: &AgentSpec) -> Result<AgentState> {
        let sigma = spec.sigma.unwrap_or(self.env.sigma());
        Ok(AgentState::new(
            spec.kind.clone(),
            self.actions.clone(),
            sigma,
        )?)
    }
}

/// Coordinates of one (agent, replication) cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellSeed {
    pub master: u64,
    pub replication: u64,
    /// Position of the agent in the roster; selects its noise stream.
    pub agent_index: u16,
}

impl CellSeed {
    pub fn new(master: u64, replication: u64, agent_index: u16) -> Self {
        Self {
            master,
            replication,
            agent_index,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: u64,
    pub action: Action,
    /// Full reward vector `X(t)`.
    pub rewards: Vec<f64>,
    /// Feedback `Y(t) = A(t) ⊙ X(t)`.
    pub observed: Vec<f64>,
    pub gap: f64,
    pub cum_regret: f64,
    pub detail: SelectionDetail,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub label: String,
    pub agent: AgentKind,
    pub sigma: f64,
    pub seed: CellSeed,
    pub horizon: u64,
    pub steps: Vec<StepRecord>,
}

impl RunTrace {
    pub fn final_regret(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.cum_regret)
    }
}

/// Borrowed view of a step handed to episode observers.
struct StepView<'a> {
    t: u64,
    action: &'a Action,
    rewards: &'a [f64],
    observed: &'a [f64],
    gap: f64,
    cum_regret: f64,
    detail: SelectionDetail,
}

/// Where the agent's randomness comes from.
enum Noise<'a> {
    Stream(Box<rng::StreamRng>),
    /// Gaussian policies only: `Z(t)` supplied by the caller.
    Injected(&'a mut dyn FnMut(u64) -> Vec<f64>),
}

fn drive(
    instance: &Instance,
    state: &mut AgentState,
    seed: CellSeed,
    horizon: u64,
    mut noise: Noise<'_>,
    mut observe: impl FnMut(StepView<'_>),
) -> Result<()> {
    let mut env_rng = rng::stream(seed.master, seed.replication, Role::Env);
    let d = instance.env.dim();
    let mut rewards = vec![0.0; d];
    let mut observed = vec![0.0; d];
    let mut cum_regret = 0.0;
    for t in 1..=horizon {
        instance.env.sample_into(&mut env_rng, &mut rewards);
        let selection = match &mut noise {
            Noise::Stream(rng) => state.select_action(rng.as_mut())?,
            Noise::Injected(z) => state.select_with_noise(z(t))?,
        };
        observed.fill(0.0);
        for &i in selection.action.items() {
            observed[i] = rewards[i];
        }
        state.update(&selection.action, &observed)?;
        let gap = instance.gap(&selection.action);
        cum_regret += gap;
        observe(StepView {
            t,
            action: &selection.action,
            rewards: &rewards,
            observed: &observed,
            gap,
            cum_regret,
            detail: selection.detail,
        });
    }
    Ok(())
}

fn agent_stream(seed: CellSeed) -> Noise<'static> {
    Noise::Stream(Box::new(rng::stream(
        seed.master,
        seed.replication,
        Role::Agent(seed.agent_index),
    )))
}

/// Full trace of one episode of `horizon` steps (initialization included).
pub fn run_episode(
    instance: &Instance,
    agent: &AgentSpec,
    horizon: u64,
    seed: CellSeed,
) -> Result<RunTrace> {
    trace_episode(instance, agent, horizon, seed, agent_stream(seed))
}

/// As [`run_episode`] for a Gaussian policy whose noise vectors `Z(t)` come
/// from `z` instead of the agent stream; rewards still follow `seed`.
pub fn run_episode_with_noise(
    instance: &Instance,
    agent: &AgentSpec,
    horizon: u64,
    seed: CellSeed,
    z: &mut dyn FnMut(u64) -> Vec<f64>,
) -> Result<RunTrace> {
    trace_episode(instance, agent, horizon, seed, Noise::Injected(z))
}

fn trace_episode(
    instance: &Instance,
    agent: &AgentSpec,
    horizon: u64,
    seed: CellSeed,
    noise: Noise<'_>,
) -> Result<RunTrace> {
    let mut state = instance.agent(agent)?;
    let sigma = state.sigma();
    let mut steps = Vec::with_capacity(horizon as usize);
    drive(instance, &mut state, seed, horizon, noise, |v| {
        steps.push(StepRecord {
            t: v.t,
            action: v.action.clone(),
            rewards: v.rewards.to_vec(),
            observed: v.observed.to_vec(),
            gap: v.gap,
            cum_regret: v.cum_regret,
            detail: v.detail,
        })
    })?;
    Ok(RunTrace {
        label: agent.label(),
        agent: agent.kind.clone(),
        sigma,
        seed,
        horizon,
        steps,
    })
}

/// Cumulative regret at each checkpoint (sorted, within `1..=horizon`)
/// without keeping the trace.
pub fn run_regret(
    instance: &Instance,
    agent: &AgentSpec,
    horizon: u64,
    seed: CellSeed,
    checkpoints: &[u64],
) -> Result<Vec<f64>> {
    let mut state = instance.agent(agent)?;
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut next = checkpoints.iter().peekable();
    drive(
        instance,
        &mut state,
        seed,
        horizon,
        agent_stream(seed),
        |v| {
            while next.next_if(|&&c| c == v.t).is_some() {
                out.push(v.cum_regret);
            }
        },
    )?;
    Ok(out)
}
