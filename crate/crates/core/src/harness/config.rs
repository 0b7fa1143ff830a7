use std::collections::BTreeSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::{HarnessError, Result};
use crate::agents::AgentSpec;
use crate::combinat::ActionSetSpec;
use crate::envs::EnvSpec;
use crate::rng::MAX_REPLICATION;

pub const DEFAULT_THIN: u64 = 10;

fn default_thin() -> u64 {
    DEFAULT_THIN
}

/// Experiment grid read from JSON:
///
/// ```json
/// {
///   "action_set": {"kind": "two-block", "d": 50},
///   "env": {"family": "bernoulli", "mu": {"blocks": [[25, 0.7], [25, 0.9]]}},
///   "agents": [{"agent": "b-cts"}, {"agent": "bg-cts", "lambda": 1.0}],
///   "horizon": 5000,
///   "replications": 50,
///   "seed": 42
/// }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub action_set: ActionSetSpec,
    pub env: EnvSpec,
    pub agents: Vec<AgentSpec>,
    pub horizon: u64,
    pub replications: u64,
    pub seed: u64,
    /// Worker threads; all available cores when absent. Never affects results.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parallelism: Option<usize>,
    /// Checkpoint spacing of the exported regret curves; 1 keeps every step.
    #[serde(default = "default_thin")]
    pub thin: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(HarnessError::InvalidConfig(msg));
        if self.horizon == 0 {
            return fail("horizon must be at least 1".into());
        }
        if self.replications == 0 || self.replications - 1 > MAX_REPLICATION {
            return fail(format!(
                "replications must be in 1..={}",
                MAX_REPLICATION + 1
            ));
        }
        if self.agents.is_empty() {
            return fail("at least one agent is required".into());
        }
        if self.agents.len() >= usize::from(u16::MAX) {
            return fail(format!("too many agents ({})", self.agents.len()));
        }
        if self.thin == 0 {
            return fail("thin must be at least 1".into());
        }
        if self.parallelism == Some(0) {
            return fail("parallelism must be at least 1".into());
        }
        let mut labels = BTreeSet::new();
        for agent in &self.agents {
            let label = agent.label();
            if label.is_empty() || label.contains([',', '"', '\n', '\r']) {
                return fail(format!("agent label {label:?} is empty or not CSV-safe"));
            }
            if !labels.insert(label.clone()) {
                return fail(format!(
                    "duplicate agent label {label:?}; set \"label\" to disambiguate"
                ));
            }
        }
        Ok(())
    }

    /// The fields that determine results, i.e. without parallelism and output.
    pub fn reproducible_part(&self) -> Self {
        Self {
            parallelism: None,
            output: None,
            ..self.clone()
        }
    }
}

/// Steps `t ≤ horizon` with `t % thin == 0`, plus `horizon` itself.
pub fn checkpoint_grid(horizon: u64, thin: u64) -> Vec<u64> {
    let thin = thin.max(1);
    let mut grid: Vec<u64> = (1..=horizon / thin).map(|k| k * thin).collect();
    if !horizon.is_multiple_of(thin) {
        grid.push(horizon);
    }
    grid
}
