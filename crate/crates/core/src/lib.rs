//! Combinatorial semi-bandit simulation lab: action sets, reward models,
//! Thompson-sampling and ESCB policies, confidence schedules, event
//! diagnostics and a reproducible replication harness.

pub mod agents;
pub mod combinat;
pub mod diagnostics;
pub mod envs;
pub mod harness;
pub mod rng;
pub mod schedules;

pub use agents::{
    AgentError, AgentKind, AgentSpec, AgentState, BetaPrior, Selection, SelectionDetail,
};
pub use combinat::{Action, ActionSet, ActionSetSpec, CombinatError};
pub use diagnostics::{BoundReport, DiagnosticsError};
pub use envs::{EnvError, EnvModel, EnvSpec, GapStructure, RewardFamily};
pub use harness::{ExperimentConfig, HarnessError, Instance, ResultsTable, RunTrace};
pub use schedules::{Constants, ScheduleConfig, ScheduleError};

/// Any error raised by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Combinat(#[from] CombinatError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
}

impl Error {
    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Combinat(_) => "combinat",
            Error::Env(_) => "env",
            Error::Agent(_) => "agent",
            Error::Schedule(_) => "schedule",
            Error::Harness(_) => "harness",
            Error::Diagnostics(_) => "diagnostics",
        }
    }
}
