//! Monte-Carlo verification of the event machinery behind the BG-CTS regret
//! analysis, and of the concentration inequalities it relies on.
//!
//! Diagnostics are white-box: they read `μ⋆`, `A⋆`, the full reward vectors
//! and the Gaussian noise stream from the trace.

mod azuma;
mod events;
pub mod stats;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::AgentError;
use crate::harness::HarnessError;
use crate::schedules::ScheduleError;

pub use azuma::{azuma_mc_verify, AzumaMode, AzumaReport};
pub use events::{
    evaluate_flags, event_bound, event_rate_study, instrument_run, optimistic_count_check,
    w_increment_check, EventFlags, EventKind, FlagSeries, InstrumentedRun, StudyConfig,
};

/// Acceptance margin in Monte-Carlo standard errors.
pub const MC_MARGIN: f64 = 4.0;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("diagnostics need a Gaussian Thompson sampler, got {0}")]
    UnsupportedAgent(String),
    #[error("{reps} replications are too few: bound·reps must reach 10 at some grid point (needs {needed})")]
    InsufficientReps { reps: u64, needed: u64 },
    #[error("invalid delta {0}: need δ > 0 for the upper tail or 0 ≤ δ < 1 for the lower tail")]
    InvalidDelta(f64),
    #[error("invalid success probabilities: {0}")]
    InvalidProbabilities(String),
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),
    #[error("unknown event {0:?}; expected one of A, B, C, D, E, F, G, H, Z")]
    UnknownEvent(String),
    #[error("could not build the worker pool: {0}")]
    ThreadPool(String),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

pub type Result<T> = std::result::Result<T, DiagnosticsError>;

/// How an empirical frequency is compared with its reference value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundDirection {
    /// `p̂ ≤ bound + 4·SE`.
    #[default]
    Upper,
    /// `|p̂ − bound| ≤ 4·SE`; the reference is an exact probability.
    TwoSided,
}

/// Empirical frequency of an event against its theoretical value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub event: String,
    pub t: u64,
    pub reps: u64,
    pub frequency: f64,
    pub std_error: f64,
    pub bound: Option<f64>,
    pub pass: Option<bool>,
    #[serde(skip)]
    pub direction: BoundDirection,
}

impl BoundReport {
    pub fn new(event: impl Into<String>, t: u64, hits: u64, reps: u64, bound: Option<f64>) -> Self {
        Self::with_direction(event, t, hits, reps, bound, BoundDirection::Upper)
    }

    pub fn with_direction(
        event: impl Into<String>,
        t: u64,
        hits: u64,
        reps: u64,
        bound: Option<f64>,
        direction: BoundDirection,
    ) -> Self {
        let frequency = if reps == 0 {
            0.0
        } else {
            hits as f64 / reps as f64
        };
        let std_error = if reps == 0 {
            0.0
        } else {
            stats::binomial_std_error(frequency, reps)
        };
        let pass = bound.map(|b| match direction {
            BoundDirection::Upper => frequency <= b + MC_MARGIN * std_error,
            BoundDirection::TwoSided => (frequency - b).abs() <= MC_MARGIN * std_error,
        });
        Self {
            event: event.into(),
            t,
            reps,
            frequency,
            std_error,
            bound,
            pass,
            direction,
        }
    }

    /// One-line human summary.
    pub fn summary(&self) -> String {
        let verdict = match self.pass {
            Some(true) => "pass",
            Some(false) => "FAIL",
            None => "info",
        };
        let bound = self.bound.map_or("-".to_string(), |b| format!("{b:.3e}"));
        format!(
            "{verdict}: {} t={} reps={} freq={:.3e} se={:.1e} bound={bound}",
            self.event, self.t, self.reps, self.frequency, self.std_error
        )
    }
}

/// CSV with header `event,t,reps,frequency,std_error,bound,pass`.
pub fn reports_to_csv(reports: &[BoundReport]) -> String {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record([
        "event",
        "t",
        "reps",
        "frequency",
        "std_error",
        "bound",
        "pass",
    ])
    .and_then(|_| reports.iter().try_for_each(|r| w.serialize(r)))
    .expect("writing to memory cannot fail");
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV output is UTF-8")
}
