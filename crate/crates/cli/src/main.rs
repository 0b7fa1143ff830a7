//! `cts-lab`: run experiments, event diagnostics and bound calculators.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use cts_core::agents::AgentSpec;
use cts_core::combinat::ActionSetSpec;
use cts_core::diagnostics::{self, EventKind, StudyConfig};
use cts_core::envs::EnvSpec;
use cts_core::harness::{self, ExperimentConfig, ExperimentOutcome, ExportFormat};
use cts_core::schedules::{self, BoundInputs, C6Choice, Constants};
use serde::Deserialize;
use serde_json::json;
use thiserror::Error;

#[derive(Parser)]
#[command(
    name = "cts-lab",
    version,
    about = "Combinatorial semi-bandit simulation lab"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment grid and export the regret curves.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output file; `.json` selects the JSON document format. Overrides
        /// the config's `output`. Without either, CSV goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        parallel: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Monte-Carlo frequency of an analysis event against its bound, as CSV.
    Diagnose {
        /// One of A (clean-run complement), B, C, D, E, F, G, H, Z.
        #[arg(long)]
        event: String,
        #[arg(long, value_delimiter = ',', required = true)]
        t_grid: Vec<u64>,
        #[arg(long)]
        reps: u64,
        /// Items of the default two-block instance.
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        /// JSON with `action_set`, `env` and optionally `agent`, replacing the
        /// default instance.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        parallel: Option<usize>,
        #[arg(long, value_enum, default_value_t = C6Arg::HalfC4)]
        c6: C6Arg,
    },
    /// Print the analysis constants as JSON.
    Constants {
        #[arg(long, value_enum, default_value_t = C6Arg::HalfC4)]
        c6: C6Arg,
    },
    /// Print the BG-CTS regret upper bound and the B-CTS lower bound as JSON.
    Bound {
        #[arg(long = "T")]
        horizon: u64,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        delta_min: f64,
        /// Defaults to `delta_min`.
        #[arg(long)]
        delta_max: Option<f64>,
        #[arg(long)]
        sigma: f64,
        #[arg(long, value_enum, default_value_t = C6Arg::HalfC4)]
        c6: C6Arg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum C6Arg {
    HalfC4,
    HalfC2,
}

impl From<C6Arg> for C6Choice {
    fn from(c: C6Arg) -> Self {
        match c {
            C6Arg::HalfC4 => C6Choice::HalfC4,
            C6Arg::HalfC2 => C6Choice::HalfC2,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StudyFile {
    action_set: ActionSetSpec,
    env: EnvSpec,
    #[serde(default)]
    agent: Option<AgentSpec>,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error("{count} experiment cell(s) failed; completed cells were exported")]
    PartialFailure {
        count: usize,
        failures: serde_json::Value,
    },
    #[error("writing output: {0}")]
    Output(#[from] std::io::Error),
    #[error(transparent)]
    Core(#[from] cts_core::Error),
}

impl CliError {
    fn to_json(&self) -> serde_json::Value {
        let kind = match self {
            CliError::Read { .. } => "io",
            CliError::Parse { .. } => "config",
            CliError::Usage(_) => "usage",
            CliError::PartialFailure { .. } => "partial-failure",
            CliError::Output(_) => "io",
            CliError::Core(e) => e.kind(),
        };
        let mut value = json!({ "error": kind, "message": self.to_string() });
        if let CliError::PartialFailure { failures, .. } = self {
            value["failures"] = failures.clone();
        }
        value
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn core<T, E: Into<cts_core::Error>>(r: std::result::Result<T, E>) -> Result<T> {
    r.map_err(|e| CliError::Core(e.into()))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CliError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value).map_err(std::io::Error::from)?;
    writeln!(out)?;
    Ok(())
}

fn run(
    config: &Path,
    out: Option<PathBuf>,
    parallel: Option<usize>,
    seed: Option<u64>,
) -> Result<()> {
    let mut cfg: ExperimentConfig = read_json(config)?;
    if parallel.is_some() {
        cfg.parallelism = parallel;
    }
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let output = out.or_else(|| cfg.output.clone());
    let outcome: ExperimentOutcome = core(harness::run_experiment(&cfg))?;
    match &output {
        Some(path) => {
            let written = core(outcome.export(path, ExportFormat::from_path(path)))?;
            for p in written {
                eprintln!("wrote {}", p.display());
            }
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            outcome
                .table
                .write_csv(&mut stdout)
                .map_err(|e| CliError::Output(std::io::Error::other(e)))?;
        }
    }
    for agent in &cfg.agents {
        let label = agent.label();
        if let Some(mean) = outcome.table.final_mean(&label) {
            eprintln!("{label}: mean final regret {mean:.3}");
        }
    }
    if !outcome.failures.is_empty() {
        return Err(CliError::PartialFailure {
            count: outcome.failures.len(),
            failures: serde_json::to_value(&outcome.failures).map_err(std::io::Error::from)?,
        });
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn diagnose(
    event: &str,
    t_grid: &[u64],
    reps: u64,
    d: usize,
    lambda: f64,
    config: Option<PathBuf>,
    seed: u64,
    parallel: Option<usize>,
    c6: C6Choice,
) -> Result<()> {
    let event: EventKind = core(event.parse::<EventKind>())?;
    let mut study = match config {
        Some(path) => {
            let file: StudyFile = read_json(&path)?;
            let mut study = StudyConfig::two_block(2, lambda);
            study.action_set = file.action_set;
            study.env = file.env;
            if let Some(agent) = file.agent {
                study.agent = agent;
            }
            study
        }
        None => {
            if d < 2 || !d.is_multiple_of(2) {
                return Err(CliError::Usage(format!(
                    "--d must be even and at least 2, got {d}"
                )));
            }
            StudyConfig::two_block(d, lambda)
        }
    };
    study.constants = Constants::new(c6);
    let reports = core(diagnostics::event_rate_study(
        &study, event, t_grid, reps, seed, parallel,
    ))?;
    print!("{}", diagnostics::reports_to_csv(&reports));
    Ok(())
}

fn bound(inputs: BoundInputs, c6: C6Choice) -> Result<()> {
    let constants = Constants::new(c6);
    let upper = core(schedules::theorem_bound(&inputs, &constants))?;
    let lower = schedules::bcts_lower_bound(inputs.m, inputs.delta_min, inputs.horizon);
    print_json(&json!({
        "inputs": inputs,
        "bg_cts_upper_bound": upper,
        "b_cts_lower_bound": {
            "value": lower,
            "p": schedules::bcts_escape_probability(inputs.m, inputs.delta_min),
        },
    }))
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            out,
            parallel,
            seed,
        } => run(&config, out, parallel, seed),
        Command::Diagnose {
            event,
            t_grid,
            reps,
            d,
            lambda,
            config,
            seed,
            parallel,
            c6,
        } => diagnose(
            &event,
            &t_grid,
            reps,
            d,
            lambda,
            config,
            seed,
            parallel,
            c6.into(),
        ),
        Command::Constants { c6 } => print_json(&Constants::new(c6.into())),
        Command::Bound {
            horizon,
            m,
            d,
            delta_min,
            delta_max,
            sigma,
            c6,
        } => bound(
            BoundInputs {
                horizon,
                m,
                d,
                delta_min,
                delta_max: delta_max.unwrap_or(delta_min),
                sigma,
            },
            c6.into(),
        ),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.render().to_string();
            eprintln!(
                "{}",
                json!({ "error": "usage", "message": message.trim_end() })
            );
            return ExitCode::from(2);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::FAILURE
        }
    }
}
