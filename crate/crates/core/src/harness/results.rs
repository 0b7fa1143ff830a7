use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{checkpoint_grid, ExperimentConfig};
use super::{run_regret, CellSeed, HarnessError, Instance, Result};

pub const CSV_HEADER: [&str; 4] = ["agent", "rep", "t", "cum_regret"];

pub const COMMON_RANDOM_NUMBERS_NOTE: &str =
    "common random numbers: within a replication every agent reads the same \
     environment reward stream; algorithm noise uses one stream per agent";

/// One checkpoint of one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub agent: String,
    pub rep: u64,
    pub t: u64,
    pub cum_regret: f64,
}

/// Mean and sample standard deviation across replications at a checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub agent: String,
    pub t: u64,
    pub reps: u64,
    pub mean: f64,
    /// Zero when a single replication is available.
    pub std: f64,
}

/// Long-format regret table.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultsTable {
    pub rows: Vec<ResultRow>,
}

impl ResultsTable {
    /// Aggregates per (agent, t): agents in order of first appearance, `t`
    /// ascending, replications summed in row order.
    pub fn aggregate(&self) -> Vec<AggregateRow> {
        let mut agents: Vec<&str> = Vec::new();
        let mut groups: Vec<std::collections::BTreeMap<u64, Vec<f64>>> = Vec::new();
        for row in &self.rows {
            let k = match agents.iter().position(|&a| a == row.agent) {
                Some(k) => k,
                None => {
                    agents.push(&row.agent);
                    groups.push(Default::default());
                    agents.len() - 1
                }
            };
            groups[k].entry(row.t).or_default().push(row.cum_regret);
        }
        let mut out = Vec::new();
        for (agent, group) in agents.iter().zip(groups) {
            for (t, values) in group {
                let n = values.len() as f64;
                let mean = values.iter().sum::<f64>() / n;
                let std = if values.len() > 1 {
                    (values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
                } else {
                    0.0
                };
                out.push(AggregateRow {
                    agent: agent.to_string(),
                    t,
                    reps: values.len() as u64,
                    mean,
                    std,
                });
            }
        }
        out
    }

    /// Mean cumulative regret of `agent` at the largest checkpoint.
    pub fn final_mean(&self, agent: &str) -> Option<f64> {
        self.aggregate()
            .into_iter()
            .rev()
            .find(|a| a.agent == agent)
            .map(|a| a.mean)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> std::result::Result<(), csv::Error> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(writer);
        w.write_record(CSV_HEADER)?;
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("CSV output is UTF-8")
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let csv_err = |source| HarnessError::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
        let header = reader.headers().map_err(csv_err)?;
        if header.iter().ne(CSV_HEADER) {
            return Err(HarnessError::MalformedResults {
                path: path.to_path_buf(),
                reason: format!(
                    "expected header {}, found {}",
                    CSV_HEADER.join(","),
                    header.iter().collect::<Vec<_>>().join(",")
                ),
            });
        }
        let rows = reader
            .deserialize()
            .collect::<std::result::Result<Vec<ResultRow>, _>>()
            .map_err(csv_err)?;
        Ok(Self { rows })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub agent: String,
    pub rep: u64,
    pub error: String,
}

/// Sidecar describing a results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsMetadata {
    /// Configuration without `parallelism` and `output`.
    pub config: ExperimentConfig,
    pub d: usize,
    pub m: usize,
    pub common_random_numbers: String,
    pub aggregates: Vec<AggregateRow>,
    pub failures: Vec<CellFailure>,
}

impl ResultsMetadata {
    pub fn read(path: &Path) -> Result<Self> {
        read_json(path)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    /// Long-format CSV plus a `.json` sidecar next to it.
    Csv,
    /// A single JSON document holding the metadata and the rows.
    Json,
}

impl ExportFormat {
    /// JSON when the path ends in `.json`, CSV otherwise.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => ExportFormat::Json,
            _ => ExportFormat::Csv,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ResultsDocument {
    metadata: ResultsMetadata,
    rows: Vec<ResultRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub config: ExperimentConfig,
    pub d: usize,
    pub m: usize,
    pub table: ResultsTable,
    /// Cells that returned an error; their rows are absent from the table.
    pub failures: Vec<CellFailure>,
}

impl ExperimentOutcome {
    pub fn metadata(&self) -> ResultsMetadata {
        ResultsMetadata {
            config: self.config.reproducible_part(),
            d: self.d,
            m: self.m,
            common_random_numbers: COMMON_RANDOM_NUMBERS_NOTE.into(),
            aggregates: self.table.aggregate(),
            failures: self.failures.clone(),
        }
    }

    /// Sidecar path used by the CSV format.
    pub fn sidecar_path(path: &Path) -> PathBuf {
        path.with_extension("json")
    }

    /// Writes the results; returns the paths written.
    pub fn export(&self, path: &Path, format: ExportFormat) -> Result<Vec<PathBuf>> {
        match format {
            ExportFormat::Csv => {
                let sidecar = Self::sidecar_path(path);
                if sidecar == path {
                    return Err(HarnessError::InvalidConfig(format!(
                        "CSV output {} would be overwritten by its sidecar",
                        path.display()
                    )));
                }
                let file = create(path)?;
                self.table
                    .write_csv(file)
                    .map_err(|source| HarnessError::Csv {
                        path: path.to_path_buf(),
                        source,
                    })?;
                write_json(&sidecar, &self.metadata())?;
                Ok(vec![path.to_path_buf(), sidecar])
            }
            ExportFormat::Json => {
                let doc = ResultsDocument {
                    metadata: self.metadata(),
                    rows: self.table.rows.clone(),
                };
                write_json(path, &doc)?;
                Ok(vec![path.to_path_buf()])
            }
        }
    }

    /// Reads back an export; for CSV the sidecar must sit next to the file.
    pub fn import(path: &Path, format: ExportFormat) -> Result<Self> {
        let (metadata, table) = match format {
            ExportFormat::Csv => (
                ResultsMetadata::read(&Self::sidecar_path(path))?,
                ResultsTable::read_csv(path)?,
            ),
            ExportFormat::Json => {
                let doc: ResultsDocument = read_json(path)?;
                (doc.metadata, ResultsTable { rows: doc.rows })
            }
        };
        Ok(Self {
            config: metadata.config,
            d: metadata.d,
            m: metadata.m,
            table,
            failures: metadata.failures,
        })
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut file = create(path)?;
    serde_json::to_writer_pretty(&mut file, value).map_err(|source| HarnessError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    file.write_all(b"\n")
        .and_then(|_| file.flush())
        .map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| HarnessError::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Runs every (agent, replication) cell of the grid. Output depends only on
/// the reproducible part of the config, whatever the parallelism.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    config.validate()?;
    let instance = Instance::from_specs(&config.action_set, &config.env)?;
    for agent in &config.agents {
        instance.agent(agent)?;
    }
    let grid = checkpoint_grid(config.horizon, config.thin);
    let cells: Vec<(usize, u64)> = (0..config.agents.len())
        .flat_map(|k| (0..config.replications).map(move |rep| (k, rep)))
        .collect();
    let run_cell = |&(k, rep): &(usize, u64)| {
        let seed = CellSeed::new(config.seed, rep, k as u16);
        run_regret(&instance, &config.agents[k], config.horizon, seed, &grid)
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = config.parallelism {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| HarnessError::ThreadPool(e.to_string()))?;
    let results: Vec<Result<Vec<f64>>> = pool.install(|| cells.par_iter().map(run_cell).collect());

    let labels: Vec<String> = config.agents.iter().map(|a| a.label()).collect();
    let mut table = ResultsTable::default();
    let mut failures = Vec::new();
    for (&(k, rep), result) in cells.iter().zip(results) {
        match result {
            Ok(values) => table
                .rows
                .extend(grid.iter().zip(values).map(|(&t, cum_regret)| ResultRow {
                    agent: labels[k].clone(),
                    rep,
                    t,
                    cum_regret,
                })),
            Err(e) => failures.push(CellFailure {
                agent: labels[k].clone(),
                rep,
                error: e.to_string(),
            }),
        }
    }
    Ok(ExperimentOutcome {
        config: config.clone(),
        d: instance.actions().dim(),
        m: instance.actions().max_size(),
        table,
        failures,
    })
}
