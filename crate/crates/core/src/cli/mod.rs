//! Scenario runner: loads a JSON scenario, runs one registered study and
//! writes `<out>/<study>.csv` plus `<out>/<study>-summary.json`.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 4 a claimed inequality failed (all data is still written).

pub mod config;
pub mod output;
pub mod studies;

use std::path::{Path, PathBuf};
use std::time::Instant;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::error::Error;
use crate::model::OscillatorBathModel;
use crate::par::Execution;
pub use config::{Scenario, STUDIES};
use output::{Status, Summary, Timing, Verdict};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("numerical failure: {0}")]
    Numerical(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidModel(_)
            | Error::InvalidRecipe(_)
            | Error::PositivityViolation { .. }
            | Error::UnphysicalInitialState { .. } => CliError::Config(e.to_string()),
            other => CliError::Numerical(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

/// Short content hash of a model, stable across runs.
pub fn model_hash(model: &OscillatorBathModel) -> String {
    let json = serde_json::to_string(model).expect("model serializes");
    hex::encode(Sha256::digest(json.as_bytes()))[..16].to_owned()
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub study: String,
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub exec: Execution,
    pub threads: usize,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub csv_path: PathBuf,
    pub summary_path: PathBuf,
    pub verdicts: Vec<Verdict>,
}

impl RunReport {
    pub fn violated(&self) -> bool {
        self.verdicts.iter().any(|v| v.status == Status::Violated)
    }

    pub fn exit_code(&self) -> i32 {
        if self.violated() {
            4
        } else {
            0
        }
    }
}

pub fn run_file(config: &Path, opts: &RunOptions) -> Result<RunReport, CliError> {
    let scenario = Scenario::load(config)?;
    run(&scenario, opts)
}

pub fn run(scenario: &Scenario, opts: &RunOptions) -> Result<RunReport, CliError> {
    if !STUDIES.contains(&opts.study.as_str()) {
        return Err(CliError::Config(format!(
            "unknown study {:?}; expected one of {}",
            opts.study,
            STUDIES.join(", ")
        )));
    }
    if let Some(s) = &scenario.study {
        if s != &opts.study {
            return Err(CliError::Config(format!(
                "configuration is for study {s:?}, not {:?}",
                opts.study
            )));
        }
    }
    let start = Instant::now();
    let out_dir = opts
        .out_dir
        .clone()
        .or_else(|| scenario.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let ctx = studies::Context::new(scenario, opts.seed.or(scenario.seed).unwrap_or(0), opts.exec)?;
    let result = studies::run_study(&opts.study, &ctx)?;

    std::fs::create_dir_all(&out_dir).map_err(|e| CliError::Io(format!("{}: {e}", out_dir.display())))?;
    let csv_path = out_dir.join(format!("{}.csv", opts.study));
    result.table.write(&csv_path)?;
    for (name, text) in &result.extra_files {
        let p = out_dir.join(name);
        std::fs::write(&p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
    }
    let summary = Summary {
        scenario,
        study: &opts.study,
        model_hash: &ctx.hash,
        verdicts: &result.verdicts,
        timing: Timing {
            wall_seconds: start.elapsed().as_secs_f64(),
            threads: opts.threads,
        },
    };
    let summary_path = out_dir.join(format!("{}-summary.json", opts.study));
    let text = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Io(e.to_string()))?;
    std::fs::write(&summary_path, text + "\n")
        .map_err(|e| CliError::Io(format!("{}: {e}", summary_path.display())))?;
    Ok(RunReport {
        csv_path,
        summary_path,
        verdicts: result.verdicts,
    })
}
