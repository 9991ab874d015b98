//! Orchestration of GAMES experiments: synthetic data, training,
//! representative-day selection, planning runs and comparison reports.

pub mod config;
pub mod pipeline;
pub mod report;
pub mod synth;

use std::fmt;

use thiserror::Error;

use games_core::dataset::DatasetError;
use games_core::games::GamesError;
use games_core::gtep::GtepError;
use games_core::repdays::RepdaysError;
use games_solver::SolveStatus;

pub use config::{stage_seed, DataSource, ExperimentConfig, SolverSettings, STAGES};
pub use pipeline::{run_pipeline, run_stage, Manifest};
pub use report::report_plots;
pub use synth::{generate_synthetic, SynthParams};

/// Broad failure class, mapped to the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    Input,
    Infeasible,
    Numerical,
    Io,
}

impl fmt::Display for FailureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FailureKind::Input => "input",
            FailureKind::Infeasible => "infeasible",
            FailureKind::Numerical => "numerical",
            FailureKind::Io => "io",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("stage {stage} failed ({kind}): {message}")]
    Stage { stage: String, kind: FailureKind, message: String },
}

impl CliError {
    pub fn stage(stage: &str, kind: FailureKind, message: impl fmt::Display) -> Self {
        CliError::Stage { stage: stage.to_string(), kind, message: message.to_string() }
    }

    /// 0 success, 2 configuration or input error, 3 infeasible model,
    /// 4 numerical failure, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Stage { kind, .. } => match kind {
                FailureKind::Input => 2,
                FailureKind::Infeasible => 3,
                FailureKind::Numerical => 4,
                FailureKind::Io => 1,
            },
        }
    }
}

/// Assigns a failure class to library errors.
pub trait Classify {
    fn kind(&self) -> FailureKind;
}

impl Classify for GamesError {
    fn kind(&self) -> FailureKind {
        match self {
            GamesError::Overflow => FailureKind::Numerical,
            GamesError::Checkpoint { .. } => FailureKind::Io,
            _ => FailureKind::Input,
        }
    }
}

impl Classify for GtepError {
    fn kind(&self) -> FailureKind {
        match self {
            GtepError::Infeasible { .. } | GtepError::NoSolution(SolveStatus::Infeasible) => FailureKind::Infeasible,
            GtepError::NoSolution(_) | GtepError::NotIntegral { .. } | GtepError::Solver(_) => FailureKind::Numerical,
            GtepError::Io { .. } => FailureKind::Io,
            _ => FailureKind::Input,
        }
    }
}

impl Classify for RepdaysError {
    fn kind(&self) -> FailureKind {
        match self {
            RepdaysError::Io(_) => FailureKind::Io,
            _ => FailureKind::Input,
        }
    }
}

impl Classify for DatasetError {
    fn kind(&self) -> FailureKind {
        FailureKind::Input
    }
}

impl Classify for std::io::Error {
    fn kind(&self) -> FailureKind {
        FailureKind::Io
    }
}

impl Classify for serde_json::Error {
    fn kind(&self) -> FailureKind {
        FailureKind::Input
    }
}

impl Classify for csv::Error {
    fn kind(&self) -> FailureKind {
        FailureKind::Input
    }
}

/// Wraps a library error with the stage it occurred in.
pub fn at<E: Classify + fmt::Display>(stage: &str) -> impl Fn(E) -> CliError + '_ {
    move |e| CliError::stage(stage, e.kind(), e)
}
