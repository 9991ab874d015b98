//! Joint power and natural-gas generation and transmission expansion.
//!
//! [`build_milp`] assembles the representative-day planning model,
//! [`solve_planning`] solves it, [`evaluate_full_horizon`] freezes the
//! investments and re-solves the operations over every day, and
//! [`check_feasibility`] re-evaluates a solution against the structured
//! instance without going through the solver.

mod check;
mod compare;
mod instance;
mod model;
mod solution;

use thiserror::Error;

use games_solver::{SolveStatus, SolverError};

use crate::repdays::RepdaysError;

pub use check::{check_feasibility, FamilyViolation, ViolationReport};
pub use compare::{compare_methods, percent_change, summarize, ComparisonReport, ComparisonRow, PercentRow, QUANTITIES};
pub use instance::{
    profiles, Coupling, DayProfile, GasNode, GasStorage, GasSystem, GtepInstance, Line, Pipeline, Plant,
    PlantKind, Policy, PowerNode, PowerSystem, Storage,
};
pub use model::{expected_rows, Layout, PlanningModel};
pub use solution::{
    baseline_emission, build_milp, emission_cap_for_goal, evaluate_full_horizon, evaluate_full_horizon_warm,
    solve_planning, CostBreakdown, GasInvestments, GtepSolution, PowerInvestments,
};

#[derive(Debug, Error)]
pub enum GtepError {
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error("NG-fired plant {plant} at zone {node} has no coupling edge")]
    Uncoupled { plant: String, node: usize },
    #[error("day {day} out of range ({days} days)")]
    DayOutOfRange { day: usize, days: usize },
    #[error("investment column {column} is not integral ({value})")]
    NotIntegral { column: String, value: f64 },
    #[error("model infeasible; rows in the certificate: {}", rows.join(", "))]
    Infeasible { rows: Vec<String> },
    #[error("solver returned no solution (status {0:?})")]
    NoSolution(SolveStatus),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Repdays(#[from] RepdaysError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
