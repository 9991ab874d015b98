//! Self-contained linear and mixed-integer linear programming.
//!
//! * [`solve_lp`]: bounded-variable revised primal simplex on a sparse LU
//!   factorisation with product-form updates, composite phase 1 and a
//!   Bland fallback when stalling.
//! * [`solve_milp`]: best-bound branch and bound on top of the simplex,
//!   warm-started from the parent basis.
//! * [`write_mps`] / [`read_mps`]: fixed-format MPS export and import.
//! * [`kkt::check`]: optimality certificate computed from the problem data
//!   and the returned primal/dual vectors only.

pub mod kkt;
mod lp;
mod lu;
mod milp;
mod mps;
pub mod oracle;
mod presolve;
mod simplex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use lp::{RowSense, SparseLp, Triplet};
pub use milp::solve_milp;
pub use mps::{parse_mps, read_mps, to_mps_string, write_mps};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("MPS parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    GapLimit,
    IterationLimit,
}

impl SolveStatus {
    /// True when the result carries a usable primal solution.
    pub fn has_solution(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::GapLimit)
    }
}

/// Position of a column or row logical in a simplex basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisStatus {
    Basic,
    Lower,
    Upper,
    /// Nonbasic free variable held at zero.
    Zero,
}

/// An optimal basis in the indexing of the original problem, reusable as
/// the starting point of a structurally identical LP whose bounds or
/// right-hand sides changed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarmStart {
    pub columns: Vec<BasisStatus>,
    pub rows: Vec<BasisStatus>,
}

/// Evidence attached to non-optimal terminations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Certificate {
    /// Rows carrying nonzero phase-1 multipliers when infeasibility was
    /// proven, with their multipliers.
    Infeasible { rows: Vec<usize>, multipliers: Vec<f64> },
    /// Direction of unbounded descent in the structural variables.
    Unbounded { ray: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Primal values (structural columns).
    pub x: Vec<f64>,
    /// Objective including the offset; `NaN` when no solution is known.
    pub objective: f64,
    /// Best proven lower bound (MILP); equals `objective` for optimal LPs.
    pub bound: f64,
    /// Row multipliers `y` with reduced costs `d = c - A^T y`.
    pub row_duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
    pub nodes: usize,
    pub certificate: Option<Certificate>,
    /// Final basis of an optimal LP solve.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<WarmStart>,
}

impl SolveResult {
    pub(crate) fn without_solution(status: SolveStatus, n: usize, m: usize) -> Self {
        Self {
            status,
            x: vec![0.0; n],
            objective: f64::NAN,
            bound: f64::NAN,
            row_duals: vec![0.0; m],
            reduced_costs: vec![0.0; n],
            iterations: 0,
            nodes: 0,
            certificate: None,
            basis: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Relative MILP gap at which branch and bound stops.
    pub gap: f64,
    pub node_limit: usize,
    pub time_limit_s: f64,
    pub iteration_limit: usize,
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub integrality_tol: f64,
    /// Pivots between basis refactorisations.
    pub refactor_interval: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            gap: 1e-6,
            node_limit: 100_000,
            time_limit_s: f64::INFINITY,
            iteration_limit: 5_000_000,
            feasibility_tol: 1e-7,
            optimality_tol: 1e-7,
            integrality_tol: 1e-6,
            refactor_interval: 100,
        }
    }
}

/// Solves the continuous relaxation of `lp` (integrality is ignored).
pub fn solve_lp(lp: &SparseLp, opts: &SolverOptions) -> Result<SolveResult, SolverError> {
    lp.validate()?;
    Ok(presolve::solve_with_presolve(lp, opts, None))
}

/// [`solve_lp`] starting from `start`, typically the basis of an earlier
/// solve of the same model with different bounds.
pub fn solve_lp_warm(lp: &SparseLp, opts: &SolverOptions, start: &WarmStart) -> Result<SolveResult, SolverError> {
    lp.validate()?;
    if start.columns.len() != lp.num_cols() || start.rows.len() != lp.num_rows() {
        return Err(SolverError::InvalidModel(format!(
            "warm start has {} columns and {} rows, model has {} and {}",
            start.columns.len(),
            start.rows.len(),
            lp.num_cols(),
            lp.num_rows()
        )));
    }
    Ok(presolve::solve_with_presolve(lp, opts, Some(start)))
}
