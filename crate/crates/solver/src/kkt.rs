//! Optimality certificate for linear programs.
//!
//! Everything here is recomputed from the problem data and the candidate
//! primal/dual pair; no solver state is consulted.

use crate::lp::SparseLp;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktReport {
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub complementarity: f64,
    pub primal_objective: f64,
    pub dual_objective: f64,
}

impl KktReport {
    pub fn duality_gap(&self) -> f64 {
        (self.primal_objective - self.dual_objective).abs()
    }

    pub fn relative_gap(&self) -> f64 {
        self.duality_gap() / self.primal_objective.abs().max(1.0)
    }

    /// Primal and dual feasibility within `feas_tol`, complementary
    /// slackness within `compl_tol`, and a duality gap of at most 1e-6
    /// absolute or 1e-8 relative.
    pub fn certifies_optimality(&self, feas_tol: f64, compl_tol: f64) -> bool {
        self.primal_infeasibility <= feas_tol
            && self.dual_infeasibility <= feas_tol
            && self.complementarity <= compl_tol
            && (self.duality_gap() <= 1e-6 || self.relative_gap() <= 1e-8)
    }
}

/// Evaluates the optimality conditions of `lp` at primal `x` and row
/// multipliers `y` (reduced costs `d = c - A^T y`).
pub fn check(lp: &SparseLp, x: &[f64], y: &[f64]) -> KktReport {
    let primal_infeasibility = lp.max_violation(x, false);
    let mut d = lp.cost.clone();
    for t in &lp.triplets {
        d[t.col] -= y[t.row] * t.value;
    }
    let activity = lp.row_activity(x);

    let mut dual_inf: f64 = 0.0;
    let mut compl: f64 = 0.0;
    let mut dual_obj = lp.obj_offset;

    for j in 0..lp.num_cols() {
        let (lo, hi, dj) = (lp.lower[j], lp.upper[j], d[j]);
        if dj > 0.0 {
            if lo.is_finite() {
                dual_obj += dj * lo;
                compl = compl.max(dj * (x[j] - lo).abs());
            } else {
                dual_inf = dual_inf.max(dj);
            }
        } else if dj < 0.0 {
            if hi.is_finite() {
                dual_obj += dj * hi;
                compl = compl.max(-dj * (hi - x[j]).abs());
            } else {
                dual_inf = dual_inf.max(-dj);
            }
        }
    }
    for i in 0..lp.num_rows() {
        let (lo, hi) = lp.row_bounds(i);
        let yi = y[i];
        if yi > 0.0 {
            if lo.is_finite() {
                dual_obj += yi * lo;
                compl = compl.max(yi * (activity[i] - lo).abs());
            } else {
                dual_inf = dual_inf.max(yi);
            }
        } else if yi < 0.0 {
            if hi.is_finite() {
                dual_obj += yi * hi;
                compl = compl.max(-yi * (hi - activity[i]).abs());
            } else {
                dual_inf = dual_inf.max(-yi);
            }
        }
    }

    KktReport {
        primal_infeasibility,
        dual_infeasibility: dual_inf,
        complementarity: compl,
        primal_objective: lp.objective_value(x),
        dual_objective: dual_obj,
    }
}
