//! Sparse minimisation problems in row-sense form.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::SolverError;

/// Sense of a constraint row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RowSense {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for RowSense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RowSense::Le => "<=",
            RowSense::Eq => "=",
            RowSense::Ge => ">=",
        };
        f.write_str(s)
    }
}

/// One nonzero of the constraint matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Triplet {
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

/// A linear (or mixed-integer linear) program
///
/// ```text
/// minimise    cost · x + obj_offset
/// subject to  A x  (<=, =, >=)  rhs
///             lower <= x <= upper
///             x_j integer where integer[j]
/// ```
///
/// The constraint matrix is held as coordinate triplets. Bounds may be
/// infinite. Every column and row carries a name so solutions can be decoded
/// and the problem exported.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseLp {
    pub cost: Vec<f64>,
    pub obj_offset: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub integer: Vec<bool>,
    pub col_names: Vec<String>,
    pub senses: Vec<RowSense>,
    pub rhs: Vec<f64>,
    pub row_names: Vec<String>,
    pub triplets: Vec<Triplet>,
}

impl SparseLp {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_cols(&self) -> usize {
        self.cost.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rhs.len()
    }

    /// Adds a column and returns its index.
    pub fn add_col(
        &mut self,
        name: impl Into<String>,
        cost: f64,
        lower: f64,
        upper: f64,
        integer: bool,
    ) -> usize {
        self.cost.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.integer.push(integer);
        self.col_names.push(name.into());
        self.cost.len() - 1
    }

    /// Adds a row with the given coefficients. Zero coefficients are dropped
    /// and repeated columns are summed.
    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        coeffs: &[(usize, f64)],
        sense: RowSense,
        rhs: f64,
    ) -> usize {
        let row = self.rhs.len();
        let mut merged: Vec<(usize, f64)> = coeffs.to_vec();
        merged.sort_by_key(|&(c, _)| c);
        let mut acc: Vec<(usize, f64)> = Vec::with_capacity(merged.len());
        for (c, v) in merged {
            match acc.last_mut() {
                Some((lc, lv)) if *lc == c => *lv += v,
                _ => acc.push((c, v)),
            }
        }
        for (col, value) in acc {
            if value != 0.0 {
                self.triplets.push(Triplet { row, col, value });
            }
        }
        self.senses.push(sense);
        self.rhs.push(rhs);
        self.row_names.push(name.into());
        row
    }

    /// Checks structural invariants: index ranges, duplicate entries,
    /// bound ordering and finiteness of data.
    pub fn validate(&self) -> Result<(), SolverError> {
        let n = self.num_cols();
        let m = self.num_rows();
        if self.lower.len() != n
            || self.upper.len() != n
            || self.integer.len() != n
            || self.col_names.len() != n
        {
            return Err(SolverError::InvalidModel("column arrays differ in length".into()));
        }
        if self.senses.len() != m || self.row_names.len() != m {
            return Err(SolverError::InvalidModel("row arrays differ in length".into()));
        }
        for j in 0..n {
            if !self.cost[j].is_finite() {
                return Err(SolverError::InvalidModel(format!(
                    "non-finite cost on column {}",
                    self.col_names[j]
                )));
            }
            if self.lower[j].is_nan() || self.upper[j].is_nan() || self.lower[j] > self.upper[j] {
                return Err(SolverError::InvalidModel(format!(
                    "bounds [{}, {}] invalid on column {}",
                    self.lower[j], self.upper[j], self.col_names[j]
                )));
            }
            if self.lower[j] == f64::INFINITY || self.upper[j] == f64::NEG_INFINITY {
                return Err(SolverError::InvalidModel(format!(
                    "column {} has an empty domain",
                    self.col_names[j]
                )));
            }
        }
        for (i, b) in self.rhs.iter().enumerate() {
            if !b.is_finite() {
                return Err(SolverError::InvalidModel(format!(
                    "non-finite rhs on row {}",
                    self.row_names[i]
                )));
            }
        }
        let mut seen = HashSet::with_capacity(self.triplets.len());
        for t in &self.triplets {
            if t.row >= m || t.col >= n {
                return Err(SolverError::InvalidModel(format!(
                    "entry ({}, {}) out of range",
                    t.row, t.col
                )));
            }
            if !t.value.is_finite() {
                return Err(SolverError::InvalidModel(format!(
                    "non-finite coefficient at ({}, {})",
                    t.row, t.col
                )));
            }
            if !seen.insert((t.row, t.col)) {
                return Err(SolverError::InvalidModel(format!(
                    "duplicate entry ({}, {})",
                    t.row, t.col
                )));
            }
        }
        Ok(())
    }

    /// Objective value of `x`, including the constant offset.
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.obj_offset + self.cost.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }

    /// Row activities `A x`.
    pub fn row_activity(&self, x: &[f64]) -> Vec<f64> {
        let mut act = vec![0.0; self.num_rows()];
        for t in &self.triplets {
            act[t.row] += t.value * x[t.col];
        }
        act
    }

    /// Largest violation of rows, bounds and (optionally) integrality by `x`.
    pub fn max_violation(&self, x: &[f64], check_integrality: bool) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.row_activity(x).into_iter().enumerate() {
            let b = self.rhs[i];
            let v = match self.senses[i] {
                RowSense::Le => a - b,
                RowSense::Ge => b - a,
                RowSense::Eq => (a - b).abs(),
            };
            worst = worst.max(v);
        }
        for j in 0..self.num_cols() {
            worst = worst.max(self.lower[j] - x[j]).max(x[j] - self.upper[j]);
            if check_integrality && self.integer[j] {
                worst = worst.max((x[j] - x[j].round()).abs());
            }
        }
        worst
    }

    pub fn has_integers(&self) -> bool {
        self.integer.iter().any(|&b| b)
    }

    /// Column-major view: for each column, its `(row, value)` entries.
    pub fn columns(&self) -> Vec<Vec<(usize, f64)>> {
        let mut cols = vec![Vec::new(); self.num_cols()];
        for t in &self.triplets {
            cols[t.col].push((t.row, t.value));
        }
        for c in &mut cols {
            c.sort_by_key(|&(r, _)| r);
        }
        cols
    }

    /// Row-major view: for each row, its `(col, value)` entries.
    pub fn rows(&self) -> Vec<Vec<(usize, f64)>> {
        let mut rows = vec![Vec::new(); self.num_rows()];
        for t in &self.triplets {
            rows[t.row].push((t.col, t.value));
        }
        for r in &mut rows {
            r.sort_by_key(|&(c, _)| c);
        }
        rows
    }

    /// Row bounds `[lo, hi]` implied by sense and rhs.
    pub fn row_bounds(&self, row: usize) -> (f64, f64) {
        let b = self.rhs[row];
        match self.senses[row] {
            RowSense::Le => (f64::NEG_INFINITY, b),
            RowSense::Ge => (b, f64::INFINITY),
            RowSense::Eq => (b, b),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_row_merges_and_drops_zeros() {
        let mut lp = SparseLp::new();
        let x = lp.add_col("x", 1.0, 0.0, 1.0, false);
        let y = lp.add_col("y", 1.0, 0.0, 1.0, false);
        lp.add_row("r", &[(x, 1.0), (y, 0.0), (x, 2.0)], RowSense::Le, 1.0);
        assert_eq!(lp.triplets.len(), 1);
        assert_eq!(lp.triplets[0].value, 3.0);
        lp.validate().unwrap();
    }

    #[test]
    fn validate_rejects_duplicates_and_bad_bounds() {
        let mut lp = SparseLp::new();
        lp.add_col("x", 1.0, 0.0, 1.0, false);
        lp.add_row("r", &[(0, 1.0)], RowSense::Le, 1.0);
        lp.triplets.push(Triplet { row: 0, col: 0, value: 2.0 });
        assert!(lp.validate().is_err());

        let mut lp = SparseLp::new();
        lp.add_col("x", 1.0, 2.0, 1.0, false);
        assert!(lp.validate().is_err());
    }
}
