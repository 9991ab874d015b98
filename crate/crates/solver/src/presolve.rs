//! Light presolve: fixed columns, empty rows and singleton rows.
//!
//! Fixed columns are substituted into their rows, empty rows are checked
//! and dropped, and rows left with a single column become bounds on that
//! column. The passes repeat until nothing changes. Postsolve restores the
//! full primal vector and reconstructs multipliers for the dropped rows so
//! that the returned duals satisfy the optimality conditions of the
//! original problem.

use std::time::Instant;

use crate::lp::SparseLp;
use crate::simplex::{self, Basis, LpSolution, LpStatus, StandardLp};
use crate::{BasisStatus, Certificate, SolveResult, SolveStatus, SolverOptions, WarmStart};

const BOUND_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub(crate) struct Presolved {
    pub std: StandardLp,
    /// Bounds of reduced structurals followed by reduced logicals.
    pub lb: Vec<f64>,
    pub ub: Vec<f64>,
    pub integer: Vec<bool>,
    pub col_map: Vec<usize>,
    pub row_map: Vec<usize>,
    fixed: Vec<Option<f64>>,
    orig_rows: usize,
    /// Dropped singleton rows in removal order: (row, column, coefficient).
    singletons: Vec<(usize, usize, f64)>,
    pub offset: f64,
}

pub(crate) enum PresolveOutcome {
    Reduced(Box<Presolved>),
    Infeasible { row: Option<usize> },
}

pub(crate) fn presolve(lp: &SparseLp, integral: bool) -> PresolveOutcome {
    let n = lp.num_cols();
    let m = lp.num_rows();
    let rows = lp.rows();
    let cols = lp.columns();
    let mut lo = lp.lower.clone();
    let mut hi = lp.upper.clone();
    if integral {
        for j in 0..n {
            if lp.integer[j] {
                lo[j] = (lo[j] - BOUND_TOL).ceil();
                hi[j] = (hi[j] + BOUND_TOL).floor();
            }
        }
    }
    let mut rlo = Vec::with_capacity(m);
    let mut rhi = Vec::with_capacity(m);
    for i in 0..m {
        let (a, b) = lp.row_bounds(i);
        rlo.push(a);
        rhi.push(b);
    }
    let mut row_count: Vec<usize> = rows.iter().map(|r| r.len()).collect();
    let mut row_alive = vec![true; m];
    let mut fixed: Vec<Option<f64>> = vec![None; n];
    let mut singletons = Vec::new();

    for j in 0..n {
        if lo[j] > hi[j] + BOUND_TOL {
            return PresolveOutcome::Infeasible { row: None };
        }
    }

    let mut changed = true;
    while changed {
        changed = false;
        for j in 0..n {
            if fixed[j].is_some() || lo[j] != hi[j] {
                continue;
            }
            let v = lo[j];
            fixed[j] = Some(v);
            changed = true;
            for &(i, a) in &cols[j] {
                if row_alive[i] {
                    rlo[i] -= a * v;
                    rhi[i] -= a * v;
                    row_count[i] -= 1;
                }
            }
        }
        for i in 0..m {
            if !row_alive[i] {
                continue;
            }
            if row_count[i] == 0 {
                let tol = BOUND_TOL * (1.0 + rlo[i].abs().min(rhi[i].abs()));
                if rlo[i] > tol || rhi[i] < -tol {
                    return PresolveOutcome::Infeasible { row: Some(i) };
                }
                row_alive[i] = false;
                changed = true;
            } else if row_count[i] == 1 {
                let &(j, a) = rows[i]
                    .iter()
                    .find(|&&(j, _)| fixed[j].is_none())
                    .expect("one live entry");
                let (mut l, mut u) = if a > 0.0 {
                    (rlo[i] / a, rhi[i] / a)
                } else {
                    (rhi[i] / a, rlo[i] / a)
                };
                if integral && lp.integer[j] {
                    l = (l - BOUND_TOL).ceil();
                    u = (u + BOUND_TOL).floor();
                }
                if l > lo[j] {
                    lo[j] = l;
                }
                if u < hi[j] {
                    hi[j] = u;
                }
                if lo[j] > hi[j] {
                    let tol = BOUND_TOL * (1.0 + lo[j].abs());
                    if lo[j] > hi[j] + tol {
                        return PresolveOutcome::Infeasible { row: Some(i) };
                    }
                    let mid = if integral && lp.integer[j] { lo[j].round() } else { 0.5 * (lo[j] + hi[j]) };
                    lo[j] = mid;
                    hi[j] = mid;
                }
                singletons.push((i, j, a));
                row_alive[i] = false;
                changed = true;
            }
        }
    }

    let col_map: Vec<usize> = (0..n).filter(|&j| fixed[j].is_none()).collect();
    let row_map: Vec<usize> = (0..m).filter(|&i| row_alive[i]).collect();
    let mut new_row = vec![usize::MAX; m];
    for (k, &i) in row_map.iter().enumerate() {
        new_row[i] = k;
    }
    let columns: Vec<Vec<(usize, f64)>> = col_map
        .iter()
        .map(|&j| {
            cols[j]
                .iter()
                .filter(|&&(i, _)| row_alive[i])
                .map(|&(i, a)| (new_row[i], a))
                .collect()
        })
        .collect();
    let cost: Vec<f64> = col_map.iter().map(|&j| lp.cost[j]).collect();
    let offset = lp.obj_offset
        + (0..n)
            .filter_map(|j| fixed[j].map(|v| lp.cost[j] * v))
            .sum::<f64>();
    let nr = col_map.len();
    let mr = row_map.len();
    let mut lb: Vec<f64> = col_map.iter().map(|&j| lo[j]).collect();
    let mut ub: Vec<f64> = col_map.iter().map(|&j| hi[j]).collect();
    lb.extend(row_map.iter().map(|&i| rlo[i]));
    ub.extend(row_map.iter().map(|&i| rhi[i]));
    let integer = col_map.iter().map(|&j| lp.integer[j]).collect();

    PresolveOutcome::Reduced(Box::new(Presolved {
        std: StandardLp::new(nr, mr, cost, &columns),
        lb,
        ub,
        integer,
        col_map,
        row_map,
        fixed,
        orig_rows: m,
        singletons,
        offset,
    }))
}

impl Presolved {
    /// Expands a reduced structural vector into the original column space.
    pub(crate) fn expand_x(&self, x_red: &[f64]) -> Vec<f64> {
        let mut x: Vec<f64> = self.fixed.iter().map(|f| f.unwrap_or(0.0)).collect();
        for (k, &j) in self.col_map.iter().enumerate() {
            x[j] = x_red[k];
        }
        x
    }

    /// Restricts an original-space basis to the reduced problem. Surplus
    /// basic columns are made nonbasic and missing ones are filled with row
    /// logicals, so the result always has one basic column per reduced row.
    pub(crate) fn reduce_basis(&self, start: &WarmStart) -> Basis {
        let (n, m) = (self.std.n, self.std.m);
        let mut status: Vec<BasisStatus> = self.col_map.iter().map(|&j| start.columns[j]).collect();
        status.extend(self.row_map.iter().map(|&i| start.rows[i]));
        let mut head: Vec<usize> = (0..n + m).filter(|&j| status[j] == BasisStatus::Basic).collect();
        if head.len() > m {
            for &j in &head[m..] {
                status[j] = BasisStatus::Lower;
            }
            head.truncate(m);
        }
        for i in 0..m {
            if head.len() == m {
                break;
            }
            if status[n + i] != BasisStatus::Basic {
                status[n + i] = BasisStatus::Basic;
                head.push(n + i);
            }
        }
        Basis { head, status }
    }

    /// Lifts a reduced basis to the original problem: removed columns rest
    /// on a bound and removed rows keep their logical basic.
    pub(crate) fn expand_basis(&self, basis: &Basis) -> WarmStart {
        let n = self.std.n;
        let mut columns = vec![BasisStatus::Lower; self.fixed.len()];
        for (k, &j) in self.col_map.iter().enumerate() {
            columns[j] = basis.status[k];
        }
        let mut rows = vec![BasisStatus::Basic; self.orig_rows];
        for (k, &i) in self.row_map.iter().enumerate() {
            rows[i] = basis.status[n + k];
        }
        WarmStart { columns, rows }
    }

    /// Recovers row multipliers of the original problem and its reduced
    /// costs from a reduced optimal solution.
    pub(crate) fn postsolve_duals(&self, lp: &SparseLp, x: &[f64], y_red: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut y = vec![0.0; lp.num_rows()];
        for (k, &i) in self.row_map.iter().enumerate() {
            y[i] = y_red[k];
        }
        let cols = lp.columns();
        let activity = lp.row_activity(x);
        let tol = 1e-7;
        for &(i, j, a) in self.singletons.iter().rev() {
            let d = lp.cost[j] - cols[j].iter().map(|&(r, v)| y[r] * v).sum::<f64>();
            if d.abs() <= 1e-12 {
                continue;
            }
            let at_lo = lp.lower[j].is_finite() && (x[j] - lp.lower[j]).abs() <= tol * (1.0 + lp.lower[j].abs());
            let at_hi = lp.upper[j].is_finite() && (x[j] - lp.upper[j]).abs() <= tol * (1.0 + lp.upper[j].abs());
            if (d > 0.0 && at_lo) || (d < 0.0 && at_hi) {
                continue;
            }
            let cand = d / a;
            let (rlo, rhi) = lp.row_bounds(i);
            let act = activity[i];
            let scale = 1.0 + act.abs();
            let active_lo = rlo.is_finite() && (act - rlo).abs() <= tol * scale;
            let active_hi = rhi.is_finite() && (act - rhi).abs() <= tol * scale;
            if (cand > 0.0 && active_lo) || (cand < 0.0 && active_hi) {
                y[i] = cand;
            }
        }
        let mut d = lp.cost.clone();
        for t in &lp.triplets {
            d[t.col] -= y[t.row] * t.value;
        }
        (y, d)
    }
}

pub(crate) fn solve_with_presolve(lp: &SparseLp, opts: &SolverOptions, start: Option<&WarmStart>) -> SolveResult {
    let n = lp.num_cols();
    let m = lp.num_rows();
    let pre = match presolve(lp, false) {
        PresolveOutcome::Reduced(p) => p,
        PresolveOutcome::Infeasible { row } => {
            let mut res = SolveResult::without_solution(SolveStatus::Infeasible, n, m);
            res.certificate = Some(Certificate::Infeasible {
                rows: row.into_iter().collect(),
                multipliers: row.map(|_| 1.0).into_iter().collect(),
            });
            return res;
        }
    };
    let deadline = opts
        .time_limit_s
        .is_finite()
        .then(|| Instant::now() + std::time::Duration::from_secs_f64(opts.time_limit_s));
    let warm = start.map(|s| pre.reduce_basis(s));
    let sol = simplex::solve(&pre.std, &pre.lb, &pre.ub, warm.as_ref(), opts, deadline);
    finish_lp(lp, &pre, sol)
}

pub(crate) fn finish_lp(lp: &SparseLp, pre: &Presolved, sol: LpSolution) -> SolveResult {
    let n = lp.num_cols();
    let m = lp.num_rows();
    let nr = pre.std.n;
    match sol.status {
        LpStatus::Optimal => {
            let x = pre.expand_x(&sol.x[..nr]);
            let (row_duals, reduced_costs) = pre.postsolve_duals(lp, &x, &sol.y);
            let objective = lp.objective_value(&x);
            let basis = Some(pre.expand_basis(&sol.basis));
            SolveResult {
                status: SolveStatus::Optimal,
                x,
                objective,
                bound: objective,
                row_duals,
                reduced_costs,
                iterations: sol.iterations,
                nodes: 0,
                certificate: None,
                basis,
            }
        }
        LpStatus::Infeasible => {
            let mut res = SolveResult::without_solution(SolveStatus::Infeasible, n, m);
            res.iterations = sol.iterations;
            let farkas = sol.farkas.unwrap_or_default();
            let mut rows = Vec::new();
            let mut multipliers = Vec::new();
            for (k, &v) in farkas.iter().enumerate() {
                if v.abs() > 1e-9 {
                    rows.push(pre.row_map[k]);
                    multipliers.push(v);
                }
            }
            res.certificate = Some(Certificate::Infeasible { rows, multipliers });
            res
        }
        LpStatus::Unbounded => {
            let mut res = SolveResult::without_solution(SolveStatus::Unbounded, n, m);
            res.iterations = sol.iterations;
            let ray_red = sol.ray.unwrap_or_default();
            let mut ray = vec![0.0; n];
            for (k, &j) in pre.col_map.iter().enumerate() {
                ray[j] = ray_red.get(k).copied().unwrap_or(0.0);
            }
            res.certificate = Some(Certificate::Unbounded { ray });
            res
        }
        LpStatus::IterationLimit => {
            let mut res = SolveResult::without_solution(SolveStatus::IterationLimit, n, m);
            res.iterations = sol.iterations;
            res
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::RowSense;

    #[test]
    fn singleton_rows_become_bounds() {
        let mut lp = SparseLp::new();
        let x = lp.add_col("x", 1.0, 0.0, f64::INFINITY, false);
        let y = lp.add_col("y", 1.0, 0.0, f64::INFINITY, false);
        lp.add_row("lo_x", &[(x, 2.0)], RowSense::Ge, 4.0);
        lp.add_row("sum", &[(x, 1.0), (y, 1.0)], RowSense::Ge, 3.0);
        let PresolveOutcome::Reduced(p) = presolve(&lp, false) else { panic!() };
        assert_eq!(p.std.m, 1);
        assert_eq!(p.lb[0], 2.0);
    }

    #[test]
    fn contradictory_singletons_are_infeasible() {
        let mut lp = SparseLp::new();
        let x = lp.add_col("x", 0.0, 0.0, f64::INFINITY, false);
        lp.add_row("a", &[(x, 1.0)], RowSense::Ge, 1.0);
        lp.add_row("b", &[(x, 1.0)], RowSense::Le, 0.0);
        assert!(matches!(presolve(&lp, false), PresolveOutcome::Infeasible { .. }));
    }
}
