//! Brute-force reference solvers for small instances.
//!
//! These are deliberately naive and share no code with the simplex: they
//! exist to cross-check it in tests.

use crate::lp::{RowSense, SparseLp};
use crate::{solve_lp, SolverOptions};

/// Minimum of a bounded LP by enumerating every vertex of its feasible
/// region. All columns must have finite bounds. Returns `None` when the
/// region is empty.
///
/// Cost is `C(rows + 2n, n)` dense solves, so keep `n` and the row count
/// small.
pub fn vertex_enumeration(lp: &SparseLp) -> Option<f64> {
    let n = lp.num_cols();
    assert!(
        lp.lower.iter().chain(&lp.upper).all(|b| b.is_finite()),
        "vertex enumeration needs finite bounds"
    );
    // Every constraint as g.x <= h.
    let mut g: Vec<Vec<f64>> = Vec::new();
    let mut h: Vec<f64> = Vec::new();
    for (i, row) in lp.rows().iter().enumerate() {
        let mut dense = vec![0.0; n];
        for &(j, a) in row {
            dense[j] = a;
        }
        let b = lp.rhs[i];
        match lp.senses[i] {
            RowSense::Le => {
                g.push(dense);
                h.push(b);
            }
            RowSense::Ge => {
                g.push(dense.iter().map(|v| -v).collect());
                h.push(-b);
            }
            RowSense::Eq => {
                g.push(dense.iter().map(|v| -v).collect());
                h.push(-b);
                g.push(dense);
                h.push(b);
            }
        }
    }
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        g.push(e.clone());
        h.push(lp.upper[j]);
        e[j] = -1.0;
        g.push(e);
        h.push(-lp.lower[j]);
    }
    if n == 0 {
        return h.iter().all(|&v| v >= -1e-9).then_some(lp.obj_offset);
    }

    let total = g.len();
    let mut best: Option<f64> = None;
    let mut pick: Vec<usize> = (0..n).collect();
    loop {
        let a: Vec<Vec<f64>> = pick.iter().map(|&k| g[k].clone()).collect();
        let b: Vec<f64> = pick.iter().map(|&k| h[k]).collect();
        if let Some(x) = dense_solve(a, b) {
            let feasible = g.iter().zip(&h).all(|(gi, &hi)| {
                let lhs: f64 = gi.iter().zip(&x).map(|(p, q)| p * q).sum();
                lhs <= hi + 1e-9 * (1.0 + hi.abs())
            });
            if feasible {
                let obj = lp.objective_value(&x);
                if best.is_none_or(|v| obj < v) {
                    best = Some(obj);
                }
            }
        }
        // Next combination in lexicographic order.
        let mut k = n;
        loop {
            if k == 0 {
                return best;
            }
            k -= 1;
            if pick[k] < total - n + k {
                break;
            }
        }
        pick[k] += 1;
        for r in k + 1..n {
            pick[r] = pick[r - 1] + 1;
        }
    }
}

fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-10 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            if f != 0.0 {
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for c in (0..n).rev() {
        let s: f64 = (c + 1..n).map(|k| a[c][k] * x[k]).sum();
        x[c] = (b[c] - s) / a[c][c];
    }
    Some(x)
}

/// Minimum of a MILP by enumerating every assignment of its integer
/// columns (which must have finite bounds) and solving the remaining LP in
/// the continuous columns. Returns `None` when infeasible.
pub fn enumerate_milp(lp: &SparseLp, opts: &SolverOptions) -> Option<f64> {
    let ints: Vec<usize> = (0..lp.num_cols()).filter(|&j| lp.integer[j]).collect();
    let ranges: Vec<(i64, i64)> = ints
        .iter()
        .map(|&j| (lp.lower[j].ceil() as i64, lp.upper[j].floor() as i64))
        .collect();
    if ranges.iter().any(|&(lo, hi)| lo > hi) {
        return None;
    }
    let mut value: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    let mut sub = lp.clone();
    sub.integer = vec![false; lp.num_cols()];
    let mut best: Option<f64> = None;
    loop {
        for (k, &j) in ints.iter().enumerate() {
            sub.lower[j] = value[k] as f64;
            sub.upper[j] = value[k] as f64;
        }
        let res = solve_lp(&sub, opts).expect("valid sub-problem");
        if res.status == crate::SolveStatus::Optimal && best.is_none_or(|b| res.objective < b) {
            best = Some(res.objective);
        }
        let mut k = 0;
        loop {
            if k == ints.len() {
                return best;
            }
            if value[k] < ranges[k].1 {
                value[k] += 1;
                break;
            }
            value[k] = ranges[k].0;
            k += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_vertex() {
        let mut lp = SparseLp::new();
        let x = lp.add_col("x", -3.0, 0.0, 10.0, false);
        let y = lp.add_col("y", -2.0, 0.0, 10.0, false);
        lp.add_row("cap", &[(x, 1.0), (y, 1.0)], RowSense::Le, 4.0);
        lp.add_row("xmax", &[(x, 1.0)], RowSense::Le, 2.0);
        assert_eq!(vertex_enumeration(&lp), Some(-10.0));
    }

    #[test]
    fn empty_region() {
        let mut lp = SparseLp::new();
        let x = lp.add_col("x", 1.0, 0.0, 1.0, false);
        lp.add_row("r", &[(x, 1.0)], RowSense::Ge, 2.0);
        assert_eq!(vertex_enumeration(&lp), None);
    }
}
