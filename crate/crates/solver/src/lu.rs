//! Sparse LU factorisation of simplex bases.
//!
//! Right-looking Gaussian elimination with Markowitz pivot selection and
//! threshold partial pivoting. Column and row singletons are eliminated
//! first through work queues, so the triangular bulk of a typical basis
//! (logical columns, chains) costs almost nothing and the Markowitz search
//! only runs over the remaining nucleus.
//!
//! The factors are kept in elimination order: step `k` pivots on basis row
//! `pivot_row[k]` and basis position `pivot_col[k]`, records the multipliers
//! applied to the rows below it (`L`) and the remaining pivot-row entries
//! (`U`).

const PIVOT_THRESHOLD: f64 = 0.1;
const ABS_PIVOT_TOL: f64 = 1e-11;
const DROP_TOL: f64 = 1e-14;
const NONE: usize = usize::MAX;

#[derive(Debug, Clone)]
pub(crate) struct LuFactors {
    pivot_row: Vec<usize>,
    pivot_col: Vec<usize>,
    pivot_val: Vec<f64>,
    l_start: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<f64>,
    u_start: Vec<usize>,
    u_idx: Vec<usize>,
    u_val: Vec<f64>,
}

/// The basis could not be fully factorised. The listed positions and rows
/// were left without a pivot; they have equal length.
#[derive(Debug, Clone)]
pub(crate) struct Singular {
    pub positions: Vec<usize>,
    pub rows: Vec<usize>,
}

struct Active {
    rows: Vec<Vec<(usize, f64)>>,
    cols: Vec<Vec<usize>>,
    col_count: Vec<usize>,
    row_done: Vec<bool>,
    col_done: Vec<bool>,
}

impl Active {
    fn entry(&self, row: usize, col: usize) -> Option<(usize, f64)> {
        self.rows[row]
            .iter()
            .enumerate()
            .find(|(_, &(c, _))| c == col)
            .map(|(k, &(_, v))| (k, v))
    }

    /// Active rows holding a nonzero in `col`, with values.
    fn column_entries(&self, col: usize) -> Vec<(usize, f64)> {
        let mut out = Vec::with_capacity(self.col_count[col]);
        for &r in &self.cols[col] {
            if self.row_done[r] {
                continue;
            }
            if let Some((_, v)) = self.entry(r, col) {
                if !out.iter().any(|&(rr, _)| rr == r) {
                    out.push((r, v));
                }
            }
        }
        out
    }
}

/// Factorises the `m x m` matrix whose column `p` is `columns[p]`
/// (`(row, value)` pairs).
pub(crate) fn factorize(m: usize, columns: &[Vec<(usize, f64)>]) -> Result<LuFactors, Singular> {
    debug_assert_eq!(columns.len(), m);
    let mut act = Active {
        rows: vec![Vec::new(); m],
        cols: vec![Vec::new(); m],
        col_count: vec![0; m],
        row_done: vec![false; m],
        col_done: vec![false; m],
    };
    for (p, col) in columns.iter().enumerate() {
        for &(r, v) in col {
            if v != 0.0 {
                act.rows[r].push((p, v));
                act.cols[p].push(r);
                act.col_count[p] += 1;
            }
        }
    }

    let mut lu = LuFactors {
        pivot_row: Vec::with_capacity(m),
        pivot_col: Vec::with_capacity(m),
        pivot_val: Vec::with_capacity(m),
        l_start: vec![0],
        l_idx: Vec::new(),
        l_val: Vec::new(),
        u_start: vec![0],
        u_idx: Vec::new(),
        u_val: Vec::new(),
    };

    let mut col_queue: Vec<usize> = (0..m).filter(|&c| act.col_count[c] == 1).collect();
    let mut row_queue: Vec<usize> = (0..m).filter(|&r| act.rows[r].len() == 1).collect();
    let mut dropped_cols: Vec<usize> = Vec::new();
    let mut pos = vec![NONE; m];
    let mut remaining = m;
    let mut active_cols: Vec<usize> = (0..m).collect();

    while remaining > 0 {
        let mut choice: Option<(usize, usize, f64)> = None;

        while let Some(c) = col_queue.pop() {
            if act.col_done[c] || act.col_count[c] != 1 {
                continue;
            }
            let entries = act.column_entries(c);
            if entries.len() == 1 && entries[0].1.abs() > ABS_PIVOT_TOL {
                choice = Some((entries[0].0, c, entries[0].1));
                break;
            }
        }

        if choice.is_none() {
            while let Some(r) = row_queue.pop() {
                if act.row_done[r] || act.rows[r].len() != 1 {
                    continue;
                }
                let (c, v) = act.rows[r][0];
                if act.col_done[c] {
                    continue;
                }
                let col_max = act
                    .column_entries(c)
                    .iter()
                    .fold(0.0f64, |acc, &(_, x)| acc.max(x.abs()));
                if v.abs() > ABS_PIVOT_TOL && v.abs() >= PIVOT_THRESHOLD * col_max {
                    choice = Some((r, c, v));
                    break;
                }
            }
        }

        if choice.is_none() {
            active_cols.retain(|&c| !act.col_done[c]);
            let mut order: Vec<(usize, usize)> =
                active_cols.iter().map(|&c| (act.col_count[c], c)).collect();
            order.sort_unstable();
            let mut best: Option<(usize, usize, usize, f64)> = None;
            let mut searched = 0;
            for &(cnt, c) in &order {
                if let Some((cost, ..)) = best {
                    let floor = cnt.saturating_sub(1);
                    if searched >= 4 || floor * floor > cost {
                        break;
                    }
                }
                let entries = act.column_entries(c);
                let col_max = entries.iter().fold(0.0f64, |acc, &(_, x)| acc.max(x.abs()));
                if col_max <= ABS_PIVOT_TOL {
                    continue;
                }
                searched += 1;
                for &(r, v) in &entries {
                    if v.abs() < PIVOT_THRESHOLD * col_max {
                        continue;
                    }
                    let cost = (act.rows[r].len() - 1) * (entries.len() - 1);
                    let better = match best {
                        None => true,
                        Some((bc, _, _, bv)) => cost < bc || (cost == bc && v.abs() > bv.abs()),
                    };
                    if better {
                        best = Some((cost, r, c, v));
                    }
                }
            }
            match best {
                Some((_, r, c, v)) => choice = Some((r, c, v)),
                None => {
                    // Everything left is numerically zero.
                    for &c in &active_cols {
                        if !act.col_done[c] {
                            dropped_cols.push(c);
                            act.col_done[c] = true;
                        }
                    }
                    break;
                }
            }
        }

        let (r, c, u) = choice.expect("pivot chosen");
        lu.pivot_row.push(r);
        lu.pivot_col.push(c);
        lu.pivot_val.push(u);
        act.row_done[r] = true;
        act.col_done[c] = true;
        remaining -= 1;

        let pivot_row = std::mem::take(&mut act.rows[r]);
        for &(cc, v) in &pivot_row {
            if cc == c {
                continue;
            }
            lu.u_idx.push(cc);
            lu.u_val.push(v);
            act.col_count[cc] -= 1;
            if act.col_count[cc] == 1 {
                col_queue.push(cc);
            }
        }
        lu.u_start.push(lu.u_idx.len());

        let others: Vec<usize> = act.cols[c].clone();
        let mut visited: Vec<usize> = Vec::new();
        for i in others {
            if act.row_done[i] || visited.contains(&i) {
                continue;
            }
            visited.push(i);
            let Some((k, a)) = act.entry(i, c) else { continue };
            act.rows[i].swap_remove(k);
            let l = a / u;
            lu.l_idx.push(i);
            lu.l_val.push(l);
            if pivot_row.len() > 1 {
                for (idx, &(cc, _)) in act.rows[i].iter().enumerate() {
                    pos[cc] = idx;
                }
                for &(cc, v) in &pivot_row {
                    if cc == c {
                        continue;
                    }
                    if pos[cc] != NONE {
                        act.rows[i][pos[cc]].1 -= l * v;
                    } else {
                        act.rows[i].push((cc, -l * v));
                        act.cols[cc].push(i);
                        act.col_count[cc] += 1;
                    }
                }
                for &(cc, _) in &act.rows[i] {
                    pos[cc] = NONE;
                }
                let before = act.rows[i].len();
                let mut removed: Vec<usize> = Vec::new();
                act.rows[i].retain(|&(cc, v)| {
                    if v.abs() < DROP_TOL {
                        removed.push(cc);
                        false
                    } else {
                        true
                    }
                });
                if act.rows[i].len() != before {
                    for cc in removed {
                        act.col_count[cc] -= 1;
                        if act.col_count[cc] == 1 {
                            col_queue.push(cc);
                        }
                    }
                }
            }
            if act.rows[i].len() == 1 {
                row_queue.push(i);
            }
        }
        lu.l_start.push(lu.l_idx.len());
    }

    if lu.pivot_row.len() < m {
        let mut positions = dropped_cols;
        positions.sort_unstable();
        let rows: Vec<usize> = (0..m).filter(|&r| !act.row_done[r]).collect();
        debug_assert_eq!(positions.len(), rows.len());
        return Err(Singular { positions, rows });
    }
    Ok(lu)
}

impl LuFactors {

    /// Solves `B x = b`. `rhs` is indexed by row and is overwritten; the
    /// solution, indexed by basis position, is written into `out`.
    pub(crate) fn ftran(&self, rhs: &mut [f64], out: &mut [f64]) {
        let steps = self.pivot_row.len();
        for k in 0..steps {
            let v = rhs[self.pivot_row[k]];
            if v != 0.0 {
                for e in self.l_start[k]..self.l_start[k + 1] {
                    rhs[self.l_idx[e]] -= self.l_val[e] * v;
                }
            }
        }
        for k in (0..steps).rev() {
            let mut s = rhs[self.pivot_row[k]];
            for e in self.u_start[k]..self.u_start[k + 1] {
                s -= self.u_val[e] * out[self.u_idx[e]];
            }
            out[self.pivot_col[k]] = s / self.pivot_val[k];
        }
    }

    /// Solves `B^T y = c`. `rhs` is indexed by basis position and is
    /// overwritten; the solution, indexed by row, is written into `out`.
    pub(crate) fn btran(&self, rhs: &mut [f64], out: &mut [f64]) {
        let steps = self.pivot_row.len();
        for k in 0..steps {
            let w = rhs[self.pivot_col[k]] / self.pivot_val[k];
            out[self.pivot_row[k]] = w;
            if w != 0.0 {
                for e in self.u_start[k]..self.u_start[k + 1] {
                    rhs[self.u_idx[e]] -= self.u_val[e] * w;
                }
            }
        }
        for k in (0..steps).rev() {
            let mut s = 0.0;
            for e in self.l_start[k]..self.l_start[k + 1] {
                s += self.l_val[e] * out[self.l_idx[e]];
            }
            if s != 0.0 {
                out[self.pivot_row[k]] -= s;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense_to_cols(a: &[Vec<f64>]) -> Vec<Vec<(usize, f64)>> {
        let m = a.len();
        (0..m)
            .map(|j| (0..m).filter(|&i| a[i][j] != 0.0).map(|i| (i, a[i][j])).collect())
            .collect()
    }

    fn matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        a.iter().map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
    }

    fn random_sparse(rng: &mut ChaCha8Rng, m: usize) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; m]; m];
        for i in 0..m {
            a[i][i] = rng.gen_range(1.0..3.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            for _ in 0..2 {
                let j = rng.gen_range(0..m);
                a[i][j] += rng.gen_range(-1.0..1.0);
            }
        }
        a
    }

    #[test]
    fn ftran_and_btran_solve_random_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for m in [1, 2, 5, 20, 60] {
            let a = random_sparse(&mut rng, m);
            let lu = factorize(m, &dense_to_cols(&a)).expect("nonsingular");
            let x_true: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let mut b = matvec(&a, &x_true);
            let mut x = vec![0.0; m];
            lu.ftran(&mut b, &mut x);
            for (p, q) in x.iter().zip(&x_true) {
                assert!((p - q).abs() < 1e-9, "ftran mismatch {p} vs {q}");
            }
            // B^T y = c
            let at: Vec<Vec<f64>> = (0..m).map(|i| (0..m).map(|j| a[j][i]).collect()).collect();
            let mut c = matvec(&at, &x_true);
            let mut y = vec![0.0; m];
            lu.btran(&mut c, &mut y);
            for (p, q) in y.iter().zip(&x_true) {
                assert!((p - q).abs() < 1e-9, "btran mismatch {p} vs {q}");
            }
        }
    }

    #[test]
    fn singular_basis_reports_deficient_positions() {
        let a = vec![vec![1.0, 2.0, 0.0], vec![2.0, 4.0, 0.0], vec![0.0, 0.0, 1.0]];
        let err = factorize(3, &dense_to_cols(&a)).unwrap_err();
        assert_eq!(err.positions.len(), 1);
        assert_eq!(err.rows.len(), 1);
    }
}
