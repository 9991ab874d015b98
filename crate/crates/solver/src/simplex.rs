//! Bounded-variable revised primal simplex.
//!
//! Computational form: every row `i` gets a logical column `s_i = a_i x`
//! bounded by the row's bounds, so the constraints read `[A | -I] (x, s) = 0`
//! with all restrictions moved into column bounds. The start basis is the
//! all-logical one unless a warm basis is supplied.
//!
//! Phase 1 minimises the sum of bound infeasibilities of the basic
//! variables (composite costs recomputed every iteration), which lets the
//! method start from any basis. Pricing is partial Dantzig; the ratio test
//! is the two-pass Harris test. After a run of degenerate pivots the method
//! switches to Bland's rule until a step makes progress again.

use std::time::Instant;

use crate::lu::{factorize, LuFactors};
use crate::SolverOptions;

const PIVOT_TOL: f64 = 1e-9;
const DEGENERATE_RUN: usize = 50;

pub(crate) use crate::BasisStatus as VarStatus;

/// A simplex basis: the basic column of every row position plus the
/// bound each nonbasic column rests on.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Basis {
    pub head: Vec<usize>,
    pub status: Vec<VarStatus>,
}

/// Matrix data of the computational form. Bounds live outside so that
/// branch and bound can reuse one matrix across nodes.
#[derive(Debug, Clone)]
pub(crate) struct StandardLp {
    pub n: usize,
    pub m: usize,
    pub cost: Vec<f64>,
    col_start: Vec<usize>,
    col_row: Vec<usize>,
    col_val: Vec<f64>,
}

impl StandardLp {
    pub(crate) fn new(n: usize, m: usize, cost: Vec<f64>, columns: &[Vec<(usize, f64)>]) -> Self {
        let mut col_start = Vec::with_capacity(n + 1);
        let mut col_row = Vec::new();
        let mut col_val = Vec::new();
        col_start.push(0);
        for col in columns {
            for &(r, v) in col {
                col_row.push(r);
                col_val.push(v);
            }
            col_start.push(col_row.len());
        }
        Self { n, m, cost, col_start, col_row, col_val }
    }

    fn column(&self, j: usize) -> Vec<(usize, f64)> {
        if j < self.n {
            (self.col_start[j]..self.col_start[j + 1])
                .map(|e| (self.col_row[e], self.col_val[e]))
                .collect()
        } else {
            vec![(j - self.n, -1.0)]
        }
    }

    /// `y . a_j` for column `j` of `[A | -I]`.
    fn dot_column(&self, y: &[f64], j: usize) -> f64 {
        if j < self.n {
            let mut s = 0.0;
            for e in self.col_start[j]..self.col_start[j + 1] {
                s += y[self.col_row[e]] * self.col_val[e];
            }
            s
        } else {
            -y[j - self.n]
        }
    }

    /// `acc += scale * a_j` in row space.
    fn axpy_column(&self, acc: &mut [f64], j: usize, scale: f64) {
        if j < self.n {
            for e in self.col_start[j]..self.col_start[j + 1] {
                acc[self.col_row[e]] += scale * self.col_val[e];
            }
        } else {
            acc[j - self.n] -= scale;
        }
    }

    pub(crate) fn slack_basis(&self, lb: &[f64], ub: &[f64]) -> Basis {
        let total = self.n + self.m;
        let mut status = Vec::with_capacity(total);
        for j in 0..total {
            if j >= self.n {
                status.push(VarStatus::Basic);
            } else {
                status.push(rest_status(lb[j], ub[j], VarStatus::Lower));
            }
        }
        Basis { head: (self.n..total).collect(), status }
    }
}

fn rest_status(lb: f64, ub: f64, preferred: VarStatus) -> VarStatus {
    match preferred {
        VarStatus::Upper if ub.is_finite() => VarStatus::Upper,
        _ if lb.is_finite() => VarStatus::Lower,
        _ if ub.is_finite() => VarStatus::Upper,
        _ => VarStatus::Zero,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub(crate) struct LpSolution {
    pub status: LpStatus,
    /// Values of all `n + m` columns (structurals then logicals).
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub objective: f64,
    pub basis: Basis,
    pub iterations: usize,
    /// Phase-1 multipliers when infeasible.
    pub farkas: Option<Vec<f64>>,
    /// Descent direction over all columns when unbounded.
    pub ray: Option<Vec<f64>>,
}

struct Eta {
    pos: usize,
    pivot: f64,
    entries: Vec<(usize, f64)>,
}

struct Simplex<'a> {
    lp: &'a StandardLp,
    lb: &'a [f64],
    ub: &'a [f64],
    opts: &'a SolverOptions,
    head: Vec<usize>,
    status: Vec<VarStatus>,
    x: Vec<f64>,
    lu: LuFactors,
    etas: Vec<Eta>,
    iterations: usize,
    price_cursor: usize,
    work_row: Vec<f64>,
    work_pos: Vec<f64>,
}

pub(crate) fn solve(
    lp: &StandardLp,
    lb: &[f64],
    ub: &[f64],
    warm: Option<&Basis>,
    opts: &SolverOptions,
    deadline: Option<Instant>,
) -> LpSolution {
    let total = lp.n + lp.m;
    debug_assert_eq!(lb.len(), total);
    debug_assert_eq!(ub.len(), total);
    let basis = match warm {
        Some(b) if b.head.len() == lp.m && b.status.len() == total => b.clone(),
        _ => lp.slack_basis(lb, ub),
    };
    let mut s = Simplex {
        lp,
        lb,
        ub,
        opts,
        head: basis.head,
        status: basis.status,
        x: vec![0.0; total],
        lu: factorize(0, &[]).expect("empty factorisation"),
        etas: Vec::new(),
        iterations: 0,
        price_cursor: 0,
        work_row: vec![0.0; lp.m],
        work_pos: vec![0.0; lp.m],
    };
    s.normalize_nonbasic();
    s.refactor();
    s.run(deadline)
}

impl<'a> Simplex<'a> {
    fn total(&self) -> usize {
        self.lp.n + self.lp.m
    }

    fn is_fixed(&self, j: usize) -> bool {
        self.lb[j] == self.ub[j]
    }

    /// Places every nonbasic column on a finite bound consistent with the
    /// current bounds.
    fn normalize_nonbasic(&mut self) {
        for j in 0..self.total() {
            let st = self.status[j];
            if st == VarStatus::Basic {
                continue;
            }
            let st = rest_status(self.lb[j], self.ub[j], st);
            self.status[j] = st;
            self.x[j] = match st {
                VarStatus::Lower => self.lb[j],
                VarStatus::Upper => self.ub[j],
                _ => 0.0,
            };
        }
        // A warm basis may disagree with the basic flags; rebuild them.
        let mut is_basic = vec![false; self.total()];
        for &j in &self.head {
            is_basic[j] = true;
        }
        for j in 0..self.total() {
            if is_basic[j] {
                self.status[j] = VarStatus::Basic;
            } else if self.status[j] == VarStatus::Basic {
                self.status[j] = rest_status(self.lb[j], self.ub[j], VarStatus::Lower);
                self.x[j] = match self.status[j] {
                    VarStatus::Lower => self.lb[j],
                    VarStatus::Upper => self.ub[j],
                    _ => 0.0,
                };
            }
        }
    }

    fn refactor(&mut self) {
        let m = self.lp.m;
        loop {
            let cols: Vec<Vec<(usize, f64)>> = self.head.iter().map(|&j| self.lp.column(j)).collect();
            match factorize(m, &cols) {
                Ok(lu) => {
                    self.lu = lu;
                    break;
                }
                Err(sing) => {
                    for (&p, &r) in sing.positions.iter().zip(&sing.rows) {
                        let out = self.head[p];
                        let st = rest_status(self.lb[out], self.ub[out], VarStatus::Lower);
                        self.status[out] = st;
                        self.x[out] = match st {
                            VarStatus::Lower => self.lb[out],
                            VarStatus::Upper => self.ub[out],
                            _ => 0.0,
                        };
                        let logical = self.lp.n + r;
                        debug_assert_ne!(self.status[logical], VarStatus::Basic);
                        self.head[p] = logical;
                        self.status[logical] = VarStatus::Basic;
                    }
                    log::debug!("repaired singular basis ({} columns)", sing.positions.len());
                }
            }
        }
        self.etas.clear();
        self.recompute_basic_values();
    }

    fn recompute_basic_values(&mut self) {
        let m = self.lp.m;
        let mut rhs = vec![0.0; m];
        for j in 0..self.total() {
            if self.status[j] != VarStatus::Basic && self.x[j] != 0.0 {
                self.lp.axpy_column(&mut rhs, j, -self.x[j]);
            }
        }
        let mut out = vec![0.0; m];
        self.ftran(&mut rhs, &mut out);
        for (p, &j) in self.head.iter().enumerate() {
            self.x[j] = out[p];
        }
    }

    fn ftran(&self, rhs: &mut [f64], out: &mut [f64]) {
        self.lu.ftran(rhs, out);
        for eta in &self.etas {
            let xr = out[eta.pos] / eta.pivot;
            out[eta.pos] = xr;
            if xr != 0.0 {
                for &(i, a) in &eta.entries {
                    out[i] -= a * xr;
                }
            }
        }
    }

    fn btran(&self, rhs: &mut [f64], out: &mut [f64]) {
        for eta in self.etas.iter().rev() {
            let mut s = rhs[eta.pos];
            for &(i, a) in &eta.entries {
                s -= a * rhs[i];
            }
            rhs[eta.pos] = s / eta.pivot;
        }
        self.lu.btran(rhs, out);
    }

    /// Sum of infeasibilities and per-position phase-1 costs.
    fn phase_one_costs(&self, costs: &mut [f64]) -> f64 {
        let tol = self.opts.feasibility_tol;
        let mut sum = 0.0;
        for (p, &j) in self.head.iter().enumerate() {
            let v = self.x[j];
            if v < self.lb[j] - tol {
                costs[p] = -1.0;
                sum += self.lb[j] - v;
            } else if v > self.ub[j] + tol {
                costs[p] = 1.0;
                sum += v - self.ub[j];
            } else {
                costs[p] = 0.0;
            }
        }
        sum
    }

    fn objective(&self) -> f64 {
        (0..self.lp.n).map(|j| self.lp.cost[j] * self.x[j]).sum()
    }

    fn infeasibility(&self) -> f64 {
        let tol = self.opts.feasibility_tol;
        let mut sum = 0.0;
        for &j in &self.head {
            let v = self.x[j];
            if v < self.lb[j] - tol {
                sum += self.lb[j] - v;
            } else if v > self.ub[j] + tol {
                sum += v - self.ub[j];
            }
        }
        sum
    }

    fn duals(&mut self, phase_one: bool) -> (Vec<f64>, f64) {
        let mut y = vec![0.0; self.lp.m];
        let infeas = self.duals_into(phase_one, &mut y);
        (y, infeas)
    }

    /// Writes the simplex multipliers into `y`; every entry is overwritten.
    fn duals_into(&mut self, phase_one: bool, y: &mut [f64]) -> f64 {
        let mut cb = std::mem::take(&mut self.work_pos);
        let infeas = if phase_one {
            self.phase_one_costs(&mut cb)
        } else {
            for (p, &j) in self.head.iter().enumerate() {
                cb[p] = if j < self.lp.n { self.lp.cost[j] } else { 0.0 };
            }
            0.0
        };
        self.btran(&mut cb, y);
        self.work_pos = cb;
        infeas
    }

    fn reduced_cost(&self, y: &[f64], j: usize, phase_one: bool) -> f64 {
        let c = if phase_one || j >= self.lp.n { 0.0 } else { self.lp.cost[j] };
        c - self.lp.dot_column(y, j)
    }

    /// Direction (+1 increase, -1 decrease) in which column `j` improves,
    /// if any.
    fn improving_direction(&self, j: usize, d: f64) -> Option<f64> {
        let tol = self.opts.optimality_tol;
        match self.status[j] {
            VarStatus::Basic => None,
            _ if self.is_fixed(j) => None,
            VarStatus::Lower if d < -tol => Some(1.0),
            VarStatus::Upper if d > tol => Some(-1.0),
            VarStatus::Zero if d.abs() > tol => Some(if d < 0.0 { 1.0 } else { -1.0 }),
            _ => None,
        }
    }

    fn price(&mut self, y: &[f64], phase_one: bool, bland: bool) -> Option<(usize, f64, f64)> {
        let total = self.total();
        if bland {
            for j in 0..total {
                let d = self.reduced_cost(y, j, phase_one);
                if let Some(dir) = self.improving_direction(j, d) {
                    return Some((j, d, dir));
                }
            }
            return None;
        }
        let segment = (total / 8).max(256).min(total);
        let mut best: Option<(usize, f64, f64)> = None;
        let mut scanned = 0;
        let mut j = self.price_cursor % total.max(1);
        while scanned < total {
            let d = self.reduced_cost(y, j, phase_one);
            if let Some(dir) = self.improving_direction(j, d) {
                if best.is_none_or(|(_, bd, _)| d.abs() > bd.abs()) {
                    best = Some((j, d, dir));
                }
            }
            scanned += 1;
            j += 1;
            if j == total {
                j = 0;
            }
            if best.is_some() && scanned % segment == 0 {
                break;
            }
        }
        self.price_cursor = j;
        best
    }

    fn run(mut self, deadline: Option<Instant>) -> LpSolution {
        let m = self.lp.m;
        let mut degenerate_run = 0usize;
        let mut bland = false;
        let mut alpha = vec![0.0; m];
        let mut objective_scale = self.objective().abs();
        let mut y = vec![0.0; m];
        let mut nz: Vec<usize> = Vec::with_capacity(m);
        loop {
            if self.iterations >= self.opts.iteration_limit {
                return self.finish(LpStatus::IterationLimit, false);
            }
            if self.iterations.is_multiple_of(100) {
                if let Some(dl) = deadline {
                    if Instant::now() >= dl {
                        return self.finish(LpStatus::IterationLimit, false);
                    }
                }
            }
            if self.etas.len() >= self.opts.refactor_interval {
                self.refactor();
                objective_scale = self.objective().abs();
            }

            let infeas = self.infeasibility();
            let phase_one = infeas > 0.0;
            self.duals_into(phase_one, &mut y);

            let Some((q, d_q, dir)) = self.price(&y, phase_one, bland) else {
                if !self.etas.is_empty() {
                    // Confirm on fresh factors before declaring termination.
                    self.refactor();
                    let infeas2 = self.infeasibility();
                    if (infeas2 > 0.0) != phase_one || infeas2 > infeas + self.opts.feasibility_tol {
                        continue;
                    }
                    let (y2, _) = self.duals(infeas2 > 0.0);
                    if self.price(&y2, infeas2 > 0.0, true).is_some() {
                        continue;
                    }
                }
                if phase_one {
                    let mut sol = self.finish(LpStatus::Infeasible, true);
                    sol.farkas = Some(sol.y.clone());
                    return sol;
                }
                return self.finish(LpStatus::Optimal, false);
            };

            let mut col = std::mem::take(&mut self.work_row);
            col.iter_mut().for_each(|v| *v = 0.0);
            self.lp.axpy_column(&mut col, q, 1.0);
            self.ftran(&mut col, &mut alpha);
            self.work_row = col;
            nz.clear();
            nz.extend((0..m).filter(|&p| alpha[p] != 0.0));

            let step = self.ratio_test(q, dir, &alpha, &nz, phase_one, bland);
            self.iterations += 1;
            match step {
                Step::Unbounded => {
                    if phase_one {
                        // Numerical trouble; refresh and retry under Bland.
                        self.refactor();
                        bland = true;
                        continue;
                    }
                    let mut ray = vec![0.0; self.total()];
                    ray[q] = dir;
                    for (p, &j) in self.head.iter().enumerate() {
                        ray[j] = -dir * alpha[p];
                    }
                    let mut sol = self.finish(LpStatus::Unbounded, false);
                    sol.ray = Some(ray);
                    return sol;
                }
                Step::Flip { theta } => {
                    self.apply_step(q, dir, theta, &alpha, &nz);
                    self.status[q] = if dir > 0.0 { VarStatus::Upper } else { VarStatus::Lower };
                    self.x[q] = if dir > 0.0 { self.ub[q] } else { self.lb[q] };
                    degenerate_run = 0;
                    bland = false;
                }
                Step::Pivot { pos, theta, to_upper } => {
                    self.apply_step(q, dir, theta, &alpha, &nz);
                    let leaving = self.head[pos];
                    self.status[leaving] = if to_upper { VarStatus::Upper } else { VarStatus::Lower };
                    self.x[leaving] = if to_upper { self.ub[leaving] } else { self.lb[leaving] };
                    self.head[pos] = q;
                    self.status[q] = VarStatus::Basic;
                    let entries: Vec<(usize, f64)> =
                        nz.iter().filter(|&&i| i != pos).map(|&i| (i, alpha[i])).collect();
                    self.etas.push(Eta { pos, pivot: alpha[pos], entries });
                    let scale = if phase_one { infeas } else { objective_scale };
                    if theta * d_q.abs() > 1e-12 * (1.0 + scale) {
                        degenerate_run = 0;
                        bland = false;
                    } else {
                        degenerate_run += 1;
                        if degenerate_run >= DEGENERATE_RUN {
                            bland = true;
                        }
                    }
                }
            }
        }
    }

    fn apply_step(&mut self, q: usize, dir: f64, theta: f64, alpha: &[f64], nz: &[usize]) {
        if theta == 0.0 {
            return;
        }
        self.x[q] += dir * theta;
        for &p in nz {
            self.x[self.head[p]] -= dir * theta * alpha[p];
        }
    }

    fn ratio_test(&self, q: usize, dir: f64, alpha: &[f64], nz: &[usize], phase_one: bool, bland: bool) -> Step {
        let tol = self.opts.feasibility_tol;
        let flip = if self.lb[q].is_finite() && self.ub[q].is_finite() {
            Some(self.ub[q] - self.lb[q])
        } else {
            None
        };

        // Candidate limits: (position, exact ratio, relaxed ratio, to_upper).
        let mut cands: Vec<(usize, f64, f64, bool)> = Vec::new();
        for &p in nz {
            let j = self.head[p];
            let a = alpha[p];
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let rate = -dir * a;
            let v = self.x[j];
            let (lb, ub) = (self.lb[j], self.ub[j]);
            if phase_one && v < lb - tol {
                if rate > 0.0 {
                    let r = (lb - v) / rate;
                    cands.push((p, r, r, false));
                }
                continue;
            }
            if phase_one && v > ub + tol {
                if rate < 0.0 {
                    let r = (v - ub) / -rate;
                    cands.push((p, r, r, true));
                }
                continue;
            }
            if rate < 0.0 && lb.is_finite() {
                let r = ((v - lb) / -rate).max(0.0);
                let relaxed = (v - lb + tol) / -rate;
                cands.push((p, r, relaxed, false));
            } else if rate > 0.0 && ub.is_finite() {
                let r = ((ub - v) / rate).max(0.0);
                let relaxed = (ub - v + tol) / rate;
                cands.push((p, r, relaxed, true));
            }
        }

        if cands.is_empty() {
            return match flip {
                Some(t) => Step::Flip { theta: t },
                None => Step::Unbounded,
            };
        }

        let chosen = if bland {
            let min_r = cands.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
            cands
                .iter()
                .filter(|c| c.1 <= min_r + 1e-12)
                .min_by_key(|c| self.head[c.0])
                .copied()
                .expect("nonempty")
        } else {
            let theta_max = cands.iter().map(|c| c.2).fold(f64::INFINITY, f64::min);
            cands
                .iter()
                .filter(|c| c.1 <= theta_max)
                .max_by(|a, b| {
                    alpha[a.0]
                        .abs()
                        .partial_cmp(&alpha[b.0].abs())
                        .unwrap_or(std::cmp::Ordering::Equal)
                        .then_with(|| b.0.cmp(&a.0))
                })
                .copied()
                .unwrap_or_else(|| {
                    *cands
                        .iter()
                        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
                        .expect("nonempty")
                })
        };
        let (pos, theta, _, to_upper) = chosen;
        if let Some(t) = flip {
            if t <= theta {
                return Step::Flip { theta: t };
            }
        }
        Step::Pivot { pos, theta, to_upper }
    }

    fn finish(mut self, status: LpStatus, phase_one: bool) -> LpSolution {
        if !self.etas.is_empty() && status != LpStatus::Unbounded {
            self.refactor();
        }
        let (y, _) = self.duals(phase_one);
        let total = self.total();
        // Snap nonbasic columns exactly onto their bounds.
        for j in 0..total {
            match self.status[j] {
                VarStatus::Lower => self.x[j] = self.lb[j],
                VarStatus::Upper => self.x[j] = self.ub[j],
                _ => {}
            }
        }
        let objective = self.objective();
        LpSolution {
            status,
            x: self.x,
            y,
            objective,
            basis: Basis { head: self.head, status: self.status },
            iterations: self.iterations,
            farkas: None,
            ray: None,
        }
    }
}

enum Step {
    Unbounded,
    Flip { theta: f64 },
    Pivot { pos: usize, theta: f64, to_upper: bool },
}
