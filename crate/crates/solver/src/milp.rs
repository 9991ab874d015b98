//! Branch and bound over the simplex.
//!
//! Best-bound node selection (ties go to the deeper node, then to the older
//! one), most-fractional branching with ties broken by lowest column index,
//! and children warm-started from their parent's optimal basis. A rounding
//! heuristic runs at the root and periodically afterwards to find
//! incumbents early.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;
use std::time::{Duration, Instant};

use crate::lp::SparseLp;
use crate::presolve::{self, PresolveOutcome, Presolved};
use crate::simplex::{self, Basis, LpSolution, LpStatus};
use crate::{Certificate, SolveResult, SolveStatus, SolverError, SolverOptions};

const HEURISTIC_PERIOD: usize = 50;

struct Node {
    bound: f64,
    depth: usize,
    seq: usize,
    /// Bounds of the integer columns (reduced indexing, aligned with
    /// `int_cols`).
    lo: Vec<f64>,
    hi: Vec<f64>,
    basis: Option<Rc<Basis>>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // BinaryHeap is a max-heap: the "greatest" node is popped first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .partial_cmp(&self.bound)
            .unwrap_or(Ordering::Equal)
            .then_with(|| self.depth.cmp(&other.depth))
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

struct Search<'a> {
    pre: &'a Presolved,
    opts: &'a SolverOptions,
    int_cols: Vec<usize>,
    deadline: Option<Instant>,
    incumbent: Option<(f64, Vec<f64>)>,
    iterations: usize,
}

impl<'a> Search<'a> {
    fn bounds_for(&self, lo: &[f64], hi: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut lb = self.pre.lb.clone();
        let mut ub = self.pre.ub.clone();
        for (k, &j) in self.int_cols.iter().enumerate() {
            lb[j] = lo[k];
            ub[j] = hi[k];
        }
        (lb, ub)
    }

    fn solve_node(&mut self, lb: &[f64], ub: &[f64], warm: Option<&Basis>) -> LpSolution {
        let sol = simplex::solve(&self.pre.std, lb, ub, warm, self.opts, self.deadline);
        self.iterations += sol.iterations;
        sol
    }

    fn cutoff(&self) -> f64 {
        match &self.incumbent {
            Some((obj, _)) => obj - self.abs_gap(*obj),
            None => f64::INFINITY,
        }
    }

    fn abs_gap(&self, obj: f64) -> f64 {
        (self.opts.gap * obj.abs().max(1.0)).max(1e-9)
    }

    fn most_fractional(&self, x: &[f64]) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (k, &j) in self.int_cols.iter().enumerate() {
            let v = x[j];
            let frac = v - v.floor();
            if frac <= self.opts.integrality_tol || frac >= 1.0 - self.opts.integrality_tol {
                continue;
            }
            let score = (frac - 0.5).abs();
            if best.is_none_or(|(_, s)| score < s) {
                best = Some((k, score));
            }
        }
        best.map(|(k, _)| k)
    }

    fn offer(&mut self, sol: &LpSolution) {
        let mut x = sol.x[..self.pre.std.n].to_vec();
        for &j in &self.int_cols {
            x[j] = x[j].round();
        }
        let obj = sol.objective;
        if self.incumbent.as_ref().is_none_or(|(best, _)| obj < *best) {
            log::debug!("new incumbent {obj}");
            self.incumbent = Some((obj, x));
        }
    }

    /// Fixes every integer column at `round(x_j)` (clamped into the node's
    /// bounds) and solves the remaining LP.
    fn rounding(&mut self, sol: &LpSolution, lo: &[f64], hi: &[f64], round: fn(f64) -> f64) {
        let mut flo = lo.to_vec();
        let mut fhi = hi.to_vec();
        for (k, &j) in self.int_cols.iter().enumerate() {
            let v = round(sol.x[j]).clamp(lo[k], hi[k]);
            flo[k] = v;
            fhi[k] = v;
        }
        let (lb, ub) = self.bounds_for(&flo, &fhi);
        let trial = self.solve_node(&lb, &ub, Some(&sol.basis));
        if trial.status == LpStatus::Optimal {
            self.offer(&trial);
        }
    }
}

/// Solves `lp` with its integrality restrictions.
pub fn solve_milp(lp: &SparseLp, opts: &SolverOptions) -> Result<SolveResult, SolverError> {
    lp.validate()?;
    let n = lp.num_cols();
    let m = lp.num_rows();
    if !lp.has_integers() {
        return Ok(presolve::solve_with_presolve(lp, opts, None));
    }
    let pre = match presolve::presolve(lp, true) {
        PresolveOutcome::Reduced(p) => p,
        PresolveOutcome::Infeasible { row } => {
            let mut res = SolveResult::without_solution(SolveStatus::Infeasible, n, m);
            res.certificate = Some(Certificate::Infeasible {
                rows: row.into_iter().collect(),
                multipliers: row.map(|_| 1.0).into_iter().collect(),
            });
            return Ok(res);
        }
    };
    let start = Instant::now();
    let deadline = opts
        .time_limit_s
        .is_finite()
        .then(|| start + Duration::from_secs_f64(opts.time_limit_s));
    let int_cols: Vec<usize> = (0..pre.std.n).filter(|&k| pre.integer[k]).collect();
    let root_lo: Vec<f64> = int_cols.iter().map(|&j| pre.lb[j]).collect();
    let root_hi: Vec<f64> = int_cols.iter().map(|&j| pre.ub[j]).collect();

    let mut search = Search {
        pre: &pre,
        opts,
        int_cols,
        deadline,
        incumbent: None,
        iterations: 0,
    };

    let (lb, ub) = search.bounds_for(&root_lo, &root_hi);
    let root = search.solve_node(&lb, &ub, None);
    match root.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible | LpStatus::Unbounded => {
            let mut res = presolve::finish_lp(lp, &pre, root);
            res.iterations = search.iterations;
            return Ok(res);
        }
        LpStatus::IterationLimit => {
            let mut res = SolveResult::without_solution(SolveStatus::IterationLimit, n, m);
            res.iterations = search.iterations;
            return Ok(res);
        }
    }
    let root_bound = root.objective;

    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    heap.push(Node {
        bound: root_bound,
        depth: 0,
        seq,
        lo: root_lo,
        hi: root_hi,
        basis: None,
    });
    let mut pending_root = Some(root);
    let mut nodes = 0usize;
    let mut hit_limit = false;
    // Bound of the most recently expanded frontier, kept for reporting.
    let mut global_bound = root_bound;

    while let Some(node) = heap.pop() {
        if node.bound >= search.cutoff() {
            continue;
        }
        if nodes >= opts.node_limit || deadline.is_some_and(|d| Instant::now() >= d) {
            heap.push(node);
            hit_limit = true;
            break;
        }
        global_bound = node.bound;
        nodes += 1;
        let sol = match pending_root.take() {
            Some(r) => r,
            None => {
                let (lb, ub) = search.bounds_for(&node.lo, &node.hi);
                search.solve_node(&lb, &ub, node.basis.as_deref())
            }
        };
        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => continue,
            LpStatus::IterationLimit => {
                heap.push(node);
                hit_limit = true;
                break;
            }
        }
        if sol.objective >= search.cutoff() {
            continue;
        }
        let Some(k) = search.most_fractional(&sol.x) else {
            search.offer(&sol);
            continue;
        };
        if nodes == 1 {
            search.rounding(&sol, &node.lo, &node.hi, f64::round);
            search.rounding(&sol, &node.lo, &node.hi, f64::ceil);
            search.rounding(&sol, &node.lo, &node.hi, f64::floor);
        } else if nodes.is_multiple_of(HEURISTIC_PERIOD) {
            search.rounding(&sol, &node.lo, &node.hi, f64::round);
        }
        let j = search.int_cols[k];
        let v = sol.x[j];
        let basis = Rc::new(sol.basis);
        let mut down_hi = node.hi.clone();
        down_hi[k] = v.floor();
        let mut up_lo = node.lo.clone();
        up_lo[k] = v.ceil();
        seq += 1;
        heap.push(Node {
            bound: sol.objective,
            depth: node.depth + 1,
            seq,
            lo: node.lo.clone(),
            hi: down_hi,
            basis: Some(Rc::clone(&basis)),
        });
        seq += 1;
        heap.push(Node {
            bound: sol.objective,
            depth: node.depth + 1,
            seq,
            lo: up_lo,
            hi: node.hi,
            basis: Some(basis),
        });
    }

    let open_bound = heap
        .iter()
        .map(|nd| nd.bound)
        .fold(f64::INFINITY, f64::min);
    log::debug!("branch and bound: {nodes} nodes, {} simplex iterations", search.iterations);

    let Some((inc_obj, x_red)) = search.incumbent.take() else {
        let status = if hit_limit { SolveStatus::IterationLimit } else { SolveStatus::Infeasible };
        let mut res = SolveResult::without_solution(status, n, m);
        res.bound = global_bound.min(open_bound) + pre.offset;
        res.iterations = search.iterations;
        res.nodes = nodes;
        return Ok(res);
    };
    let bound = open_bound.min(inc_obj);
    let closed = inc_obj - bound <= (opts.gap * inc_obj.abs().max(1.0)).max(1e-9);
    let x = pre.expand_x(&x_red);
    let objective = lp.objective_value(&x);
    Ok(SolveResult {
        status: if closed { SolveStatus::Optimal } else { SolveStatus::GapLimit },
        x,
        objective,
        bound: bound + pre.offset,
        row_duals: vec![0.0; m],
        reduced_costs: vec![0.0; n],
        iterations: search.iterations,
        nodes,
        certificate: None,
        basis: None,
    })
}
