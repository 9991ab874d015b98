use games_solver::oracle::vertex_enumeration;
use games_solver::{kkt, solve_lp, Certificate, RowSense, SolveStatus, SolverOptions, SparseLp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const INF: f64 = f64::INFINITY;

fn opts() -> SolverOptions {
    SolverOptions::default()
}

fn assert_certified(lp: &SparseLp, x: &[f64], y: &[f64]) {
    let rep = kkt::check(lp, x, y);
    assert!(rep.certifies_optimality(1e-7, 1e-6), "KKT failed: {rep:?}");
}

#[test]
fn textbook_two_variable_lp() {
    let mut lp = SparseLp::new();
    let x = lp.add_col("x", -3.0, 0.0, INF, false);
    let y = lp.add_col("y", -2.0, 0.0, INF, false);
    lp.add_row("cap", &[(x, 1.0), (y, 1.0)], RowSense::Le, 4.0);
    lp.add_row("xmax", &[(x, 1.0)], RowSense::Le, 2.0);
    let res = solve_lp(&lp, &opts()).unwrap();
    assert_eq!(res.status, SolveStatus::Optimal);
    assert!((res.objective + 10.0).abs() < 1e-9);
    assert!((res.x[0] - 2.0).abs() < 1e-9 && (res.x[1] - 2.0).abs() < 1e-9);
    assert_certified(&lp, &res.x, &res.row_duals);
}

#[test]
fn zero_objective_is_zero() {
    let mut lp = SparseLp::new();
    let x = lp.add_col("x", 0.0, -5.0, 5.0, false);
    let y = lp.add_col("y", 0.0, 0.0, INF, false);
    lp.add_row("r", &[(x, 1.0), (y, 2.0)], RowSense::Ge, 3.0);
    let res = solve_lp(&lp, &opts()).unwrap();
    assert_eq!(res.status, SolveStatus::Optimal);
    assert_eq!(res.objective, 0.0);
    assert!(lp.max_violation(&res.x, false) <= 1e-9);
}

#[test]
fn contradictory_bounds_are_infeasible() {
    let mut lp = SparseLp::new();
    let x = lp.add_col("x", 1.0, -INF, INF, false);
    lp.add_row("ge", &[(x, 1.0)], RowSense::Ge, 1.0);
    lp.add_row("le", &[(x, 1.0)], RowSense::Le, 0.0);
    let res = solve_lp(&lp, &opts()).unwrap();
    assert_eq!(res.status, SolveStatus::Infeasible);
    assert!(matches!(res.certificate, Some(Certificate::Infeasible { .. })));
}

#[test]
fn infeasible_system_yields_farkas_rows() {
    // x + y >= 3 and x + y <= 1 with both rows kept (two entries each).
    let mut lp = SparseLp::new();
    let x = lp.add_col("x", 1.0, 0.0, INF, false);
    let y = lp.add_col("y", 1.0, 0.0, INF, false);
    lp.add_row("a", &[(x, 1.0), (y, 1.0)], RowSense::Ge, 3.0);
    lp.add_row("b", &[(x, 1.0), (y, 1.0)], RowSense::Le, 1.0);
    let res = solve_lp(&lp, &opts()).unwrap();
    assert_eq!(res.status, SolveStatus::Infeasible);
    let Some(Certificate::Infeasible { rows, multipliers }) = res.certificate else {
        panic!("missing certificate");
    };
    assert_eq!(rows.len(), multipliers.len());
    assert!(!rows.is_empty());
}

#[test]
fn unbounded_ray_is_descent_direction() {
    let mut lp = SparseLp::new();
    let x = lp.add_col("x", -1.0, 0.0, INF, false);
    let y = lp.add_col("y", 0.0, 0.0, INF, false);
    lp.add_row("r", &[(x, 1.0), (y, -1.0)], RowSense::Le, 1.0);
    let res = solve_lp(&lp, &opts()).unwrap();
    assert_eq!(res.status, SolveStatus::Unbounded);
    let Some(Certificate::Unbounded { ray }) = res.certificate else {
        panic!("missing ray");
    };
    let descent: f64 = lp.cost.iter().zip(&ray).map(|(c, r)| c * r).sum();
    assert!(descent < 0.0);
    // Ray stays feasible: x - y must not grow.
    assert!(ray[0] - ray[1] <= 1e-9);
    assert!(ray.iter().all(|&r| r >= -1e-9));
}

#[test]
fn beale_cycling_example_terminates() {
    let mut lp = SparseLp::new();
    let x4 = lp.add_col("x4", -0.75, 0.0, INF, false);
    let x5 = lp.add_col("x5", 150.0, 0.0, INF, false);
    let x6 = lp.add_col("x6", -0.02, 0.0, INF, false);
    let x7 = lp.add_col("x7", 6.0, 0.0, INF, false);
    lp.add_row("r1", &[(x4, 0.25), (x5, -60.0), (x6, -0.04), (x7, 9.0)], RowSense::Le, 0.0);
    lp.add_row("r2", &[(x4, 0.5), (x5, -90.0), (x6, -0.02), (x7, 3.0)], RowSense::Le, 0.0);
    lp.add_row("r3", &[(x6, 1.0), (x7, 0.0)], RowSense::Le, 1.0);
    lp.add_row("r3b", &[(x6, 1.0), (x4, 0.0), (x5, 0.0)], RowSense::Le, 1.0);
    let res = solve_lp(&lp, &opts()).unwrap();
    assert_eq!(res.status, SolveStatus::Optimal);
    assert!((res.objective + 0.05).abs() < 1e-9, "{}", res.objective);
    assert_certified(&lp, &res.x, &res.row_duals);
}

#[test]
fn highly_degenerate_assignment_lp() {
    // 6x6 assignment problem: massively degenerate vertices.
    let n = 6;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut lp = SparseLp::new();
    let mut v = vec![vec![0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = lp.add_col(format!("x{i}_{j}"), rng.gen_range(1..5) as f64, 0.0, INF, false);
        }
    }
    for i in 0..n {
        let r: Vec<_> = (0..n).map(|j| (v[i][j], 1.0)).collect();
        lp.add_row(format!("row{i}"), &r, RowSense::Eq, 1.0);
        let c: Vec<_> = (0..n).map(|j| (v[j][i], 1.0)).collect();
        lp.add_row(format!("col{i}"), &c, RowSense::Eq, 1.0);
    }
    let res = solve_lp(&lp, &opts()).unwrap();
    assert_eq!(res.status, SolveStatus::Optimal);
    assert_certified(&lp, &res.x, &res.row_duals);
}

/// Random LP that is feasible by construction: rows are built around a
/// point inside the box.
fn random_lp(rng: &mut ChaCha8Rng, n: usize, m: usize, boxed: bool) -> SparseLp {
    let mut lp = SparseLp::new();
    let mut x0 = Vec::with_capacity(n);
    for j in 0..n {
        let lo = if rng.gen_bool(0.2) && !boxed { -INF } else { rng.gen_range(-3.0..1.0f64).round() };
        let hi = if rng.gen_bool(0.3) && !boxed { INF } else { lo.max(-3.0) + rng.gen_range(1.0..6.0f64).round() };
        let lo = if lo.is_infinite() && hi.is_infinite() { -4.0 } else { lo };
        let cost = rng.gen_range(-5.0..5.0f64);
        lp.add_col(format!("x{j}"), cost, lo, hi, false);
        let a = if lo.is_finite() { lo } else { hi - 3.0 };
        let b = if hi.is_finite() { hi } else { a + 3.0 };
        x0.push(rng.gen_range(a..=b));
    }
    for i in 0..m {
        let mut coeffs = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.6) {
                coeffs.push((j, rng.gen_range(-4i32..=4) as f64));
            }
        }
        let act: f64 = coeffs.iter().map(|&(j, a)| a * x0[j]).sum();
        let (sense, rhs) = match rng.gen_range(0..3) {
            0 => (RowSense::Le, act + rng.gen_range(0.0..2.0)),
            1 => (RowSense::Ge, act - rng.gen_range(0.0..2.0)),
            _ => (RowSense::Eq, act),
        };
        lp.add_row(format!("r{i}"), &coeffs, sense, rhs);
    }
    lp
}

#[test]
fn random_boxed_lps_match_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..50 {
        let n = rng.gen_range(1..=4);
        let m = rng.gen_range(0..=5);
        let lp = random_lp(&mut rng, n, m, true);
        let res = solve_lp(&lp, &opts()).unwrap();
        let oracle = vertex_enumeration(&lp).expect("feasible by construction");
        assert_eq!(res.status, SolveStatus::Optimal, "case {case}");
        assert!(
            (res.objective - oracle).abs() <= 1e-6 * (1.0 + oracle.abs()),
            "case {case}: simplex {} vs enumeration {oracle}",
            res.objective
        );
        assert_certified(&lp, &res.x, &res.row_duals);
    }
}

#[test]
fn random_lps_with_infinite_bounds_are_certified() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let mut optimal = 0;
    for case in 0..120 {
        let n = rng.gen_range(2..=15);
        let m = rng.gen_range(1..=12);
        let lp = random_lp(&mut rng, n, m, false);
        let res = solve_lp(&lp, &opts()).unwrap();
        match res.status {
            SolveStatus::Optimal => {
                optimal += 1;
                assert_certified(&lp, &res.x, &res.row_duals);
            }
            SolveStatus::Unbounded => {
                let Some(Certificate::Unbounded { ray }) = &res.certificate else {
                    panic!("case {case}: no ray");
                };
                let descent: f64 = lp.cost.iter().zip(ray).map(|(c, r)| c * r).sum();
                assert!(descent < -1e-9, "case {case}");
                let act = lp.row_activity(ray);
                for i in 0..lp.num_rows() {
                    match lp.senses[i] {
                        RowSense::Le => assert!(act[i] <= 1e-7, "case {case}"),
                        RowSense::Ge => assert!(act[i] >= -1e-7, "case {case}"),
                        RowSense::Eq => assert!(act[i].abs() <= 1e-7, "case {case}"),
                    }
                }
            }
            other => panic!("case {case}: unexpected {other:?}"),
        }
    }
    assert!(optimal >= 30, "only {optimal} bounded cases");
}

#[test]
fn permuting_columns_preserves_objective() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..30 {
        let n = rng.gen_range(2..=10);
        let m = rng.gen_range(1..=8);
        let lp = random_lp(&mut rng, n, m, true);
        let mut perm: Vec<usize> = (0..n).collect();
        for k in (1..n).rev() {
            perm.swap(k, rng.gen_range(0..=k));
        }
        let mut q = lp.clone();
        for (new, &old) in perm.iter().enumerate() {
            q.cost[new] = lp.cost[old];
            q.lower[new] = lp.lower[old];
            q.upper[new] = lp.upper[old];
            q.col_names[new] = lp.col_names[old].clone();
        }
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        for t in &mut q.triplets {
            t.col = inv[t.col];
        }
        let a = solve_lp(&lp, &opts()).unwrap();
        let b = solve_lp(&q, &opts()).unwrap();
        assert_eq!(a.status, b.status);
        assert!((a.objective - b.objective).abs() <= 1e-9 * (1.0 + a.objective.abs()));
    }
}

#[test]
fn larger_sparse_lp_is_certified() {
    // Transportation problem: 30 sources, 40 sinks.
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let (s, t) = (30, 40);
    let supply: Vec<f64> = (0..s).map(|_| rng.gen_range(10.0..50.0)).collect();
    let total: f64 = supply.iter().sum();
    let demand: Vec<f64> = (0..t).map(|_| total / t as f64 * 0.9).collect();
    let mut lp = SparseLp::new();
    let mut v = vec![vec![0; t]; s];
    for (i, row) in v.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = lp.add_col(format!("f{i}_{j}"), rng.gen_range(1.0..20.0), 0.0, INF, false);
        }
    }
    for i in 0..s {
        let r: Vec<_> = (0..t).map(|j| (v[i][j], 1.0)).collect();
        lp.add_row(format!("s{i}"), &r, RowSense::Le, supply[i]);
    }
    for j in 0..t {
        let r: Vec<_> = (0..s).map(|i| (v[i][j], 1.0)).collect();
        lp.add_row(format!("d{j}"), &r, RowSense::Ge, demand[j]);
    }
    let res = solve_lp(&lp, &opts()).unwrap();
    assert_eq!(res.status, SolveStatus::Optimal);
    assert_certified(&lp, &res.x, &res.row_duals);
}
