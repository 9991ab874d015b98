use games_solver::oracle::enumerate_milp;
use games_solver::{solve_lp, solve_milp, RowSense, SolveStatus, SolverOptions, SparseLp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn opts() -> SolverOptions {
    SolverOptions::default()
}

#[test]
fn small_knapsack_style_milp() {
    let mut lp = SparseLp::new();
    let x = lp.add_col("x", -1.0, 0.0, 2.0, true);
    let y = lp.add_col("y", -1.0, 0.0, 2.0, true);
    lp.add_row("cap", &[(x, 1.0), (y, 1.0)], RowSense::Le, 2.5);
    let res = solve_milp(&lp, &opts()).unwrap();
    assert_eq!(res.status, SolveStatus::Optimal);
    assert!((res.objective + 2.0).abs() < 1e-9);
    assert!(lp.max_violation(&res.x, true) <= 1e-9);
    assert!(res.objective >= res.bound - 1e-9);
}

#[test]
fn integral_root_needs_no_branching() {
    let mut lp = SparseLp::new();
    let x = lp.add_col("x", -3.0, 0.0, 10.0, true);
    let y = lp.add_col("y", -2.0, 0.0, 10.0, true);
    lp.add_row("cap", &[(x, 1.0), (y, 1.0)], RowSense::Le, 4.0);
    lp.add_row("xmax", &[(x, 1.0), (y, 0.0)], RowSense::Le, 2.0);
    let res = solve_milp(&lp, &opts()).unwrap();
    assert_eq!(res.status, SolveStatus::Optimal);
    assert!((res.objective + 10.0).abs() < 1e-9);
    assert_eq!(res.nodes, 1);
}

#[test]
fn infeasible_integer_problem() {
    let mut lp = SparseLp::new();
    let x = lp.add_col("x", 1.0, 0.0, 5.0, true);
    let y = lp.add_col("y", 1.0, 0.0, 5.0, true);
    // 2x + 2y = 3 has no integer solution.
    lp.add_row("odd", &[(x, 2.0), (y, 2.0)], RowSense::Eq, 3.0);
    let res = solve_milp(&lp, &opts()).unwrap();
    assert_eq!(res.status, SolveStatus::Infeasible);
}

#[test]
fn node_limit_returns_gap_limit_with_incumbent() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let n = 30;
    let mut lp = SparseLp::new();
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(10.0..60.0f64).round()).collect();
    for (j, &wj) in w.iter().enumerate() {
        lp.add_col(format!("x{j}"), -(wj + rng.gen_range(-5.0..5.0f64).round()), 0.0, 1.0, true);
    }
    let row: Vec<_> = (0..n).map(|j| (j, w[j])).collect();
    lp.add_row("cap", &row, RowSense::Le, w.iter().sum::<f64>() / 2.0 + 0.5);
    let capped = SolverOptions { node_limit: 3, ..opts() };
    let res = solve_milp(&lp, &capped).unwrap();
    assert!(matches!(res.status, SolveStatus::GapLimit | SolveStatus::Optimal));
    if res.status == SolveStatus::GapLimit {
        assert!(res.x.iter().all(|v| (v - v.round()).abs() < 1e-9));
        assert!(res.objective >= res.bound - 1e-9);
    }
}

fn random_milp(rng: &mut ChaCha8Rng) -> SparseLp {
    let n_int = rng.gen_range(1..=6);
    let n_cont = rng.gen_range(0..=10);
    let m = rng.gen_range(1..=12);
    let mut lp = SparseLp::new();
    let mut x0 = Vec::new();
    for j in 0..n_int {
        lp.add_col(format!("i{j}"), rng.gen_range(-6.0..6.0f64), 0.0, 3.0, true);
        x0.push(rng.gen_range(0..=3) as f64);
    }
    for j in 0..n_cont {
        let hi = rng.gen_range(1.0..8.0f64).round();
        lp.add_col(format!("c{j}"), rng.gen_range(-4.0..4.0f64), 0.0, hi, false);
        x0.push(rng.gen_range(0.0..hi));
    }
    let n = n_int + n_cont;
    for i in 0..m {
        let mut coeffs = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.5) {
                coeffs.push((j, rng.gen_range(-5i32..=5) as f64));
            }
        }
        let act: f64 = coeffs.iter().map(|&(j, a)| a * x0[j]).sum();
        // Mostly feasible around x0; a fraction is left to chance.
        let slack = if rng.gen_bool(0.8) { rng.gen_range(0.0..3.0) } else { rng.gen_range(-2.0..1.0) };
        let (sense, rhs) = match rng.gen_range(0..5) {
            0 | 1 => (RowSense::Le, act + slack),
            2 | 3 => (RowSense::Ge, act - slack),
            _ => (RowSense::Eq, act),
        };
        lp.add_row(format!("r{i}"), &coeffs, sense, rhs);
    }
    lp
}

#[test]
fn random_milps_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut feasible = 0;
    for case in 0..20 {
        let lp = random_milp(&mut rng);
        let res = solve_milp(&lp, &opts()).unwrap();
        match enumerate_milp(&lp, &opts()) {
            Some(best) => {
                feasible += 1;
                assert_eq!(res.status, SolveStatus::Optimal, "case {case}");
                assert!(
                    (res.objective - best).abs() <= 1e-6 * (1.0 + best.abs()),
                    "case {case}: bnb {} vs enumeration {best}",
                    res.objective
                );
                assert!(lp.max_violation(&res.x, true) <= 1e-6, "case {case}");
            }
            None => assert_eq!(res.status, SolveStatus::Infeasible, "case {case}"),
        }
    }
    assert!(feasible >= 10);
}

#[test]
fn milp_objective_never_beats_relaxation() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let lp = random_milp(&mut rng);
        let relax = solve_lp(&lp, &opts()).unwrap();
        let res = solve_milp(&lp, &opts()).unwrap();
        if res.status == SolveStatus::Optimal {
            assert_eq!(relax.status, SolveStatus::Optimal);
            assert!(res.objective >= relax.objective - 1e-7);
            assert!(res.objective >= res.bound - 1e-6 * (1.0 + res.objective.abs()));
        }
    }
}
