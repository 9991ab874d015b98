use games_core::dataset::DaySignal;
use games_core::gtep::*;
use games_core::repdays::{RepresentativeDaySet, Source};
use games_core::{Dataset, Graph, Matrix};
use games_solver::{solve_lp, SolveStatus, SolverOptions};
use proptest::prelude::*;

fn plant(name: &str, node: usize, kind: PlantKind, existing: u32, max_new: u32) -> Plant {
    Plant {
        name: name.into(),
        node,
        kind,
        unit_mw: 50.0,
        existing_units: existing,
        max_new_units: max_new,
        max_retired_units: existing,
        invest_fom_cost: 2000.0,
        fom_cost: 300.0,
        variable_cost: if kind == PlantKind::NgFired { 4.0 } else { 0.0 },
        heat_rate: if kind == PlantKind::NgFired { 7.0 } else { 0.0 },
        ramp_limit: 1.0,
    }
}

/// Two zones joined by one existing line, one gas node feeding zone 0,
/// an NG plant at zone 0 and a solar plant at zone 1.
fn tiny() -> GtepInstance {
    GtepInstance {
        power: PowerSystem {
            nodes: vec![
                PowerNode { name: "z0".into(), members: vec![0] },
                PowerNode { name: "z1".into(), members: vec![1] },
            ],
            plants: vec![plant("ng0", 0, PlantKind::NgFired, 2, 2), plant("pv1", 1, PlantKind::Solar, 1, 3)],
            lines: vec![Line {
                name: "l01".into(),
                from: 0,
                to: 1,
                capacity_mw: 80.0,
                candidate: false,
                invest_cost: 0.0,
            }],
            storage: vec![],
            shed_cost: 1000.0,
        },
        gas: GasSystem {
            nodes: vec![GasNode {
                name: "g0".into(),
                members: vec![0],
                supply_capacity: 5000.0,
                supply_cost: 3.0,
                expansion_unit: 1000.0,
                max_expansion_units: 2,
                expansion_cost: 500.0,
            }],
            pipelines: vec![],
            storage: vec![],
            storage_links: vec![],
            shed_cost: 40.0,
        },
        coupling: Coupling { edges: vec![(0, 0)], e_g: 0.05, e_p: 0.05, emission_cap: None },
        policy: Policy { rps_share: 0.0 },
    }
}

fn dataset(demand: &[[[f64; 2]; 2]], solar: f64, gas: f64) -> Dataset {
    let days = demand
        .iter()
        .enumerate()
        .map(|(d, e)| DaySignal {
            day_index: d,
            electricity: Matrix::from_rows(&[e[0].to_vec(), e[1].to_vec()]),
            wind_cf: Matrix::from_rows(&[vec![0.0, 0.0], vec![0.0, 0.0]]),
            solar_cf: Matrix::from_rows(&[vec![solar, solar * 0.5], vec![solar, solar * 0.5]]),
            gas: Matrix::from_rows(&[vec![gas]]),
        })
        .collect();
    Dataset::new(Graph::new(2, &[(0, 1)]).unwrap(), Graph::new(1, &[]).unwrap(), vec![(0, 0)], days).unwrap()
}

fn one_day() -> Dataset {
    dataset(&[[[60.0, 80.0], [40.0, 30.0]]], 0.8, 200.0)
}

fn three_days() -> Dataset {
    dataset(
        &[[[60.0, 80.0], [40.0, 30.0]], [[90.0, 120.0], [70.0, 20.0]], [[30.0, 20.0], [10.0, 40.0]]],
        0.6,
        300.0,
    )
}

fn opts() -> SolverOptions {
    SolverOptions::default()
}

fn plan(inst: &GtepInstance, data: &Dataset, days: &RepresentativeDaySet) -> GtepSolution {
    let sol = solve_planning(inst, days, data, &opts()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    sol
}

fn all(data: &Dataset) -> RepresentativeDaySet {
    RepresentativeDaySet::all_days(data.len(), Source::Embeddings)
}

#[test]
fn tiny_instance_counts_match_formula() {
    let inst = tiny();
    let data = one_day();
    let model = build_milp(&inst, &all(&data), &data).unwrap();
    // Hand count: investments 2·2 plants + 1 supply expansion = 5; per hour
    // 2 gen + 1 flow + 2 shed = 5, two hours = 10; per day supply, gas shed
    // and one fuel edge = 3. Rows: per hour 2 balance + 2 generation, gas
    // balance, supply cap, one coupling row.
    assert_eq!(model.lp.num_cols(), 18);
    assert_eq!(model.layout.num_cols(), 18);
    assert_eq!(model.lp.num_rows(), 11);
    assert_eq!(expected_rows(&inst, 1, 2), 11);
    let gens = model.lp.col_names.iter().filter(|n| n.starts_with("gen[")).count();
    assert_eq!(gens, 2 * 2);

    let mut rich = inst.clone();
    rich.policy.rps_share = 0.1;
    rich.coupling.emission_cap = Some(1e3);
    rich.power.plants[0].ramp_limit = 0.5;
    rich.power.storage.push(Storage {
        name: "b1".into(),
        node: 1,
        unit_mw: 10.0,
        unit_mwh: 40.0,
        existing_units: 0,
        max_new_units: 2,
        invest_cost: 100.0,
        charge_efficiency: 0.9,
        discharge_efficiency: 0.9,
    });
    let mut cand = rich.power.lines[0].clone();
    cand.name = "l01b".into();
    cand.candidate = true;
    rich.power.lines.push(cand);
    let model = build_milp(&rich, &all(&three_days()), &three_days()).unwrap();
    assert_eq!(model.lp.num_rows(), expected_rows(&rich, 3, 2));
    assert_eq!(model.lp.num_cols(), model.layout.num_cols());
    assert_eq!(model.lp.row_names.iter().filter(|n| n.starts_with("ramp_up")).count(), 3);
}

#[test]
fn column_names_follow_layout() {
    let inst = tiny();
    let data = three_days();
    let m = build_milp(&inst, &all(&data), &data).unwrap();
    let l = &m.layout;
    assert_eq!(m.lp.col_names[l.gen(2, 1, 1)], "gen[pv1,2,1]");
    assert_eq!(m.lp.col_names[l.shed(1, 0, 0)], "shed[z0,1,0]");
    assert_eq!(m.lp.col_names[l.fuel(0, 0)], "fuel[z0,g0,0]");
    assert_eq!(m.lp.col_names[l.gas_shed(2, 0)], "gas_shed[g0,2]");
    assert_eq!(m.lp.col_names[l.retire(0)], "retire[ng0]");
    assert_eq!(m.lp.col_names[l.supply_exp(0)], "supply_exp[g0]");
}

#[test]
fn ample_capacity_sheds_nothing() {
    let inst = tiny();
    let data = one_day();
    let sol = plan(&inst, &data, &all(&data));
    assert_eq!(sol.breakdown.shed_power, 0.0);
    assert_eq!(sol.breakdown.shed_gas, 0.0);
    assert!(check_feasibility(&inst, &sol, &data).max_violation() <= 1e-6);
}

#[test]
fn zero_emission_cap_sheds_all_demand() {
    let mut inst = tiny();
    inst.power.plants.truncate(1);
    inst.power.plants[0].existing_units = 0;
    inst.power.plants[0].max_retired_units = 0;
    inst.coupling.emission_cap = Some(0.0);
    let data = dataset(&[[[60.0, 80.0], [40.0, 30.0]], [[10.0, 20.0], [5.0, 0.0]]], 0.0, 0.0);
    let days = RepresentativeDaySet {
        medoids: vec![0, 1],
        assignment: vec![0, 1],
        weights: vec![3, 2],
        objective: 0.0,
        source: Source::Raw,
    };
    let sol = plan(&inst, &data, &days);
    let demand = 3.0 * (60.0 + 80.0 + 40.0 + 30.0) + 2.0 * (10.0 + 20.0 + 5.0);
    let expected = 1000.0 * demand;
    assert!((sol.objective - expected).abs() <= 1e-9 * expected, "{} vs {expected}", sol.objective);
    assert!((sol.breakdown.total - expected).abs() <= 1e-9 * expected);
    assert!(sol.breakdown.emission_total.abs() <= 1e-9);
}

#[test]
fn doubling_costs_doubles_objective() {
    let inst = tiny();
    let data = three_days();
    let days = all(&data);
    let a = plan(&inst, &data, &days);
    let doubled = inst.scale_costs(2.0);
    let b = plan(&doubled, &data, &days);
    assert!((b.objective - 2.0 * a.objective).abs() <= 1e-6 * a.objective.abs().max(1.0));
    // The doubled model's investments are optimal for the original one.
    let fixed = evaluate_full_horizon(&inst, &b, &data, &opts()).unwrap();
    assert!((fixed.objective - a.objective).abs() <= 1e-6 * a.objective.abs().max(1.0));
}

#[test]
fn vacuous_policy_rows_are_absent() {
    let inst = tiny();
    let data = three_days();
    let m = build_milp(&inst, &all(&data), &data).unwrap();
    assert!(!m.lp.row_names.iter().any(|n| n == "rps" || n == "emission"));
    // A cap far above any reachable emission leaves the optimum unchanged.
    let loose = inst.with_emission_cap(Some(1e12));
    let a = plan(&inst, &data, &all(&data));
    let b = plan(&loose, &data, &all(&data));
    assert!((a.objective - b.objective).abs() <= 1e-9 * a.objective.abs().max(1.0));
}

#[test]
fn zero_demand_costs_nothing() {
    let mut inst = tiny();
    for p in &mut inst.power.plants {
        p.existing_units = 0;
        p.max_retired_units = 0;
    }
    let data = dataset(&[[[0.0; 2]; 2], [[0.0; 2]; 2]], 0.5, 0.0);
    let sol = plan(&inst, &data, &all(&data));
    assert_eq!(sol.objective, 0.0);
    assert_eq!(sol.total_builds(), 0.0);
    let full = evaluate_full_horizon(&inst, &sol, &data, &opts()).unwrap();
    assert_eq!(full.breakdown.total, 0.0);
}

#[test]
fn all_days_reproduce_full_horizon() {
    let mut inst = tiny();
    inst.coupling.emission_cap = Some(150.0);
    inst.policy.rps_share = 0.05;
    let data = three_days();
    let a = plan(&inst, &data, &all(&data));
    let b = evaluate_full_horizon(&inst, &a, &data, &opts()).unwrap();
    assert!((a.objective - b.objective).abs() <= 1e-6 * a.objective.abs());
    // Full-horizon cost is bounded below by the relaxation of the full MILP.
    let relaxed = solve_lp(&build_milp(&inst, &all(&data), &data).unwrap().lp, &opts()).unwrap();
    assert!(relaxed.objective <= b.objective + 1e-6 * b.objective.abs());
}

#[test]
fn breakdown_sums_to_objective() {
    let mut inst = tiny();
    inst.coupling.emission_cap = Some(120.0);
    let data = three_days();
    let days = RepresentativeDaySet {
        medoids: vec![0, 1],
        assignment: vec![0, 1, 0],
        weights: vec![2, 1],
        objective: 0.0,
        source: Source::Raw,
    };
    let sol = plan(&inst, &data, &days);
    let b = sol.breakdown;
    assert!((b.power_system + b.ng_system - b.total).abs() <= 1e-9 * b.total);
    assert!((b.total - sol.objective).abs() <= 1e-6 * b.total);
    let fuel: f64 = sol.f[0].iter().zip(&days.weights).map(|(f, &w)| f * w as f64).sum();
    assert!((b.emission_power - 0.05 * fuel).abs() <= 1e-9 * b.emission_power.max(1.0));
    assert!(b.emission_total <= 120.0 + 1e-6);
}

#[test]
fn tighter_caps_never_lower_cost() {
    let inst = tiny();
    let data = three_days();
    let days = all(&data);
    let base = baseline_emission(&inst, &data, &opts()).unwrap();
    assert!(base > 0.0);
    let free = plan(&inst, &data, &days).objective;
    let at = |goal: f64| plan(&inst.with_emission_cap(Some(emission_cap_for_goal(base, goal))), &data, &days);
    let s80 = at(0.8);
    let s95 = at(0.95);
    assert!(s80.objective >= free - 1e-6 * free);
    assert!(s95.objective >= s80.objective - 1e-6 * s80.objective);
    assert!(s95.breakdown.emission_total <= emission_cap_for_goal(base, 0.95) + 1e-6);
}

#[test]
fn rps_share_is_met() {
    let mut inst = tiny();
    inst.policy.rps_share = 0.3;
    let data = three_days();
    let sol = plan(&inst, &data, &all(&data));
    let l = &sol.layout;
    let mut vre = 0.0;
    let mut demand = 0.0;
    for d in 0..3 {
        for h in 0..2 {
            vre += sol.x[l.gen(d, h, 1)];
            demand += data.days[d].electricity.as_slice().iter().skip(h).step_by(2).sum::<f64>();
        }
    }
    assert!(vre / demand >= 0.3 - 1e-9, "{}", vre / demand);
}

#[test]
fn unreachable_rps_reports_certificate() {
    let mut inst = tiny();
    inst.policy.rps_share = 1.0;
    inst.power.plants[1].max_new_units = 0;
    let data = one_day();
    let sol = solve_planning(&inst, &all(&data), &data, &opts()).unwrap();
    assert_eq!(sol.status, SolveStatus::Infeasible);
    assert!(sol.infeasible_rows.iter().any(|r| r == "rps"), "{:?}", sol.infeasible_rows);
}

#[test]
fn perturbed_generation_is_located() {
    let inst = tiny();
    let data = three_days();
    let mut sol = plan(&inst, &data, &all(&data));
    let report = check_feasibility(&inst, &sol, &data);
    assert!(report.max_violation() <= 1e-6, "{report:?}");
    let col = sol.layout.gen(1, 0, 0);
    assert!(sol.x[col] > 0.0);
    sol.x[col] *= 1.1;
    let report = check_feasibility(&inst, &sol, &data);
    let bal = report.family("balance").unwrap();
    assert!(bal.max > 1e-6);
    assert_eq!(bal.location, "balance[zone=z0,day=1,hour=0]");
}

#[test]
fn zero_solution_on_zero_demand_has_no_violation() {
    let mut inst = tiny();
    for p in &mut inst.power.plants {
        p.existing_units = 0;
        p.max_retired_units = 0;
    }
    let data = dataset(&[[[0.0; 2]; 2]], 0.5, 0.0);
    let mut sol = plan(&inst, &data, &all(&data));
    sol.x.iter_mut().for_each(|v| *v = 0.0);
    assert_eq!(check_feasibility(&inst, &sol, &data).max_violation(), 0.0);
}

#[test]
fn invalid_inputs_are_rejected() {
    let mut inst = tiny();
    inst.coupling.edges.clear();
    let data = one_day();
    assert!(matches!(build_milp(&inst, &all(&data), &data), Err(GtepError::Uncoupled { .. })));
    let days = RepresentativeDaySet { medoids: vec![4], assignment: vec![4], weights: vec![1], objective: 0.0, source: Source::Raw };
    assert!(matches!(build_milp(&tiny(), &days, &data), Err(GtepError::DayOutOfRange { day: 4, .. })));
    let mut bad = tiny();
    bad.policy.rps_share = 1.5;
    assert!(bad.validate().is_err());
}

#[test]
fn instance_json_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("instance.json");
    let mut inst = tiny();
    inst.coupling.emission_cap = Some(12.5);
    inst.write_json(&path).unwrap();
    assert_eq!(GtepInstance::read_json(&path).unwrap(), inst);
}

#[test]
fn percent_change_sign() {
    assert_eq!(percent_change(90.0, 100.0), -10.0);
    assert_eq!(percent_change(110.0, 100.0), 10.0);
    assert_eq!(percent_change(0.0, 0.0), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn planning_solutions_are_feasible(
        demand in proptest::collection::vec(0.0f64..150.0, 8),
        solar in 0.0f64..1.0,
        gas in 0.0f64..800.0,
        cap in proptest::option::of(0.0f64..300.0),
        rps in 0.0f64..0.2,
    ) {
        let mut inst = tiny();
        inst.coupling.emission_cap = cap;
        inst.policy.rps_share = rps;
        inst.power.plants[1].max_new_units = 10;
        let d = [[[demand[0], demand[1]], [demand[2], demand[3]]], [[demand[4], demand[5]], [demand[6], demand[7]]]];
        let data = dataset(&d, solar.max(0.5), gas);
        let sol = solve_planning(&inst, &all(&data), &data, &opts()).unwrap();
        prop_assume!(sol.has_solution());
        let report = check_feasibility(&inst, &sol, &data);
        prop_assert!(report.max_violation() <= 1e-6, "{:?}", report);
        let b = sol.breakdown;
        prop_assert!((b.total - sol.objective).abs() <= 1e-6 * b.total.abs().max(1.0));
        if let Some(c) = cap {
            prop_assert!(b.emission_total <= c + 1e-6);
        }
    }
}
