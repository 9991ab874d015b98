//! Planning and full-horizon solves, and decoding into structured results.

use serde::{Deserialize, Serialize};

use games_solver::{solve_lp, solve_lp_warm, solve_milp, Certificate, SolveResult, SolveStatus, SolverOptions, WarmStart};

use super::instance::{profiles, DayProfile, GtepInstance};
use super::model::{assemble, Layout, PlanningModel};
use super::GtepError;
use crate::dataset::MultiResolutionDataset;
use crate::repdays::RepresentativeDaySet;
use crate::scalar::Scalar;

const INTEGRALITY_TOL: f64 = 1e-6;

/// Cost and emission summary. Costs in $, emissions in tCO2, both summed
/// over the horizon with day weights.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub total: f64,
    /// Power investment, FOM, dispatch and power shedding.
    pub power_system: f64,
    /// Gas expansion, supply and gas shedding.
    pub ng_system: f64,
    pub invest_fom_power: f64,
    pub shed_power: f64,
    pub shed_gas: f64,
    pub emission_power: f64,
    pub emission_total: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PowerInvestments {
    pub build: Vec<f64>,
    pub retire: Vec<f64>,
    pub storage_build: Vec<f64>,
    /// Build decision of every candidate line, in line order.
    pub line_build: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GasInvestments {
    pub supply_expansion: Vec<f64>,
    pub pipeline_expansion: Vec<f64>,
    pub storage_expansion: Vec<f64>,
}

/// A solved planning or full-horizon model.
///
/// The remaining power operations (charge, discharge, state of charge, line
/// flows, shedding) and gas operations (supply, pipeline flows, storage,
/// shedding) are read from `x` through `layout`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GtepSolution {
    pub status: SolveStatus,
    pub objective: f64,
    pub bound: f64,
    /// `(dataset day, weight)` of every modeled day.
    pub days: Vec<(usize, f64)>,
    pub emission_cap: Option<f64>,
    pub layout: Layout,
    pub x: Vec<f64>,
    pub x_e: PowerInvestments,
    pub x_g: GasInvestments,
    /// NG-fired generation, `[zone][day][hour]` MWh.
    pub p: Vec<Vec<Vec<f64>>>,
    /// Fuel flow, `[edge][day]` MMBtu.
    pub f: Vec<Vec<f64>>,
    pub breakdown: CostBreakdown,
    /// Names of rows in the infeasibility certificate.
    pub infeasible_rows: Vec<String>,
    /// Final LP basis of a full-horizon solve.
    #[serde(skip)]
    pub basis: Option<WarmStart>,
}

impl GtepSolution {
    pub fn has_solution(&self) -> bool {
        self.status.has_solution()
    }

    /// Total units built over all plant, storage, line and gas decisions.
    pub fn total_builds(&self) -> f64 {
        let e = &self.x_e;
        let g = &self.x_g;
        [&e.build, &e.storage_build, &e.line_build, &g.supply_expansion, &g.pipeline_expansion, &g.storage_expansion]
            .iter()
            .flat_map(|v| v.iter())
            .sum()
    }
}

/// Assembles the planning model over the representative days.
pub fn build_milp<T: Scalar>(
    instance: &GtepInstance,
    days: &RepresentativeDaySet,
    dataset: &MultiResolutionDataset<T>,
) -> Result<PlanningModel, GtepError> {
    build_weighted(instance, &days.weighted_days(), dataset).map(|(m, _)| m)
}

fn build_weighted<T: Scalar>(
    instance: &GtepInstance,
    days: &[(usize, f64)],
    dataset: &MultiResolutionDataset<T>,
) -> Result<(PlanningModel, Vec<DayProfile>), GtepError> {
    instance.validate()?;
    let prof = profiles(instance, dataset, days)?;
    let model = assemble(instance, &prof, dataset.dims().t_e);
    Ok((model, prof))
}

/// Solves the representative-day planning MILP.
pub fn solve_planning<T: Scalar>(
    instance: &GtepInstance,
    days: &RepresentativeDaySet,
    dataset: &MultiResolutionDataset<T>,
    opts: &SolverOptions,
) -> Result<GtepSolution, GtepError> {
    let (model, prof) = build_weighted(instance, &days.weighted_days(), dataset)?;
    log::info!(
        "planning model: {} columns, {} rows, {} days",
        model.lp.num_cols(),
        model.lp.num_rows(),
        prof.len()
    );
    let res = solve_milp(&model.lp, opts)?;
    finish(instance, &model, &prof, res)
}

/// Fixes the planning investments and solves the operations over every
/// dataset day with weight 1.
pub fn evaluate_full_horizon<T: Scalar>(
    instance: &GtepInstance,
    planning: &GtepSolution,
    dataset: &MultiResolutionDataset<T>,
    opts: &SolverOptions,
) -> Result<GtepSolution, GtepError> {
    evaluate_full_horizon_warm(instance, planning, dataset, opts, None)
}

/// [`evaluate_full_horizon`] with the LP started from the basis of another
/// full-horizon solve on the same dataset.
pub fn evaluate_full_horizon_warm<T: Scalar>(
    instance: &GtepInstance,
    planning: &GtepSolution,
    dataset: &MultiResolutionDataset<T>,
    opts: &SolverOptions,
    start: Option<&WarmStart>,
) -> Result<GtepSolution, GtepError> {
    if !planning.has_solution() {
        return Err(GtepError::NoSolution(planning.status));
    }
    let n_inv = planning.layout.num_investment_cols();
    let fixed: Vec<f64> = planning.x[..n_inv].to_vec();
    fixed_horizon(instance, dataset, &fixed, opts, start)
}

/// Emission of the existing fleet (no builds, no retirements) dispatched at
/// least cost over the full horizon with no emission cap.
pub fn baseline_emission<T: Scalar>(
    instance: &GtepInstance,
    dataset: &MultiResolutionDataset<T>,
    opts: &SolverOptions,
) -> Result<f64, GtepError> {
    let free = instance.with_emission_cap(None);
    let n_inv = Layout::new(&free, 0, 0).num_investment_cols();
    let sol = fixed_horizon(&free, dataset, &vec![0.0; n_inv], opts, None)?;
    Ok(sol.breakdown.emission_total)
}

/// Emission cap reaching `goal` (e.g. 0.8) reduction from `baseline`.
pub fn emission_cap_for_goal(baseline: f64, goal: f64) -> f64 {
    (1.0 - goal) * baseline
}

fn fixed_horizon<T: Scalar>(
    instance: &GtepInstance,
    dataset: &MultiResolutionDataset<T>,
    investments: &[f64],
    opts: &SolverOptions,
    start: Option<&WarmStart>,
) -> Result<GtepSolution, GtepError> {
    let all: Vec<(usize, f64)> = (0..dataset.len()).map(|d| (d, 1.0)).collect();
    let (mut model, prof) = build_weighted(instance, &all, dataset)?;
    for (j, &v) in investments.iter().enumerate() {
        let r = v.round();
        if (v - r).abs() > INTEGRALITY_TOL {
            return Err(GtepError::NotIntegral { column: model.lp.col_names[j].clone(), value: v });
        }
        model.lp.lower[j] = r;
        model.lp.upper[j] = r;
        model.lp.integer[j] = false;
    }
    log::info!("full-horizon LP: {} columns, {} rows", model.lp.num_cols(), model.lp.num_rows());
    let res = match start {
        Some(ws) if ws.columns.len() == model.lp.num_cols() && ws.rows.len() == model.lp.num_rows() => {
            solve_lp_warm(&model.lp, opts, ws)?
        }
        _ => solve_lp(&model.lp, opts)?,
    };
    let sol = finish(instance, &model, &prof, res)?;
    if sol.status == SolveStatus::Infeasible {
        return Err(GtepError::Infeasible { rows: sol.infeasible_rows });
    }
    Ok(sol)
}

fn finish(
    instance: &GtepInstance,
    model: &PlanningModel,
    prof: &[DayProfile],
    res: SolveResult,
) -> Result<GtepSolution, GtepError> {
    let lay = &model.layout;
    let days: Vec<(usize, f64)> = prof.iter().map(|p| (p.day, p.weight)).collect();
    match res.status {
        s if s.has_solution() => {}
        SolveStatus::Infeasible => {
            let rows = match &res.certificate {
                Some(Certificate::Infeasible { rows, .. }) => {
                    rows.iter().map(|&r| model.lp.row_names[r].clone()).collect()
                }
                _ => Vec::new(),
            };
            return Ok(GtepSolution {
                status: SolveStatus::Infeasible,
                objective: f64::NAN,
                bound: f64::NAN,
                days,
                emission_cap: instance.coupling.emission_cap,
                layout: lay.clone(),
                x: Vec::new(),
                x_e: PowerInvestments::default(),
                x_g: GasInvestments::default(),
                p: Vec::new(),
                f: Vec::new(),
                breakdown: CostBreakdown::default(),
                infeasible_rows: rows,
                basis: None,
            });
        }
        s => return Err(GtepError::NoSolution(s)),
    }
    let basis = res.basis;
    let mut x = res.x;
    for v in &mut x[..lay.num_investment_cols()] {
        *v = v.round();
    }
    let pick = |n: usize, col: &dyn Fn(usize) -> usize| -> Vec<f64> { (0..n).map(|i| x[col(i)]).collect() };
    let x_e = PowerInvestments {
        build: pick(lay.plants, &|p| lay.build(p)),
        retire: pick(lay.plants, &|p| lay.retire(p)),
        storage_build: pick(lay.storage, &|s| lay.storage_build(s)),
        line_build: pick(lay.candidates.len(), &|c| lay.line_build(c)),
    };
    let x_g = GasInvestments {
        supply_expansion: pick(lay.gas_nodes, &|n| lay.supply_exp(n)),
        pipeline_expansion: pick(lay.pipelines, &|q| lay.pipeline_exp(q)),
        storage_expansion: pick(lay.gas_storage, &|s| lay.gas_storage_exp(s)),
    };
    let plants = &instance.power.plants;
    let p = (0..lay.zones)
        .map(|z| {
            (0..lay.days)
                .map(|d| {
                    (0..lay.hours)
                        .map(|h| {
                            (0..lay.plants)
                                .filter(|&i| plants[i].node == z && plants[i].is_ng_fired())
                                .map(|i| x[lay.gen(d, h, i)])
                                .sum()
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let f = (0..lay.edges).map(|e| (0..lay.days).map(|d| x[lay.fuel(d, e)]).collect()).collect();
    let breakdown = breakdown(instance, lay, prof, &x);
    Ok(GtepSolution {
        status: res.status,
        objective: res.objective,
        bound: res.bound,
        days,
        emission_cap: instance.coupling.emission_cap,
        layout: lay.clone(),
        x,
        x_e,
        x_g,
        p,
        f,
        breakdown,
        infeasible_rows: Vec::new(),
        basis,
    })
}

/// Evaluates the cost categories directly from the instance data.
pub(crate) fn breakdown(instance: &GtepInstance, lay: &Layout, prof: &[DayProfile], x: &[f64]) -> CostBreakdown {
    let pw = &instance.power;
    let gs = &instance.gas;
    let cp = &instance.coupling;
    let mut invest = 0.0;
    for (p, pl) in pw.plants.iter().enumerate() {
        invest += pl.invest_fom_cost * x[lay.build(p)];
        invest += pl.fom_cost * (pl.existing_units as f64 - x[lay.retire(p)]);
    }
    for (s, st) in pw.storage.iter().enumerate() {
        invest += st.invest_cost * x[lay.storage_build(s)];
    }
    for (c, &l) in lay.candidates.iter().enumerate() {
        invest += pw.lines[l].invest_cost * x[lay.line_build(c)];
    }
    let mut gas_invest = 0.0;
    for (n, node) in gs.nodes.iter().enumerate() {
        gas_invest += node.expansion_cost * x[lay.supply_exp(n)];
    }
    for (q, pipe) in gs.pipelines.iter().enumerate() {
        gas_invest += pipe.expansion_cost * x[lay.pipeline_exp(q)];
    }
    for (s, st) in gs.storage.iter().enumerate() {
        gas_invest += st.expansion_cost * x[lay.gas_storage_exp(s)];
    }
    let (mut dispatch, mut shed_power, mut supply, mut shed_gas) = (0.0, 0.0, 0.0, 0.0);
    let (mut fuel, mut served) = (0.0, 0.0);
    for (d, day) in prof.iter().enumerate() {
        let w = day.weight;
        for h in 0..lay.hours {
            for (p, pl) in pw.plants.iter().enumerate() {
                dispatch += w * pl.variable_cost * x[lay.gen(d, h, p)];
            }
            for z in 0..lay.zones {
                shed_power += w * pw.shed_cost * x[lay.shed(d, h, z)];
            }
        }
        for (n, node) in gs.nodes.iter().enumerate() {
            supply += w * node.supply_cost * x[lay.supply(d, n)];
            shed_gas += w * gs.shed_cost * x[lay.gas_shed(d, n)];
            served += w * (day.gas_demand[n] - x[lay.gas_shed(d, n)]);
        }
        for e in 0..lay.edges {
            fuel += w * x[lay.fuel(d, e)];
        }
    }
    let power_system = invest + dispatch + shed_power;
    let ng_system = gas_invest + supply + shed_gas;
    let emission_power = cp.e_p * fuel;
    CostBreakdown {
        total: power_system + ng_system,
        power_system,
        ng_system,
        invest_fom_power: invest,
        shed_power,
        shed_gas,
        emission_power,
        emission_total: emission_power + cp.e_g * served,
    }
}
