//! Embedding-based versus raw-signal representative days.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use games_solver::SolverOptions;

use super::check::check_feasibility;
use super::instance::GtepInstance;
use super::solution::{baseline_emission, emission_cap_for_goal, evaluate_full_horizon, solve_planning, CostBreakdown};
use super::GtepError;
use crate::dataset::MultiResolutionDataset;
use crate::games::EmbeddingSet;
use crate::repdays::{kmedoids, kmedoids_raw, RepresentativeDaySet, Source};
use crate::scalar::Scalar;

/// Column labels of the percentage summary, in order.
pub const QUANTITIES: [&str; 6] = ["Total", "Power", "NG", "Inv-FOM", "Shedding", "Emission"];

/// Full-horizon outcome of one (K, source, goal) evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub k: usize,
    pub source: Source,
    pub goal: f64,
    pub emission_cap: f64,
    pub total: f64,
    pub power: f64,
    pub ng: f64,
    pub invest_fom: f64,
    /// Power plus gas shedding cost.
    pub shed: f64,
    /// Emission of the power system.
    pub emission: f64,
    pub emission_total: f64,
    pub max_violation: f64,
    pub medoids: Vec<usize>,
}

impl ComparisonRow {
    /// The six reported quantities in [`QUANTITIES`] order.
    pub fn values(&self) -> [f64; 6] {
        [self.total, self.power, self.ng, self.invest_fom, self.shed, self.emission]
    }
}

/// Average over K of the percentage change of GAMES relative to raw
/// clustering, per reduction goal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercentRow {
    pub goal: f64,
    pub values: [f64; 6],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub baseline_emission: f64,
    pub rows: Vec<ComparisonRow>,
    pub summary: Vec<PercentRow>,
}

/// `100 · (games − raw) / |raw|`; negative when GAMES is cheaper. Zero when
/// both are zero.
pub fn percent_change(games: f64, raw: f64) -> f64 {
    if games == raw {
        0.0
    } else {
        100.0 * (games - raw) / raw.abs()
    }
}

fn goal_label(goal: f64) -> String {
    format!("{goal}")
}

impl ComparisonReport {
    /// Rows as `K,source,goal,total,power,ng,invest_fom,shed,emission`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("K,source,goal,total,power,ng,invest_fom,shed,emission\n");
        for r in &self.rows {
            let _ = write!(out, "{},{},{}", r.k, r.source, goal_label(r.goal));
            for v in r.values() {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    /// Percentage summary as `goal,Total,Power,NG,Inv-FOM,Shedding,Emission`.
    pub fn summary_csv(&self) -> String {
        let mut out = format!("goal,{}\n", QUANTITIES.join(","));
        for r in &self.summary {
            out.push_str(&goal_label(r.goal));
            for v in r.values {
                let _ = write!(out, ",{v:.4}");
            }
            out.push('\n');
        }
        out
    }
}

/// Averages per-K percentage changes for every goal present in `rows`.
pub fn summarize(rows: &[ComparisonRow]) -> Vec<PercentRow> {
    let mut goals: Vec<f64> = rows.iter().map(|r| r.goal).collect();
    goals.sort_by(f64::total_cmp);
    goals.dedup();
    goals
        .into_iter()
        .map(|goal| {
            let at = |src: Source| -> BTreeMap<usize, &ComparisonRow> {
                rows.iter().filter(|r| r.goal == goal && r.source == src).map(|r| (r.k, r)).collect()
            };
            let (games, raw) = (at(Source::Embeddings), at(Source::Raw));
            let mut sums = [0.0; 6];
            let mut n = 0usize;
            for (k, g) in &games {
                if let Some(r) = raw.get(k) {
                    for (s, (a, b)) in sums.iter_mut().zip(g.values().iter().zip(r.values())) {
                        *s += percent_change(*a, b);
                    }
                    n += 1;
                }
            }
            let values = if n == 0 { [f64::NAN; 6] } else { sums.map(|s| s / n as f64) };
            PercentRow { goal, values }
        })
        .collect()
}

/// For every K and both day sources, selects representative days, solves
/// the planning model under each reduction goal and evaluates it over the
/// full horizon. Identical day sets are solved once.
#[allow(clippy::too_many_arguments)]
pub fn compare_methods<T: Scalar>(
    instance: &GtepInstance,
    dataset: &MultiResolutionDataset<T>,
    embeddings: &EmbeddingSet<T>,
    k_list: &[usize],
    goals: &[f64],
    seed: u64,
    opts: &SolverOptions,
) -> Result<ComparisonReport, GtepError> {
    if k_list.is_empty() || goals.is_empty() {
        return Err(GtepError::Invalid("K list and goal list must be nonempty".into()));
    }
    let baseline = baseline_emission(instance, dataset, opts)?;
    log::info!("baseline emission {baseline:.6e} tCO2");
    let normalized = dataset.normalize();
    let mut cache: BTreeMap<(Vec<usize>, Vec<usize>, u64), (CostBreakdown, f64)> = BTreeMap::new();
    let mut rows = Vec::new();
    for &k in k_list {
        let sets = [kmedoids(embeddings, k, seed)?, kmedoids_raw(&normalized, k, seed)?];
        for set in &sets {
            for &goal in goals {
                let (b, viol) = evaluate(instance, dataset, set, goal, baseline, opts, &mut cache)?;
                rows.push(ComparisonRow {
                    k,
                    source: set.source,
                    goal,
                    emission_cap: emission_cap_for_goal(baseline, goal),
                    total: b.total,
                    power: b.power_system,
                    ng: b.ng_system,
                    invest_fom: b.invest_fom_power,
                    shed: b.shed_power + b.shed_gas,
                    emission: b.emission_power,
                    emission_total: b.emission_total,
                    max_violation: viol,
                    medoids: set.medoids.clone(),
                });
            }
        }
    }
    let summary = summarize(&rows);
    Ok(ComparisonReport { baseline_emission: baseline, rows, summary })
}

#[allow(clippy::too_many_arguments)]
fn evaluate<T: Scalar>(
    instance: &GtepInstance,
    dataset: &MultiResolutionDataset<T>,
    set: &RepresentativeDaySet,
    goal: f64,
    baseline: f64,
    opts: &SolverOptions,
    cache: &mut BTreeMap<(Vec<usize>, Vec<usize>, u64), (CostBreakdown, f64)>,
) -> Result<(CostBreakdown, f64), GtepError> {
    let key = (set.medoids.clone(), set.weights.clone(), goal.to_bits());
    if let Some(hit) = cache.get(&key) {
        return Ok(*hit);
    }
    let inst = instance.with_emission_cap(Some(emission_cap_for_goal(baseline, goal)));
    let plan = solve_planning(&inst, set, dataset, opts)?;
    if !plan.has_solution() {
        return Err(GtepError::Infeasible { rows: plan.infeasible_rows });
    }
    let full = evaluate_full_horizon(&inst, &plan, dataset, opts)?;
    let viol = check_feasibility(&inst, &full, dataset).max_violation();
    log::info!(
        "K={} source={} goal={goal}: total {:.6e}, violation {viol:.2e}",
        set.k(),
        set.source,
        full.breakdown.total
    );
    cache.insert(key, (full.breakdown, viol));
    Ok((full.breakdown, viol))
}
