//! Constraint-by-constraint feasibility check evaluated from the structured
//! instance, independent of the assembled solver model.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::instance::{profiles, GtepInstance};
use super::model::coupled_zones;
use super::solution::GtepSolution;
use crate::dataset::MultiResolutionDataset;
use crate::scalar::Scalar;

/// Largest violation found in one constraint family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyViolation {
    pub family: String,
    /// Violation divided by `max(1, |rhs|, max |term|)` of the offending row.
    pub max: f64,
    pub location: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub families: Vec<FamilyViolation>,
}

impl ViolationReport {
    pub fn max_violation(&self) -> f64 {
        self.families.iter().map(|f| f.max).fold(0.0, f64::max)
    }

    pub fn worst(&self) -> Option<&FamilyViolation> {
        self.families.iter().max_by(|a, b| a.max.total_cmp(&b.max))
    }

    pub fn family(&self, name: &str) -> Option<&FamilyViolation> {
        self.families.iter().find(|f| f.family == name)
    }
}

#[derive(Default)]
struct Tracker {
    worst: BTreeMap<&'static str, (f64, String)>,
}

impl Tracker {
    fn record(&mut self, family: &'static str, violation: f64, scale: f64, loc: impl FnOnce() -> String) {
        let v = if violation.is_nan() { f64::INFINITY } else { violation.max(0.0) / scale.max(1.0) };
        let entry = self.worst.entry(family).or_insert((0.0, String::new()));
        if v > entry.0 {
            *entry = (v, loc());
        }
    }

    /// `Σ terms ≤ rhs`.
    fn le(&mut self, family: &'static str, terms: &[f64], rhs: f64, loc: impl FnOnce() -> String) {
        let lhs: f64 = terms.iter().sum();
        self.record(family, lhs - rhs, scale(terms, rhs), loc);
    }

    /// `Σ terms = rhs`.
    fn eq(&mut self, family: &'static str, terms: &[f64], rhs: f64, loc: impl FnOnce() -> String) {
        let lhs: f64 = terms.iter().sum();
        self.record(family, (lhs - rhs).abs(), scale(terms, rhs), loc);
    }

    fn within(&mut self, family: &'static str, v: f64, lo: f64, hi: f64, loc: impl FnOnce() -> String) {
        if v < lo {
            self.record(family, lo - v, lo.abs(), loc);
        } else if v > hi {
            self.record(family, v - hi, hi.abs(), loc);
        } else {
            self.record(family, if v.is_nan() { f64::NAN } else { 0.0 }, 1.0, loc);
        }
    }
}

fn scale(terms: &[f64], rhs: f64) -> f64 {
    terms.iter().fold(rhs.abs(), |m, t| m.max(t.abs()))
}

/// Re-evaluates every constraint of the model over the solution's days and
/// reports the largest scaled violation per family. Families: `bounds`,
/// `integrality`, `balance`, `generation`, `ramp`, `storage_dynamics`,
/// `storage_capacity`, `line`, `gas_balance`, `gas_supply`, `pipeline`,
/// `gas_storage_rate`, `gas_storage`, `coupling`, `rps`, `emission`.
pub fn check_feasibility<T: Scalar>(
    instance: &GtepInstance,
    solution: &GtepSolution,
    dataset: &MultiResolutionDataset<T>,
) -> ViolationReport {
    let mut t = Tracker::default();
    let lay = &solution.layout;
    let x = &solution.x;
    if !solution.has_solution() || x.len() != lay.num_cols() {
        t.record("bounds", f64::INFINITY, 1.0, || "no complete solution vector".into());
        return report(t);
    }
    let prof = match profiles(instance, dataset, &solution.days) {
        Ok(p) => p,
        Err(e) => {
            t.record("bounds", f64::INFINITY, 1.0, || format!("days not evaluable: {e}"));
            return report(t);
        }
    };
    let pw = &instance.power;
    let gs = &instance.gas;
    let cp = &instance.coupling;
    let hours = lay.hours;

    // Investment domains.
    for (p, pl) in pw.plants.iter().enumerate() {
        let b = x[lay.build(p)];
        let r = x[lay.retire(p)];
        t.within("bounds", b, 0.0, pl.max_new_units as f64, || format!("build[{}]", pl.name));
        t.within("bounds", r, 0.0, pl.max_retired_units as f64, || format!("retire[{}]", pl.name));
    }
    for (s, st) in pw.storage.iter().enumerate() {
        t.within("bounds", x[lay.storage_build(s)], 0.0, st.max_new_units as f64, || {
            format!("storage_build[{}]", st.name)
        });
    }
    for (c, &l) in lay.candidates.iter().enumerate() {
        t.within("bounds", x[lay.line_build(c)], 0.0, 1.0, || format!("line_build[{}]", pw.lines[l].name));
    }
    for (n, node) in gs.nodes.iter().enumerate() {
        t.within("bounds", x[lay.supply_exp(n)], 0.0, node.max_expansion_units as f64, || {
            format!("supply_exp[{}]", node.name)
        });
    }
    for (q, pipe) in gs.pipelines.iter().enumerate() {
        t.within("bounds", x[lay.pipeline_exp(q)], 0.0, pipe.max_expansion_units as f64, || {
            format!("pipeline_exp[{}]", pipe.name)
        });
    }
    for (s, st) in gs.storage.iter().enumerate() {
        t.within("bounds", x[lay.gas_storage_exp(s)], 0.0, st.max_expansion_units as f64, || {
            format!("gas_storage_exp[{}]", st.name)
        });
    }
    for j in 0..lay.num_investment_cols() {
        let v = x[j];
        t.record("integrality", (v - v.round()).abs(), 1.0, || format!("investment column {j}"));
    }

    let units = |p: usize| -> f64 {
        let pl = &pw.plants[p];
        pl.existing_units as f64 - x[lay.retire(p)] + x[lay.build(p)]
    };
    let storage_units = |s: usize| pw.storage[s].existing_units as f64 + x[lay.storage_build(s)];

    for (d, day) in prof.iter().enumerate() {
        for h in 0..hours {
            for (z, node) in pw.nodes.iter().enumerate() {
                let mut terms = vec![x[lay.shed(d, h, z)]];
                terms.extend((0..lay.plants).filter(|&p| pw.plants[p].node == z).map(|p| x[lay.gen(d, h, p)]));
                for s in (0..lay.storage).filter(|&s| pw.storage[s].node == z) {
                    terms.push(x[lay.discharge(d, h, s)]);
                    terms.push(-x[lay.charge(d, h, s)]);
                }
                for (l, line) in pw.lines.iter().enumerate() {
                    if line.to == z {
                        terms.push(x[lay.flow(d, h, l)]);
                    }
                    if line.from == z {
                        terms.push(-x[lay.flow(d, h, l)]);
                    }
                }
                t.eq("balance", &terms, day.demand[z][h], || format!("balance[zone={},day={d},hour={h}]", node.name));
                t.within("bounds", x[lay.shed(d, h, z)], 0.0, day.demand[z][h], || {
                    format!("shed[zone={},day={d},hour={h}]", node.name)
                });
            }
            for (p, pl) in pw.plants.iter().enumerate() {
                let g = x[lay.gen(d, h, p)];
                t.within("bounds", g, 0.0, f64::INFINITY, || format!("gen[{},day={d},hour={h}]", pl.name));
                let cap = day.availability(pl, h) * pl.unit_mw * units(p);
                t.le("generation", &[g], cap, || format!("generation[{},day={d},hour={h}]", pl.name));
                if pl.ramps() && h > 0 {
                    let delta = g - x[lay.gen(d, h - 1, p)];
                    let r = pl.ramp_limit * pl.unit_mw * units(p);
                    t.le("ramp", &[delta.abs()], r, || format!("ramp[{},day={d},hour={h}]", pl.name));
                }
            }
            for (s, st) in pw.storage.iter().enumerate() {
                let prev = (h + hours - 1) % hours;
                let (ch, dis, soc) = (x[lay.charge(d, h, s)], x[lay.discharge(d, h, s)], x[lay.soc(d, h, s)]);
                for v in [ch, dis, soc] {
                    t.within("bounds", v, 0.0, f64::INFINITY, || format!("storage[{},day={d},hour={h}]", st.name));
                }
                t.eq(
                    "storage_dynamics",
                    &[soc, -x[lay.soc(d, prev, s)], -st.charge_efficiency * ch, dis / st.discharge_efficiency],
                    0.0,
                    || format!("soc[{},day={d},hour={h}]", st.name),
                );
                let u = storage_units(s);
                for (v, cap) in [(ch, st.unit_mw * u), (dis, st.unit_mw * u), (soc, st.unit_mwh * u)] {
                    t.le("storage_capacity", &[v], cap, || format!("storage_cap[{},day={d},hour={h}]", st.name));
                }
            }
            for (l, line) in pw.lines.iter().enumerate() {
                let built = match lay.candidates.iter().position(|&c| c == l) {
                    Some(c) => x[lay.line_build(c)],
                    None => 1.0,
                };
                let f = x[lay.flow(d, h, l)];
                t.le("line", &[f.abs()], line.capacity_mw * built, || format!("line[{},day={d},hour={h}]", line.name));
            }
        }

        for (n, node) in gs.nodes.iter().enumerate() {
            let supply = x[lay.supply(d, n)];
            let shed = x[lay.gas_shed(d, n)];
            let mut terms = vec![supply, shed];
            for (k, &(kn, _)) in gs.storage_links.iter().enumerate() {
                if kn == n {
                    terms.push(x[lay.withdraw(d, k)]);
                    terms.push(-x[lay.inject(d, k)]);
                }
            }
            for (q, pipe) in gs.pipelines.iter().enumerate() {
                if pipe.to == n {
                    terms.push(x[lay.pipe_flow(d, q)]);
                }
                if pipe.from == n {
                    terms.push(-x[lay.pipe_flow(d, q)]);
                }
            }
            for (e, &(_, en)) in cp.edges.iter().enumerate() {
                if en == n {
                    terms.push(-x[lay.fuel(d, e)]);
                }
            }
            t.eq("gas_balance", &terms, day.gas_demand[n], || format!("gas_balance[node={},day={d}]", node.name));
            t.within("bounds", supply, 0.0, f64::INFINITY, || format!("supply[{},day={d}]", node.name));
            t.within("bounds", shed, 0.0, day.gas_demand[n], || format!("gas_shed[{},day={d}]", node.name));
            let cap = node.supply_capacity + node.expansion_unit * x[lay.supply_exp(n)];
            t.le("gas_supply", &[supply], cap, || format!("supply_cap[{},day={d}]", node.name));
        }
        for (q, pipe) in gs.pipelines.iter().enumerate() {
            let cap = pipe.capacity + pipe.expansion_unit * x[lay.pipeline_exp(q)];
            t.le("pipeline", &[x[lay.pipe_flow(d, q)].abs()], cap, || format!("pipeline[{},day={d}]", pipe.name));
        }
        for (s, st) in gs.storage.iter().enumerate() {
            let linked: Vec<usize> = (0..lay.links).filter(|&k| gs.storage_links[k].1 == s).collect();
            let inj: Vec<f64> = linked.iter().map(|&k| x[lay.inject(d, k)]).collect();
            let wd: Vec<f64> = linked.iter().map(|&k| x[lay.withdraw(d, k)]).collect();
            for &v in inj.iter().chain(&wd) {
                t.within("bounds", v, 0.0, f64::INFINITY, || format!("gas_storage_flow[{},day={d}]", st.name));
            }
            t.le("gas_storage_rate", &inj, st.injection_limit, || format!("injection[{},day={d}]", st.name));
            t.le("gas_storage_rate", &wd, st.withdrawal_limit, || format!("withdrawal[{},day={d}]", st.name));
        }
        for z in coupled_zones(instance) {
            let mut terms: Vec<f64> = (0..lay.edges).filter(|&e| cp.edges[e].0 == z).map(|e| x[lay.fuel(d, e)]).collect();
            for &f in &terms {
                t.within("bounds", f, 0.0, f64::INFINITY, || format!("fuel[zone={},day={d}]", pw.nodes[z].name));
            }
            for (p, pl) in pw.plants.iter().enumerate() {
                if pl.node == z && pl.is_ng_fired() {
                    let burned: f64 = (0..hours).map(|h| x[lay.gen(d, h, p)]).sum();
                    terms.push(-pl.heat_rate * burned);
                }
            }
            t.eq("coupling", &terms, 0.0, || format!("coupling[zone={},day={d}]", pw.nodes[z].name));
        }
    }

    for (s, st) in gs.storage.iter().enumerate() {
        let mut terms = Vec::new();
        for (d, day) in prof.iter().enumerate() {
            for k in (0..lay.links).filter(|&k| gs.storage_links[k].1 == s) {
                terms.push(day.weight * (x[lay.withdraw(d, k)] - x[lay.inject(d, k)]));
            }
        }
        let cap = st.capacity + st.expansion_unit * x[lay.gas_storage_exp(s)];
        t.le("gas_storage", &terms, cap, || format!("gas_storage[{}]", st.name));
    }

    let mut vre = Vec::new();
    let mut demand = 0.0;
    let mut emission = Vec::new();
    for (d, day) in prof.iter().enumerate() {
        demand += day.weight * day.demand.iter().flatten().sum::<f64>();
        for (p, pl) in pw.plants.iter().enumerate() {
            if pl.is_vre() {
                vre.extend((0..hours).map(|h| day.weight * x[lay.gen(d, h, p)]));
            }
        }
        for n in 0..lay.gas_nodes {
            emission.push(cp.e_g * day.weight * (day.gas_demand[n] - x[lay.gas_shed(d, n)]));
        }
        for e in 0..lay.edges {
            emission.push(cp.e_p * day.weight * x[lay.fuel(d, e)]);
        }
    }
    let rps = instance.policy.rps_share;
    let neg: Vec<f64> = vre.iter().map(|v| -v).collect();
    t.le("rps", &neg, -rps * demand, || "rps".into());
    if let Some(cap) = cp.emission_cap {
        t.le("emission", &emission, cap, || "emission".into());
    }
    report(t)
}

fn report(t: Tracker) -> ViolationReport {
    ViolationReport {
        families: t
            .worst
            .into_iter()
            .map(|(family, (max, location))| FamilyViolation { family: family.to_string(), max, location })
            .collect(),
    }
}
