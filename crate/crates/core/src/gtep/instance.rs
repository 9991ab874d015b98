//! Structured description of the joint power and gas expansion problem.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::GtepError;
use crate::dataset::MultiResolutionDataset;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlantKind {
    /// Dispatchable plant without gas fuel (nuclear, hydro, ...).
    Dispatchable,
    NgFired,
    Wind,
    Solar,
}

/// A plant type at one zone. Costs are per unit over the planning horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plant {
    pub name: String,
    pub node: usize,
    pub kind: PlantKind,
    /// MW per unit.
    pub unit_mw: f64,
    pub existing_units: u32,
    pub max_new_units: u32,
    pub max_retired_units: u32,
    /// Investment plus FOM cost of one new unit.
    pub invest_fom_cost: f64,
    /// FOM cost of one existing unit, saved when the unit is retired.
    pub fom_cost: f64,
    /// $/MWh, excluding fuel bought from the gas system.
    pub variable_cost: f64,
    /// MMBtu/MWh; used only by NG-fired plants.
    pub heat_rate: f64,
    /// Hour-to-hour output change as a fraction of installed capacity.
    pub ramp_limit: f64,
}

impl Plant {
    pub fn is_vre(&self) -> bool {
        matches!(self.kind, PlantKind::Wind | PlantKind::Solar)
    }

    pub fn is_ng_fired(&self) -> bool {
        self.kind == PlantKind::NgFired
    }

    /// Whether the plant gets ramping rows.
    pub fn ramps(&self) -> bool {
        !self.is_vre() && self.ramp_limit < 1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub name: String,
    pub from: usize,
    pub to: usize,
    pub capacity_mw: f64,
    /// Candidate lines carry flow only when built.
    pub candidate: bool,
    pub invest_cost: f64,
}

/// Battery storage type at one zone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Storage {
    pub name: String,
    pub node: usize,
    pub unit_mw: f64,
    pub unit_mwh: f64,
    pub existing_units: u32,
    pub max_new_units: u32,
    pub invest_cost: f64,
    pub charge_efficiency: f64,
    pub discharge_efficiency: f64,
}

/// Aggregated power zone: demand is summed and capacity factors averaged
/// over the member nodes of the dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerNode {
    pub name: String,
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSystem {
    pub nodes: Vec<PowerNode>,
    pub plants: Vec<Plant>,
    pub lines: Vec<Line>,
    pub storage: Vec<Storage>,
    /// $/MWh of unserved demand.
    pub shed_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GasNode {
    pub name: String,
    /// Dataset gas nodes whose demand is served here.
    pub members: Vec<usize>,
    /// MMBtu/day.
    pub supply_capacity: f64,
    /// $/MMBtu.
    pub supply_cost: f64,
    pub expansion_unit: f64,
    pub max_expansion_units: u32,
    pub expansion_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pipeline {
    pub name: String,
    pub from: usize,
    pub to: usize,
    /// MMBtu/day in either direction.
    pub capacity: f64,
    pub expansion_unit: f64,
    pub max_expansion_units: u32,
    pub expansion_cost: f64,
}

/// Gas storage field: `capacity` MMBtu of working gas may be withdrawn (net
/// of injections) over the horizon, within daily rate limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GasStorage {
    pub name: String,
    pub capacity: f64,
    pub injection_limit: f64,
    pub withdrawal_limit: f64,
    pub expansion_unit: f64,
    pub max_expansion_units: u32,
    pub expansion_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GasSystem {
    pub nodes: Vec<GasNode>,
    pub pipelines: Vec<Pipeline>,
    pub storage: Vec<GasStorage>,
    /// `(gas node, storage)` connections.
    pub storage_links: Vec<(usize, usize)>,
    /// $/MMBtu of unserved gas demand.
    pub shed_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    /// `(power zone, gas node)` fuel edges.
    pub edges: Vec<(usize, usize)>,
    /// tCO2/MMBtu of non-power gas use.
    pub e_g: f64,
    /// tCO2/MMBtu of gas burned in plants.
    pub e_p: f64,
    /// tCO2 over the horizon; `None` leaves emissions unconstrained.
    pub emission_cap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    pub rps_share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GtepInstance {
    pub power: PowerSystem,
    pub gas: GasSystem,
    pub coupling: Coupling,
    pub policy: Policy,
}

fn nonneg(name: &str, v: f64) -> Result<(), GtepError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(GtepError::Invalid(format!("{name} must be finite and nonnegative, got {v}")))
    }
}

fn index(what: &str, i: usize, n: usize) -> Result<(), GtepError> {
    if i < n {
        Ok(())
    } else {
        Err(GtepError::Invalid(format!("{what} references index {i} of {n}")))
    }
}

impl GtepInstance {
    pub fn validate(&self) -> Result<(), GtepError> {
        let p = &self.power;
        let g = &self.gas;
        let (nz, ng) = (p.nodes.len(), g.nodes.len());
        if nz == 0 {
            return Err(GtepError::Invalid("no power zones".into()));
        }
        nonneg("power shed cost", p.shed_cost)?;
        nonneg("gas shed cost", g.shed_cost)?;
        for pl in &p.plants {
            index(&pl.name, pl.node, nz)?;
            for (k, v) in [
                ("unit_mw", pl.unit_mw),
                ("invest_fom_cost", pl.invest_fom_cost),
                ("fom_cost", pl.fom_cost),
                ("variable_cost", pl.variable_cost),
                ("heat_rate", pl.heat_rate),
                ("ramp_limit", pl.ramp_limit),
            ] {
                nonneg(&format!("{}.{k}", pl.name), v)?;
            }
            if pl.max_retired_units > pl.existing_units {
                return Err(GtepError::Invalid(format!("{} retires more units than exist", pl.name)));
            }
            if pl.is_ng_fired() && !self.coupling.edges.iter().any(|&(z, _)| z == pl.node) {
                return Err(GtepError::Uncoupled { plant: pl.name.clone(), node: pl.node });
            }
        }
        for l in &p.lines {
            index(&l.name, l.from, nz)?;
            index(&l.name, l.to, nz)?;
            if l.from == l.to {
                return Err(GtepError::Invalid(format!("line {} is a self-loop", l.name)));
            }
            nonneg(&l.name, l.capacity_mw)?;
            nonneg(&l.name, l.invest_cost)?;
        }
        for s in &p.storage {
            index(&s.name, s.node, nz)?;
            for v in [s.unit_mw, s.unit_mwh, s.invest_cost] {
                nonneg(&s.name, v)?;
            }
            for e in [s.charge_efficiency, s.discharge_efficiency] {
                if !(e > 0.0 && e <= 1.0) {
                    return Err(GtepError::Invalid(format!("{}: efficiency {e} outside (0, 1]", s.name)));
                }
            }
        }
        for n in &g.nodes {
            for v in [n.supply_capacity, n.supply_cost, n.expansion_unit, n.expansion_cost] {
                nonneg(&n.name, v)?;
            }
        }
        for q in &g.pipelines {
            index(&q.name, q.from, ng)?;
            index(&q.name, q.to, ng)?;
            if q.from == q.to {
                return Err(GtepError::Invalid(format!("pipeline {} is a self-loop", q.name)));
            }
            for v in [q.capacity, q.expansion_unit, q.expansion_cost] {
                nonneg(&q.name, v)?;
            }
        }
        for s in &g.storage {
            for v in [s.capacity, s.injection_limit, s.withdrawal_limit, s.expansion_unit, s.expansion_cost] {
                nonneg(&s.name, v)?;
            }
        }
        for &(n, s) in &g.storage_links {
            index("storage link", n, ng)?;
            index("storage link", s, g.storage.len())?;
        }
        for &(z, n) in &self.coupling.edges {
            index("coupling edge", z, nz)?;
            index("coupling edge", n, ng)?;
        }
        nonneg("e_g", self.coupling.e_g)?;
        nonneg("e_p", self.coupling.e_p)?;
        if let Some(cap) = self.coupling.emission_cap {
            nonneg("emission cap", cap)?;
        }
        let rps = self.policy.rps_share;
        if !(0.0..=1.0).contains(&rps) {
            return Err(GtepError::Invalid(format!("rps_share {rps} outside [0, 1]")));
        }
        Ok(())
    }

    pub fn with_emission_cap(&self, cap: Option<f64>) -> Self {
        let mut out = self.clone();
        out.coupling.emission_cap = cap;
        out
    }

    /// Multiplies every cost coefficient by `factor`.
    pub fn scale_costs(&self, factor: f64) -> Self {
        let mut out = self.clone();
        let p = &mut out.power;
        p.shed_cost *= factor;
        for pl in &mut p.plants {
            pl.invest_fom_cost *= factor;
            pl.fom_cost *= factor;
            pl.variable_cost *= factor;
        }
        for l in &mut p.lines {
            l.invest_cost *= factor;
        }
        for s in &mut p.storage {
            s.invest_cost *= factor;
        }
        let g = &mut out.gas;
        g.shed_cost *= factor;
        for n in &mut g.nodes {
            n.supply_cost *= factor;
            n.expansion_cost *= factor;
        }
        for q in &mut g.pipelines {
            q.expansion_cost *= factor;
        }
        for s in &mut g.storage {
            s.expansion_cost *= factor;
        }
        out
    }

    pub fn write_json(&self, path: &Path) -> Result<(), GtepError> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| GtepError::Io { path: path.display().to_string(), source: e })
    }

    pub fn read_json(path: &Path) -> Result<Self, GtepError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GtepError::Io { path: path.display().to_string(), source: e })?;
        let inst: Self = serde_json::from_str(&text)?;
        inst.validate()?;
        Ok(inst)
    }
}

/// Per-day inputs of the model, aggregated to zones and gas nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct DayProfile {
    pub day: usize,
    pub weight: f64,
    /// `[zone][hour]` MWh.
    pub demand: Vec<Vec<f64>>,
    pub wind_cf: Vec<Vec<f64>>,
    pub solar_cf: Vec<Vec<f64>>,
    /// `[gas node]` MMBtu for the day.
    pub gas_demand: Vec<f64>,
}

impl DayProfile {
    /// Availability factor of `plant` in `hour`.
    pub fn availability(&self, plant: &Plant, hour: usize) -> f64 {
        match plant.kind {
            PlantKind::Wind => self.wind_cf[plant.node][hour],
            PlantKind::Solar => self.solar_cf[plant.node][hour],
            _ => 1.0,
        }
    }
}

/// Aggregates the (raw-unit) days named in `days` to the instance's zones.
/// Capacity factors at a coarser resolution than demand are held constant
/// across the hours they cover.
pub fn profiles<T: Scalar>(
    instance: &GtepInstance,
    dataset: &MultiResolutionDataset<T>,
    days: &[(usize, f64)],
) -> Result<Vec<DayProfile>, GtepError> {
    let data = dataset.denormalize();
    let dims = data.dims();
    for z in &instance.power.nodes {
        if z.members.is_empty() {
            return Err(GtepError::Invalid(format!("zone {} has no member nodes", z.name)));
        }
        for &m in &z.members {
            index(&z.name, m, dims.n_e)?;
        }
    }
    for n in &instance.gas.nodes {
        for &m in &n.members {
            index(&n.name, m, dims.n_g)?;
        }
    }
    let hours = dims.t_e;
    let mut out = Vec::with_capacity(days.len());
    for &(day, weight) in days {
        let signal = data.days.get(day).ok_or(GtepError::DayOutOfRange { day, days: data.len() })?;
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(GtepError::Invalid(format!("weight {weight} of day {day}")));
        }
        let resample = |m: &crate::Matrix<T>, node: usize, h: usize| -> f64 {
            let cols = m.cols();
            m[(node, h * cols / hours)].as_f64()
        };
        let zone = |f: &dyn Fn(usize, usize) -> f64, avg: bool| -> Vec<Vec<f64>> {
            instance
                .power
                .nodes
                .iter()
                .map(|z| {
                    (0..hours)
                        .map(|h| {
                            let s: f64 = z.members.iter().map(|&m| f(m, h)).sum();
                            if avg {
                                s / z.members.len() as f64
                            } else {
                                s
                            }
                        })
                        .collect()
                })
                .collect()
        };
        let demand = zone(&|m, h| signal.electricity[(m, h)].as_f64(), false);
        let wind_cf = zone(&|m, h| resample(&signal.wind_cf, m, h), true);
        let solar_cf = zone(&|m, h| resample(&signal.solar_cf, m, h), true);
        let gas_demand = instance
            .gas
            .nodes
            .iter()
            .map(|n| {
                n.members
                    .iter()
                    .map(|&m| signal.gas.row(m).iter().map(|v| v.as_f64()).sum::<f64>())
                    .sum()
            })
            .collect();
        out.push(DayProfile { day, weight, demand, wind_cf, solar_cf, gas_demand });
    }
    Ok(out)
}
