//! Synthetic joint power and gas datasets and matching expansion instances.
//!
//! Demand follows a seasonal sinusoid times a diurnal profile times a
//! per-node scale, perturbed by noise that is averaged with its graph
//! neighbors once so that adjacent nodes move together. Day-to-day weather
//! (temperature, wind and cloud anomalies following an AR(1) process)
//! shifts every node at once. Gas demand rises when the temperature proxy
//! falls.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use games_core::dataset::DaySignal;
use games_core::gtep::{
    Coupling, GasNode, GasStorage, GasSystem, GtepInstance, Line, Pipeline, Plant, PlantKind, Policy, PowerNode,
    PowerSystem, Storage,
};
use games_core::{Dataset, Graph, Matrix};

use crate::CliError;

/// Generator parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthParams {
    pub power_nodes: usize,
    pub gas_nodes: usize,
    pub gas_storage: usize,
    pub days: usize,
    pub hours: usize,
    /// Calendar day (0 = January 1) of the first generated day.
    pub start_day: usize,
    pub seasonal_amplitude: f64,
    pub diurnal_amplitude: f64,
    /// Relative standard deviation of the hourly demand and capacity-factor noise.
    pub noise: f64,
    /// Standard deviation of the daily weather anomalies.
    pub weather_noise: f64,
    /// Weight of the neighbor average in the smoothing pass, in [0, 1].
    pub spatial_correlation: f64,
    /// Nearest neighbors joined to each power node.
    pub neighbors: usize,
    /// Mean zone demand, MW.
    pub demand_scale: f64,
    /// Mean non-power gas demand per gas node, MMBtu/day.
    pub gas_scale: f64,
    /// Requested RPS share; capped at half the share the existing
    /// renewable fleet can reach.
    pub rps_share: f64,
    pub candidate_lines: usize,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            power_nodes: 6,
            gas_nodes: 3,
            gas_storage: 2,
            days: 30,
            hours: 24,
            start_day: 0,
            seasonal_amplitude: 0.25,
            diurnal_amplitude: 0.3,
            noise: 0.08,
            weather_noise: 0.4,
            spatial_correlation: 0.6,
            neighbors: 2,
            demand_scale: 1000.0,
            gas_scale: 150_000.0,
            rps_share: 0.2,
            candidate_lines: 2,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(format!("synthetic parameters: {m}")));
        if self.power_nodes < 2 || self.gas_nodes < 1 {
            return bad("need at least 2 power nodes and 1 gas node");
        }
        if self.days < 2 || self.hours < 1 {
            return bad("need at least 2 days and 1 hour");
        }
        if !(0.0..=1.0).contains(&self.spatial_correlation) {
            return bad("spatial_correlation outside [0, 1]");
        }
        for (name, v) in [
            ("seasonal_amplitude", self.seasonal_amplitude),
            ("diurnal_amplitude", self.diurnal_amplitude),
            ("noise", self.noise),
            ("weather_noise", self.weather_noise),
        ] {
            if !(0.0..1.0).contains(&v) {
                return bad(&format!("{name} outside [0, 1)"));
            }
        }
        if !(self.demand_scale > 0.0 && self.gas_scale > 0.0) {
            return bad("scales must be positive");
        }
        if !(0.0..=1.0).contains(&self.rps_share) {
            return bad("rps_share outside [0, 1]");
        }
        Ok(())
    }
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

/// Indices of the `k` points nearest to `p` (excluding `skip`), closest first.
fn nearest(points: &[(f64, f64)], p: (f64, f64), k: usize, skip: Option<usize>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).filter(|&j| Some(j) != skip).collect();
    order.sort_by(|&a, &b| dist(points[a], p).total_cmp(&dist(points[b], p)).then(a.cmp(&b)));
    order.truncate(k);
    order
}

/// k-nearest-neighbor graph, made connected by joining each remaining
/// component to its closest node outside it.
fn knn_graph(points: &[(f64, f64)], k: usize) -> Result<Graph, CliError> {
    let n = points.len();
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for i in 0..n {
        for j in nearest(points, points[i], k, Some(i)) {
            edges.push((i.min(j), i.max(j)));
        }
    }
    edges.sort_unstable();
    edges.dedup();
    loop {
        let g = Graph::new(n, &edges).map_err(|e| CliError::Config(e.to_string()))?;
        let comp = components(&g);
        if comp.iter().all(|&c| c == 0) {
            break;
        }
        let mut best = (f64::INFINITY, 0, 0);
        for i in (0..n).filter(|&i| comp[i] == 0) {
            for j in (0..n).filter(|&j| comp[j] != 0) {
                let d = dist(points[i], points[j]);
                if d < best.0 {
                    best = (d, i, j);
                }
            }
        }
        edges.push((best.1.min(best.2), best.1.max(best.2)));
        edges.sort_unstable();
    }
    let weighted: Vec<(usize, usize, f64)> =
        edges.iter().map(|&(i, j)| (i, j, dist(points[i], points[j]).max(1e-6))).collect();
    Graph::with_distances(n, &weighted).map_err(|e| CliError::Config(e.to_string()))
}

fn components(g: &Graph) -> Vec<usize> {
    let n = g.node_count();
    let mut comp = vec![usize::MAX; n];
    let mut next = 0;
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        let mut stack = vec![s];
        comp[s] = next;
        while let Some(v) = stack.pop() {
            for u in g.neighbors(v) {
                if comp[u] == usize::MAX {
                    comp[u] = next;
                    stack.push(u);
                }
            }
        }
        next += 1;
    }
    comp
}

/// One smoothing pass: each value moves toward the mean of its neighbors.
fn smooth(g: &Graph, z: &[f64], rho: f64) -> Vec<f64> {
    (0..z.len())
        .map(|i| {
            let nb = g.neighbors(i);
            if nb.is_empty() {
                z[i]
            } else {
                let mean = nb.iter().map(|&j| z[j]).sum::<f64>() / nb.len() as f64;
                (1.0 - rho) * z[i] + rho * mean
            }
        })
        .collect()
}

/// Temperature proxy in [-1, 1]: coldest on January 1.
fn temperature(calendar_day: usize) -> f64 {
    -(2.0 * PI * calendar_day as f64 / 365.0).cos()
}

struct NodeParams {
    power_scale: Vec<f64>,
    gas_scale: Vec<f64>,
    wind_base: Vec<f64>,
    solar_base: Vec<f64>,
}

/// Daily `[temperature, wind, cloud]` anomalies: a stationary AR(1)
/// process with unit variance scaled by `sd`, drawn from its own stream.
fn weather(seed: u64, days: usize, sd: f64) -> Vec<[f64; 3]> {
    const PHI: f64 = 0.7;
    if sd == 0.0 {
        return vec![[0.0; 3]; days];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let innovation = (1.0 - PHI * PHI).sqrt();
    let mut state: [f64; 3] = std::array::from_fn(|_| rng.sample(StandardNormal));
    let mut out = Vec::with_capacity(days);
    for _ in 0..days {
        out.push(state.map(|a| sd * a));
        for a in &mut state {
            let e: f64 = rng.sample(StandardNormal);
            *a = PHI * *a + innovation * e;
        }
    }
    out
}

fn noise_field(rng: &mut ChaCha8Rng, g: &Graph, rho: f64) -> Vec<f64> {
    let z: Vec<f64> = (0..g.node_count()).map(|_| rng.sample(StandardNormal)).collect();
    smooth(g, &z, rho)
}

/// Generates a dataset and a matching instance. Deterministic in `seed`.
pub fn generate_synthetic(params: &SynthParams, seed: u64) -> Result<(Dataset, GtepInstance), CliError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let point = |rng: &mut ChaCha8Rng| (rng.gen::<f64>(), rng.gen::<f64>());
    let power_pos: Vec<(f64, f64)> = (0..params.power_nodes).map(|_| point(&mut rng)).collect();
    let gas_pos: Vec<(f64, f64)> = (0..params.gas_nodes).map(|_| point(&mut rng)).collect();
    let power_graph = knn_graph(&power_pos, params.neighbors.min(params.power_nodes - 1))?;
    let gas_graph = knn_graph(&gas_pos, 1.min(params.gas_nodes - 1))?;
    let mut coupling = Vec::new();
    for (i, &p) in power_pos.iter().enumerate() {
        for j in nearest(&gas_pos, p, 3, None) {
            coupling.push((i, j));
        }
    }
    let nodes = NodeParams {
        power_scale: (0..params.power_nodes).map(|_| params.demand_scale * rng.gen_range(0.6..1.4)).collect(),
        gas_scale: (0..params.gas_nodes).map(|_| params.gas_scale * rng.gen_range(0.9..1.1)).collect(),
        wind_base: (0..params.power_nodes).map(|_| rng.gen_range(0.25..0.45)).collect(),
        solar_base: (0..params.power_nodes).map(|_| rng.gen_range(0.55..0.8)).collect(),
    };

    let h_count = params.hours;
    let rho = params.spatial_correlation;
    let sigma = params.noise;
    let anomalies = weather(seed, params.days, params.weather_noise);
    let mut days = Vec::with_capacity(params.days);
    for (d, &[a_temp, a_wind, a_cloud]) in anomalies.iter().enumerate() {
        let c = (params.start_day + d) % 365;
        let temp = temperature(c) + a_temp;
        let seasonal = 1.0 + params.seasonal_amplitude * (2.0 * PI * (c as f64 - 200.0) / 365.0).cos();
        let n_e = params.power_nodes;
        let mut elec = Matrix::zeros(n_e, h_count);
        let mut wind = Matrix::zeros(n_e, h_count);
        let mut solar = Matrix::zeros(n_e, h_count);
        for h in 0..h_count {
            let frac = (h as f64 + 0.5) / h_count as f64;
            let diurnal = 1.0 + params.diurnal_amplitude * (2.0 * PI * (frac - 1.0 / 3.0)).sin();
            let daylight = (PI * (frac * 24.0 - 6.0) / 12.0).sin().max(0.0);
            let (ze, zw, zs) = if sigma > 0.0 {
                (
                    noise_field(&mut rng, &power_graph, rho),
                    noise_field(&mut rng, &power_graph, rho),
                    noise_field(&mut rng, &power_graph, rho),
                )
            } else {
                (vec![0.0; n_e], vec![0.0; n_e], vec![0.0; n_e])
            };
            for i in 0..n_e {
                let e = nodes.power_scale[i] * seasonal * diurnal * (1.0 - 0.3 * a_temp) * (1.0 + sigma * ze[i]);
                elec.row_mut(i)[h] = e.max(0.0);
                let w = nodes.wind_base[i] * (1.0 - 0.3 * temp) * (1.0 + a_wind) * (1.0 + 0.1 * (2.0 * PI * frac).cos())
                    + 0.5 * sigma * zw[i];
                wind.row_mut(i)[h] = w.clamp(0.0, 1.0);
                let s = nodes.solar_base[i] * daylight * (1.0 + 0.2 * temp) * (1.0 - a_cloud).max(0.0) * (1.0 + sigma * zs[i]);
                solar.row_mut(i)[h] = s.clamp(0.0, 1.0);
            }
        }
        let zg = if sigma > 0.0 { noise_field(&mut rng, &gas_graph, rho) } else { vec![0.0; params.gas_nodes] };
        let gas_rows: Vec<Vec<f64>> = (0..params.gas_nodes)
            .map(|j| vec![(nodes.gas_scale[j] * (1.0 - 0.5 * temp) * (1.0 + sigma * zg[j])).max(0.0)])
            .collect();
        days.push(DaySignal {
            day_index: d,
            electricity: elec,
            wind_cf: wind,
            solar_cf: solar,
            gas: Matrix::from_rows(&gas_rows),
        });
    }
    let dataset = Dataset::new(power_graph, gas_graph, coupling, days).map_err(|e| CliError::Config(e.to_string()))?;
    let instance = build_instance(params, &dataset, &power_pos)?;
    Ok((dataset, instance))
}

fn round_units(x: f64) -> u32 {
    x.round().max(0.0) as u32
}

/// Instance with one zone per power node and one gas node per dataset gas
/// node. Annual costs are scaled by `days / 365`.
fn build_instance(params: &SynthParams, data: &Dataset, power_pos: &[(f64, f64)]) -> Result<GtepInstance, CliError> {
    let n_e = params.power_nodes;
    let n_g = params.gas_nodes;
    let f = params.days as f64 / 365.0;
    let peak: Vec<f64> = (0..n_e)
        .map(|i| data.days.iter().flat_map(|d| d.electricity.row(i).iter().copied()).fold(0.0, f64::max))
        .collect();
    let mean_demand = |i: usize| -> f64 {
        data.days.iter().map(|d| d.electricity.row(i).iter().sum::<f64>()).sum::<f64>()
            / (data.len() * params.hours) as f64
    };
    let mut plants = Vec::new();
    let mut storage = Vec::new();
    let mut ng_mw = 0.0;
    for i in 0..n_e {
        let scale = mean_demand(i);
        let unit = (0.25 * scale).round().max(1.0);
        let ng_units = round_units((0.8 * peak[i] / unit).ceil());
        ng_mw += unit * ng_units as f64;
        plants.push(Plant {
            name: format!("ng{i}"),
            node: i,
            kind: PlantKind::NgFired,
            unit_mw: unit,
            existing_units: ng_units,
            max_new_units: 3,
            max_retired_units: ng_units,
            invest_fom_cost: unit * 110_000.0 * f,
            fom_cost: unit * 20_000.0 * f,
            variable_cost: 3.0,
            heat_rate: 7.0,
            ramp_limit: 0.4,
        });
        let vre_unit = (0.2 * scale).round().max(1.0);
        plants.push(Plant {
            name: format!("wind{i}"),
            node: i,
            kind: PlantKind::Wind,
            unit_mw: vre_unit,
            existing_units: 1,
            max_new_units: 4,
            max_retired_units: 0,
            invest_fom_cost: vre_unit * 140_000.0 * f,
            fom_cost: vre_unit * 40_000.0 * f,
            variable_cost: 0.0,
            heat_rate: 0.0,
            ramp_limit: 1.0,
        });
        plants.push(Plant {
            name: format!("solar{i}"),
            node: i,
            kind: PlantKind::Solar,
            unit_mw: vre_unit,
            existing_units: 1,
            max_new_units: 4,
            max_retired_units: 0,
            invest_fom_cost: vre_unit * 90_000.0 * f,
            fom_cost: vre_unit * 20_000.0 * f,
            variable_cost: 0.0,
            heat_rate: 0.0,
            ramp_limit: 1.0,
        });
        let bat = (0.05 * scale).round().max(1.0);
        storage.push(Storage {
            name: format!("battery{i}"),
            node: i,
            unit_mw: bat,
            unit_mwh: 4.0 * bat,
            existing_units: 0,
            max_new_units: 2,
            invest_cost: bat * 80_000.0 * f,
            charge_efficiency: 0.92,
            discharge_efficiency: 0.92,
        });
    }
    let avg_scale = (0..n_e).map(mean_demand).sum::<f64>() / n_e as f64;
    let line_cap = (0.3 * avg_scale).round();
    let mut lines: Vec<Line> = data
        .power_graph
        .edges()
        .iter()
        .map(|&(a, b)| Line {
            name: format!("line{a}_{b}"),
            from: a,
            to: b,
            capacity_mw: line_cap,
            candidate: false,
            invest_cost: 0.0,
        })
        .collect();
    let mut by_length: Vec<(usize, usize)> = data.power_graph.edges().to_vec();
    by_length.sort_by(|&(a, b), &(c, d)| {
        dist(power_pos[a], power_pos[b]).total_cmp(&dist(power_pos[c], power_pos[d])).then((a, b).cmp(&(c, d)))
    });
    for &(a, b) in by_length.iter().take(params.candidate_lines) {
        lines.push(Line {
            name: format!("new{a}_{b}"),
            from: a,
            to: b,
            capacity_mw: line_cap,
            candidate: true,
            invest_cost: line_cap * 30_000.0 * f,
        });
    }

    let gas_mean: Vec<f64> =
        (0..n_g).map(|j| data.days.iter().map(|d| d.gas.row(j)[0]).sum::<f64>() / data.len() as f64).collect();
    let gas_peak: Vec<f64> =
        (0..n_g).map(|j| data.days.iter().map(|d| d.gas.row(j)[0]).fold(0.0, f64::max)).collect();
    let fuel_share = 0.5 * ng_mw * 7.0 * params.hours as f64 / n_g as f64;
    let gas_nodes: Vec<GasNode> = (0..n_g)
        .map(|j| {
            let cap = (gas_peak[j] + fuel_share).round();
            let unit = (0.25 * cap).round();
            GasNode {
                name: format!("gas{j}"),
                members: vec![j],
                supply_capacity: cap,
                supply_cost: 3.5,
                expansion_unit: unit,
                max_expansion_units: 2,
                expansion_cost: unit * 100.0 * f,
            }
        })
        .collect();
    let avg_gas = gas_mean.iter().sum::<f64>() / n_g as f64;
    let pipelines: Vec<Pipeline> = data
        .gas_graph
        .edges()
        .iter()
        .map(|&(a, b)| {
            let cap = (0.4 * avg_gas).round();
            let unit = (0.25 * cap).round();
            Pipeline {
                name: format!("pipe{a}_{b}"),
                from: a,
                to: b,
                capacity: cap,
                expansion_unit: unit,
                max_expansion_units: 2,
                expansion_cost: unit * 150.0 * f,
            }
        })
        .collect();
    let total_gas: f64 = gas_mean.iter().sum::<f64>() * data.len() as f64;
    let n_s = params.gas_storage;
    let gas_storage: Vec<GasStorage> = (0..n_s)
        .map(|s| {
            let cap = (0.1 * total_gas / n_s as f64).round();
            let unit = (0.25 * cap).round();
            GasStorage {
                name: format!("storage{s}"),
                capacity: cap,
                injection_limit: (0.15 * avg_gas).round(),
                withdrawal_limit: (0.15 * avg_gas).round(),
                expansion_unit: unit,
                max_expansion_units: 2,
                expansion_cost: unit * 2.0,
            }
        })
        .collect();
    let mut storage_links = Vec::new();
    if n_s > 0 {
        for j in 0..n_g {
            let mut linked = vec![j % n_s, (j + 1) % n_s];
            linked.dedup();
            storage_links.extend(linked.into_iter().map(|s| (j, s)));
        }
    }

    // Share of demand the existing renewable fleet could serve on its own.
    let mut vre = 0.0;
    let mut demand = 0.0;
    for d in &data.days {
        for i in 0..n_e {
            let unit = plants[3 * i + 1].unit_mw;
            for h in 0..params.hours {
                vre += unit * (d.wind_cf.row(i)[h] + d.solar_cf.row(i)[h]);
                demand += d.electricity.row(i)[h];
            }
        }
    }
    let reachable = if demand > 0.0 { vre / demand } else { 0.0 };

    Ok(GtepInstance {
        power: PowerSystem {
            nodes: (0..n_e).map(|i| PowerNode { name: format!("zone{i}"), members: vec![i] }).collect(),
            plants,
            lines,
            storage,
            shed_cost: 5000.0,
        },
        gas: GasSystem { nodes: gas_nodes, pipelines, storage: gas_storage, storage_links, shed_cost: 80.0 },
        coupling: Coupling { edges: data.coupling_edges.clone(), e_g: 0.0531, e_p: 0.0531, emission_cap: None },
        policy: Policy { rps_share: params.rps_share.min(0.5 * reachable) },
    })
}
