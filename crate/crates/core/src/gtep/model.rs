//! Assembly of the planning model into solver form.
//!
//! Columns, in order:
//!
//! ```text
//! investments  build[P] retire[P] storage_build[S] line_build[Lc]
//!              supply_exp[G] pipeline_exp[Q] gas_storage_exp[Gs]
//! per day d    per hour h: gen[P] charge[S] discharge[S] soc[S] flow[L] shed[Z]
//!              then: supply[G] pipe_flow[Q] inject[K] withdraw[K] fuel[E] gas_shed[G]
//! ```
//!
//! giving `2P + S + Lc + G + Q + Gs + D·(H·(P + 3S + L + Z) + 2G + Q + 2K + E)`
//! columns, where `Lc` counts candidate lines, `K` gas storage links and `E`
//! coupling edges.
//!
//! Rows, in order:
//!
//! ```text
//! per day d, hour h   balance[Z] generation[P] soc[S] charge_cap[S]
//!                     discharge_cap[S] soc_cap[S] line_gate[2·Lc]
//! per day d           ramp_up[R·(H−1)] ramp_down[R·(H−1)]
//!                     gas_balance[G] supply_cap[G] pipe_cap[2Q]
//!                     injection_cap[Gs] withdrawal_cap[Gs] coupling[Zc]
//! horizon             gas_storage[Gs] rps[0|1] emission[0|1]
//! ```
//!
//! giving `D·(H·(Z + P + 4S + 2Lc) + 2R·(H−1) + 2G + 2Q + 2Gs + Zc) + Gs`
//! rows plus one RPS row when `rps_share > 0` and one emission row when a
//! cap is set. `R` counts ramp-limited plants and `Zc` zones with at least one
//! coupling edge.
//!
//! Power families instantiate the investment, operational and transmission
//! block; the RPS row the renewable share; the gas families the supply and
//! network block; the coupling rows convert NG-fired generation into fuel
//! flow at the plant heat rate; the emission row caps all gas use.

use serde::{Deserialize, Serialize};

use games_solver::{RowSense, SparseLp};

use super::instance::{DayProfile, GtepInstance};

/// Column index arithmetic for one assembled model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub days: usize,
    pub hours: usize,
    pub plants: usize,
    pub storage: usize,
    pub lines: usize,
    pub zones: usize,
    pub gas_nodes: usize,
    pub pipelines: usize,
    pub gas_storage: usize,
    pub links: usize,
    pub edges: usize,
    /// Line index of every candidate line, in line order.
    pub candidates: Vec<usize>,
}

impl Layout {
    pub fn new(instance: &GtepInstance, days: usize, hours: usize) -> Self {
        let p = &instance.power;
        let g = &instance.gas;
        Self {
            days,
            hours,
            plants: p.plants.len(),
            storage: p.storage.len(),
            lines: p.lines.len(),
            zones: p.nodes.len(),
            gas_nodes: g.nodes.len(),
            pipelines: g.pipelines.len(),
            gas_storage: g.storage.len(),
            links: g.storage_links.len(),
            edges: instance.coupling.edges.len(),
            candidates: p.lines.iter().enumerate().filter(|(_, l)| l.candidate).map(|(i, _)| i).collect(),
        }
    }

    fn investments(&self) -> usize {
        2 * self.plants + self.storage + self.candidates.len() + self.gas_nodes + self.pipelines + self.gas_storage
    }

    fn per_hour(&self) -> usize {
        self.plants + 3 * self.storage + self.lines + self.zones
    }

    fn per_day(&self) -> usize {
        self.hours * self.per_hour() + 2 * self.gas_nodes + self.pipelines + 2 * self.links + self.edges
    }

    pub fn num_cols(&self) -> usize {
        self.investments() + self.days * self.per_day()
    }

    /// Number of leading investment (integer) columns.
    pub fn num_investment_cols(&self) -> usize {
        self.investments()
    }

    pub fn build(&self, p: usize) -> usize {
        p
    }
    pub fn retire(&self, p: usize) -> usize {
        self.plants + p
    }
    pub fn storage_build(&self, s: usize) -> usize {
        2 * self.plants + s
    }
    /// Build binary of the `c`-th candidate line.
    pub fn line_build(&self, c: usize) -> usize {
        2 * self.plants + self.storage + c
    }
    pub fn supply_exp(&self, n: usize) -> usize {
        self.line_build(self.candidates.len()) + n
    }
    pub fn pipeline_exp(&self, q: usize) -> usize {
        self.supply_exp(self.gas_nodes) + q
    }
    pub fn gas_storage_exp(&self, s: usize) -> usize {
        self.pipeline_exp(self.pipelines) + s
    }

    fn hour_base(&self, d: usize, h: usize) -> usize {
        self.investments() + d * self.per_day() + h * self.per_hour()
    }
    pub fn gen(&self, d: usize, h: usize, p: usize) -> usize {
        self.hour_base(d, h) + p
    }
    pub fn charge(&self, d: usize, h: usize, s: usize) -> usize {
        self.hour_base(d, h) + self.plants + s
    }
    pub fn discharge(&self, d: usize, h: usize, s: usize) -> usize {
        self.hour_base(d, h) + self.plants + self.storage + s
    }
    pub fn soc(&self, d: usize, h: usize, s: usize) -> usize {
        self.hour_base(d, h) + self.plants + 2 * self.storage + s
    }
    pub fn flow(&self, d: usize, h: usize, l: usize) -> usize {
        self.hour_base(d, h) + self.plants + 3 * self.storage + l
    }
    pub fn shed(&self, d: usize, h: usize, z: usize) -> usize {
        self.hour_base(d, h) + self.plants + 3 * self.storage + self.lines + z
    }

    fn gas_base(&self, d: usize) -> usize {
        self.hour_base(d, self.hours)
    }
    pub fn supply(&self, d: usize, n: usize) -> usize {
        self.gas_base(d) + n
    }
    pub fn pipe_flow(&self, d: usize, q: usize) -> usize {
        self.gas_base(d) + self.gas_nodes + q
    }
    pub fn inject(&self, d: usize, k: usize) -> usize {
        self.gas_base(d) + self.gas_nodes + self.pipelines + k
    }
    pub fn withdraw(&self, d: usize, k: usize) -> usize {
        self.gas_base(d) + self.gas_nodes + self.pipelines + self.links + k
    }
    pub fn fuel(&self, d: usize, e: usize) -> usize {
        self.gas_base(d) + self.gas_nodes + self.pipelines + 2 * self.links + e
    }
    pub fn gas_shed(&self, d: usize, n: usize) -> usize {
        self.gas_base(d) + self.gas_nodes + self.pipelines + 2 * self.links + self.edges + n
    }
}

/// Row count predicted by the counting formula in the module docs.
pub fn expected_rows(instance: &GtepInstance, days: usize, hours: usize) -> usize {
    let lay = Layout::new(instance, days, hours);
    let ramping = instance.power.plants.iter().filter(|p| p.ramps()).count();
    let coupled = coupled_zones(instance).len();
    let per_hour = lay.zones + lay.plants + 4 * lay.storage + 2 * lay.candidates.len();
    let per_day = hours * per_hour
        + 2 * ramping * hours.saturating_sub(1)
        + 2 * lay.gas_nodes
        + 2 * lay.pipelines
        + 2 * lay.gas_storage
        + coupled;
    let mut rows = days * per_day + lay.gas_storage;
    if instance.policy.rps_share > 0.0 {
        rows += 1;
    }
    if instance.coupling.emission_cap.is_some() {
        rows += 1;
    }
    rows
}

/// Zones with at least one coupling edge, ascending.
pub(crate) fn coupled_zones(instance: &GtepInstance) -> Vec<usize> {
    let mut z: Vec<usize> = instance.coupling.edges.iter().map(|&(z, _)| z).collect();
    z.sort_unstable();
    z.dedup();
    z
}

/// The assembled model: solver form plus its column layout.
#[derive(Debug, Clone)]
pub struct PlanningModel {
    pub lp: SparseLp,
    pub layout: Layout,
}

pub(crate) fn assemble(instance: &GtepInstance, days: &[DayProfile], hours: usize) -> PlanningModel {
    let lay = Layout::new(instance, days.len(), hours);
    let pw = &instance.power;
    let gs = &instance.gas;
    let cp = &instance.coupling;
    let mut lp = SparseLp::new();

    // Investment columns.
    for p in &pw.plants {
        lp.add_col(format!("build[{}]", p.name), p.invest_fom_cost, 0.0, p.max_new_units as f64, true);
    }
    for p in &pw.plants {
        lp.add_col(format!("retire[{}]", p.name), -p.fom_cost, 0.0, p.max_retired_units as f64, true);
        lp.obj_offset += p.fom_cost * p.existing_units as f64;
    }
    for s in &pw.storage {
        lp.add_col(format!("storage_build[{}]", s.name), s.invest_cost, 0.0, s.max_new_units as f64, true);
    }
    for &l in &lay.candidates {
        let line = &pw.lines[l];
        lp.add_col(format!("line_build[{}]", line.name), line.invest_cost, 0.0, 1.0, true);
    }
    for n in &gs.nodes {
        lp.add_col(format!("supply_exp[{}]", n.name), n.expansion_cost, 0.0, n.max_expansion_units as f64, true);
    }
    for q in &gs.pipelines {
        lp.add_col(format!("pipeline_exp[{}]", q.name), q.expansion_cost, 0.0, q.max_expansion_units as f64, true);
    }
    for s in &gs.storage {
        lp.add_col(format!("gas_storage_exp[{}]", s.name), s.expansion_cost, 0.0, s.max_expansion_units as f64, true);
    }

    // Operational columns.
    for (d, day) in days.iter().enumerate() {
        let w = day.weight;
        for h in 0..hours {
            for p in &pw.plants {
                let hi = p.unit_mw * (p.existing_units + p.max_new_units) as f64;
                lp.add_col(format!("gen[{},{d},{h}]", p.name), w * p.variable_cost, 0.0, hi, false);
            }
            for s in &pw.storage {
                let hi = s.unit_mw * (s.existing_units + s.max_new_units) as f64;
                lp.add_col(format!("charge[{},{d},{h}]", s.name), 0.0, 0.0, hi, false);
            }
            for s in &pw.storage {
                let hi = s.unit_mw * (s.existing_units + s.max_new_units) as f64;
                lp.add_col(format!("discharge[{},{d},{h}]", s.name), 0.0, 0.0, hi, false);
            }
            for s in &pw.storage {
                let hi = s.unit_mwh * (s.existing_units + s.max_new_units) as f64;
                lp.add_col(format!("soc[{},{d},{h}]", s.name), 0.0, 0.0, hi, false);
            }
            for l in &pw.lines {
                lp.add_col(format!("flow[{},{d},{h}]", l.name), 0.0, -l.capacity_mw, l.capacity_mw, false);
            }
            for (z, node) in pw.nodes.iter().enumerate() {
                let dem = day.demand[z][h];
                lp.add_col(format!("shed[{},{d},{h}]", node.name), w * pw.shed_cost, 0.0, dem, false);
            }
        }
        for n in &gs.nodes {
            let hi = n.supply_capacity + n.expansion_unit * n.max_expansion_units as f64;
            lp.add_col(format!("supply[{},{d}]", n.name), w * n.supply_cost, 0.0, hi, false);
        }
        for q in &gs.pipelines {
            let hi = q.capacity + q.expansion_unit * q.max_expansion_units as f64;
            lp.add_col(format!("pipe_flow[{},{d}]", q.name), 0.0, -hi, hi, false);
        }
        for &(n, s) in &gs.storage_links {
            let hi = gs.storage[s].injection_limit;
            lp.add_col(format!("inject[{},{},{d}]", gs.nodes[n].name, gs.storage[s].name), 0.0, 0.0, hi, false);
        }
        for &(n, s) in &gs.storage_links {
            let hi = gs.storage[s].withdrawal_limit;
            lp.add_col(format!("withdraw[{},{},{d}]", gs.nodes[n].name, gs.storage[s].name), 0.0, 0.0, hi, false);
        }
        for &(z, n) in &cp.edges {
            lp.add_col(format!("fuel[{},{},{d}]", pw.nodes[z].name, gs.nodes[n].name), 0.0, 0.0, f64::INFINITY, false);
        }
        for (n, node) in gs.nodes.iter().enumerate() {
            let dem = day.gas_demand[n];
            lp.add_col(format!("gas_shed[{},{d}]", node.name), w * gs.shed_cost, 0.0, dem, false);
        }
    }
    debug_assert_eq!(lp.num_cols(), lay.num_cols());

    let coupled = coupled_zones(instance);
    for (d, day) in days.iter().enumerate() {
        for h in 0..hours {
            // Nodal balance: generation + discharge − charge + net import + shed = demand.
            for (z, node) in pw.nodes.iter().enumerate() {
                let mut row = vec![(lay.shed(d, h, z), 1.0)];
                for (p, pl) in pw.plants.iter().enumerate() {
                    if pl.node == z {
                        row.push((lay.gen(d, h, p), 1.0));
                    }
                }
                for (s, st) in pw.storage.iter().enumerate() {
                    if st.node == z {
                        row.push((lay.discharge(d, h, s), 1.0));
                        row.push((lay.charge(d, h, s), -1.0));
                    }
                }
                for (l, line) in pw.lines.iter().enumerate() {
                    if line.to == z {
                        row.push((lay.flow(d, h, l), 1.0));
                    }
                    if line.from == z {
                        row.push((lay.flow(d, h, l), -1.0));
                    }
                }
                lp.add_row(format!("balance[{},{d},{h}]", node.name), &row, RowSense::Eq, day.demand[z][h]);
            }
            // gen ≤ availability · unit · (existing − retired + built).
            for (p, pl) in pw.plants.iter().enumerate() {
                let cap = day.availability(pl, h) * pl.unit_mw;
                lp.add_row(
                    format!("generation[{},{d},{h}]", pl.name),
                    &[(lay.gen(d, h, p), 1.0), (lay.build(p), -cap), (lay.retire(p), cap)],
                    RowSense::Le,
                    cap * pl.existing_units as f64,
                );
            }
            // Cyclic intra-day storage.
            for (s, st) in pw.storage.iter().enumerate() {
                let prev = (h + hours - 1) % hours;
                lp.add_row(
                    format!("soc[{},{d},{h}]", st.name),
                    &[
                        (lay.soc(d, h, s), 1.0),
                        (lay.soc(d, prev, s), -1.0),
                        (lay.charge(d, h, s), -st.charge_efficiency),
                        (lay.discharge(d, h, s), 1.0 / st.discharge_efficiency),
                    ],
                    RowSense::Eq,
                    0.0,
                );
            }
            for (label, col, size) in [
                ("charge_cap", 0, 0),
                ("discharge_cap", 1, 0),
                ("soc_cap", 2, 1),
            ] {
                for (s, st) in pw.storage.iter().enumerate() {
                    let var = match col {
                        0 => lay.charge(d, h, s),
                        1 => lay.discharge(d, h, s),
                        _ => lay.soc(d, h, s),
                    };
                    let unit = if size == 1 { st.unit_mwh } else { st.unit_mw };
                    lp.add_row(
                        format!("{label}[{},{d},{h}]", st.name),
                        &[(var, 1.0), (lay.storage_build(s), -unit)],
                        RowSense::Le,
                        unit * st.existing_units as f64,
                    );
                }
            }
            // Candidate lines carry flow only when built.
            for (c, &l) in lay.candidates.iter().enumerate() {
                let line = &pw.lines[l];
                let b = lay.line_build(c);
                lp.add_row(
                    format!("line_gate_pos[{},{d},{h}]", line.name),
                    &[(lay.flow(d, h, l), 1.0), (b, -line.capacity_mw)],
                    RowSense::Le,
                    0.0,
                );
                lp.add_row(
                    format!("line_gate_neg[{},{d},{h}]", line.name),
                    &[(lay.flow(d, h, l), -1.0), (b, -line.capacity_mw)],
                    RowSense::Le,
                    0.0,
                );
            }
        }
        for (p, pl) in pw.plants.iter().enumerate().filter(|(_, p)| p.ramps()) {
            let r = pl.ramp_limit * pl.unit_mw;
            for h in 1..hours {
                for (label, sign) in [("ramp_up", 1.0), ("ramp_down", -1.0)] {
                    lp.add_row(
                        format!("{label}[{},{d},{h}]", pl.name),
                        &[
                            (lay.gen(d, h, p), sign),
                            (lay.gen(d, h - 1, p), -sign),
                            (lay.build(p), -r),
                            (lay.retire(p), r),
                        ],
                        RowSense::Le,
                        r * pl.existing_units as f64,
                    );
                }
            }
        }
        // Gas balance: supply + withdrawals − injections + net import − fuel + shed = demand.
        for (n, node) in gs.nodes.iter().enumerate() {
            let mut row = vec![(lay.supply(d, n), 1.0), (lay.gas_shed(d, n), 1.0)];
            for (k, &(kn, _)) in gs.storage_links.iter().enumerate() {
                if kn == n {
                    row.push((lay.withdraw(d, k), 1.0));
                    row.push((lay.inject(d, k), -1.0));
                }
            }
            for (q, pipe) in gs.pipelines.iter().enumerate() {
                if pipe.to == n {
                    row.push((lay.pipe_flow(d, q), 1.0));
                }
                if pipe.from == n {
                    row.push((lay.pipe_flow(d, q), -1.0));
                }
            }
            for (e, &(_, en)) in cp.edges.iter().enumerate() {
                if en == n {
                    row.push((lay.fuel(d, e), -1.0));
                }
            }
            lp.add_row(format!("gas_balance[{},{d}]", node.name), &row, RowSense::Eq, day.gas_demand[n]);
        }
        for (n, node) in gs.nodes.iter().enumerate() {
            lp.add_row(
                format!("supply_cap[{},{d}]", node.name),
                &[(lay.supply(d, n), 1.0), (lay.supply_exp(n), -node.expansion_unit)],
                RowSense::Le,
                node.supply_capacity,
            );
        }
        for (q, pipe) in gs.pipelines.iter().enumerate() {
            for (label, sign) in [("pipe_cap_pos", 1.0), ("pipe_cap_neg", -1.0)] {
                lp.add_row(
                    format!("{label}[{},{d}]", pipe.name),
                    &[(lay.pipe_flow(d, q), sign), (lay.pipeline_exp(q), -pipe.expansion_unit)],
                    RowSense::Le,
                    pipe.capacity,
                );
            }
        }
        for (label, inject) in [("injection_cap", true), ("withdrawal_cap", false)] {
            for (s, st) in gs.storage.iter().enumerate() {
                let row: Vec<(usize, f64)> = gs
                    .storage_links
                    .iter()
                    .enumerate()
                    .filter(|(_, &(_, ks))| ks == s)
                    .map(|(k, _)| (if inject { lay.inject(d, k) } else { lay.withdraw(d, k) }, 1.0))
                    .collect();
                let limit = if inject { st.injection_limit } else { st.withdrawal_limit };
                lp.add_row(format!("{label}[{},{d}]", st.name), &row, RowSense::Le, limit);
            }
        }
        // Fuel delivered to a zone equals heat rate × NG-fired generation.
        for &z in &coupled {
            let mut row: Vec<(usize, f64)> = cp
                .edges
                .iter()
                .enumerate()
                .filter(|(_, &(ez, _))| ez == z)
                .map(|(e, _)| (lay.fuel(d, e), 1.0))
                .collect();
            for (p, pl) in pw.plants.iter().enumerate() {
                if pl.node == z && pl.is_ng_fired() {
                    for h in 0..hours {
                        row.push((lay.gen(d, h, p), -pl.heat_rate));
                    }
                }
            }
            lp.add_row(format!("coupling[{},{d}]", pw.nodes[z].name), &row, RowSense::Eq, 0.0);
        }
    }

    // Horizon rows.
    for (s, st) in gs.storage.iter().enumerate() {
        let mut row = vec![(lay.gas_storage_exp(s), -st.expansion_unit)];
        for (d, day) in days.iter().enumerate() {
            for (k, &(_, ks)) in gs.storage_links.iter().enumerate() {
                if ks == s {
                    row.push((lay.withdraw(d, k), day.weight));
                    row.push((lay.inject(d, k), -day.weight));
                }
            }
        }
        lp.add_row(format!("gas_storage[{}]", st.name), &row, RowSense::Le, st.capacity);
    }
    let rps = instance.policy.rps_share;
    if rps > 0.0 {
        let mut row = Vec::new();
        let mut demand = 0.0;
        for (d, day) in days.iter().enumerate() {
            demand += day.weight * day.demand.iter().flatten().sum::<f64>();
            for p in (0..lay.plants).filter(|&p| pw.plants[p].is_vre()) {
                for h in 0..hours {
                    row.push((lay.gen(d, h, p), day.weight));
                }
            }
        }
        lp.add_row("rps", &row, RowSense::Ge, rps * demand);
    }
    if let Some(cap) = cp.emission_cap {
        // e_g · (gas demand − gas shed) + e_p · fuel, summed with day weights.
        let mut row = Vec::new();
        let mut served = 0.0;
        for (d, day) in days.iter().enumerate() {
            served += day.weight * day.gas_demand.iter().sum::<f64>();
            for n in 0..lay.gas_nodes {
                row.push((lay.gas_shed(d, n), -cp.e_g * day.weight));
            }
            for e in 0..lay.edges {
                row.push((lay.fuel(d, e), cp.e_p * day.weight));
            }
        }
        lp.add_row("emission", &row, RowSense::Le, cap - cp.e_g * served);
    }
    PlanningModel { lp, layout: lay }
}
