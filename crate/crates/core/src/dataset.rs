//! Per-day multi-resolution graph signals and their file formats.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{join_graphs, Graph, GraphError};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("dataset has no days")]
    Empty,
    #[error("invalid value: {0}")]
    Value(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("{path}: {source}")]
    Json { path: String, source: serde_json::Error },
    #[error("{path}: {msg}")]
    Format { path: String, msg: String },
}

/// Channel dimensions shared by every day of a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub n_e: usize,
    pub n_g: usize,
    pub t_e: usize,
    pub t_w: usize,
    pub t_s: usize,
    pub t_g: usize,
}

impl Dims {
    pub fn nodes(&self) -> usize {
        self.n_e + self.n_g
    }

    pub fn power_channels(&self) -> usize {
        self.t_e + self.t_w + self.t_s
    }

    /// Width `t` of the assembled block matrix.
    pub fn channels(&self) -> usize {
        self.power_channels() + self.t_g
    }
}

/// One day of data: hourly electricity demand and wind/solar capacity
/// factors on power nodes, daily gas demand on gas nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DaySignal<T> {
    pub day_index: usize,
    pub electricity: Matrix<T>,
    pub wind_cf: Matrix<T>,
    pub solar_cf: Matrix<T>,
    pub gas: Matrix<T>,
}

impl<T: Scalar> DaySignal<T> {
    pub fn dims(&self) -> Dims {
        Dims {
            n_e: self.electricity.rows(),
            n_g: self.gas.rows(),
            t_e: self.electricity.cols(),
            t_w: self.wind_cf.cols(),
            t_s: self.solar_cf.cols(),
            t_g: self.gas.cols(),
        }
    }

    pub fn zeros(day_index: usize, d: Dims) -> Self {
        Self {
            day_index,
            electricity: Matrix::zeros(d.n_e, d.t_e),
            wind_cf: Matrix::zeros(d.n_e, d.t_w),
            solar_cf: Matrix::zeros(d.n_e, d.t_s),
            gas: Matrix::zeros(d.n_g, d.t_g),
        }
    }

    /// The four channel groups in E, W, S, G order.
    pub fn channels(&self) -> [&Matrix<T>; 4] {
        [&self.electricity, &self.wind_cf, &self.solar_cf, &self.gas]
    }

    fn channels_mut(&mut self) -> [&mut Matrix<T>; 4] {
        [&mut self.electricity, &mut self.wind_cf, &mut self.solar_cf, &mut self.gas]
    }

    /// All entries concatenated in E, W, S, G order.
    pub fn flatten(&self) -> Vec<T> {
        self.channels().iter().flat_map(|m| m.as_slice().iter().copied()).collect()
    }

    fn check_shape(&self) -> Result<(), DatasetError> {
        let n_e = self.electricity.rows();
        if self.wind_cf.rows() != n_e || self.solar_cf.rows() != n_e {
            return Err(DatasetError::Shape(format!(
                "day {}: wind/solar must have {n_e} rows like electricity",
                self.day_index
            )));
        }
        Ok(())
    }
}

/// Affine map of one channel group onto `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelScale {
    pub min: f64,
    pub max: f64,
    /// The channel was constant and has been mapped to 0.
    pub constant: bool,
}

impl ChannelScale {
    fn forward<T: Scalar>(&self, v: T) -> T {
        if self.constant {
            T::zero()
        } else {
            T::of(2.0 * (v.as_f64() - self.min) / (self.max - self.min) - 1.0)
        }
    }

    fn inverse<T: Scalar>(&self, v: T) -> T {
        if self.constant {
            T::of(self.min)
        } else {
            T::of((v.as_f64() + 1.0) * 0.5 * (self.max - self.min) + self.min)
        }
    }
}

/// Scaling record of the E, W, S and G channel groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub channels: [ChannelScale; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiResolutionDataset<T> {
    pub power_graph: Graph,
    pub gas_graph: Graph,
    pub coupling_edges: Vec<(usize, usize)>,
    pub days: Vec<DaySignal<T>>,
    /// Present once the signals have been normalized.
    pub normalization: Option<Normalization>,
}

impl<T: Scalar> MultiResolutionDataset<T> {
    /// Validates shapes and graph sizes.
    pub fn new(
        power_graph: Graph,
        gas_graph: Graph,
        coupling_edges: Vec<(usize, usize)>,
        days: Vec<DaySignal<T>>,
    ) -> Result<Self, DatasetError> {
        let first = days.first().ok_or(DatasetError::Empty)?;
        let dims = first.dims();
        if dims.n_e != power_graph.node_count() || dims.n_g != gas_graph.node_count() {
            return Err(DatasetError::Shape(format!(
                "signals cover {}+{} nodes but graphs have {}+{}",
                dims.n_e,
                dims.n_g,
                power_graph.node_count(),
                gas_graph.node_count()
            )));
        }
        for d in &days {
            d.check_shape()?;
            if d.dims() != dims {
                return Err(DatasetError::Shape(format!("day {} differs from day {}", d.day_index, first.day_index)));
            }
            for (k, m) in [&d.wind_cf, &d.solar_cf].into_iter().enumerate() {
                if m.as_slice().iter().any(|&v| !(v >= T::zero() && v <= T::one())) {
                    let name = ["wind", "solar"][k];
                    return Err(DatasetError::Value(format!("day {}: {name} CF outside [0,1]", d.day_index)));
                }
            }
            for m in [&d.electricity, &d.gas] {
                if m.as_slice().iter().any(|&v| !(v >= T::zero()) || !v.is_finite()) {
                    return Err(DatasetError::Value(format!("day {}: negative or non-finite demand", d.day_index)));
                }
            }
        }
        // Range check of coupling edges.
        join_graphs(&power_graph, &gas_graph, &coupling_edges)?;
        Ok(Self {
            power_graph,
            gas_graph,
            coupling_edges,
            days,
            normalization: None,
        })
    }

    pub fn dims(&self) -> Dims {
        self.days[0].dims()
    }

    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    /// The joint graph on `n_E + n_G` nodes used by the autoencoder.
    pub fn joint_graph(&self) -> Result<Graph, GraphError> {
        join_graphs(&self.power_graph, &self.gas_graph, &self.coupling_edges)
    }

    /// Maps every channel group onto `[-1, 1]` using its global min/max.
    /// Already-normalized datasets are returned unchanged.
    pub fn normalize(&self) -> Self {
        if self.normalization.is_some() {
            return self.clone();
        }
        let mut scales = [ChannelScale { min: f64::INFINITY, max: f64::NEG_INFINITY, constant: false }; 4];
        for d in &self.days {
            for (s, m) in scales.iter_mut().zip(d.channels()) {
                for &v in m.as_slice() {
                    s.min = s.min.min(v.as_f64());
                    s.max = s.max.max(v.as_f64());
                }
            }
        }
        for s in &mut scales {
            if !(s.max > s.min) {
                s.constant = true;
                if !s.min.is_finite() {
                    s.min = 0.0;
                    s.max = 0.0;
                }
            }
        }
        let mut out = self.clone();
        for d in &mut out.days {
            for (s, m) in scales.iter().zip(d.channels_mut()) {
                *m = m.map(|v| s.forward(v));
            }
        }
        out.normalization = Some(Normalization { channels: scales });
        out
    }

    /// Applies an existing scaling record (e.g. one stored with a trained
    /// model). Already-normalized datasets are returned unchanged.
    pub fn normalize_with(&self, norm: &Normalization) -> Self {
        if self.normalization.is_some() {
            return self.clone();
        }
        let mut out = self.clone();
        for d in &mut out.days {
            for (s, m) in norm.channels.iter().zip(d.channels_mut()) {
                *m = m.map(|v| s.forward(v));
            }
        }
        out.normalization = Some(norm.clone());
        out
    }

    /// Inverse of [`normalize`](Self::normalize); unchanged when not normalized.
    pub fn denormalize(&self) -> Self {
        let Some(norm) = &self.normalization else {
            return self.clone();
        };
        let mut out = self.clone();
        for d in &mut out.days {
            for (s, m) in norm.channels.iter().zip(d.channels_mut()) {
                *m = m.map(|v| s.inverse(v));
            }
        }
        out.normalization = None;
        out
    }

    /// Dataset restricted to the given day positions (in the given order).
    pub fn select(&self, positions: &[usize]) -> Self {
        let mut out = self.clone();
        out.days = positions.iter().map(|&p| self.days[p].clone()).collect();
        out
    }
}

/// Joint graph of a dataset: power nodes first, gas node `i` at index
/// `n_E + i`, plus the coupling edges.
pub fn assemble_joint_graph<T: Scalar>(dataset: &MultiResolutionDataset<T>) -> Result<Graph, GraphError> {
    dataset.joint_graph()
}

#[derive(Serialize, Deserialize)]
struct TopologyFile {
    nodes: usize,
    edges: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct CouplingFile {
    power_nodes: usize,
    gas_nodes: usize,
    edges: Vec<[usize; 2]>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io { path: path.display().to_string(), source }
}

fn json_err(path: &Path) -> impl FnOnce(serde_json::Error) -> DatasetError + '_ {
    move |source| DatasetError::Json { path: path.display().to_string(), source }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> DatasetError + '_ {
    move |source| DatasetError::Csv { path: path.display().to_string(), source }
}

fn format_err(path: &Path, msg: impl Into<String>) -> DatasetError {
    DatasetError::Format { path: path.display().to_string(), msg: msg.into() }
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<(), DatasetError> {
    let f = File::create(path).map_err(io_err(path))?;
    serde_json::to_writer_pretty(BufWriter::new(f), value).map_err(json_err(path))
}

fn read_json<S: for<'de> Deserialize<'de>>(path: &Path) -> Result<S, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(json_err(path))
}

/// Writes a topology file: `{"nodes": n, "edges": [[i, j] | [i, j, dist]]}`.
pub fn write_topology(graph: &Graph, path: &Path) -> Result<(), DatasetError> {
    let edges = match graph.distances() {
        Some(d) => graph
            .edges()
            .iter()
            .zip(d)
            .map(|(&(i, j), &w)| vec![i as f64, j as f64, w])
            .collect(),
        None => graph.edges().iter().map(|&(i, j)| vec![i as f64, j as f64]).collect(),
    };
    write_json(path, &TopologyFile { nodes: graph.node_count(), edges })
}

pub fn read_topology(path: &Path) -> Result<Graph, DatasetError> {
    let file: TopologyFile = read_json(path)?;
    let index = |v: f64| -> Result<usize, DatasetError> {
        if v >= 0.0 && v.fract() == 0.0 {
            Ok(v as usize)
        } else {
            Err(format_err(path, format!("invalid node index {v}")))
        }
    };
    let mut plain = Vec::new();
    let mut weighted = Vec::new();
    for e in &file.edges {
        match e.as_slice() {
            [i, j] => plain.push((index(*i)?, index(*j)?)),
            [i, j, d] => weighted.push((index(*i)?, index(*j)?, *d)),
            _ => return Err(format_err(path, "edges must be [i, j] or [i, j, dist]")),
        }
    }
    if plain.is_empty() && !weighted.is_empty() {
        Ok(Graph::with_distances(file.nodes, &weighted)?)
    } else {
        plain.extend(weighted.iter().map(|&(i, j, _)| (i, j)));
        Ok(Graph::new(file.nodes, &plain)?)
    }
}

const CHANNEL_FILES: [&str; 4] = ["electricity.csv", "wind_cf.csv", "solar_cf.csv", "gas.csv"];

impl<T: Scalar> MultiResolutionDataset<T> {
    /// Writes the topologies (`power_topology.json`, `gas_topology.json`,
    /// `coupling.json`) and one CSV per channel group (`day,node,t0,...`)
    /// into `dir`. The normalization record, if any, goes to
    /// `normalization.json`.
    pub fn save_dir(&self, dir: &Path) -> Result<(), DatasetError> {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        write_topology(&self.power_graph, &dir.join("power_topology.json"))?;
        write_topology(&self.gas_graph, &dir.join("gas_topology.json"))?;
        write_json(
            &dir.join("coupling.json"),
            &CouplingFile {
                power_nodes: self.power_graph.node_count(),
                gas_nodes: self.gas_graph.node_count(),
                edges: self.coupling_edges.iter().map(|&(p, g)| [p, g]).collect(),
            },
        )?;
        for (c, name) in CHANNEL_FILES.iter().enumerate() {
            let path = dir.join(name);
            let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
            let width = self.days[0].channels()[c].cols();
            let mut header = vec!["day".to_string(), "node".to_string()];
            header.extend((0..width).map(|t| format!("t{t}")));
            w.write_record(&header).map_err(csv_err(&path))?;
            for d in &self.days {
                let m = d.channels()[c];
                for i in 0..m.rows() {
                    let mut rec = vec![d.day_index.to_string(), i.to_string()];
                    rec.extend(m.row(i).iter().map(|v| format!("{}", v.as_f64())));
                    w.write_record(&rec).map_err(csv_err(&path))?;
                }
            }
            w.flush().map_err(io_err(&path))?;
        }
        if let Some(norm) = &self.normalization {
            write_json(&dir.join("normalization.json"), norm)?;
        }
        Ok(())
    }

    /// Reads a directory written by [`save_dir`](Self::save_dir).
    pub fn load_dir(dir: &Path) -> Result<Self, DatasetError> {
        let power = read_topology(&dir.join("power_topology.json"))?;
        let gas = read_topology(&dir.join("gas_topology.json"))?;
        let coupling_path = dir.join("coupling.json");
        let coupling: CouplingFile = read_json(&coupling_path)?;
        if coupling.power_nodes != power.node_count() || coupling.gas_nodes != gas.node_count() {
            return Err(format_err(&coupling_path, "node counts disagree with topology files"));
        }
        let mut channels: Vec<Vec<(usize, Matrix<T>)>> = Vec::new();
        for (c, name) in CHANNEL_FILES.iter().enumerate() {
            let path = dir.join(name);
            let rows_expected = if c == 3 { gas.node_count() } else { power.node_count() };
            channels.push(read_channel(&path, rows_expected)?);
        }
        let n_days = channels[0].len();
        if channels.iter().any(|c| c.len() != n_days) {
            return Err(DatasetError::Shape("channel files cover different day counts".into()));
        }
        let mut days = Vec::with_capacity(n_days);
        for k in 0..n_days {
            let idx = channels[0][k].0;
            if channels.iter().any(|c| c[k].0 != idx) {
                return Err(DatasetError::Shape(format!("day order differs between channel files at row {k}")));
            }
            days.push(DaySignal {
                day_index: idx,
                electricity: channels[0][k].1.clone(),
                wind_cf: channels[1][k].1.clone(),
                solar_cf: channels[2][k].1.clone(),
                gas: channels[3][k].1.clone(),
            });
        }
        let norm_path = dir.join("normalization.json");
        let normalization = if norm_path.exists() { Some(read_json(&norm_path)?) } else { None };
        if normalization.is_some() {
            // Normalized signals lie in [-1, 1]; skip the raw-unit checks.
            join_graphs(&power, &gas, &coupling.edges.iter().map(|e| (e[0], e[1])).collect::<Vec<_>>())?;
            return Ok(Self {
                power_graph: power,
                gas_graph: gas,
                coupling_edges: coupling.edges.iter().map(|e| (e[0], e[1])).collect(),
                days,
                normalization,
            });
        }
        Self::new(power, gas, coupling.edges.iter().map(|e| (e[0], e[1])).collect(), days)
    }
}

fn read_channel<T: Scalar>(path: &Path, rows: usize) -> Result<Vec<(usize, Matrix<T>)>, DatasetError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = r.headers().map_err(csv_err(path))?.clone();
    if header.len() < 3 || &header[0] != "day" || &header[1] != "node" {
        return Err(format_err(path, "expected header day,node,t0,..."));
    }
    let width = header.len() - 2;
    let mut out: Vec<(usize, Matrix<T>)> = Vec::new();
    let mut current: Option<(usize, Vec<T>, usize)> = None;
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let parse_idx = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| format_err(path, format!("row {}: bad index '{s}'", line + 2)))
        };
        let day = parse_idx(&rec[0])?;
        let node = parse_idx(&rec[1])?;
        let mut values = Vec::with_capacity(width);
        for s in rec.iter().skip(2) {
            let v: f64 = s
                .trim()
                .parse()
                .map_err(|_| format_err(path, format!("row {}: bad number '{s}'", line + 2)))?;
            values.push(T::of(v));
        }
        if values.len() != width {
            return Err(format_err(path, format!("row {}: expected {width} values", line + 2)));
        }
        match &mut current {
            Some((d, data, count)) if *d == day => {
                if node != *count {
                    return Err(format_err(path, format!("row {}: node {node} out of order", line + 2)));
                }
                data.extend(values);
                *count += 1;
            }
            _ => {
                if let Some((d, data, count)) = current.take() {
                    if count != rows {
                        return Err(format_err(path, format!("day {d}: {count} nodes, expected {rows}")));
                    }
                    out.push((d, Matrix::from_vec(rows, width, data)));
                }
                if node != 0 {
                    return Err(format_err(path, format!("row {}: day {day} must start at node 0", line + 2)));
                }
                current = Some((day, values, 1));
            }
        }
    }
    if let Some((d, data, count)) = current {
        if count != rows {
            return Err(format_err(path, format!("day {d}: {count} nodes, expected {rows}")));
        }
        out.push((d, Matrix::from_vec(rows, width, data)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> MultiResolutionDataset<f64> {
        let p = Graph::new(2, &[(0, 1)]).unwrap();
        let g = Graph::new(1, &[]).unwrap();
        let mk = |k: usize, e: [f64; 4], w: f64, gas: f64| DaySignal {
            day_index: k,
            electricity: Matrix::from_vec(2, 2, e.to_vec()),
            wind_cf: Matrix::from_vec(2, 2, vec![w; 4]),
            solar_cf: Matrix::from_vec(2, 2, vec![0.0, 1.0, 0.5, 0.25]),
            gas: Matrix::from_vec(1, 1, vec![gas]),
        };
        let days = vec![
            mk(0, [0.0, 50.0, 100.0, 25.0], 0.3, 10.0),
            mk(1, [10.0, 20.0, 30.0, 40.0], 0.3, 20.0),
        ];
        MultiResolutionDataset::new(p, g, vec![(0, 0)], days).unwrap()
    }

    #[test]
    fn normalization_endpoints_and_constant_channels() {
        let n = tiny().normalize();
        let e = &n.days[0].electricity;
        assert_eq!(e[(0, 0)], -1.0);
        assert_eq!(e[(0, 1)], 0.0);
        assert_eq!(e[(1, 0)], 1.0);
        let s = &n.days[0].solar_cf;
        assert_eq!(s[(0, 0)], -1.0);
        assert_eq!(s[(0, 1)], 1.0);
        let norm = n.normalization.as_ref().unwrap();
        assert!(norm.channels[1].constant);
        assert!(n.days.iter().all(|d| d.wind_cf.as_slice().iter().all(|&v| v == 0.0)));
        assert_eq!(n.normalize(), n);
    }

    #[test]
    fn normalize_round_trip() {
        let d = tiny();
        let back = d.normalize().denormalize();
        for (a, b) in d.days.iter().zip(&back.days) {
            assert!(a.flatten().iter().zip(b.flatten()).all(|(x, y)| (x - y).abs() <= 1e-12));
        }
    }

    #[test]
    fn files_round_trip() {
        let d = tiny();
        let dir = tempfile::tempdir().unwrap();
        d.save_dir(dir.path()).unwrap();
        let back = MultiResolutionDataset::<f64>::load_dir(dir.path()).unwrap();
        assert_eq!(back, d);
        let n = d.normalize();
        n.save_dir(dir.path()).unwrap();
        assert_eq!(MultiResolutionDataset::<f64>::load_dir(dir.path()).unwrap(), n);
    }

    #[test]
    fn rejects_bad_capacity_factor() {
        let mut d = tiny();
        d.days[1].wind_cf[(0, 0)] = 1.5;
        let err = MultiResolutionDataset::new(d.power_graph, d.gas_graph, d.coupling_edges, d.days);
        assert!(matches!(err, Err(DatasetError::Value(_))));
    }
}
