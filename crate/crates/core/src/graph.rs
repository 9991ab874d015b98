//! Undirected graphs and the spectral operators built on them.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("graph must have at least one node")]
    Empty,
    #[error("self-loop at node {0}")]
    SelfLoop(usize),
    #[error("edge ({0}, {1}) references a node outside 0..{2}")]
    OutOfRange(usize, usize, usize),
    #[error("edge distances must be nonnegative and finite")]
    BadDistance,
    #[error("distances required for affinity")]
    MissingDistances,
    #[error("sigma must be positive")]
    BadSigma,
}

/// Undirected simple graph on nodes `0..node_count`.
///
/// Edges are stored once with `i < j`; duplicates are dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Graph {
    node_count: usize,
    edges: Vec<(usize, usize)>,
    distances: Option<Vec<f64>>,
}

impl Graph {
    pub fn new(node_count: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        Self::build(node_count, edges.iter().map(|&(i, j)| (i, j, None)))
    }

    /// Graph whose every edge carries a distance.
    pub fn with_distances(node_count: usize, edges: &[(usize, usize, f64)]) -> Result<Self, GraphError> {
        Self::build(node_count, edges.iter().map(|&(i, j, d)| (i, j, Some(d))))
    }

    fn build(
        node_count: usize,
        edges: impl Iterator<Item = (usize, usize, Option<f64>)>,
    ) -> Result<Self, GraphError> {
        if node_count == 0 {
            return Err(GraphError::Empty);
        }
        let mut list: Vec<(usize, usize, Option<f64>)> = Vec::new();
        for (i, j, d) in edges {
            if i >= node_count || j >= node_count {
                return Err(GraphError::OutOfRange(i, j, node_count));
            }
            if i == j {
                return Err(GraphError::SelfLoop(i));
            }
            if let Some(d) = d {
                if !(d.is_finite() && d >= 0.0) {
                    return Err(GraphError::BadDistance);
                }
            }
            list.push((i.min(j), i.max(j), d));
        }
        list.sort_by_key(|a| (a.0, a.1));
        list.dedup_by(|a, b| (a.0, a.1) == (b.0, b.1));
        let all_have = !list.is_empty() && list.iter().all(|e| e.2.is_some());
        Ok(Self {
            node_count,
            edges: list.iter().map(|e| (e.0, e.1)).collect(),
            distances: all_have.then(|| list.iter().map(|e| e.2.unwrap_or(0.0)).collect()),
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Per-edge distances aligned with [`Graph::edges`], when every edge has one.
    pub fn distances(&self) -> Option<&[f64]> {
        self.distances.as_deref()
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter_map(|&(i, j)| {
                if i == v {
                    Some(j)
                } else if j == v {
                    Some(i)
                } else {
                    None
                }
            })
            .collect()
    }

    /// Number of connected components.
    pub fn component_count(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.node_count).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &(i, j) in &self.edges {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                parent[a] = b;
            }
        }
        (0..self.node_count).filter(|&v| find(&mut parent, v) == v).count()
    }
}

/// Binary adjacency matrix: `A[i][j] = 1` iff `{i, j}` is an edge.
pub fn build_adjacency<T: Scalar>(graph: &Graph) -> Matrix<T> {
    let mut a = Matrix::zeros(graph.node_count, graph.node_count);
    for &(i, j) in &graph.edges {
        a[(i, j)] = T::one();
        a[(j, i)] = T::one();
    }
    a
}

/// Gaussian-kernel affinity `exp(-dist² / σ²)` on edges, zero elsewhere.
pub fn build_affinity<T: Scalar>(graph: &Graph, sigma: T) -> Result<Matrix<T>, GraphError> {
    if !(sigma > T::zero()) {
        return Err(GraphError::BadSigma);
    }
    let dist = graph.distances.as_ref().ok_or(GraphError::MissingDistances)?;
    let mut a = Matrix::zeros(graph.node_count, graph.node_count);
    for (&(i, j), &d) in graph.edges.iter().zip(dist) {
        let r = T::of(d) / sigma;
        let w = (-(r * r)).exp();
        a[(i, j)] = w;
        a[(j, i)] = w;
    }
    Ok(a)
}

/// The propagation operator `D̃^{-1/2} (I + A) D̃^{-1/2}` with `D̃ = I + D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenormalizedLaplacian<T> {
    pub matrix: Matrix<T>,
}

/// Renormalized Laplacian of a square, symmetric, nonnegative `adjacency`.
pub fn renormalized_laplacian<T: Scalar>(adjacency: &Matrix<T>) -> RenormalizedLaplacian<T> {
    let n = adjacency.rows();
    assert_eq!(n, adjacency.cols(), "adjacency must be square");
    let inv_sqrt: Vec<T> = (0..n)
        .map(|i| {
            let deg: T = adjacency.row(i).iter().copied().sum();
            (T::one() + deg).sqrt().recip()
        })
        .collect();
    let matrix = Matrix::from_fn(n, n, |i, j| {
        let a = adjacency[(i, j)] + if i == j { T::one() } else { T::zero() };
        inv_sqrt[i] * a * inv_sqrt[j]
    });
    RenormalizedLaplacian { matrix }
}

/// Disjoint union of `power` (nodes first) and `gas` (offset by
/// `power.node_count()`) plus cross edges `(power_node, gas_node)`.
pub fn join_graphs(power: &Graph, gas: &Graph, coupling: &[(usize, usize)]) -> Result<Graph, GraphError> {
    let np = power.node_count;
    let ng = gas.node_count;
    let mut edges: Vec<(usize, usize)> = power.edges.clone();
    edges.extend(gas.edges.iter().map(|&(i, j)| (np + i, np + j)));
    for &(p, g) in coupling {
        if p >= np || g >= ng {
            return Err(GraphError::OutOfRange(p, g, if p >= np { np } else { ng }));
        }
        edges.push((p, np + g));
    }
    Graph::new(np + ng, &edges)
}
