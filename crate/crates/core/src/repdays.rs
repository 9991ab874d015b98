//! Representative-day selection by k-medoids (PAM).
//!
//! Distances are squared Frobenius norms between day embeddings (or between
//! the flattened normalized raw signals for the baseline). A full `N × N`
//! distance table is computed once. BUILD greedily picks the medoids, SWAP
//! then applies the best improving medoid/non-medoid exchange until none is
//! left. Every tie goes to the lowest day position.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::MultiResolutionDataset;
use crate::games::EmbeddingSet;
use crate::matrix::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum RepdaysError {
    #[error("shape mismatch: {0:?} vs {1:?}")]
    Shape((usize, usize), (usize, usize)),
    #[error("K = {k} must lie in 1..={n}")]
    BadK { k: usize, n: usize },
    #[error("invalid day set: {0}")]
    Invalid(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Embeddings,
    Raw,
}

impl std::fmt::Display for Source {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Source::Embeddings => "embeddings",
            Source::Raw => "raw",
        })
    }
}

/// Medoid days, the cluster of every day and the cluster sizes.
///
/// All indices are day positions in the dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentativeDaySet {
    /// Sorted ascending.
    pub medoids: Vec<usize>,
    /// `assignment[d]` is the medoid representing day `d`.
    pub assignment: Vec<usize>,
    /// Cluster sizes aligned with `medoids`.
    pub weights: Vec<usize>,
    pub objective: f64,
    pub source: Source,
}

impl RepresentativeDaySet {
    pub fn k(&self) -> usize {
        self.medoids.len()
    }

    /// `(day, weight)` pairs for the planning model.
    pub fn weighted_days(&self) -> Vec<(usize, f64)> {
        self.medoids.iter().zip(&self.weights).map(|(&m, &w)| (m, w as f64)).collect()
    }

    /// Every day its own medoid with weight 1.
    pub fn all_days(n: usize, source: Source) -> Self {
        Self {
            medoids: (0..n).collect(),
            assignment: (0..n).collect(),
            weights: vec![1; n],
            objective: 0.0,
            source,
        }
    }

    pub fn write_json(&self, path: &Path) -> Result<(), RepdaysError> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<Self, RepdaysError> {
        let set: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        set.check()?;
        Ok(set)
    }

    /// Structural consistency: medoids are self-assigned, every assignment
    /// names a medoid and the weights count the assignments.
    pub fn check(&self) -> Result<(), RepdaysError> {
        let n = self.assignment.len();
        if self.medoids.is_empty() || self.medoids.len() != self.weights.len() {
            return Err(RepdaysError::Invalid("medoids and weights must be nonempty and aligned".into()));
        }
        if self.medoids.windows(2).any(|w| w[0] >= w[1]) || self.medoids.iter().any(|&m| m >= n) {
            return Err(RepdaysError::Invalid("medoids must be sorted, distinct day positions".into()));
        }
        for (&m, &w) in self.medoids.iter().zip(&self.weights) {
            if self.assignment[m] != m {
                return Err(RepdaysError::Invalid(format!("medoid {m} is not assigned to itself")));
            }
            let count = self.assignment.iter().filter(|&&a| a == m).count();
            if count != w {
                return Err(RepdaysError::Invalid(format!("medoid {m}: weight {w} but {count} members")));
            }
        }
        if self.weights.iter().sum::<usize>() != n {
            return Err(RepdaysError::Invalid("assignment names a non-medoid".into()));
        }
        Ok(())
    }
}

/// Squared Frobenius distance `‖Zi − Zj‖²`.
pub fn distance<T: Scalar>(zi: &Matrix<T>, zj: &Matrix<T>) -> Result<T, RepdaysError> {
    if zi.shape() != zj.shape() {
        return Err(RepdaysError::Shape(zi.shape(), zj.shape()));
    }
    Ok(zi.dist2(zj))
}

/// Symmetric table of pairwise squared distances.
pub struct DistanceTable {
    n: usize,
    d: Vec<f64>,
}

impl DistanceTable {
    pub fn from_vectors(points: &[Vec<f64>]) -> Self {
        let n = points.len();
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v: f64 = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b) * (a - b)).sum();
                d[i * n + j] = v;
                d[j * n + i] = v;
            }
        }
        Self { n, d }
    }

    pub fn from_embeddings<T: Scalar>(emb: &EmbeddingSet<T>) -> Result<Self, RepdaysError> {
        if let Some(first) = emb.embeddings.first() {
            if let Some(bad) = emb.embeddings.iter().find(|z| z.shape() != first.shape()) {
                return Err(RepdaysError::Shape(first.shape(), bad.shape()));
            }
        }
        let points: Vec<Vec<f64>> = emb
            .embeddings
            .iter()
            .map(|z| z.as_slice().iter().map(|v| v.as_f64()).collect())
            .collect();
        Ok(Self::from_vectors(&points))
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }
}

/// Assignment of every day to its nearest medoid (ties to the lowest
/// medoid position) and the resulting objective.
fn assign(table: &DistanceTable, medoids: &[usize]) -> (Vec<usize>, f64) {
    let mut assignment = Vec::with_capacity(table.n);
    let mut total = 0.0;
    for j in 0..table.n {
        let mut best = (f64::INFINITY, usize::MAX);
        for &m in medoids {
            let d = table.get(m, j);
            if d < best.0 || (d == best.0 && m < best.1) {
                best = (d, m);
            }
        }
        assignment.push(best.1);
        total += best.0;
    }
    (assignment, total)
}

fn finish(table: &DistanceTable, mut medoids: Vec<usize>, source: Source) -> RepresentativeDaySet {
    medoids.sort_unstable();
    let (assignment, objective) = assign(table, &medoids);
    let weights = medoids
        .iter()
        .map(|&m| assignment.iter().filter(|&&a| a == m).count())
        .collect();
    RepresentativeDaySet {
        medoids,
        assignment,
        weights,
        objective,
        source,
    }
}

/// Order-independent tie key: the total distance from a day to all others.
fn centrality(table: &DistanceTable) -> Vec<f64> {
    (0..table.n)
        .map(|i| {
            let mut row: Vec<f64> = (0..table.n).map(|j| table.get(i, j)).collect();
            row.sort_by(f64::total_cmp);
            row.iter().sum()
        })
        .collect()
}

fn near(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-10 * (1.0 + a.abs().max(b.abs()))
}

/// True when candidate `(score, key)` beats `best`: a clearly larger score,
/// or an equal score with a smaller key.
fn beats(score: f64, key: f64, best: Option<(f64, f64)>) -> bool {
    match best {
        None => true,
        Some((bs, bk)) => {
            if near(score, bs) {
                !near(key, bk) && key < bk
            } else {
                score > bs
            }
        }
    }
}

fn build(table: &DistanceTable, k: usize, key: &[f64]) -> Vec<usize> {
    let n = table.n;
    let mut first: Option<(usize, f64, f64)> = None;
    for (i, &s) in key.iter().enumerate() {
        if beats(-s, s, first.map(|f| (-f.1, f.2))) {
            first = Some((i, s, s));
        }
    }
    let first = first.map_or(0, |f| f.0);
    let mut medoids = vec![first];
    let mut near: Vec<f64> = (0..n).map(|j| table.get(first, j)).collect();
    while medoids.len() < k {
        let mut best: Option<(usize, f64, f64)> = None;
        for c in 0..n {
            if medoids.contains(&c) {
                continue;
            }
            let mut terms: Vec<f64> = (0..n).map(|j| (near[j] - table.get(c, j)).max(0.0)).collect();
            terms.sort_by(f64::total_cmp);
            let gain: f64 = terms.iter().sum();
            if beats(gain, key[c], best.map(|b| (b.1, b.2))) {
                best = Some((c, gain, key[c]));
            }
        }
        let c = best.map_or(0, |b| b.0);
        medoids.push(c);
        for (j, v) in near.iter_mut().enumerate() {
            *v = v.min(table.get(c, j));
        }
    }
    medoids
}

/// Runs SWAP from `medoids` until no single exchange lowers the objective.
fn swap(table: &DistanceTable, mut medoids: Vec<usize>, key: &[f64]) -> Vec<usize> {
    let n = table.n;
    loop {
        // Nearest and second-nearest medoid distance of every day.
        let mut nearest = vec![(f64::INFINITY, usize::MAX); n];
        let mut second = vec![f64::INFINITY; n];
        for j in 0..n {
            for &m in &medoids {
                let d = table.get(m, j);
                if d < nearest[j].0 || (d == nearest[j].0 && m < nearest[j].1) {
                    second[j] = nearest[j].0;
                    nearest[j] = (d, m);
                } else if d < second[j] {
                    second[j] = d;
                }
            }
        }
        let objective: f64 = nearest.iter().map(|p| p.0).sum();
        let tol = 1e-12 * (1.0 + objective);
        let mut best: Option<(f64, f64, usize, usize)> = None;
        for (slot, &m) in medoids.iter().enumerate() {
            for h in 0..n {
                if medoids.contains(&h) {
                    continue;
                }
                let mut terms: Vec<f64> = (0..n)
                    .map(|j| {
                        let dh = table.get(h, j);
                        let now = nearest[j].0;
                        let after = if nearest[j].1 == m { dh.min(second[j]) } else { dh.min(now) };
                        after - now
                    })
                    .collect();
                terms.sort_by(f64::total_cmp);
                let delta: f64 = terms.iter().sum();
                let tie_key = key[h] - key[m];
                if delta < -tol && beats(-delta, tie_key, best.map(|b| (-b.0, b.1))) {
                    best = Some((delta, tie_key, slot, h));
                }
            }
        }
        match best {
            Some((_, _, slot, h)) => medoids[slot] = h,
            None => return medoids,
        }
    }
}

fn check_k(k: usize, n: usize) -> Result<(), RepdaysError> {
    if k == 0 || k > n {
        Err(RepdaysError::BadK { k, n })
    } else {
        Ok(())
    }
}

/// PAM on a precomputed distance table.
pub fn pam(table: &DistanceTable, k: usize, source: Source) -> Result<RepresentativeDaySet, RepdaysError> {
    check_k(k, table.n)?;
    let key = centrality(table);
    let medoids = swap(table, build(table, k, &key), &key);
    Ok(finish(table, medoids, source))
}

/// K representative days of the embeddings.
///
/// PAM is deterministic; `seed` is accepted for interface symmetry with
/// the other pipeline stages and does not influence the result.
pub fn kmedoids<T: Scalar>(
    embeddings: &EmbeddingSet<T>,
    k: usize,
    seed: u64,
) -> Result<RepresentativeDaySet, RepdaysError> {
    let _ = seed;
    pam(&DistanceTable::from_embeddings(embeddings)?, k, Source::Embeddings)
}

/// K representative days of the normalized raw signals (E, W, S and G
/// flattened and concatenated).
pub fn kmedoids_raw<T: Scalar>(
    dataset: &MultiResolutionDataset<T>,
    k: usize,
    seed: u64,
) -> Result<RepresentativeDaySet, RepdaysError> {
    let _ = seed;
    let norm = dataset.normalize();
    let points: Vec<Vec<f64>> = norm
        .days
        .iter()
        .map(|d| d.flatten().iter().map(|v| v.as_f64()).collect())
        .collect();
    pam(&DistanceTable::from_vectors(&points), k, Source::Raw)
}

/// Improves `current` by single medoid/non-medoid exchanges until none
/// lowers the objective.
pub fn swap_improvement_pass<T: Scalar>(
    current: &RepresentativeDaySet,
    embeddings: &EmbeddingSet<T>,
) -> Result<RepresentativeDaySet, RepdaysError> {
    let table = DistanceTable::from_embeddings(embeddings)?;
    if current.assignment.len() != table.n {
        return Err(RepdaysError::Invalid(format!(
            "set covers {} days, embeddings {}",
            current.assignment.len(),
            table.n
        )));
    }
    check_k(current.k(), table.n)?;
    Ok(finish(&table, swap(&table, current.medoids.clone(), &centrality(&table)), current.source))
}

/// Objective of an assignment evaluated from scratch.
pub fn evaluate_objective<T: Scalar>(
    set: &RepresentativeDaySet,
    embeddings: &EmbeddingSet<T>,
) -> Result<f64, RepdaysError> {
    let mut total = 0.0;
    for (d, &m) in set.assignment.iter().enumerate() {
        total += distance(&embeddings.embeddings[d], &embeddings.embeddings[m])?.as_f64();
    }
    Ok(total)
}

/// Rand index between two labelings of the same items.
pub fn rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings must have equal length");
    let n = a.len();
    if n < 2 {
        return 1.0;
    }
    let mut agree = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            if (a[i] == a[j]) == (b[i] == b[j]) {
                agree += 1;
            }
        }
    }
    agree as f64 / (n * (n - 1) / 2) as f64
}
