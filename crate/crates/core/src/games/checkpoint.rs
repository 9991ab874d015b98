//! JSON model checkpoints.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GamesError, GamesModel, Mlp};
use crate::graph::{build_adjacency, renormalized_laplacian};
use crate::scalar::Scalar;

const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint<T> {
    pub version: u32,
    pub model: GamesModel<T>,
}

fn err(path: &Path, msg: impl Into<String>) -> GamesError {
    GamesError::Checkpoint { path: path.display().to_string(), msg: msg.into() }
}

pub fn save_checkpoint<T: Scalar>(model: &GamesModel<T>, path: &Path) -> Result<(), GamesError> {
    let ck = Checkpoint { version: VERSION, model: model.clone() };
    let text = serde_json::to_string(&ck).map_err(|e| err(path, e.to_string()))?;
    std::fs::write(path, text).map_err(|e| err(path, e.to_string()))
}

/// Loads a checkpoint and checks that every parameter has the shape its
/// recorded dimensions imply.
pub fn load_checkpoint<T: Scalar>(path: &Path) -> Result<GamesModel<T>, GamesError> {
    let text = std::fs::read_to_string(path).map_err(|e| err(path, e.to_string()))?;
    let ck: Checkpoint<T> = serde_json::from_str(&text).map_err(|e| err(path, e.to_string()))?;
    if ck.version != VERSION {
        return Err(err(path, format!("unsupported version {}", ck.version)));
    }
    let m = ck.model;
    let d = m.dims;
    let (n, t, k) = (d.nodes(), d.channels(), m.config.k);
    m.config.validate(&d).map_err(|e| err(path, e.to_string()))?;
    let shape_ok = m.theta_enc.shape() == (t, k)
        && m.theta_dec.shape() == (k, t)
        && mlp_ok(&m.head_power, t, d.power_channels())
        && mlp_ok(&m.head_gas, t, d.t_g)
        && m.graph.node_count() == n
        && m.laplacian.matrix.shape() == (n, n);
    if !shape_ok {
        return Err(err(path, "parameter shapes do not match the recorded dimensions"));
    }
    let expected = renormalized_laplacian(&build_adjacency::<T>(&m.graph));
    if expected.matrix.dist2(&m.laplacian.matrix) > T::of(1e-20) {
        return Err(err(path, "stored operator does not match the stored graph"));
    }
    if !m.is_finite() {
        return Err(err(path, "non-finite parameters"));
    }
    Ok(m)
}

fn mlp_ok<T: Scalar>(mlp: &Mlp<T>, input: usize, output: usize) -> bool {
    if mlp.layers.is_empty() || mlp.input_width() != input || mlp.output_width() != output {
        return false;
    }
    mlp.layers.windows(2).all(|w| w[0].weight.cols() == w[1].weight.rows())
        && mlp.layers.iter().all(|l| l.bias.len() == l.weight.cols())
}
