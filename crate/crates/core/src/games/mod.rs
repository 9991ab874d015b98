//! The GAMES graph autoencoder.
//!
//! Each day is assembled into a block matrix `X` (`n × t`, power nodes on
//! top, gas nodes below). The encoder is one linear graph convolution
//! `Z = L̃ X Θ_enc`, the decoder another, `H = L̃ Z Θ_dec`. The rows of `H`
//! are split by system: power rows pass through `head_power`, gas rows
//! through `head_gas`, both stacks of tanh-activated dense layers.
//!
//! Days are processed as one stacked batch so every dense product is a
//! single matrix multiplication.

mod checkpoint;
mod train;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{DatasetError, DaySignal, Dims, MultiResolutionDataset, Normalization};
use crate::graph::{build_adjacency, renormalized_laplacian, Graph, GraphError, RenormalizedLaplacian};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use train::{train, LogEntry, Split, TrainingLog};

#[derive(Debug, Error)]
pub enum GamesError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("numerical overflow in forward pass")]
    Overflow,
    #[error("train and validation sets must be nonempty and disjoint")]
    BadSplit,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("checkpoint {path}: {msg}")]
    Checkpoint { path: String, msg: String },
}

/// Architecture and training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GamesConfig {
    /// Bottleneck width.
    pub k: usize,
    pub alpha_g: f64,
    pub alpha_w: f64,
    pub alpha_s: f64,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
    /// Hidden layer widths of each head; `None` means one layer of width `t`.
    pub hidden_sizes: Option<Vec<usize>>,
    pub rng_seed: u64,
    /// Share of days held out for validation by [`Split::seeded`].
    pub validation_fraction: f64,
}

impl Default for GamesConfig {
    fn default() -> Self {
        Self {
            k: 3,
            alpha_g: 2.0,
            alpha_w: 0.5,
            alpha_s: 0.5,
            learning_rate: 0.001,
            max_epochs: 2000,
            patience: 50,
            hidden_sizes: None,
            rng_seed: 0,
            validation_fraction: 0.2,
        }
    }
}

impl GamesConfig {
    pub fn validate(&self, dims: &Dims) -> Result<(), GamesError> {
        let t = dims.channels();
        if self.k == 0 || self.k >= t {
            return Err(GamesError::Config(format!("bottleneck k = {} must satisfy 0 < k < t = {t}", self.k)));
        }
        if [self.alpha_g, self.alpha_w, self.alpha_s].iter().any(|a| !(*a >= 0.0 && a.is_finite())) {
            return Err(GamesError::Config("loss weights must be nonnegative".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(GamesError::Config("learning rate must be positive".into()));
        }
        if self.max_epochs == 0 || self.patience == 0 {
            return Err(GamesError::Config("max_epochs and patience must be positive".into()));
        }
        if self.hidden_sizes.as_ref().is_some_and(|h| h.contains(&0)) {
            return Err(GamesError::Config("hidden layer widths must be positive".into()));
        }
        Ok(())
    }

    fn hidden(&self, t: usize) -> Vec<usize> {
        self.hidden_sizes.clone().unwrap_or_else(|| vec![t])
    }
}

/// Dense layer `y = tanh(x W + b)` applied row-wise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense<T> {
    /// `fan_in × fan_out`.
    pub weight: Matrix<T>,
    pub bias: Vec<T>,
}

/// Stack of tanh dense layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp<T> {
    pub layers: Vec<Dense<T>>,
}

fn uniform_matrix<T: Scalar>(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix<T> {
    let s = 1.0 / (rows as f64).sqrt();
    Matrix::from_fn(rows, cols, |_, _| T::of(rng.gen_range(-s..=s)))
}

impl<T: Scalar> Mlp<T> {
    fn new(rng: &mut ChaCha8Rng, input: usize, hidden: &[usize], output: usize) -> Self {
        let mut widths = vec![input];
        widths.extend_from_slice(hidden);
        widths.push(output);
        let layers = widths
            .windows(2)
            .map(|w| Dense {
                weight: uniform_matrix(rng, w[0], w[1]),
                bias: vec![T::zero(); w[1]],
            })
            .collect();
        Self { layers }
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].weight.rows()
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().map_or(0, |l| l.weight.cols())
    }

    /// Activations of every layer, input first.
    fn forward(&self, x: &Matrix<T>) -> Vec<Matrix<T>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.clone());
        for layer in &self.layers {
            let mut pre = acts.last().expect("input").matmul(&layer.weight);
            for i in 0..pre.rows() {
                for (v, &b) in pre.row_mut(i).iter_mut().zip(&layer.bias) {
                    *v = (*v + b).tanh();
                }
            }
            acts.push(pre);
        }
        acts
    }

    /// Backpropagates `d_out` (gradient w.r.t. the final activation) and
    /// returns layer gradients plus the gradient w.r.t. the input.
    fn backward(&self, acts: &[Matrix<T>], d_out: Matrix<T>) -> (Vec<Dense<T>>, Matrix<T>) {
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut delta = d_out;
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let out = &acts[l + 1];
            let d_pre = delta.zip_map(out, |g, a| g * (T::one() - a * a));
            let d_w = acts[l].t_matmul(&d_pre);
            let mut d_b = vec![T::zero(); d_pre.cols()];
            for i in 0..d_pre.rows() {
                for (s, &v) in d_b.iter_mut().zip(d_pre.row(i)) {
                    *s += v;
                }
            }
            delta = d_pre.matmul_t(&layer.weight);
            grads.push(Dense { weight: d_w, bias: d_b });
        }
        grads.reverse();
        (grads, delta)
    }

    fn zeros_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| Dense {
                    weight: Matrix::zeros(l.weight.rows(), l.weight.cols()),
                    bias: vec![T::zero(); l.bias.len()],
                })
                .collect(),
        }
    }
}

/// Trainable parameters and the fixed propagation operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GamesModel<T> {
    pub dims: Dims,
    pub config: GamesConfig,
    /// `t × k`.
    pub theta_enc: Matrix<T>,
    /// `k × t`.
    pub theta_dec: Matrix<T>,
    pub head_power: Mlp<T>,
    pub head_gas: Mlp<T>,
    pub graph: Graph,
    pub laplacian: RenormalizedLaplacian<T>,
    /// Scaling applied to raw signals before encoding.
    pub normalization: Option<Normalization>,
}

/// Gradient record with the same layout as the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub theta_enc: Matrix<T>,
    pub theta_dec: Matrix<T>,
    pub head_power: Mlp<T>,
    pub head_gas: Mlp<T>,
}

impl<T: Scalar> Gradients<T> {
    /// Every parameter tensor in a fixed order.
    pub fn tensors(&self) -> Vec<&[T]> {
        let mut out = vec![self.theta_enc.as_slice(), self.theta_dec.as_slice()];
        for l in self.head_power.layers.iter().chain(&self.head_gas.layers) {
            out.push(l.weight.as_slice());
            out.push(&l.bias);
        }
        out
    }
}

impl<T: Scalar> GamesModel<T> {
    /// Seeded initialization on the joint graph of `dims` nodes.
    pub fn new(dims: Dims, graph: Graph, config: &GamesConfig) -> Result<Self, GamesError> {
        config.validate(&dims)?;
        if graph.node_count() != dims.nodes() {
            return Err(GamesError::Shape(format!(
                "graph has {} nodes, data has {}",
                graph.node_count(),
                dims.nodes()
            )));
        }
        let t = dims.channels();
        let hidden = config.hidden(t);
        let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        let theta_enc = uniform_matrix(&mut rng, t, config.k);
        let theta_dec = uniform_matrix(&mut rng, config.k, t);
        let head_power = Mlp::new(&mut rng, t, &hidden, dims.power_channels());
        let head_gas = Mlp::new(&mut rng, t, &hidden, dims.t_g);
        let laplacian = renormalized_laplacian(&build_adjacency(&graph));
        Ok(Self {
            dims,
            config: config.clone(),
            theta_enc,
            theta_dec,
            head_power,
            head_gas,
            graph,
            laplacian,
            normalization: None,
        })
    }

    /// Model for a dataset's joint graph and shapes.
    pub fn for_dataset(dataset: &MultiResolutionDataset<T>, config: &GamesConfig) -> Result<Self, GamesError> {
        let mut m = Self::new(dataset.dims(), dataset.joint_graph()?, config)?;
        m.normalization = dataset.normalization.clone();
        Ok(m)
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|s| s.len()).sum()
    }

    fn tensors(&self) -> Vec<&[T]> {
        let mut out = vec![self.theta_enc.as_slice(), self.theta_dec.as_slice()];
        for l in self.head_power.layers.iter().chain(&self.head_gas.layers) {
            out.push(l.weight.as_slice());
            out.push(&l.bias);
        }
        out
    }

    /// Mutable parameter tensors in the order of [`Gradients::tensors`].
    pub fn tensors_mut(&mut self) -> Vec<&mut [T]> {
        let mut out = vec![self.theta_enc.as_mut_slice(), self.theta_dec.as_mut_slice()];
        for l in self.head_power.layers.iter_mut().chain(self.head_gas.layers.iter_mut()) {
            out.push(l.weight.as_mut_slice());
            out.push(&mut l.bias);
        }
        out
    }

    fn is_finite(&self) -> bool {
        self.tensors().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }

    /// `L̃ · M` applied independently to each `n`-row block of `m`.
    fn propagate(&self, m: &Matrix<T>) -> Matrix<T> {
        let n = self.dims.nodes();
        let l = &self.laplacian.matrix;
        let blocks = m.rows() / n;
        let mut out = Matrix::zeros(m.rows(), m.cols());
        for b in 0..blocks {
            let part = l.matmul(&m.row_block(b * n, (b + 1) * n));
            out.set_block(b * n, 0, &part);
        }
        out
    }

    /// `Z = L̃ X Θ_enc`.
    pub fn encode(&self, x: &Matrix<T>) -> Result<Matrix<T>, GamesError> {
        let (n, t) = (self.dims.nodes(), self.dims.channels());
        if x.shape() != (n, t) {
            return Err(GamesError::Shape(format!("expected {n}×{t} input, got {:?}", x.shape())));
        }
        Ok(self.laplacian.matrix.matmul(x).matmul(&self.theta_enc))
    }

    /// Reconstructions `(X̂_E, X̂_W, X̂_S, X̂_G)` from an embedding.
    pub fn decode(&self, z: &Matrix<T>) -> Result<DaySignal<T>, GamesError> {
        let (n, k) = (self.dims.nodes(), self.config.k);
        if z.shape() != (n, k) {
            return Err(GamesError::Shape(format!("expected {n}×{k} embedding, got {:?}", z.shape())));
        }
        let h = self.laplacian.matrix.matmul(z).matmul(&self.theta_dec);
        let d = self.dims;
        let p = self.head_power.forward(&h.row_block(0, d.n_e)).pop().expect("output");
        let g = self.head_gas.forward(&h.row_block(d.n_e, n)).pop().expect("output");
        Ok(DaySignal {
            day_index: 0,
            electricity: p.col_block(0, d.t_e),
            wind_cf: p.col_block(d.t_e, d.t_e + d.t_w),
            solar_cf: p.col_block(d.t_e + d.t_w, d.power_channels()),
            gas: g,
        })
    }

    /// Normalizes a dataset with this model's scaling record (or its own
    /// min/max when the model has none).
    pub fn prepare(&self, dataset: &MultiResolutionDataset<T>) -> MultiResolutionDataset<T> {
        match (&dataset.normalization, &self.normalization) {
            (None, Some(norm)) => dataset.normalize_with(norm),
            _ => dataset.normalize(),
        }
    }
}

/// Block matrix `[X_E X_W X_S 0; 0 0 0 X_G]` of one day.
pub fn assemble_block<T: Scalar>(day: &DaySignal<T>, dims: &Dims) -> Result<Matrix<T>, GamesError> {
    if day.dims() != *dims {
        return Err(GamesError::Shape(format!(
            "day {} has shape {:?}, expected {:?}",
            day.day_index,
            day.dims(),
            dims
        )));
    }
    let mut x = Matrix::zeros(dims.nodes(), dims.channels());
    x.set_block(0, 0, &day.electricity);
    x.set_block(0, dims.t_e, &day.wind_cf);
    x.set_block(0, dims.t_e + dims.t_w, &day.solar_cf);
    x.set_block(dims.n_e, dims.power_channels(), &day.gas);
    Ok(x)
}

/// Stacked, pre-propagated inputs and targets of a set of days.
#[derive(Debug, Clone)]
pub struct Batch<T> {
    days: usize,
    /// `L̃ X` of every day stacked (`days·n × t`).
    lx: Matrix<T>,
    /// `[X_E X_W X_S]` of every day stacked (`days·n_E × t_E+t_W+t_S`).
    power_target: Matrix<T>,
    /// `X_G` of every day stacked (`days·n_G × t_G`).
    gas_target: Matrix<T>,
}

impl<T: Scalar> Batch<T> {
    pub fn new(model: &GamesModel<T>, days: &[&DaySignal<T>]) -> Result<Self, GamesError> {
        let d = model.dims;
        let n = d.nodes();
        let mut lx = Matrix::zeros(days.len() * n, d.channels());
        let mut power_target = Matrix::zeros(days.len() * d.n_e, d.power_channels());
        let mut gas_target = Matrix::zeros(days.len() * d.n_g, d.t_g);
        for (b, day) in days.iter().enumerate() {
            let x = assemble_block(day, &d)?;
            lx.set_block(b * n, 0, &model.laplacian.matrix.matmul(&x));
            power_target.set_block(b * d.n_e, 0, &x.row_block(0, d.n_e).col_block(0, d.power_channels()));
            gas_target.set_block(b * d.n_g, 0, &day.gas);
        }
        Ok(Self {
            days: days.len(),
            lx,
            power_target,
            gas_target,
        })
    }

    pub fn len(&self) -> usize {
        self.days
    }

    pub fn is_empty(&self) -> bool {
        self.days == 0
    }
}

/// Loss-weight multiplier of every power-head output column and of the gas
/// head, each already divided by its `d · n · t` normaliser.
fn loss_scales<T: Scalar>(model: &GamesModel<T>, days: usize) -> (Vec<T>, T) {
    let d = model.dims;
    let c = &model.config;
    let per = |alpha: f64, nodes: usize, width: usize| alpha / (days * nodes * width) as f64;
    let mut cols = Vec::with_capacity(d.power_channels());
    cols.extend(std::iter::repeat_n(T::of(per(1.0, d.n_e, d.t_e)), d.t_e));
    cols.extend(std::iter::repeat_n(T::of(per(c.alpha_w, d.n_e, d.t_w)), d.t_w));
    cols.extend(std::iter::repeat_n(T::of(per(c.alpha_s, d.n_e, d.t_s)), d.t_s));
    (cols, T::of(per(c.alpha_g, d.n_g, d.t_g)))
}

struct Forward<T> {
    z: Matrix<T>,
    lz: Matrix<T>,
    power_acts: Vec<Matrix<T>>,
    gas_acts: Vec<Matrix<T>>,
}

impl<T: Scalar> GamesModel<T> {
    fn forward_batch(&self, batch: &Batch<T>) -> Result<Forward<T>, GamesError> {
        let d = self.dims;
        let n = d.nodes();
        let z = batch.lx.matmul(&self.theta_enc);
        let lz = self.propagate(&z);
        let h = lz.matmul(&self.theta_dec);
        let mut hp = Matrix::zeros(batch.days * d.n_e, h.cols());
        let mut hg = Matrix::zeros(batch.days * d.n_g, h.cols());
        for b in 0..batch.days {
            hp.set_block(b * d.n_e, 0, &h.row_block(b * n, b * n + d.n_e));
            hg.set_block(b * d.n_g, 0, &h.row_block(b * n + d.n_e, (b + 1) * n));
        }
        if !h.is_finite() {
            return Err(GamesError::Overflow);
        }
        let power_acts = self.head_power.forward(&hp);
        let gas_acts = self.head_gas.forward(&hg);
        if !power_acts.last().expect("output").is_finite() || !gas_acts.last().expect("output").is_finite() {
            return Err(GamesError::Overflow);
        }
        Ok(Forward { z, lz, power_acts, gas_acts })
    }

    /// Weighted reconstruction loss of a batch (its own day count is `d`).
    pub fn batch_loss(&self, batch: &Batch<T>) -> Result<T, GamesError> {
        let f = self.forward_batch(batch)?;
        Ok(self.loss_from(batch, &f))
    }

    fn loss_from(&self, batch: &Batch<T>, f: &Forward<T>) -> T {
        let (col_scale, gas_scale) = loss_scales(self, batch.days);
        let yp = f.power_acts.last().expect("output");
        let yg = f.gas_acts.last().expect("output");
        let mut total = T::zero();
        for i in 0..yp.rows() {
            for ((&a, &b), &s) in yp.row(i).iter().zip(batch.power_target.row(i)).zip(&col_scale) {
                total += s * (a - b) * (a - b);
            }
        }
        total + gas_scale * yg.dist2(&batch.gas_target)
    }

    /// Loss and its exact gradient with respect to every parameter.
    pub fn loss_and_gradients(&self, batch: &Batch<T>) -> Result<(T, Gradients<T>), GamesError> {
        let f = self.forward_batch(batch)?;
        let loss = self.loss_from(batch, &f);
        let d = self.dims;
        let n = d.nodes();
        let two = T::of(2.0);
        let (col_scale, gas_scale) = loss_scales(self, batch.days);

        let yp = f.power_acts.last().expect("output");
        let mut dyp = yp.zip_map(&batch.power_target, |a, b| two * (a - b));
        for i in 0..dyp.rows() {
            for (v, &s) in dyp.row_mut(i).iter_mut().zip(&col_scale) {
                *v *= s;
            }
        }
        let dyg = f
            .gas_acts
            .last()
            .expect("output")
            .zip_map(&batch.gas_target, |a, b| two * gas_scale * (a - b));

        let (g_power, dhp) = self.head_power.backward(&f.power_acts, dyp);
        let (g_gas, dhg) = self.head_gas.backward(&f.gas_acts, dyg);
        let mut dh = Matrix::zeros(batch.days * n, d.channels());
        for b in 0..batch.days {
            dh.set_block(b * n, 0, &dhp.row_block(b * d.n_e, (b + 1) * d.n_e));
            dh.set_block(b * n + d.n_e, 0, &dhg.row_block(b * d.n_g, (b + 1) * d.n_g));
        }
        let theta_dec = f.lz.t_matmul(&dh);
        // L̃ is symmetric, so back-propagation through it is another L̃ product.
        let dz = self.propagate(&dh.matmul_t(&self.theta_dec));
        let theta_enc = batch.lx.t_matmul(&dz);
        debug_assert_eq!(f.z.shape(), dz.shape());
        Ok((
            loss,
            Gradients {
                theta_enc,
                theta_dec,
                head_power: g_power.into_iter().collect::<Vec<_>>().into(),
                head_gas: g_gas.into_iter().collect::<Vec<_>>().into(),
            },
        ))
    }

    pub fn zero_gradients(&self) -> Gradients<T> {
        Gradients {
            theta_enc: Matrix::zeros(self.theta_enc.rows(), self.theta_enc.cols()),
            theta_dec: Matrix::zeros(self.theta_dec.rows(), self.theta_dec.cols()),
            head_power: self.head_power.zeros_like(),
            head_gas: self.head_gas.zeros_like(),
        }
    }
}

impl<T> From<Vec<Dense<T>>> for Mlp<T> {
    fn from(layers: Vec<Dense<T>>) -> Self {
        Self { layers }
    }
}

/// Weighted reconstruction loss of a single day (`d = 1`).
pub fn loss<T: Scalar>(model: &GamesModel<T>, day: &DaySignal<T>) -> Result<T, GamesError> {
    model.batch_loss(&Batch::new(model, &[day])?)
}

/// Gradient of the batch loss of `days` with respect to every parameter.
pub fn gradients<T: Scalar>(model: &GamesModel<T>, days: &[DaySignal<T>]) -> Result<Gradients<T>, GamesError> {
    if days.is_empty() {
        return Err(GamesError::Shape("gradient batch is empty".into()));
    }
    if !model.is_finite() {
        return Err(GamesError::Overflow);
    }
    let refs: Vec<&DaySignal<T>> = days.iter().collect();
    Ok(model.loss_and_gradients(&Batch::new(model, &refs)?)?.1)
}

/// Per-day embeddings `Z⁽ⁱ⁾`, aligned with the dataset's days.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSet<T> {
    pub day_indices: Vec<usize>,
    pub embeddings: Vec<Matrix<T>>,
}

impl<T> EmbeddingSet<T> {
    pub fn len(&self) -> usize {
        self.embeddings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.embeddings.is_empty()
    }
}

/// Encodes every day of `dataset` (normalized with the model's record).
pub fn embed_all<T: Scalar>(
    model: &GamesModel<T>,
    dataset: &MultiResolutionDataset<T>,
) -> Result<EmbeddingSet<T>, GamesError> {
    let data = model.prepare(dataset);
    let mut embeddings = Vec::with_capacity(data.len());
    for day in &data.days {
        embeddings.push(model.encode(&assemble_block(day, &model.dims)?)?);
    }
    Ok(EmbeddingSet {
        day_indices: data.days.iter().map(|d| d.day_index).collect(),
        embeddings,
    })
}
