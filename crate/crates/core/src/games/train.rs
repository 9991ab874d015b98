//! Full-batch Adam training with early stopping on validation loss.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Batch, GamesConfig, GamesError, GamesModel};
use crate::dataset::{DaySignal, MultiResolutionDataset};
use crate::scalar::Scalar;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPSILON: f64 = 1e-8;

/// Partition of day positions into training and validation sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

impl Split {
    /// Seeded shuffle of `0..days`, holding out `round(fraction · days)`
    /// (at least one, at most `days - 1`) for validation. Both parts are
    /// returned sorted.
    pub fn seeded(days: usize, fraction: f64, seed: u64) -> Result<Self, GamesError> {
        if days < 2 {
            return Err(GamesError::BadSplit);
        }
        let mut order: Vec<usize> = (0..days).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n_val = ((fraction * days as f64).round() as usize).clamp(1, days - 1);
        let mut validation = order[..n_val].to_vec();
        let mut train = order[n_val..].to_vec();
        validation.sort_unstable();
        train.sort_unstable();
        Ok(Self { train, validation })
    }

    fn check(&self, days: usize) -> Result<(), GamesError> {
        if self.train.is_empty() || self.validation.is_empty() {
            return Err(GamesError::BadSplit);
        }
        let mut seen = vec![false; days];
        for &p in self.train.iter().chain(&self.validation) {
            if p >= days || seen[p] {
                return Err(GamesError::BadSplit);
            }
            seen[p] = true;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

/// Per-epoch losses; epoch 0 holds the losses of the initial parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub entries: Vec<LogEntry>,
    /// Epoch whose parameters were returned.
    pub best_epoch: usize,
    /// True when training ended through the patience rule.
    pub stopped_early: bool,
}

impl TrainingLog {
    pub fn best(&self) -> &LogEntry {
        &self.entries[self.best_epoch]
    }

    pub fn best_val_loss(&self) -> f64 {
        self.best().val_loss
    }

    /// CSV with columns `epoch,train_loss,val_loss`, preceded by a `#`
    /// comment line describing the loss.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "# losses are the alpha-weighted reconstruction loss (not plain MSE), normalized units\n",
        );
        out.push_str("epoch,train_loss,val_loss\n");
        for e in &self.entries {
            out.push_str(&format!("{},{:e},{:e}\n", e.epoch, e.train_loss, e.val_loss));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_csv().as_bytes())
    }
}

struct Adam<T> {
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
    step: i32,
}

impl<T: Scalar> Adam<T> {
    fn new(model: &GamesModel<T>) -> Self {
        let shapes: Vec<usize> = model.tensors().iter().map(|s| s.len()).collect();
        Self {
            m: shapes.iter().map(|&n| vec![T::zero(); n]).collect(),
            v: shapes.iter().map(|&n| vec![T::zero(); n]).collect(),
            step: 0,
        }
    }

    fn update(&mut self, model: &mut GamesModel<T>, grads: &[&[T]], lr: f64) {
        self.step += 1;
        let (b1, b2) = (T::of(BETA1), T::of(BETA2));
        let c1 = T::one() - b1.powi(self.step);
        let c2 = T::one() - b2.powi(self.step);
        let (lr, eps) = (T::of(lr), T::of(EPSILON));
        for (((p, g), m), v) in model.tensors_mut().into_iter().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            for (((p, &g), m), v) in p.iter_mut().zip(g.iter()).zip(m.iter_mut()).zip(v.iter_mut()) {
                *m = b1 * *m + (T::one() - b1) * g;
                *v = b2 * *v + (T::one() - b2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *p -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}

/// Trains a freshly initialized model on `split.train`, early-stopping on
/// the loss over `split.validation`, and returns the parameters with the
/// lowest validation loss.
pub fn train<T: Scalar>(
    dataset: &MultiResolutionDataset<T>,
    config: &GamesConfig,
    split: &Split,
) -> Result<(GamesModel<T>, TrainingLog), GamesError> {
    split.check(dataset.len())?;
    let data = dataset.normalize();
    let mut model = GamesModel::for_dataset(&data, config)?;
    let pick = |idx: &[usize]| -> Vec<&DaySignal<T>> { idx.iter().map(|&p| &data.days[p]).collect() };
    let train_batch = Batch::new(&model, &pick(&split.train))?;
    let val_batch = Batch::new(&model, &pick(&split.validation))?;

    let mut adam = Adam::new(&model);
    let mut entries = vec![LogEntry {
        epoch: 0,
        train_loss: model.batch_loss(&train_batch)?.as_f64(),
        val_loss: model.batch_loss(&val_batch)?.as_f64(),
    }];
    let mut best = (0usize, entries[0].val_loss, model.clone());
    let mut stale = 0;
    let mut stopped_early = false;

    for epoch in 1..=config.max_epochs {
        let (_, grads) = model.loss_and_gradients(&train_batch)?;
        adam.update(&mut model, &grads.tensors(), config.learning_rate);
        let entry = LogEntry {
            epoch,
            train_loss: model.batch_loss(&train_batch)?.as_f64(),
            val_loss: model.batch_loss(&val_batch)?.as_f64(),
        };
        entries.push(entry);
        if entry.val_loss < best.1 {
            best = (epoch, entry.val_loss, model.clone());
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                stopped_early = true;
                break;
            }
        }
    }
    log::info!(
        "training finished after {} epochs, best epoch {} (val {:.4e})",
        entries.len() - 1,
        best.0,
        best.1
    );
    Ok((
        best.2,
        TrainingLog {
            entries,
            best_epoch: best.0,
            stopped_early,
        },
    ))
}
