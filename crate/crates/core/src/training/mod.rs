//! Mean-absolute-error training with Adam, plus pseudo-rehearsal helpers.

mod adam;
mod dataset;
mod rehearsal;

pub use adam::{adam_step, AdamState};
pub use dataset::{Dataset, DomainBox};
pub use rehearsal::{pseudo_rehearsal_mix, rehearsal_set, relabel, snapshot_labels};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::Model;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub shuffle_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.001,
            batch_size: 100,
            epochs: 1,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            shuffle_seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self, dataset_len: usize) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig("learning rate must be positive".into()));
        }
        if self.batch_size == 0 || self.batch_size > dataset_len {
            return Err(Error::InvalidConfig(format!(
                "batch size {} must lie in 1..={dataset_len}",
                self.batch_size
            )));
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return Err(Error::InvalidConfig("Adam betas must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Per-epoch metrics; index 0 holds the values before any update.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub train_mae: Vec<f64>,
    pub val_mae: Vec<f64>,
}

impl TrainHistory {
    /// Number of epochs trained (entries minus the epoch-0 row).
    pub fn epochs(&self) -> usize {
        self.train_mae.len().saturating_sub(1)
    }

    pub fn final_train(&self) -> Option<f64> {
        self.train_mae.last().copied()
    }

    pub fn final_val(&self) -> Option<f64> {
        self.val_mae.last().copied()
    }
}

pub fn mae(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.len() != targets.len() {
        return Err(Error::LengthMismatch {
            expected: targets.len(),
            found: predictions.len(),
        });
    }
    if targets.is_empty() {
        return Err(Error::EmptyInput);
    }
    let total: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t).abs())
        .sum();
    Ok(total / targets.len() as f64)
}

/// Sub-gradient of `|r|`, taking 0 at `r = 0`.
#[inline]
pub fn abs_subgradient(residual: f64) -> f64 {
    if residual > 0.0 {
        1.0
    } else if residual < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub fn predict(model: &Model, data: &Dataset) -> Result<Vec<f64>> {
    if data.dim() != model.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim(),
            found: data.dim(),
        });
    }
    data.inputs()
        .par_chunks(data.dim())
        .map(|x| model.forward(x))
        .collect()
}

pub fn evaluate(model: &Model, data: &Dataset) -> Result<f64> {
    mae(&predict(model, data)?, data.targets())
}

/// Mini-batch Adam on the MAE sub-gradient.
///
/// The sample order is reshuffled each epoch from `cfg.shuffle_seed`. The
/// optimiser state starts fresh on every call.
pub fn train(
    model: &mut Model,
    train_set: &Dataset,
    val_set: &Dataset,
    cfg: &TrainConfig,
) -> Result<TrainHistory> {
    cfg.validate(train_set.len())?;
    for ds in [train_set, val_set] {
        if ds.dim() != model.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: model.input_dim(),
                found: ds.dim(),
            });
        }
    }

    let mut history = TrainHistory::default();
    let record = |model: &Model, history: &mut TrainHistory| -> Result<()> {
        history.train_mae.push(evaluate(model, train_set)?);
        history.val_mae.push(evaluate(model, val_set)?);
        Ok(())
    };
    record(model, &mut history)?;

    let n_params = model.params().len();
    let mut state = AdamState::new(n_params);
    let mut grad = vec![0.0; n_params];
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.shuffle_seed);

    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            grad.fill(0.0);
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let target = train_set.target(i);
                model.accumulate_grad(train_set.point(i), &mut grad, |f| {
                    scale * abs_subgradient(f - target)
                })?;
            }
            adam_step(model.params_mut().as_mut_slice(), &grad, &mut state, cfg)?;
        }
        record(model, &mut history)?;
    }
    Ok(history)
}
