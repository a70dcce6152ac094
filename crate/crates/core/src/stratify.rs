//! A zero-initialised single-variable spline fitted to a few samples of
//! `sin(2πx)`. Coefficients whose support holds no sample never receive a
//! gradient and stay exactly zero.

use std::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{Densities, Model, SamConfig, SamModel};
use crate::spline::Spline1D;
use crate::training::{evaluate, train, Dataset, DomainBox, TrainConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StratifyConfig {
    pub density: usize,
    pub points: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for StratifyConfig {
    fn default() -> Self {
        StratifyConfig {
            density: 32,
            points: 10,
            epochs: 2_000,
            learning_rate: 0.01,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct StratifyFit {
    pub spline: Spline1D,
    pub samples: Vec<(f64, f64)>,
    pub train_mae: f64,
}

impl StratifyFit {
    /// Indices of coefficients whose open support contains no sample.
    pub fn untouched(&self) -> Vec<usize> {
        let basis = self.spline.basis();
        (0..basis.density())
            .filter(|&i| {
                self.samples
                    .iter()
                    .all(|&(x, _)| !basis.active_window(x).contains(i) || basis.basis_value(i, x) == 0.0)
            })
            .collect()
    }

    /// `(x, f(x))` at `n` evenly spaced points of `[0, 1]`.
    pub fn curve(&self, n: usize) -> Vec<(f64, f64)> {
        let last = n.saturating_sub(1).max(1) as f64;
        (0..n)
            .map(|k| {
                let x = k as f64 / last;
                (x, self.spline.eval(x))
            })
            .collect()
    }
}

/// Trains with full-batch Adam on the MAE.
pub fn fit_sine(cfg: &StratifyConfig) -> Result<StratifyFit> {
    if cfg.points == 0 {
        return Err(Error::InvalidConfig("points must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let inputs = DomainBox::UNIT.sample(1, cfg.points, &mut rng);
    let targets: Vec<f64> = inputs.iter().map(|x| (TAU * x).sin()).collect();
    let data = Dataset::new(1, inputs.clone(), targets.clone(), DomainBox::UNIT, "sine")?;
    let mut model = Model::Sam(SamModel::new(SamConfig {
        input_dim: 1,
        densities: Densities::single(cfg.density)?,
    })?);
    let tc = TrainConfig {
        learning_rate: cfg.learning_rate,
        batch_size: cfg.points,
        epochs: cfg.epochs,
        shuffle_seed: cfg.seed,
        ..TrainConfig::default()
    };
    train(&mut model, &data, &data, &tc)?;
    let train_mae = evaluate(&model, &data)?;
    let spline = match &model {
        Model::Sam(m) => m.spline(0, 0)?,
        _ => unreachable!("built as SAM"),
    };
    Ok(StratifyFit {
        spline,
        samples: inputs.into_iter().zip(targets).collect(),
        train_mae,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn untouched_coefficients_stay_zero() {
        let fit = fit_sine(&StratifyConfig::default()).unwrap();
        let untouched = fit.untouched();
        assert!(!untouched.is_empty());
        for &i in &untouched {
            assert_eq!(fit.spline.coefficients()[i], 0.0);
        }
        let basis = *fit.spline.basis();
        for (x, y) in fit.curve(1001) {
            if basis.active_window(x).indices().all(|i| untouched.contains(&i)) {
                assert_eq!(y, 0.0, "x = {x}");
            }
        }
    }

    #[test]
    fn coarse_basis_generalises() {
        let fit = fit_sine(&StratifyConfig {
            density: 4,
            ..StratifyConfig::default()
        })
        .unwrap();
        assert!(fit.untouched().is_empty());
    }
}
