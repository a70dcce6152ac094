//! SAM, KASAM and the dense baseline behind one [`Model`] type.
//!
//! All three expose a flat trainable parameter vector ([`FlatParams`]) and
//! an analytic gradient with respect to it, which is what the training loop
//! consumes.

mod ann;
mod kasam;
mod params;
mod sam;
mod stack;

pub use ann::AnnModel;
pub use kasam::{KasamConfig, KasamModel};
pub use params::{FlatParams, ParamBlock, ParamLayout};
pub use sam::{SamConfig, SamModel};
pub use stack::{Densities, SplineStack};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[inline]
pub(crate) fn check_dim(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: x.len(),
        });
    }
    Ok(())
}

/// Sparse gradient as `(flat index, value)` pairs sorted by index.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseGradient {
    entries: Vec<(usize, f64)>,
}

impl SparseGradient {
    pub(crate) fn from_sorted(entries: Vec<(usize, f64)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        SparseGradient { entries }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    /// Number of stored values that are not exactly zero.
    pub fn nnz(&self) -> usize {
        self.entries.iter().filter(|e| e.1 != 0.0).count()
    }

    pub fn l1_norm(&self) -> f64 {
        self.entries.iter().map(|e| e.1.abs()).sum()
    }

    /// Restriction to the flat index range `range`.
    pub fn restrict(&self, range: std::ops::Range<usize>) -> SparseGradient {
        SparseGradient {
            entries: self
                .entries
                .iter()
                .copied()
                .filter(|e| range.contains(&e.0))
                .collect(),
        }
    }

    pub fn dot(&self, other: &SparseGradient) -> f64 {
        let (mut a, mut b) = (self.entries.iter().peekable(), other.entries.iter().peekable());
        let mut acc = 0.0;
        while let (Some(&&(i, x)), Some(&&(j, y))) = (a.peek(), b.peek()) {
            match i.cmp(&j) {
                std::cmp::Ordering::Less => {
                    a.next();
                }
                std::cmp::Ordering::Greater => {
                    b.next();
                }
                std::cmp::Ordering::Equal => {
                    acc += x * y;
                    a.next();
                    b.next();
                }
            }
        }
        acc
    }

    pub fn to_dense(&self, len: usize) -> Vec<f64> {
        let mut out = vec![0.0; len];
        for &(i, v) in &self.entries {
            out[i] = v;
        }
        out
    }
}

/// Architecture of a [`Model`], enough to rebuild it around a parameter vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelConfig {
    Sam(SamConfig),
    Kasam(KasamConfig),
    Ann(KasamConfig),
}

impl ModelConfig {
    pub fn input_dim(&self) -> usize {
        match self {
            ModelConfig::Sam(c) => c.input_dim,
            ModelConfig::Kasam(c) | ModelConfig::Ann(c) => c.input_dim,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Sam(SamModel),
    Kasam(KasamModel),
    Ann(AnnModel),
}

/// SAM starts at zero and KASAM at zero apart from its optional interior
/// spread; the dense network gets Glorot weights.
pub fn init_model(config: &ModelConfig, rng: &mut impl Rng) -> Result<Model> {
    Ok(match config {
        ModelConfig::Sam(c) => Model::Sam(SamModel::new(c.clone())?),
        ModelConfig::Kasam(c) => {
            let mut m = KasamModel::new(c.clone())?;
            m.randomize_interior(rng);
            Model::Kasam(m)
        }
        ModelConfig::Ann(c) => Model::Ann(AnnModel::glorot(c.clone(), rng)?),
    })
}

impl Model {
    pub fn config(&self) -> ModelConfig {
        match self {
            Model::Sam(m) => ModelConfig::Sam(m.config().clone()),
            Model::Kasam(m) => ModelConfig::Kasam(m.config().clone()),
            Model::Ann(m) => ModelConfig::Ann(m.config().clone()),
        }
    }

    /// Rebuilds a model from its architecture and a parameter vector whose
    /// layout must match the architecture exactly.
    pub fn from_parts(config: ModelConfig, params: FlatParams) -> Result<Model> {
        let mut model = match config {
            ModelConfig::Sam(c) => Model::Sam(SamModel::new(c)?),
            ModelConfig::Kasam(c) => Model::Kasam(KasamModel::new(c)?),
            ModelConfig::Ann(c) => Model::Ann(AnnModel::zeros(c)?),
        };
        if model.params().layout() != params.layout() {
            return Err(Error::TopologyMismatch(
                "parameter layout does not match the model architecture".into(),
            ));
        }
        *model.params_mut() = params;
        Ok(model)
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Model::Sam(_) => "sam",
            Model::Kasam(_) => "kasam",
            Model::Ann(_) => "ann",
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Model::Sam(m) => m.input_dim(),
            Model::Kasam(m) => m.input_dim(),
            Model::Ann(m) => m.input_dim(),
        }
    }

    pub fn params(&self) -> &FlatParams {
        match self {
            Model::Sam(m) => m.params(),
            Model::Kasam(m) => m.params(),
            Model::Ann(m) => m.params(),
        }
    }

    pub fn params_mut(&mut self) -> &mut FlatParams {
        match self {
            Model::Sam(m) => m.params_mut(),
            Model::Kasam(m) => m.params_mut(),
            Model::Ann(m) => m.params_mut(),
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        match self {
            Model::Sam(m) => m.forward(x),
            Model::Kasam(m) => m.forward(x),
            Model::Ann(m) => m.forward(x),
        }
    }

    /// Dense gradient of the output with respect to every parameter.
    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Model::Sam(m) => Ok(m.grad(x)?.to_dense(m.params().len())),
            Model::Kasam(m) => m.grad(x),
            Model::Ann(m) => m.grad(x),
        }
    }

    /// Adds `upstream(f(x)) * ∇f(x)` into `grad` and returns `f(x)`.
    pub fn accumulate_grad(
        &self,
        x: &[f64],
        grad: &mut [f64],
        upstream: impl FnOnce(f64) -> f64,
    ) -> Result<f64> {
        if grad.len() != self.params().len() {
            return Err(Error::LengthMismatch {
                expected: self.params().len(),
                found: grad.len(),
            });
        }
        match self {
            Model::Sam(m) => m.accumulate_grad(x, grad, upstream),
            Model::Kasam(m) => m.accumulate_grad(x, grad, upstream),
            Model::Ann(m) => m.accumulate_grad(x, grad, upstream),
        }
    }

    /// Errors unless `other` has the same architecture.
    pub fn check_same_topology(&self, other: &Model) -> Result<()> {
        if self.config() != other.config() {
            return Err(Error::TopologyMismatch(format!(
                "{} vs {}",
                self.kind_name(),
                other.kind_name()
            )));
        }
        Ok(())
    }
}
