//! Spline Additive Model: one multi-resolution spline per input coordinate,
//! summed.

use serde::{Deserialize, Serialize};

use super::params::{FlatParams, ParamLayout};
use super::stack::{Densities, SplineStack};
use super::{check_dim, SparseGradient};
use crate::error::{Error, Result};
use crate::spline::Spline1D;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamConfig {
    pub input_dim: usize,
    pub densities: Densities,
}

impl SamConfig {
    /// Two inputs, one density-32 block per input.
    pub fn paper_default() -> Self {
        SamConfig {
            input_dim: 2,
            densities: Densities::single(32).expect("valid density"),
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::InvalidConfig("input_dim must be positive".into()));
        }
        Ok(())
    }
}

/// `f(x) = Σ_j f_j(x_j)` where each `f_j` is a sum of spline blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct SamModel {
    config: SamConfig,
    stack: SplineStack,
    params: FlatParams,
}

pub(crate) fn sam_layout(prefix: &str, input_dim: usize, densities: &Densities) -> ParamLayout {
    let mut layout = ParamLayout::new();
    push_sam_blocks(&mut layout, prefix, input_dim, densities);
    layout
}

/// Appends `input_dim` stacks of coefficient blocks named `{prefix}.x{j}.k{K}`.
pub(crate) fn push_sam_blocks(
    layout: &mut ParamLayout,
    prefix: &str,
    input_dim: usize,
    densities: &Densities,
) -> usize {
    let start = layout.len();
    for j in 0..input_dim {
        for &k in densities.as_slice() {
            layout.push(format!("{prefix}.x{j}.k{k}"), k, Some(k));
        }
    }
    start
}

impl SamModel {
    /// A zero-initialised SAM.
    pub fn new(config: SamConfig) -> Result<Self> {
        config.validate()?;
        let stack = SplineStack::new(&config.densities);
        let params = FlatParams::zeros(sam_layout("sam", config.input_dim, &config.densities));
        Ok(SamModel {
            config,
            stack,
            params,
        })
    }

    pub fn config(&self) -> &SamConfig {
        &self.config
    }

    pub fn input_dim(&self) -> usize {
        self.config.input_dim
    }

    pub fn stack(&self) -> &SplineStack {
        &self.stack
    }

    pub fn params(&self) -> &FlatParams {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut FlatParams {
        &mut self.params
    }

    /// Copy of block `block` of the spline on coordinate `var`.
    pub fn spline(&self, var: usize, block: usize) -> Result<Spline1D> {
        let k = *self
            .config
            .densities
            .as_slice()
            .get(block)
            .ok_or_else(|| Error::InvalidConfig(format!("no density block {block}")))?;
        let coeffs = self
            .params
            .block(&format!("sam.x{var}.k{k}"))
            .ok_or_else(|| Error::InvalidConfig(format!("no input variable {var}")))?;
        Spline1D::new(self.stack.bases()[block], coeffs.to_vec())
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.input_dim(), x)?;
        let theta = self.params.as_slice();
        let width = self.stack.len();
        let mut acts = Vec::with_capacity(4 * self.stack.bases().len());
        let mut out = 0.0;
        for (j, &xj) in x.iter().enumerate() {
            self.stack.activations(xj, &mut acts);
            let coeffs = &theta[j * width..(j + 1) * width];
            out += acts.iter().map(|&(i, s)| coeffs[i] * s).sum::<f64>();
        }
        Ok(out)
    }

    /// Sparse coefficient gradient: the active basis values of every input.
    pub fn grad(&self, x: &[f64]) -> Result<SparseGradient> {
        check_dim(self.input_dim(), x)?;
        let width = self.stack.len();
        let mut acts = Vec::new();
        let mut entries = Vec::with_capacity(4 * self.stack.bases().len() * x.len());
        for (j, &xj) in x.iter().enumerate() {
            self.stack.activations(xj, &mut acts);
            entries.extend(acts.iter().map(|&(i, s)| (j * width + i, s)));
        }
        Ok(SparseGradient::from_sorted(entries))
    }

    /// Adds `upstream(f(x)) * ∇f(x)` into `grad` and returns `f(x)`.
    pub fn accumulate_grad(
        &self,
        x: &[f64],
        grad: &mut [f64],
        upstream: impl FnOnce(f64) -> f64,
    ) -> Result<f64> {
        check_dim(self.input_dim(), x)?;
        let theta = self.params.as_slice();
        let width = self.stack.len();
        let mut acts: Vec<Vec<(usize, f64)>> = vec![Vec::new(); x.len()];
        let mut out = 0.0;
        for (j, &xj) in x.iter().enumerate() {
            self.stack.activations(xj, &mut acts[j]);
            let coeffs = &theta[j * width..(j + 1) * width];
            out += acts[j].iter().map(|&(i, s)| coeffs[i] * s).sum::<f64>();
        }
        let c = upstream(out);
        if c != 0.0 {
            for (j, a) in acts.iter().enumerate() {
                for &(i, s) in a {
                    grad[j * width + i] += c * s;
                }
            }
        }
        Ok(out)
    }
}
