//! Kolmogorov-Arnold Spline Additive Model.
//!
//! ```text
//! z_q  = Σ_p h_{q,p}(x_p)                      q = 1..N
//! f(x) = Σ_q s_q(σ(z_q)) + λ Σ_q z_q + Σ_j g_j(x_j)
//! ```
//!
//! Every `h_{q,p}`, `s_q` and `g_j` is a multi-resolution spline stack. The
//! sigmoid keeps the exterior inputs inside `(0, 1)`, and the constant
//! residual `λ Σ z_q` keeps a gradient path open to the interior splines
//! when the exterior splines are flat.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::params::{FlatParams, ParamLayout};
use super::sam::push_sam_blocks;
use super::stack::{Densities, SplineStack};
use super::{check_dim, sigmoid};
use crate::error::{Error, Result};

/// Shared topology of [`KasamModel`] and its dense twin
/// [`AnnModel`](super::AnnModel).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KasamConfig {
    pub input_dim: usize,
    /// Number of exterior functions `N`.
    pub hidden: usize,
    pub densities: Densities,
    /// Residual weight `λ`.
    pub lambda: f64,
    /// Half-width of the uniform draw for interior coefficients in
    /// [`init_model`](super::init_model). At 0 the hidden units get identical
    /// updates forever and act as one. Ignored by the dense model.
    #[serde(default)]
    pub interior_init: f64,
}

impl KasamConfig {
    /// Two inputs, three exterior functions, densities 4/8/16/32 and `λ = 1`.
    pub fn paper_default() -> Self {
        KasamConfig {
            input_dim: 2,
            hidden: 3,
            densities: Densities::multi_resolution(),
            lambda: 1.0,
            interior_init: 0.0,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden == 0 {
            return Err(Error::InvalidConfig(
                "input_dim and hidden must be positive".into(),
            ));
        }
        if !self.lambda.is_finite() {
            return Err(Error::InvalidConfig("lambda must be finite".into()));
        }
        if !(self.interior_init >= 0.0 && self.interior_init.is_finite()) {
            return Err(Error::InvalidConfig("interior_init must be finite and >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KasamModel {
    config: KasamConfig,
    stack: SplineStack,
    params: FlatParams,
    interior: usize,
    exterior: usize,
    direct: usize,
}

impl KasamModel {
    /// A KASAM with every trainable coefficient zero.
    pub fn new(config: KasamConfig) -> Result<Self> {
        config.validate()?;
        let stack = SplineStack::new(&config.densities);
        let mut layout = ParamLayout::new();
        let interior = layout.len();
        for q in 0..config.hidden {
            push_sam_blocks(
                &mut layout,
                &format!("interior.q{q}"),
                config.input_dim,
                &config.densities,
            );
        }
        let exterior = layout.len();
        for q in 0..config.hidden {
            for &k in config.densities.as_slice() {
                layout.push(format!("exterior.q{q}.k{k}"), k, Some(k));
            }
        }
        let direct = push_sam_blocks(&mut layout, "direct", config.input_dim, &config.densities);
        Ok(KasamModel {
            config,
            stack,
            params: FlatParams::zeros(layout),
            interior,
            exterior,
            direct,
        })
    }

    /// Draws interior coefficients uniformly from `±config.interior_init`;
    /// a no-op at 0.
    pub fn randomize_interior(&mut self, rng: &mut impl Rng) {
        let a = self.config.interior_init;
        if a > 0.0 {
            let range = self.interior_range();
            for v in &mut self.params.as_mut_slice()[range] {
                *v = rng.random_range(-a..=a);
            }
        }
    }

    pub fn config(&self) -> &KasamConfig {
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

    /// Flat index of interior coefficient `i` of `h_{q,p}`.
    pub fn interior_index(&self, q: usize, p: usize, i: usize) -> usize {
        self.interior + (q * self.config.input_dim + p) * self.stack.len() + i
    }

    /// Flat index of coefficient `i` of the exterior spline `s_q`.
    pub fn exterior_index(&self, q: usize, i: usize) -> usize {
        self.exterior + q * self.stack.len() + i
    }

    /// Flat index of coefficient `i` of the direct spline `g_j`.
    pub fn direct_index(&self, j: usize, i: usize) -> usize {
        self.direct + j * self.stack.len() + i
    }

    /// Range of the interior coefficients in the flat vector.
    pub fn interior_range(&self) -> std::ops::Range<usize> {
        self.interior..self.exterior
    }

    pub fn exterior_range(&self) -> std::ops::Range<usize> {
        self.exterior..self.direct
    }

    pub fn direct_range(&self) -> std::ops::Range<usize> {
        self.direct..self.params.len()
    }

    /// Interior sums `z_q`.
    pub fn hidden_sums(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.input_dim(), x)?;
        let mut acts = Vec::new();
        let theta = self.params.as_slice();
        let mut z = vec![0.0; self.config.hidden];
        for (p, &xp) in x.iter().enumerate() {
            self.stack.activations(xp, &mut acts);
            for (q, zq) in z.iter_mut().enumerate() {
                let base = self.interior_index(q, p, 0);
                *zq += acts.iter().map(|&(i, s)| theta[base + i] * s).sum::<f64>();
            }
        }
        Ok(z)
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        self.accumulate(x, None, |_| 0.0)
    }

    /// Dense gradient with respect to every trainable coefficient.
    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut g = vec![0.0; self.params.len()];
        self.accumulate(x, Some(&mut g), |_| 1.0)?;
        Ok(g)
    }

    /// Adds `upstream(f(x)) * ∇f(x)` into `grad` and returns `f(x)`.
    pub fn accumulate_grad(
        &self,
        x: &[f64],
        grad: &mut [f64],
        upstream: impl FnOnce(f64) -> f64,
    ) -> Result<f64> {
        self.accumulate(x, Some(grad), upstream)
    }

    fn accumulate(
        &self,
        x: &[f64],
        grad: Option<&mut [f64]>,
        upstream: impl FnOnce(f64) -> f64,
    ) -> Result<f64> {
        check_dim(self.input_dim(), x)?;
        let theta = self.params.as_slice();
        let hidden = self.config.hidden;
        let lambda = self.config.lambda;

        let mut inputs: Vec<Vec<(usize, f64)>> = vec![Vec::new(); x.len()];
        let mut z = vec![0.0; hidden];
        let mut direct = 0.0;
        for (p, &xp) in x.iter().enumerate() {
            let acts = &mut inputs[p];
            self.stack.activations(xp, acts);
            for (q, zq) in z.iter_mut().enumerate() {
                let base = self.interior_index(q, p, 0);
                *zq += acts.iter().map(|&(i, s)| theta[base + i] * s).sum::<f64>();
            }
            let base = self.direct_index(p, 0);
            direct += acts.iter().map(|&(i, s)| theta[base + i] * s).sum::<f64>();
        }

        let mut outer: Vec<Vec<(usize, f64, f64)>> = vec![Vec::new(); hidden];
        let mut outer_slope = vec![0.0; hidden];
        let mut out = direct;
        for q in 0..hidden {
            let a = sigmoid(z[q]);
            self.stack.activations_with_deriv(a, &mut outer[q]);
            let base = self.exterior_index(q, 0);
            let (mut s, mut ds) = (0.0, 0.0);
            for &(i, v, d) in &outer[q] {
                s += theta[base + i] * v;
                ds += theta[base + i] * d;
            }
            // d s_q(σ(z)) / dz
            outer_slope[q] = ds * a * (1.0 - a);
            out += s + lambda * z[q];
        }

        let Some(grad) = grad else {
            return Ok(out);
        };
        let c = upstream(out);
        if c == 0.0 {
            return Ok(out);
        }
        for q in 0..hidden {
            let base = self.exterior_index(q, 0);
            for &(i, v, _) in &outer[q] {
                grad[base + i] += c * v;
            }
            let through = c * (outer_slope[q] + lambda);
            for (p, acts) in inputs.iter().enumerate() {
                let base = self.interior_index(q, p, 0);
                for &(i, s) in acts {
                    grad[base + i] += through * s;
                }
            }
        }
        for (p, acts) in inputs.iter().enumerate() {
            let base = self.direct_index(p, 0);
            for &(i, s) in acts {
                grad[base + i] += c * s;
            }
        }
        Ok(out)
    }
}
