//! Dense network with the KASAM layer topology.
//!
//! Layers, for `n` inputs, `N` hidden sums and `T` basis functions per stack:
//!
//! ```text
//! u   = S(W1 x + b1)           W1: nT × n,  b1: nT
//! z   = Z u                    Z:  N × nT
//! v   = S(W2 σ(z) + b2)        W2: NT × N,  b2: NT
//! f   = E·v + R·z + G·u        E: NT, R: N, G: nT
//! ```
//!
//! KASAM is the special case where `W1`, `b1`, `W2`, `b2` are the fixed
//! block-diagonal spline affine maps and `R = λ`. Here every one of them is
//! trainable.

use rand::Rng;

use super::kasam::{KasamConfig, KasamModel};
use super::params::{FlatParams, ParamLayout};
use super::{check_dim, sigmoid};
use crate::error::Result;
use crate::spline::{activation, activation_deriv};

#[derive(Clone, Debug, PartialEq)]
pub struct AnnModel {
    config: KasamConfig,
    params: FlatParams,
    units_in: usize,
    units_out: usize,
    w1: usize,
    b1: usize,
    z: usize,
    g: usize,
    w2: usize,
    b2: usize,
    e: usize,
    r: usize,
}

impl AnnModel {
    /// An all-zero network. See [`AnnModel::glorot`] for the training init.
    pub fn zeros(config: KasamConfig) -> Result<Self> {
        config.validate()?;
        let n = config.input_dim;
        let hidden = config.hidden;
        let units_in = n * config.densities.total();
        let units_out = hidden * config.densities.total();
        let mut layout = ParamLayout::new();
        let w1 = layout.push("layer1.weight", units_in * n, None);
        let b1 = layout.push("layer1.bias", units_in, None);
        let z = layout.push("interior.weight", hidden * units_in, None);
        let g = layout.push("direct.weight", units_in, None);
        let w2 = layout.push("layer2.weight", units_out * hidden, None);
        let b2 = layout.push("layer2.bias", units_out, None);
        let e = layout.push("exterior.weight", units_out, None);
        let r = layout.push("skip.weight", hidden, None);
        Ok(AnnModel {
            config,
            params: FlatParams::zeros(layout),
            units_in,
            units_out,
            w1,
            b1,
            z,
            g,
            w2,
            b2,
            e,
            r,
        })
    }

    /// Glorot-uniform weights for the three hidden weight matrices, zero
    /// biases, zero output weights.
    pub fn glorot(config: KasamConfig, rng: &mut impl Rng) -> Result<Self> {
        let mut model = Self::zeros(config)?;
        let n = model.config.input_dim;
        let hidden = model.config.hidden;
        let (ui, uo) = (model.units_in, model.units_out);
        let theta = model.params.as_mut_slice();
        let mut fill = |start: usize, len: usize, fan_in: usize, fan_out: usize| {
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for v in &mut theta[start..start + len] {
                *v = rng.random_range(-a..a);
            }
        };
        fill(model.w1, ui * n, n, ui);
        fill(model.z, hidden * ui, ui, hidden);
        fill(model.w2, uo * hidden, hidden, uo);
        Ok(model)
    }

    /// A network whose weights reproduce `kasam` exactly.
    pub fn from_kasam(kasam: &KasamModel) -> Result<Self> {
        let config = kasam.config().clone();
        let mut model = Self::zeros(config.clone())?;
        let n = config.input_dim;
        let hidden = config.hidden;
        let stack = kasam.stack();
        let width = stack.len();
        let src = kasam.params().as_slice();
        let (ui, uo) = (model.units_in, model.units_out);
        let (w1, b1, z, g, w2, b2, e, r) = (
            model.w1, model.b1, model.z, model.g, model.w2, model.b2, model.e, model.r,
        );
        let theta = model.params.as_mut_slice();
        for p in 0..n {
            for i in 0..width {
                let u = p * width + i;
                let (scale, shift) = stack.affine(i);
                theta[w1 + u * n + p] = scale;
                theta[b1 + u] = shift;
                theta[g + u] = src[kasam.direct_index(p, i)];
                for q in 0..hidden {
                    theta[z + q * ui + u] = src[kasam.interior_index(q, p, i)];
                }
            }
        }
        for q in 0..hidden {
            for i in 0..width {
                let v = q * width + i;
                let (scale, shift) = stack.affine(i);
                theta[w2 + v * hidden + q] = scale;
                theta[b2 + v] = shift;
                theta[e + v] = src[kasam.exterior_index(q, i)];
            }
            theta[r + q] = config.lambda;
        }
        debug_assert_eq!(uo, hidden * width);
        Ok(model)
    }

    pub fn config(&self) -> &KasamConfig {
        &self.config
    }

    pub fn input_dim(&self) -> usize {
        self.config.input_dim
    }

    pub fn params(&self) -> &FlatParams {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut FlatParams {
        &mut self.params
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        self.accumulate(x, None, |_| 0.0)
    }

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
        let n = self.config.input_dim;
        let hidden = self.config.hidden;
        let (ui, uo) = (self.units_in, self.units_out);
        let th = self.params.as_slice();

        let mut pre1 = vec![0.0; ui];
        let mut u = vec![0.0; ui];
        for k in 0..ui {
            let row = &th[self.w1 + k * n..self.w1 + (k + 1) * n];
            let s: f64 = row.iter().zip(x).map(|(w, xi)| w * xi).sum();
            pre1[k] = s + th[self.b1 + k];
            u[k] = activation(pre1[k]);
        }
        let mut z = vec![0.0; hidden];
        for (q, zq) in z.iter_mut().enumerate() {
            let row = &th[self.z + q * ui..self.z + (q + 1) * ui];
            *zq = row.iter().zip(&u).map(|(w, v)| w * v).sum();
        }
        let direct: f64 = th[self.g..self.g + ui].iter().zip(&u).map(|(w, v)| w * v).sum();
        let a: Vec<f64> = z.iter().map(|&zq| sigmoid(zq)).collect();
        let mut pre2 = vec![0.0; uo];
        let mut out = direct;
        for k in 0..uo {
            let row = &th[self.w2 + k * hidden..self.w2 + (k + 1) * hidden];
            let s: f64 = row.iter().zip(&a).map(|(w, aq)| w * aq).sum();
            pre2[k] = s + th[self.b2 + k];
            out += th[self.e + k] * activation(pre2[k]);
        }
        for q in 0..hidden {
            out += th[self.r + q] * z[q];
        }

        let Some(grad) = grad else {
            return Ok(out);
        };
        let c = upstream(out);
        if c == 0.0 {
            return Ok(out);
        }

        let mut da = vec![0.0; hidden];
        for k in 0..uo {
            let v = activation(pre2[k]);
            grad[self.e + k] += c * v;
            let dpre = c * th[self.e + k] * activation_deriv(pre2[k]);
            if dpre == 0.0 {
                continue;
            }
            grad[self.b2 + k] += dpre;
            for q in 0..hidden {
                grad[self.w2 + k * hidden + q] += dpre * a[q];
                da[q] += dpre * th[self.w2 + k * hidden + q];
            }
        }
        let mut dz = vec![0.0; hidden];
        for q in 0..hidden {
            grad[self.r + q] += c * z[q];
            dz[q] = da[q] * a[q] * (1.0 - a[q]) + c * th[self.r + q];
        }
        for k in 0..ui {
            grad[self.g + k] += c * u[k];
            let mut du = c * th[self.g + k];
            for q in 0..hidden {
                grad[self.z + q * ui + k] += dz[q] * u[k];
                du += dz[q] * th[self.z + q * ui + k];
            }
            let dpre = du * activation_deriv(pre1[k]);
            if dpre == 0.0 {
                continue;
            }
            grad[self.b1 + k] += dpre;
            for p in 0..n {
                grad[self.w1 + k * n + p] += dpre * x[p];
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_network_is_zero() {
        let m = AnnModel::zeros(KasamConfig::paper_default()).unwrap();
        assert_eq!(m.forward(&[0.3, 0.3]).unwrap(), 0.0);
    }

    #[test]
    fn glorot_output_is_zero_and_reproducible() {
        let cfg = KasamConfig::paper_default();
        let a = AnnModel::glorot(cfg.clone(), &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = AnnModel::glorot(cfg, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a.params().as_slice(), b.params().as_slice());
        assert_eq!(a.forward(&[0.1, 0.9]).unwrap(), 0.0);
        let bound = (6.0f64 / 122.0).sqrt();
        let w1 = a.params().block("layer1.weight").unwrap();
        assert!(w1.iter().all(|w| w.abs() < bound));
        assert!(w1.iter().any(|&w| w != 0.0));
        assert!(a.params().block("layer1.bias").unwrap().iter().all(|&b| b == 0.0));
    }

    #[test]
    fn outnumbers_kasam_parameters() {
        let cfg = KasamConfig::paper_default();
        let ann = AnnModel::zeros(cfg.clone()).unwrap();
        let kasam = KasamModel::new(cfg).unwrap();
        assert!(ann.params().len() > kasam.params().len());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let cfg = KasamConfig::paper_default();
        let mut m = AnnModel::from_kasam(&KasamModel::new(cfg).unwrap()).unwrap();
        let n = m.params().len();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for v in m.params_mut().as_mut_slice() {
            *v += rng.random_range(-0.3..0.3);
        }
        let x = [0.41, 0.17];
        let g = m.grad(&x).unwrap();
        let h = 1e-5;
        let (mut num, mut den) = (0.0f64, 0.0f64);
        for k in 0..n {
            let mut p = m.clone();
            p.params_mut().as_mut_slice()[k] += h;
            let mut q = m.clone();
            q.params_mut().as_mut_slice()[k] -= h;
            let fd = (p.forward(&x).unwrap() - q.forward(&x).unwrap()) / (2.0 * h);
            num += (fd - g[k]).powi(2);
            den += g[k].powi(2);
        }
        assert!(num.sqrt() / den.sqrt() < 1e-6, "{}", num.sqrt() / den.sqrt());
    }
}
