use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::Model;
use crate::training::DomainBox;

/// `R × R` samples over a square, row-major.
///
/// Row `r` sits at `x2 = lo + (hi - lo) r / (R - 1)` and column `c` at
/// `x1 = lo + (hi - lo) c / (R - 1)`, so row 0 is the bottom edge `x2 = lo`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    resolution: usize,
    values: Vec<f64>,
    domain: DomainBox,
}

impl Grid {
    pub fn new(resolution: usize, values: Vec<f64>, domain: DomainBox) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::InvalidConfig("grid resolution must be at least 2".into()));
        }
        if values.len() != resolution * resolution {
            return Err(Error::LengthMismatch {
                expected: resolution * resolution,
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("grid values must be finite".into()));
        }
        Ok(Grid {
            resolution,
            values,
            domain,
        })
    }

    /// Evaluates `f(x1, x2)` at every grid node.
    pub fn from_fn(
        resolution: usize,
        domain: DomainBox,
        f: impl Fn(&[f64]) -> Result<f64> + Sync,
    ) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::InvalidConfig("grid resolution must be at least 2".into()));
        }
        let step = (domain.hi - domain.lo) / (resolution - 1) as f64;
        let values = (0..resolution * resolution)
            .into_par_iter()
            .map(|k| {
                let (r, c) = (k / resolution, k % resolution);
                f(&[domain.lo + step * c as f64, domain.lo + step * r as f64])
            })
            .collect::<Result<Vec<_>>>()?;
        Grid::new(resolution, values, domain)
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn domain(&self) -> DomainBox {
        self.domain
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.resolution + col]
    }

    /// `(x1, x2)` of node `(row, col)`.
    pub fn coordinates(&self, row: usize, col: usize) -> (f64, f64) {
        let step = (self.domain.hi - self.domain.lo) / (self.resolution - 1) as f64;
        (
            self.domain.lo + step * col as f64,
            self.domain.lo + step * row as f64,
        )
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Mean over the nodes whose coordinates satisfy `keep`; `None` if none do.
    pub fn mean_where(&self, keep: impl Fn(f64, f64) -> bool) -> Option<f64> {
        let (mut sum, mut count) = (0.0, 0usize);
        for r in 0..self.resolution {
            for c in 0..self.resolution {
                let (x1, x2) = self.coordinates(r, c);
                if keep(x1, x2) {
                    sum += self.get(r, c);
                    count += 1;
                }
            }
        }
        (count > 0).then(|| sum / count as f64)
    }
}

/// The model's output sampled over the unit square.
pub fn sample_grid(model: &Model, resolution: usize) -> Result<Grid> {
    if model.input_dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: model.input_dim(),
        });
    }
    Grid::from_fn(resolution, DomainBox::UNIT, |x| model.forward(x))
}

/// `|f_after(x) - f_before(x)|` over the unit square.
pub fn interference_grid(before: &Model, after: &Model, resolution: usize) -> Result<Grid> {
    before.check_same_topology(after)?;
    if before.input_dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: before.input_dim(),
        });
    }
    Grid::from_fn(resolution, DomainBox::UNIT, |x| {
        Ok((after.forward(x)? - before.forward(x)?).abs())
    })
}
