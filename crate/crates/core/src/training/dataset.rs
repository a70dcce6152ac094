use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The hypercube `[lo, hi]^n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainBox {
    pub lo: f64,
    pub hi: f64,
}

impl DomainBox {
    pub const UNIT: DomainBox = DomainBox { lo: 0.0, hi: 1.0 };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::InvalidConfig(format!("invalid domain [{lo}, {hi}]")));
        }
        Ok(DomainBox { lo, hi })
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().all(|&v| v >= self.lo && v <= self.hi)
    }

    /// Smallest box containing both.
    pub fn union(&self, other: &DomainBox) -> DomainBox {
        DomainBox {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    /// `n` points drawn uniformly from the box, flattened row-major.
    pub fn sample(&self, dim: usize, n: usize, rng: &mut impl Rng) -> Vec<f64> {
        (0..dim * n)
            .map(|_| self.lo + (self.hi - self.lo) * rng.random::<f64>())
            .collect()
    }
}

/// Input points with scalar targets.
///
/// Inputs are stored row-major: point `i` is `inputs[i * dim..(i + 1) * dim]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    dim: usize,
    inputs: Vec<f64>,
    targets: Vec<f64>,
    domain: DomainBox,
    /// Free-form origin tag such as `A/task2/train`.
    pub provenance: String,
}

impl Dataset {
    pub fn new(
        dim: usize,
        inputs: Vec<f64>,
        targets: Vec<f64>,
        domain: DomainBox,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidConfig("dataset dimension must be positive".into()));
        }
        if inputs.len() != dim * targets.len() {
            return Err(Error::LengthMismatch {
                expected: dim * targets.len(),
                found: inputs.len(),
            });
        }
        if let Some(bad) = inputs.chunks(dim).find(|x| !domain.contains(x)) {
            return Err(Error::OutOfDomain {
                point: bad.to_vec(),
                lo: domain.lo,
                hi: domain.hi,
            });
        }
        Ok(Dataset {
            dim,
            inputs,
            targets,
            domain,
            provenance: provenance.into(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn domain(&self) -> DomainBox {
        self.domain
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.dim..(i + 1) * self.dim]
    }

    pub fn target(&self, i: usize) -> f64 {
        self.targets[i]
    }

    pub fn inputs(&self) -> &[f64] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.inputs.chunks(self.dim)
    }
}
