use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spline::SplineBasis;

/// A validated, non-empty list of basis densities used side by side.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Densities(Vec<usize>);

impl Densities {
    pub fn new(densities: Vec<usize>) -> Result<Self> {
        if densities.is_empty() {
            return Err(Error::InvalidConfig("at least one density is required".into()));
        }
        if let Some(&bad) = densities.iter().find(|&&k| k < crate::spline::MIN_DENSITY) {
            return Err(Error::InvalidDensity(bad));
        }
        Ok(Densities(densities))
    }

    pub fn single(density: usize) -> Result<Self> {
        Self::new(vec![density])
    }

    /// The multi-resolution set 4, 8, 16, 32 (60 basis functions).
    pub fn multi_resolution() -> Self {
        Densities(vec![4, 8, 16, 32])
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }
}

impl TryFrom<Vec<usize>> for Densities {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Densities::new(v)
    }
}

impl From<Densities> for Vec<usize> {
    fn from(d: Densities) -> Self {
        d.0
    }
}

/// Several uniform bases over one scalar input, concatenated.
///
/// Index `offset(b) + i` addresses basis function `i` of block `b`.
#[derive(Clone, Debug, PartialEq)]
pub struct SplineStack {
    bases: Vec<SplineBasis>,
    offsets: Vec<usize>,
    total: usize,
}

impl SplineStack {
    pub fn new(densities: &Densities) -> Self {
        let mut offsets = Vec::with_capacity(densities.0.len());
        let mut total = 0;
        let bases = densities
            .0
            .iter()
            .map(|&k| {
                offsets.push(total);
                total += k;
                SplineBasis::new(k).expect("validated density")
            })
            .collect();
        SplineStack {
            bases,
            offsets,
            total,
        }
    }

    pub fn bases(&self) -> &[SplineBasis] {
        &self.bases
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// Number of basis functions across all blocks.
    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// `(stack index, S_i(x))` for every active basis function.
    #[inline]
    pub fn activations(&self, x: f64, out: &mut Vec<(usize, f64)>) {
        out.clear();
        for (basis, &offset) in self.bases.iter().zip(&self.offsets) {
            for (i, v) in basis.eval(x).iter() {
                out.push((offset + i, v));
            }
        }
    }

    /// `(stack index, S_i(x), dS_i/dx)` for every active basis function.
    #[inline]
    pub fn activations_with_deriv(&self, x: f64, out: &mut Vec<(usize, f64, f64)>) {
        out.clear();
        for (basis, &offset) in self.bases.iter().zip(&self.offsets) {
            let (values, derivs) = basis.eval_with_deriv(x);
            for ((i, v), d) in values.iter().zip(derivs) {
                out.push((offset + i, v, d));
            }
        }
    }

    /// Scale and shift of the unit that implements stack index `index`.
    pub fn affine(&self, index: usize) -> (f64, f64) {
        let block = self.offsets.partition_point(|&o| o <= index) - 1;
        let basis = &self.bases[block];
        (basis.scale(), basis.shift(index - self.offsets[block]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multi_resolution_has_sixty_functions() {
        let d = Densities::multi_resolution();
        assert_eq!(d.total(), 60);
        let stack = SplineStack::new(&d);
        assert_eq!(stack.offsets(), &[0, 4, 12, 28]);
    }

    #[test]
    fn rejects_bad_densities() {
        assert!(Densities::new(vec![]).is_err());
        assert!(matches!(
            Densities::new(vec![8, 3]),
            Err(Error::InvalidDensity(3))
        ));
    }

    #[test]
    fn affine_matches_block_layout() {
        let stack = SplineStack::new(&Densities::multi_resolution());
        assert_eq!(stack.affine(0), (1.0, 3.0));
        assert_eq!(stack.affine(4), (5.0, 3.0));
        assert_eq!(stack.affine(11), (5.0, -4.0));
        assert_eq!(stack.affine(59), (29.0, 3.0 - 31.0));
    }

    #[test]
    fn each_block_is_a_partition_of_unity() {
        let stack = SplineStack::new(&Densities::multi_resolution());
        let mut acts = Vec::new();
        for step in 0..=1000 {
            let x = step as f64 / 1000.0;
            stack.activations(x, &mut acts);
            let sum: f64 = acts.iter().map(|a| a.1).sum();
            assert!((sum - 4.0).abs() < 1e-12);
            assert!(acts.len() <= 16);
        }
    }
}
