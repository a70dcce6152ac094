//! Uniform cubic B-splines on the unit interval.
//!
//! Every basis function is the same bump [`activation`] evaluated at an
//! affine transform of the input, `S_i(x) = S(w x + b_i)`. With `K` basis
//! functions the layout used here is `w = K - 3` and `b_i = 3 - i` for the
//! zero-based index `i`, which places the knots at multiples of
//! `h = 1 / (K - 3)` and makes the basis a partition of unity on `[0, 1]`.
//! The two boundary functions at either end stick out of the unit interval.
//!
//! Any input activates at most four basis functions, so evaluation and the
//! coefficient gradient only touch an [`ActiveWindow`] of the coefficient
//! vector regardless of `K`.
//!
//! ```
//! use kasam::spline::{SplineBasis, Spline1D};
//!
//! let basis = SplineBasis::new(8).unwrap();
//! let window = basis.active_window(0.5);
//! assert_eq!(window.indices().collect::<Vec<_>>(), vec![2, 3, 4, 5]);
//!
//! let ones = Spline1D::new(basis, vec![1.0; 8]).unwrap();
//! assert!((ones.eval(0.3) - 1.0).abs() < 1e-12);
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest density a uniform cubic basis can have on the unit interval.
pub const MIN_DENSITY: usize = 4;

/// Maximum of [`activation`], attained at `x = 2`.
pub const ACTIVATION_PEAK: f64 = 2.0 / 3.0;

/// The cubic B-spline bump supported on `(0, 4)`.
#[inline]
pub fn activation(x: f64) -> f64 {
    if (0.0..1.0).contains(&x) {
        x * x * x / 6.0
    } else if (1.0..2.0).contains(&x) {
        let t = x - 1.0;
        (-3.0 * t * t * t + 3.0 * t * t + 3.0 * t + 1.0) / 6.0
    } else if (2.0..3.0).contains(&x) {
        let t = x - 2.0;
        (3.0 * t * t * t - 6.0 * t * t + 4.0) / 6.0
    } else if (3.0..4.0).contains(&x) {
        let t = 4.0 - x;
        t * t * t / 6.0
    } else {
        0.0
    }
}

/// Derivative of [`activation`]; continuous everywhere.
#[inline]
pub fn activation_deriv(x: f64) -> f64 {
    if (0.0..1.0).contains(&x) {
        0.5 * x * x
    } else if (1.0..2.0).contains(&x) {
        let t = x - 1.0;
        -1.5 * t * t + t + 0.5
    } else if (2.0..3.0).contains(&x) {
        let t = x - 2.0;
        1.5 * t * t - 2.0 * t
    } else if (3.0..4.0).contains(&x) {
        let t = 4.0 - x;
        -0.5 * t * t
    } else {
        0.0
    }
}

/// Half-open range of basis indices that may be non-zero at a point.
///
/// Indices outside `[start, start + len)` evaluate to exactly zero. At a knot
/// the window holds three indices.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ActiveWindow {
    pub start: usize,
    pub len: usize,
}

impl ActiveWindow {
    pub fn indices(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices().contains(&index)
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

/// A fixed uniform layout of `K` cubic basis functions on `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct SplineBasis {
    density: usize,
}

impl TryFrom<usize> for SplineBasis {
    type Error = Error;

    fn try_from(density: usize) -> Result<Self> {
        SplineBasis::new(density)
    }
}

impl From<SplineBasis> for usize {
    fn from(basis: SplineBasis) -> usize {
        basis.density
    }
}

impl SplineBasis {
    pub fn new(density: usize) -> Result<Self> {
        if density < MIN_DENSITY {
            return Err(Error::InvalidDensity(density));
        }
        Ok(SplineBasis { density })
    }

    /// Number of basis functions `K`.
    pub fn density(&self) -> usize {
        self.density
    }

    /// The common input scale `w = K - 3`.
    pub fn scale(&self) -> f64 {
        (self.density - 3) as f64
    }

    /// Shift `b_i = 3 - i` of the zero-based basis function `i`.
    pub fn shift(&self, index: usize) -> f64 {
        3.0 - index as f64
    }

    pub fn scales(&self) -> Vec<f64> {
        vec![self.scale(); self.density]
    }

    pub fn shifts(&self) -> Vec<f64> {
        (0..self.density).map(|i| self.shift(i)).collect()
    }

    /// Distance between adjacent knots, `1 / (K - 3)`.
    pub fn knot_spacing(&self) -> f64 {
        1.0 / self.scale()
    }

    /// Width of every basis function's support, `4 / (K - 3)`.
    pub fn support_width(&self) -> f64 {
        4.0 * self.knot_spacing()
    }

    /// Half-open support `[lo, hi)` of basis function `index` in input space.
    pub fn support(&self, index: usize) -> (f64, f64) {
        let w = self.scale();
        let b = self.shift(index);
        (-b / w, (4.0 - b) / w)
    }

    /// Argument passed to the bump for basis function `index`.
    #[inline]
    pub fn argument(&self, index: usize, x: f64) -> f64 {
        self.scale() * x + self.shift(index)
    }

    /// Evaluates basis function `index` at `x` without windowing.
    #[inline]
    pub fn basis_value(&self, index: usize, x: f64) -> f64 {
        activation(self.argument(index, x))
    }

    pub fn active_window(&self, x: f64) -> ActiveWindow {
        if x.is_nan() {
            return ActiveWindow::default();
        }
        // index i is active iff (K-3)x - 1 < i < (K-3)x + 3
        let u = self.scale() * x;
        let k = self.density as f64;
        let lo = u.floor().clamp(0.0, k) as usize;
        let hi = (u.ceil() + 3.0).clamp(0.0, k) as usize;
        ActiveWindow {
            start: lo,
            len: hi.saturating_sub(lo),
        }
    }

    /// Values of the active basis functions at `x`.
    #[inline]
    pub fn eval(&self, x: f64) -> BasisValues {
        let window = self.active_window(x);
        let mut values = [0.0; 4];
        for (slot, i) in window.indices().enumerate() {
            values[slot] = self.basis_value(i, x);
        }
        BasisValues { window, values }
    }

    /// Active basis values together with their derivatives in `x`.
    #[inline]
    pub fn eval_with_deriv(&self, x: f64) -> (BasisValues, [f64; 4]) {
        let window = self.active_window(x);
        let w = self.scale();
        let mut values = [0.0; 4];
        let mut derivs = [0.0; 4];
        for (slot, i) in window.indices().enumerate() {
            let arg = self.argument(i, x);
            values[slot] = activation(arg);
            derivs[slot] = w * activation_deriv(arg);
        }
        (BasisValues { window, values }, derivs)
    }
}

/// Sparse vector of basis values over an [`ActiveWindow`].
///
/// This doubles as the coefficient gradient of a [`Spline1D`], since the
/// spline is linear in its coefficients.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BasisValues {
    pub window: ActiveWindow,
    pub values: [f64; 4],
}

impl BasisValues {
    /// `(index, value)` pairs for the window, zeros included.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.window
            .indices()
            .zip(self.values.iter().copied())
    }

    pub fn nnz(&self) -> usize {
        self.iter().filter(|&(_, v)| v != 0.0).count()
    }

    pub fn l1_norm(&self) -> f64 {
        self.iter().map(|(_, v)| v.abs()).sum()
    }

    pub fn dot(&self, other: &BasisValues) -> f64 {
        let mut acc = 0.0;
        for (i, a) in self.iter() {
            if other.window.contains(i) {
                acc += a * other.values[i - other.window.start];
            }
        }
        acc
    }

    /// Expands to a dense vector of length `density`.
    pub fn to_dense(&self, density: usize) -> Vec<f64> {
        let mut out = vec![0.0; density];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }
}

/// A single-variable function `f(x) = Σ θ_i S_i(x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spline1D {
    basis: SplineBasis,
    coefficients: Vec<f64>,
}

impl Spline1D {
    pub fn new(basis: SplineBasis, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != basis.density() {
            return Err(Error::LengthMismatch {
                expected: basis.density(),
                found: coefficients.len(),
            });
        }
        Ok(Spline1D {
            basis,
            coefficients,
        })
    }

    pub fn zeros(basis: SplineBasis) -> Self {
        Spline1D {
            basis,
            coefficients: vec![0.0; basis.density()],
        }
    }

    pub fn basis(&self) -> &SplineBasis {
        &self.basis
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut [f64] {
        &mut self.coefficients
    }

    /// Evaluates the spline, summing only the active window.
    pub fn eval(&self, x: f64) -> f64 {
        self.basis
            .eval(x)
            .iter()
            .map(|(i, s)| self.coefficients[i] * s)
            .sum()
    }

    /// Derivative of the spline with respect to its input.
    pub fn deriv(&self, x: f64) -> f64 {
        let (values, derivs) = self.basis.eval_with_deriv(x);
        values
            .window
            .indices()
            .zip(derivs)
            .map(|(i, d)| self.coefficients[i] * d)
            .sum()
    }

    /// Gradient with respect to the coefficients: the active basis values.
    pub fn grad(&self, x: f64) -> BasisValues {
        self.basis.eval(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Cox-de Boor recursion on the integer knots 0..=4, independent of the
    /// closed-form pieces in `activation`.
    fn cox_de_boor(x: f64) -> f64 {
        fn b(i: usize, p: usize, x: f64) -> f64 {
            let ti = i as f64;
            if p == 0 {
                return if ti <= x && x < ti + 1.0 { 1.0 } else { 0.0 };
            }
            let pf = p as f64;
            (x - ti) / pf * b(i, p - 1, x) + (ti + pf + 1.0 - x) / pf * b(i + 1, p - 1, x)
        }
        b(0, 3, x)
    }

    #[test]
    fn activation_examples() {
        assert_eq!(activation(0.0), 0.0);
        assert_eq!(activation(4.0), 0.0);
        assert!((activation(2.0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((activation(1.0) - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(activation(-0.5), 0.0);
        assert_eq!(activation(7.0), 0.0);
    }

    #[test]
    fn activation_matches_recursive_definition() {
        for k in 0..=4000 {
            let x = -0.5 + 5.0 * k as f64 / 4000.0;
            assert!((activation(x) - cox_de_boor(x)).abs() < 1e-14, "x = {x}");
        }
        // 23/48 from the recursion; S is symmetric about 2.
        assert!((activation(2.5) - cox_de_boor(2.5)).abs() < 1e-15);
        assert!((activation(2.5) - 23.0 / 48.0).abs() < 1e-15);
    }

    #[test]
    fn activation_deriv_examples() {
        assert_eq!(activation_deriv(0.0), 0.0);
        assert_eq!(activation_deriv(2.0), 0.0);
        assert!((activation_deriv(1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn activation_deriv_matches_central_differences() {
        let h = 1e-6;
        for k in 0..=800 {
            let x = -0.3 + 4.6 * k as f64 / 800.0 + 1e-3;
            let fd = (activation(x + h) - activation(x - h)) / (2.0 * h);
            assert!((activation_deriv(x) - fd).abs() < 1e-8, "x = {x}");
        }
    }

    #[test]
    fn continuous_at_knots() {
        let eps = 1e-14;
        for knot in [0.0, 1.0, 2.0, 3.0, 4.0] {
            assert!((activation(knot - eps) - activation(knot)).abs() < 1e-12);
            assert!((activation_deriv(knot - eps) - activation_deriv(knot)).abs() < 1e-12);
        }
    }

    #[test]
    fn activation_range() {
        for k in 0..=10_000 {
            let x = -1.0 + 6.0 * k as f64 / 10_000.0;
            let v = activation(x);
            assert!((0.0..=ACTIVATION_PEAK + 1e-15).contains(&v));
        }
    }

    #[test]
    fn rejects_small_density() {
        assert!(matches!(SplineBasis::new(3), Err(Error::InvalidDensity(3))));
        assert!(SplineBasis::new(0).is_err());
        assert!(SplineBasis::new(4).is_ok());
    }

    #[test]
    fn layout_density_eight() {
        let basis = SplineBasis::new(8).unwrap();
        assert_eq!(basis.scales(), vec![5.0; 8]);
        assert_eq!(
            basis.shifts(),
            vec![3.0, 2.0, 1.0, 0.0, -1.0, -2.0, -3.0, -4.0]
        );
        let (lo, hi) = basis.support(0);
        assert!((lo + 0.6).abs() < 1e-15 && (hi - 0.2).abs() < 1e-15);
        let (lo, hi) = basis.support(7);
        assert!((lo - 0.8).abs() < 1e-15 && (hi - 1.6).abs() < 1e-15);
    }

    #[test]
    fn layout_minimal_and_dense() {
        let basis = SplineBasis::new(4).unwrap();
        assert_eq!(basis.scale(), 1.0);
        for i in 0..4 {
            let (lo, hi) = basis.support(i);
            assert_eq!(hi - lo, 4.0);
            assert!(lo <= 0.0 && hi >= 1.0);
        }
        let basis = SplineBasis::new(32).unwrap();
        assert!((basis.knot_spacing() - 1.0 / 29.0).abs() < 1e-15);
    }

    #[test]
    fn window_examples() {
        let basis = SplineBasis::new(8).unwrap();
        assert_eq!(basis.active_window(0.5).indices(), 2..6);
        // one-based {1, 2, 3}
        assert_eq!(basis.active_window(0.0).indices(), 0..3);
        assert_eq!(basis.active_window(1.0).indices(), 5..8);
        assert!(basis.active_window(f64::NAN).is_empty());
        assert!(basis.active_window(10.0).is_empty());
        assert!(basis.active_window(-10.0).is_empty());
    }

    #[test]
    fn window_covers_every_nonzero_basis() {
        for k in [4, 5, 8, 16, 32, 61] {
            let basis = SplineBasis::new(k).unwrap();
            for step in 0..=2000 {
                let x = -0.7 + 2.4 * step as f64 / 2000.0;
                let window = basis.active_window(x);
                assert!(window.len <= 4);
                for i in 0..k {
                    if !window.contains(i) {
                        assert_eq!(basis.basis_value(i, x), 0.0, "K={k} x={x} i={i}");
                    }
                }
            }
        }
    }

    #[test]
    fn eval_matches_dense_sum() {
        let basis = SplineBasis::new(13).unwrap();
        let coefficients: Vec<f64> = (0..13).map(|i| (i as f64 * 0.7).sin()).collect();
        let spline = Spline1D::new(basis, coefficients.clone()).unwrap();
        for step in 0..=500 {
            let x = step as f64 / 500.0;
            let dense: f64 = (0..13)
                .map(|i| coefficients[i] * activation(basis.scale() * x + basis.shift(i)))
                .sum();
            assert!((spline.eval(x) - dense).abs() < 1e-14);
        }
    }

    #[test]
    fn eval_one_hot() {
        let basis = SplineBasis::new(8).unwrap();
        let mut spline = Spline1D::zeros(basis);
        assert_eq!(spline.eval(0.37), 0.0);
        spline.coefficients_mut()[3] = 1.0;
        assert!((spline.eval(0.5) - cox_de_boor(2.5)).abs() < 1e-15);
    }

    #[test]
    fn partition_of_unity() {
        for k in [4, 8, 16, 32] {
            let spline = Spline1D::new(SplineBasis::new(k).unwrap(), vec![1.0; k]).unwrap();
            for step in 0..=10_000 {
                let x = step as f64 / 10_000.0;
                assert!((spline.eval(x) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn grad_is_sparse_and_normalised() {
        let basis = SplineBasis::new(32).unwrap();
        let spline = Spline1D::zeros(basis);
        for step in 0..=1000 {
            let x = step as f64 / 1000.0;
            let g = spline.grad(x);
            assert!(g.nnz() <= 4);
            assert!(g.l1_norm() <= 4.0 * ACTIVATION_PEAK);
            assert!((g.l1_norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn grad_matches_finite_differences() {
        let basis = SplineBasis::new(11).unwrap();
        let coefficients: Vec<f64> = (0..11).map(|i| (i as f64).cos()).collect();
        let spline = Spline1D::new(basis, coefficients).unwrap();
        let h = 1e-5;
        for x in [0.0, 0.13, 0.5, 0.77, 1.0] {
            let g = spline.grad(x).to_dense(11);
            for i in 0..11 {
                let mut plus = spline.clone();
                plus.coefficients_mut()[i] += h;
                let mut minus = spline.clone();
                minus.coefficients_mut()[i] -= h;
                let fd = (plus.eval(x) - minus.eval(x)) / (2.0 * h);
                assert!((fd - g[i]).abs() <= 1e-6 * g[i].abs().max(1e-3));
            }
        }
    }

    #[test]
    fn deriv_matches_finite_differences() {
        let basis = SplineBasis::new(9).unwrap();
        let coefficients: Vec<f64> = (0..9).map(|i| (1.3 * i as f64).sin()).collect();
        let spline = Spline1D::new(basis, coefficients).unwrap();
        let h = 1e-6;
        for step in 1..100 {
            let x = step as f64 / 100.0 + 1e-4;
            let fd = (spline.eval(x + h) - spline.eval(x - h)) / (2.0 * h);
            assert!((spline.deriv(x) - fd).abs() < 1e-6);
        }
    }

    #[test]
    fn distal_gradients_are_orthogonal() {
        let basis = SplineBasis::new(32).unwrap();
        let delta = basis.support_width();
        for a in 0..=200 {
            for b in 0..=200 {
                let (x, y) = (a as f64 / 200.0, b as f64 / 200.0);
                if (x - y).abs() > delta {
                    assert_eq!(basis.eval(x).dot(&basis.eval(y)), 0.0);
                }
            }
        }
    }

    #[test]
    fn coefficient_count_must_match() {
        let basis = SplineBasis::new(8).unwrap();
        assert!(matches!(
            Spline1D::new(basis, vec![0.0; 7]),
            Err(Error::LengthMismatch {
                expected: 8,
                found: 7
            })
        ));
    }
}
