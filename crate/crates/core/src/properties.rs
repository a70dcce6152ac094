//! Randomised checks of the basis and SAM gradient properties: partition of
//! unity, sparsity, the L1 bound and distal orthogonality.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::models::{Densities, SamConfig, SamModel};
use crate::spline::{SplineBasis, ACTIVATION_PEAK};

/// Outcome of one property suite.
#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub samples: usize,
    pub passed: bool,
    /// Worst observed value of the checked quantity.
    pub worst: f64,
    pub bound: String,
}

impl std::fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{}] {} over {} samples: worst {:e} (need {})",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.samples,
            self.worst,
            self.bound
        )
    }
}

pub const PARTITION_TOLERANCE: f64 = 1e-12;

/// Densities exercised by the single-basis suites.
const DENSITIES: [usize; 8] = [4, 5, 8, 13, 16, 32, 50, 64];

/// Uniform draws plus the knots of `basis`, so edge cases are always hit.
fn sample_points(basis: &SplineBasis, n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let h = basis.knot_spacing();
    let knots = (0..=basis.density() - 3).map(|k| (k as f64 * h).min(1.0));
    let mut xs: Vec<f64> = knots.collect();
    xs.extend((xs.len()..n).map(|_| rng.random::<f64>()));
    xs
}

pub fn partition_of_unity(n: usize, seed: u64) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut samples = 0;
    for &k in &DENSITIES {
        let basis = SplineBasis::new(k).expect("valid density");
        for x in sample_points(&basis, n, &mut rng) {
            let sum: f64 = basis.eval(x).iter().map(|(_, v)| v).sum();
            worst = worst.max((sum - 1.0).abs());
            samples += 1;
        }
    }
    SuiteReport {
        name: "partition of unity",
        samples,
        passed: worst < PARTITION_TOLERANCE,
        worst,
        bound: format!("|sum - 1| < {PARTITION_TOLERANCE:e}"),
    }
}

fn multi_sam() -> SamModel {
    SamModel::new(SamConfig {
        input_dim: 2,
        densities: Densities::multi_resolution(),
    })
    .expect("valid config")
}

/// Largest per-variable, per-density-block gradient nonzero count.
pub fn sparsity(n: usize, seed: u64) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0usize;
    let mut samples = 0;
    for &k in &DENSITIES {
        let basis = SplineBasis::new(k).expect("valid density");
        for x in sample_points(&basis, n / 2, &mut rng) {
            worst = worst.max(basis.eval(x).nnz());
            samples += 1;
        }
    }
    let sam = multi_sam();
    let blocks = sam.params().layout().blocks().to_vec();
    for _ in 0..n {
        let x = [rng.random::<f64>(), rng.random::<f64>()];
        let g = sam.grad(&x).expect("two inputs");
        for b in &blocks {
            worst = worst.max(g.restrict(b.offset..b.offset + b.len).nnz());
        }
        samples += 1;
    }
    SuiteReport {
        name: "sparsity",
        samples,
        passed: worst <= 4,
        worst: worst as f64,
        bound: "nnz <= 4 per variable per density block".into(),
    }
}

/// Per-block L1 norm of the gradient: at most `4 * 2/3` and, under
/// partition of unity, exactly 1.
pub fn l1_bound(n: usize, seed: u64) -> SuiteReport {
    let bound = 4.0 * ACTIVATION_PEAK;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut worst_norm, mut worst_dev) = (0.0f64, 0.0f64);
    let mut samples = 0;
    for &k in &DENSITIES {
        let basis = SplineBasis::new(k).expect("valid density");
        for x in sample_points(&basis, n / 2, &mut rng) {
            let l1 = basis.eval(x).l1_norm();
            worst_norm = worst_norm.max(l1);
            worst_dev = worst_dev.max((l1 - 1.0).abs());
            samples += 1;
        }
    }
    let sam = multi_sam();
    let blocks = sam.params().layout().blocks().to_vec();
    for _ in 0..n {
        let x = [rng.random::<f64>(), rng.random::<f64>()];
        let g = sam.grad(&x).expect("two inputs");
        for b in &blocks {
            let l1 = g.restrict(b.offset..b.offset + b.len).l1_norm();
            worst_norm = worst_norm.max(l1);
            worst_dev = worst_dev.max((l1 - 1.0).abs());
        }
        samples += 1;
    }
    SuiteReport {
        name: "L1 bound",
        samples,
        passed: worst_norm <= bound && worst_dev < PARTITION_TOLERANCE,
        worst: worst_norm,
        bound: format!("<= {bound:.6} and |L1 - 1| < {PARTITION_TOLERANCE:e} per block"),
    }
}

/// Separated pairs at `K = 32` must have exactly orthogonal gradients, both
/// for one basis and for a two-input SAM.
pub fn distal_orthogonality(n: usize, seed: u64) -> SuiteReport {
    let basis = SplineBasis::new(32).expect("valid density");
    let delta = basis.support_width();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let far_point = |rng: &mut ChaCha8Rng, x: f64| loop {
        let y: f64 = rng.random();
        if (x - y).abs() > delta {
            return y;
        }
    };
    let mut worst = 0.0f64;
    let mut samples = 0;
    for _ in 0..n {
        let x: f64 = rng.random();
        let y = far_point(&mut rng, x);
        worst = worst.max(basis.eval(x).dot(&basis.eval(y)).abs());
        samples += 1;
    }
    let sam = SamModel::new(SamConfig::paper_default()).expect("valid config");
    for _ in 0..n {
        let x = [rng.random::<f64>(), rng.random::<f64>()];
        let y = [far_point(&mut rng, x[0]), far_point(&mut rng, x[1])];
        let d = sam.grad(&x).expect("two inputs").dot(&sam.grad(&y).expect("two inputs"));
        worst = worst.max(d.abs());
        samples += 1;
    }
    SuiteReport {
        name: "distal orthogonality (K = 32)",
        samples,
        passed: worst == 0.0,
        worst,
        bound: format!("dot == 0 exactly when separation > {delta:.6}"),
    }
}

/// All suites with `n` random points each.
pub fn run_all(n: usize, seed: u64) -> Vec<SuiteReport> {
    vec![
        partition_of_unity(n, seed),
        sparsity(n, seed.wrapping_add(1)),
        l1_bound(n, seed.wrapping_add(2)),
        distal_orthogonality(n, seed.wrapping_add(3)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_pass() {
        for r in run_all(2_000, 5) {
            assert!(r.passed, "{r}");
            assert!(r.samples >= 2_000);
        }
    }

    #[test]
    fn near_pairs_are_not_orthogonal() {
        let b = SplineBasis::new(32).unwrap();
        assert!(b.eval(0.5).dot(&b.eval(0.5 + 0.5 * b.support_width())) > 0.0);
    }

    #[test]
    fn report_line() {
        let r = partition_of_unity(10, 0);
        assert!(r.to_string().starts_with("[PASS] partition of unity"));
    }
}
