//! Pseudo-rehearsal: keep a model's old behaviour by training on its own
//! predictions alongside the new task.

use rand::Rng;

use super::dataset::{Dataset, DomainBox};
use super::predict;
use crate::error::{Error, Result};
use crate::models::Model;

/// Labels `inputs` (row-major, `model.input_dim()` wide) with a frozen copy
/// of `model`.
pub fn snapshot_labels(model: &Model, inputs: &[f64]) -> Result<Vec<f64>> {
    let dim = model.input_dim();
    if !inputs.len().is_multiple_of(dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: inputs.len() % dim,
        });
    }
    let frozen = model.clone();
    inputs.chunks(dim).map(|x| frozen.forward(x)).collect()
}

/// `n` points uniform over `domain`, labelled by the model itself.
pub fn rehearsal_set(
    model: &Model,
    n: usize,
    domain: DomainBox,
    rng: &mut impl Rng,
) -> Result<Dataset> {
    let inputs = domain.sample(model.input_dim(), n, rng);
    let targets = snapshot_labels(model, &inputs)?;
    Dataset::new(model.input_dim(), inputs, targets, domain, "rehearsal")
}

/// Draws `n_out` points; each comes from `task` with probability `rho` and
/// from `rehearsal` otherwise, uniformly with replacement within its source.
pub fn pseudo_rehearsal_mix(
    task: &Dataset,
    rehearsal: &Dataset,
    rho: f64,
    n_out: usize,
    rng: &mut impl Rng,
) -> Result<Dataset> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::InvalidConfig(format!("mixing coefficient {rho} outside [0, 1]")));
    }
    if task.is_empty() || rehearsal.is_empty() {
        return Err(Error::EmptyInput);
    }
    if n_out == 0 {
        return Err(Error::InvalidConfig("n_out must be positive".into()));
    }
    if task.dim() != rehearsal.dim() {
        return Err(Error::DimensionMismatch {
            expected: task.dim(),
            found: rehearsal.dim(),
        });
    }
    let dim = task.dim();
    let mut inputs = Vec::with_capacity(n_out * dim);
    let mut targets = Vec::with_capacity(n_out);
    for _ in 0..n_out {
        let source = if rng.random::<f64>() < rho { task } else { rehearsal };
        let i = rng.random_range(0..source.len());
        inputs.extend_from_slice(source.point(i));
        targets.push(source.target(i));
    }
    let provenance = format!("mix({}, {}, rho={rho})", task.provenance, rehearsal.provenance);
    Dataset::new(
        dim,
        inputs,
        targets,
        task.domain().union(&rehearsal.domain()),
        provenance,
    )
}

/// Labels every point of `data` with the model's current prediction.
pub fn relabel(model: &Model, data: &Dataset) -> Result<Dataset> {
    Dataset::new(
        data.dim(),
        data.inputs().to_vec(),
        predict(model, data)?,
        data.domain(),
        format!("{} (self-labelled)", data.provenance),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{SamConfig, SamModel};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn constant_set(value: f64, n: usize, domain: DomainBox) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(value.to_bits());
        let inputs = domain.sample(2, n, &mut rng);
        Dataset::new(2, inputs, vec![value; n], domain, format!("{value}")).unwrap()
    }

    #[test]
    fn zero_model_gives_zero_labels() {
        let m = Model::Sam(SamModel::new(SamConfig::paper_default()).unwrap());
        let ds = rehearsal_set(&m, 500, DomainBox::UNIT, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert_eq!(ds.len(), 500);
        assert!(ds.targets().iter().all(|&t| t == 0.0));
    }

    #[test]
    fn snapshot_is_frozen() {
        let mut m = Model::Sam(SamModel::new(SamConfig::paper_default()).unwrap());
        m.params_mut().as_mut_slice()[5] = 1.0;
        let pts = DomainBox::UNIT.sample(2, 100, &mut ChaCha8Rng::seed_from_u64(3));
        let before = snapshot_labels(&m, &pts).unwrap();
        let frozen = m.clone();
        m.params_mut().as_mut_slice()[5] = -4.0;
        assert_eq!(before, snapshot_labels(&frozen, &pts).unwrap());
        assert!(snapshot_labels(&m, &pts[..3]).is_err());
    }

    #[test]
    fn extreme_mixing_coefficients() {
        let task = constant_set(1.0, 50, DomainBox::new(0.45, 0.55).unwrap());
        let reh = constant_set(-1.0, 50, DomainBox::UNIT);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let only_task = pseudo_rehearsal_mix(&task, &reh, 1.0, 300, &mut rng).unwrap();
        assert!(only_task.targets().iter().all(|&t| t == 1.0));
        let only_reh = pseudo_rehearsal_mix(&task, &reh, 0.0, 300, &mut rng).unwrap();
        assert!(only_reh.targets().iter().all(|&t| t == -1.0));
        assert_eq!(only_reh.domain(), DomainBox::UNIT);
    }

    #[test]
    fn half_mix_is_balanced() {
        let task = constant_set(1.0, 100, DomainBox::UNIT);
        let reh = constant_set(-1.0, 100, DomainBox::UNIT);
        let mixed =
            pseudo_rehearsal_mix(&task, &reh, 0.5, 10_000, &mut ChaCha8Rng::seed_from_u64(5))
                .unwrap();
        let frac = mixed.targets().iter().filter(|&&t| t == 1.0).count() as f64 / 10_000.0;
        assert!((frac - 0.5).abs() < 0.02, "{frac}");
    }

    #[test]
    fn rejects_bad_arguments() {
        let a = constant_set(1.0, 10, DomainBox::UNIT);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        assert!(pseudo_rehearsal_mix(&a, &a, 1.5, 10, &mut rng).is_err());
        assert!(pseudo_rehearsal_mix(&a, &a, -0.1, 10, &mut rng).is_err());
        let empty = Dataset::new(2, vec![], vec![], DomainBox::UNIT, "").unwrap();
        assert!(matches!(
            pseudo_rehearsal_mix(&a, &empty, 0.5, 10, &mut rng),
            Err(Error::EmptyInput)
        ));
    }
}
