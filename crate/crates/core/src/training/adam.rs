use super::TrainConfig;
use crate::error::{Error, Result};

/// First and second moment estimates for bias-corrected Adam.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        AdamState {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }
}

/// One Adam update of `params` in place.
pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamState,
    cfg: &TrainConfig,
) -> Result<()> {
    for len in [grads.len(), state.m.len(), state.v.len()] {
        if len != params.len() {
            return Err(Error::LengthMismatch {
                expected: params.len(),
                found: len,
            });
        }
    }
    state.t += 1;
    let (b1, b2) = (cfg.adam_beta1, cfg.adam_beta2);
    let c1 = 1.0 - b1.powf(state.t as f64);
    let c2 = 1.0 - b2.powf(state.t as f64);
    for (((p, &g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.adam_epsilon);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_a_no_op() {
        let cfg = TrainConfig::default();
        let mut p = vec![0.5, -1.0, 0.0];
        let mut s = AdamState::new(3);
        for _ in 0..10 {
            adam_step(&mut p, &[0.0; 3], &mut s, &cfg).unwrap();
        }
        assert_eq!(p, vec![0.5, -1.0, 0.0]);
        assert!(s.m.iter().chain(&s.v).all(|&x| x == 0.0));
        assert_eq!(s.t, 10);
    }

    #[test]
    fn first_step_has_size_lr() {
        let cfg = TrainConfig::default();
        let mut p = vec![0.0];
        let mut s = AdamState::new(1);
        adam_step(&mut p, &[1.0], &mut s, &cfg).unwrap();
        // m̂ = v̂ = 1 after bias correction
        let expected = -0.001 / (1.0 + 1e-8);
        assert!((p[0] - expected).abs() < 1e-18);
    }

    #[test]
    fn constant_gradient_keeps_step_size() {
        let cfg = TrainConfig::default();
        let mut p = vec![0.0];
        let mut s = AdamState::new(1);
        let mut prev = 0.0;
        for _ in 0..2 {
            adam_step(&mut p, &[1.0], &mut s, &cfg).unwrap();
            assert!(((prev - p[0]) - 0.001).abs() < 1e-10);
            prev = p[0];
        }
    }

    #[test]
    fn scale_invariant() {
        let cfg = TrainConfig::default();
        let (mut a, mut b) = (vec![0.0], vec![0.0]);
        let (mut sa, mut sb) = (AdamState::new(1), AdamState::new(1));
        for k in 0..20 {
            let g = ((k as f64) * 0.9).sin();
            adam_step(&mut a, &[g], &mut sa, &cfg).unwrap();
            adam_step(&mut b, &[1000.0 * g], &mut sb, &cfg).unwrap();
        }
        assert!((a[0] - b[0]).abs() < 1e-9);
    }

    #[test]
    fn length_mismatch() {
        let cfg = TrainConfig::default();
        let mut p = vec![0.0; 2];
        assert!(adam_step(&mut p, &[1.0], &mut AdamState::new(2), &cfg).is_err());
        assert!(adam_step(&mut p, &[1.0, 1.0], &mut AdamState::new(3), &cfg).is_err());
    }
}
