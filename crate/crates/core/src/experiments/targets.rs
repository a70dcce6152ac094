use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The three two-variable regression problems.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExperimentId {
    /// Sum of single-variable functions.
    A,
    /// Gaussian bump plus additive periodic terms.
    B,
    /// Product of periodic functions; not additive.
    C,
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExperimentId::A => "A",
            ExperimentId::B => "B",
            ExperimentId::C => "C",
        })
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "A" => Ok(ExperimentId::A),
            "B" => Ok(ExperimentId::B),
            "C" => Ok(ExperimentId::C),
            _ => Err(Error::InvalidConfig(format!("unknown experiment `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Task {
    One,
    Two,
}

impl Task {
    pub fn number(self) -> u8 {
        match self {
            Task::One => 1,
            Task::Two => 2,
        }
    }
}

/// True strictly inside the central square `(0.45, 0.55)^2`.
pub fn in_forget_square(x: &[f64]) -> bool {
    x.iter().all(|&v| 0.45 < v && v < 0.55)
}

fn task1_value(id: ExperimentId, x1: f64, x2: f64) -> f64 {
    match id {
        ExperimentId::A => {
            (4.0 * PI * x1).cos() * (-(2.0 * x1 - 1.0).powi(2)).exp() + (PI * x2).sin()
        }
        ExperimentId::B => {
            let (u1, u2) = (10.0 * x1 - 5.0, 10.0 * x2 - 5.0);
            2.0 * (-(u1 * u1 + u2 * u2)).exp() + u1.sin().powi(2) + u2.sin().powi(2)
        }
        ExperimentId::C => 1.0 + (20.0 * x1 - 10.0).cos() * (20.0 * x2 - 10.0).cos(),
    }
}

/// Noiseless target. The second task zeroes the open central square.
pub fn target(id: ExperimentId, task: Task, x: &[f64]) -> Result<f64> {
    if x.len() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: x.len(),
        });
    }
    if !x.iter().all(|v| (0.0..=1.0).contains(v)) {
        return Err(Error::OutOfDomain {
            point: x.to_vec(),
            lo: 0.0,
            hi: 1.0,
        });
    }
    if task == Task::Two && in_forget_square(x) {
        return Ok(0.0);
    }
    Ok(task1_value(id, x[0], x[1]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spot_values() {
        let centre = [0.5, 0.5];
        assert!((target(ExperimentId::A, Task::One, &centre).unwrap() - 2.0).abs() < 1e-15);
        let origin = target(ExperimentId::A, Task::One, &[0.0, 0.0]).unwrap();
        assert!((origin - (-1.0f64).exp()).abs() < 1e-15);
        assert!((origin - 0.36788).abs() < 1e-5);
        assert!((target(ExperimentId::B, Task::One, &centre).unwrap() - 2.0).abs() < 1e-15);
        assert!((target(ExperimentId::C, Task::One, &centre).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(target(ExperimentId::C, Task::Two, &centre).unwrap(), 0.0);
    }

    #[test]
    fn task_two_only_changes_the_square() {
        for id in [ExperimentId::A, ExperimentId::B, ExperimentId::C] {
            for &x in &[[0.45, 0.5], [0.5, 0.55], [0.2, 0.5], [0.9, 0.1]] {
                assert_eq!(
                    target(id, Task::One, &x).unwrap(),
                    target(id, Task::Two, &x).unwrap()
                );
            }
            assert_eq!(target(id, Task::Two, &[0.46, 0.54]).unwrap(), 0.0);
        }
    }

    #[test]
    fn rejects_out_of_domain() {
        assert!(matches!(
            target(ExperimentId::A, Task::One, &[1.1, 0.0]),
            Err(Error::OutOfDomain { .. })
        ));
        assert!(target(ExperimentId::A, Task::One, &[0.5]).is_err());
    }

    #[test]
    fn parses_ids() {
        assert_eq!("b".parse::<ExperimentId>().unwrap(), ExperimentId::B);
        assert!("D".parse::<ExperimentId>().is_err());
    }
}
