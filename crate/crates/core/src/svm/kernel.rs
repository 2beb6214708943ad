use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum KernelSpec {
    /// `exp(-‖x - x'‖² / (2τ²))`
    Rbf { tau: f64 },
    Linear,
    /// `(x·x' + offset)^degree`
    Polynomial { degree: u32, offset: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Rbf { tau } if !(tau > 0.0 && tau.is_finite()) => Err(Error::ParamOutOfRange {
                name: "tau",
                value: tau,
                range: "(0, inf)",
            }),
            KernelSpec::Polynomial { degree: 0, .. } => Err(Error::ParamOutOfRange {
                name: "degree",
                value: 0.0,
                range: ">= 1",
            }),
            KernelSpec::Polynomial { offset, .. } if !offset.is_finite() => Err(Error::ParamOutOfRange {
                name: "offset",
                value: offset,
                range: "finite",
            }),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            KernelSpec::Rbf { tau } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-d2 / (2.0 * tau * tau)).exp()
            }
            KernelSpec::Linear => dot(a, b),
            KernelSpec::Polynomial { degree, offset } => (dot(a, b) + offset).powi(degree as i32),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
