use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mse: f64,
    /// Mean absolute percentage error as a fraction; absent when some label is zero.
    pub mape: Option<f64>,
    pub r2: f64,
    /// Fraction of predictions strictly above their label.
    pub p_over: f64,
    pub n: usize,
}

pub fn evaluate(y_true: &[f64], y_pred: &[f64]) -> Result<EvalReport> {
    if y_true.len() != y_pred.len() {
        return Err(Error::DimensionMismatch(format!("{} labels vs {} predictions", y_true.len(), y_pred.len())));
    }
    if y_true.is_empty() {
        return Err(Error::InvalidInput("cannot evaluate an empty set".into()));
    }
    let n = y_true.len() as f64;
    let mse = y_true.iter().zip(y_pred).map(|(y, f)| (y - f) * (y - f)).sum::<f64>() / n;
    let mape = if y_true.contains(&0.0) {
        None
    } else {
        Some(y_true.iter().zip(y_pred).map(|(y, f)| ((y - f) / y).abs()).sum::<f64>() / n)
    };
    let mean = y_true.iter().sum::<f64>() / n;
    let ss_tot: f64 = y_true.iter().map(|y| (y - mean) * (y - mean)).sum();
    let ss_res = mse * n;
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res == 0.0 {
        1.0
    } else {
        0.0
    };
    let over = y_true.iter().zip(y_pred).filter(|(y, f)| f > y).count();
    Ok(EvalReport {
        mse,
        mape,
        r2,
        p_over: over as f64 / n,
        n: y_true.len(),
    })
}

/// Mean pinball loss at quantile `delta` for residuals `y - f`.
pub fn pinball_loss(y_true: &[f64], y_pred: &[f64], delta: f64) -> f64 {
    let total: f64 = y_true
        .iter()
        .zip(y_pred)
        .map(|(y, f)| {
            let u = y - f;
            if u >= 0.0 {
                delta * u
            } else {
                (delta - 1.0) * u
            }
        })
        .sum();
    total / y_true.len().max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_prediction() {
        let y = [0.1, 0.5, 0.9];
        let r = evaluate(&y, &y).unwrap();
        assert_eq!((r.mse, r.mape, r.r2, r.p_over), (0.0, Some(0.0), 1.0, 0.0));
    }

    #[test]
    fn hand_examples() {
        let r = evaluate(&[1.0, 3.0], &[2.0, 2.0]).unwrap();
        assert_eq!((r.mse, r.r2, r.p_over), (1.0, 0.0, 0.5));
        assert_eq!(evaluate(&[2.0], &[1.0]).unwrap().mape, Some(0.5));
        assert_eq!(evaluate(&[0.0, 1.0], &[0.0, 1.0]).unwrap().mape, None);
        assert!(evaluate(&[1.0], &[]).is_err());
    }

    #[test]
    fn pinball_is_asymmetric() {
        assert!((pinball_loss(&[1.0], &[0.0], 0.1) - 0.1).abs() < 1e-15);
        assert!((pinball_loss(&[0.0], &[1.0], 0.1) - 0.9).abs() < 1e-15);
    }
}
