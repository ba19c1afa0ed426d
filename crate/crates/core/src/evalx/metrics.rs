use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mae: f64,
    pub mse: f64,
    pub r2: f64,
}

/// MAE, MSE and unclamped R². A constant target leaves R² undefined; the error
/// carries MAE and MSE.
pub fn compute_metrics(y_true: &[f64], y_pred: &[f64]) -> Result<Metrics> {
    if y_true.len() != y_pred.len() {
        return Err(Error::DimensionMismatch {
            expected: y_true.len(),
            received: y_pred.len(),
        });
    }
    let m = y_true.len();
    if m < 2 {
        return Err(Error::invalid("y_true", "need at least 2 values"));
    }
    let n = m as f64;
    let mae = y_true.iter().zip(y_pred).map(|(a, b)| (a - b).abs()).sum::<f64>() / n;
    let ss_res: f64 = y_true.iter().zip(y_pred).map(|(a, b)| (a - b).powi(2)).sum();
    let mse = ss_res / n;
    let mean = y_true.iter().sum::<f64>() / n;
    let ss_tot: f64 = y_true.iter().map(|a| (a - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::UndefinedR2 { mae, mse });
    }
    Ok(Metrics {
        mae,
        mse,
        r2: 1.0 - ss_res / ss_tot,
    })
}
