use super::{default_feature_names, fit as fit_any, Hyperparams, Params, RegressorModel, RegressorSpec, TrainingSummary};
use crate::error::{Error, Result};
use crate::linalg::{householder_lstsq, Matrix};

const RANK_TOL: f64 = 1e-9;

pub fn fit_ols(x: &Matrix, y: &[f64]) -> Result<RegressorModel> {
    fit_any(&RegressorSpec::new(Hyperparams::Ols, 0), x, y, &default_feature_names(x.cols()))
}

/// Least squares with intercept via Householder QR on `[1 | X]`.
pub(super) fn fit(x: &Matrix, y: &[f64], names: &[String]) -> Result<(Params, TrainingSummary)> {
    let (n, p) = (x.rows(), x.cols());
    if n <= p {
        return Err(Error::invalid("X", format!("need more rows than columns (n = {n}, p = {p})")));
    }
    let mut design = Matrix::zeros(n, p + 1);
    for i in 0..n {
        design[(i, 0)] = 1.0;
        design.row_mut(i)[1..].copy_from_slice(x.row(i));
    }
    let beta = householder_lstsq(&design, y, RANK_TOL).map_err(|cols| {
        Error::RankDeficient(
            cols.into_iter()
                .map(|c| if c == 0 { "intercept".to_string() } else { names[c - 1].clone() })
                .collect(),
        )
    })?;
    let intercept = beta[0];
    let coef = beta[1..].to_vec();
    let mse = (0..n)
        .map(|i| (y[i] - intercept - crate::linalg::dot(&coef, x.row(i))).powi(2))
        .sum::<f64>()
        / n as f64;
    Ok((
        Params::Linear { coef, intercept },
        TrainingSummary {
            final_loss: mse,
            iterations: 1,
            loss_trace: Vec::new(),
        },
    ))
}
