use super::{default_feature_names, fit as fit_any, Hyperparams, Params, RegressorModel, RegressorSpec, TrainingSummary};
use crate::error::Result;
use crate::linalg::Matrix;

const TOL: f64 = 1e-7;
const MAX_SWEEPS: usize = 10_000;

/// Columns should be standardized or on comparable scales; the penalty is not
/// scale-invariant.
pub fn fit_elastic_net(x: &Matrix, y: &[f64], alpha: f64, l1_ratio: f64, seed: u64) -> Result<RegressorModel> {
    fit_any(
        &RegressorSpec::new(Hyperparams::ElasticNet { alpha, l1_ratio }, seed),
        x,
        y,
        &default_feature_names(x.cols()),
    )
}

pub fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

/// Cyclic coordinate descent on
/// (1/2n)||y - Xb - c||^2 + alpha (l1_ratio ||b||_1 + (1 - l1_ratio)/2 ||b||^2)
/// with the intercept profiled out by centring.
pub(super) fn fit(x: &Matrix, y: &[f64], alpha: f64, l1_ratio: f64) -> Result<(Params, TrainingSummary)> {
    let (n, p) = (x.rows(), x.cols());
    let nf = n as f64;
    let x_mean = x.column_means();
    let y_mean = y.iter().sum::<f64>() / nf;

    // column-major centred copy
    let cols: Vec<Vec<f64>> = (0..p)
        .map(|j| (0..n).map(|i| x[(i, j)] - x_mean[j]).collect())
        .collect();
    let sq: Vec<f64> = cols.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>() / nf).collect();
    let mut resid: Vec<f64> = y.iter().map(|v| v - y_mean).collect();
    let mut beta = vec![0.0; p];
    let l1 = alpha * l1_ratio;
    let l2 = alpha * (1.0 - l1_ratio);

    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS {
        sweeps += 1;
        let mut max_step: f64 = 0.0;
        for j in 0..p {
            let denom = sq[j] + l2;
            if sq[j] == 0.0 || denom == 0.0 {
                continue;
            }
            let c = &cols[j];
            let rho = c.iter().zip(&resid).map(|(a, r)| a * r).sum::<f64>() / nf + sq[j] * beta[j];
            let new = soft_threshold(rho, l1) / denom;
            let delta = new - beta[j];
            if delta != 0.0 {
                for (r, a) in resid.iter_mut().zip(c) {
                    *r -= delta * a;
                }
                beta[j] = new;
            }
            max_step = max_step.max(delta.abs());
        }
        if max_step < TOL {
            break;
        }
    }

    let intercept = y_mean - x_mean.iter().zip(&beta).map(|(m, b)| m * b).sum::<f64>();
    let objective = resid.iter().map(|r| r * r).sum::<f64>() / (2.0 * nf)
        + l1 * beta.iter().map(|b| b.abs()).sum::<f64>()
        + 0.5 * l2 * beta.iter().map(|b| b * b).sum::<f64>();
    Ok((
        Params::Linear { coef: beta, intercept },
        TrainingSummary {
            final_loss: objective,
            iterations: sweeps,
            loss_trace: Vec::new(),
        },
    ))
}
