use rayon::prelude::*;

use super::{default_feature_names, fit as fit_any, Hyperparams, Params, RegressorModel, RegressorSpec, TrainingSummary};
use crate::error::{Error, Result};
use crate::evalx::kfold_indices;
use crate::linalg::{cholesky_solve, Matrix};

const META_RIDGE: f64 = 1e-6;

pub fn fit_stack(base_specs: &[RegressorSpec], x: &Matrix, y: &[f64], k: usize, seed: u64) -> Result<RegressorModel> {
    let spec = RegressorSpec::new(
        Hyperparams::Stack {
            bases: base_specs.to_vec(),
            k,
        },
        seed,
    );
    fit_any(&spec, x, y, &default_feature_names(x.cols()))
}

/// n x B matrix of out-of-fold predictions, one column per base.
pub fn out_of_fold_predictions(
    bases: &[RegressorSpec],
    x: &Matrix,
    y: &[f64],
    k: usize,
    seed: u64,
    names: &[String],
) -> Result<Matrix> {
    let n = x.rows();
    let folds = kfold_indices(n, k, seed)?;
    let jobs: Vec<(usize, usize)> = (0..bases.len()).flat_map(|b| (0..folds.len()).map(move |f| (b, f))).collect();
    let preds: Vec<Result<Vec<f64>>> = jobs
        .par_iter()
        .map(|&(b, f)| {
            let (train, valid) = &folds[f];
            let ytr: Vec<f64> = train.iter().map(|&i| y[i]).collect();
            let model = fit_any(&bases[b], &x.select_rows(train), &ytr, names).map_err(|e| Error::BaseModel {
                index: b,
                source: Box::new(e),
            })?;
            model.predict(&x.select_rows(valid))
        })
        .collect();
    let mut z = Matrix::zeros(n, bases.len());
    for (&(b, f), p) in jobs.iter().zip(preds) {
        for (&i, v) in folds[f].1.iter().zip(p?) {
            z[(i, b)] = v;
        }
    }
    Ok(z)
}

/// Ridge on centred data: (Zc'Zc/n + ridge I) w = Zc'yc/n.
pub(crate) fn ridge_meta(z: &Matrix, y: &[f64]) -> (Vec<f64>, f64) {
    let (n, b) = (z.rows(), z.cols());
    let nf = n as f64;
    let zm = z.column_means();
    let ym = y.iter().sum::<f64>() / nf;
    let mut a = Matrix::zeros(b, b);
    let mut rhs = vec![0.0; b];
    for i in 0..n {
        let row = z.row(i);
        for p in 0..b {
            let dp = row[p] - zm[p];
            rhs[p] += dp * (y[i] - ym) / nf;
            for q in 0..b {
                a[(p, q)] += dp * (row[q] - zm[q]) / nf;
            }
        }
    }
    for p in 0..b {
        a[(p, p)] += META_RIDGE;
    }
    let w = cholesky_solve(&a, &rhs).expect("ridge system is positive definite");
    let intercept = ym - w.iter().zip(&zm).map(|(w, m)| w * m).sum::<f64>();
    (w, intercept)
}

pub(super) fn fit(
    x: &Matrix,
    y: &[f64],
    bases: &[RegressorSpec],
    k: usize,
    seed: u64,
    names: &[String],
) -> Result<(Params, TrainingSummary)> {
    let z = out_of_fold_predictions(bases, x, y, k, seed, names)?;
    let (weights, intercept) = ridge_meta(&z, y);
    let meta_mse = z
        .row_iter()
        .zip(y)
        .map(|(r, t)| (intercept + crate::linalg::dot(&weights, r) - t).powi(2))
        .sum::<f64>()
        / y.len() as f64;
    let refit: Vec<Result<RegressorModel>> = bases
        .par_iter()
        .enumerate()
        .map(|(i, b)| {
            fit_any(b, x, y, names).map_err(|e| Error::BaseModel {
                index: i,
                source: Box::new(e),
            })
        })
        .collect();
    let models = refit.into_iter().collect::<Result<Vec<_>>>()?;
    Ok((
        Params::Stack {
            bases: models,
            weights,
            intercept,
        },
        TrainingSummary {
            final_loss: meta_mse,
            iterations: k,
            loss_trace: Vec::new(),
        },
    ))
}
