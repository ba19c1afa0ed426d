use rayon::prelude::*;

use super::tree::{grow, Presorted, Tree, TreeParams};
use super::{default_feature_names, fit as fit_any, Hyperparams, Params, RegressorModel, RegressorSpec, TrainingSummary};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::SeededRng;

pub fn fit_random_forest(x: &Matrix, y: &[f64], spec: &RegressorSpec) -> Result<RegressorModel> {
    if !matches!(spec.hyperparams, Hyperparams::RandomForest { .. }) {
        return Err(Error::invalid("family", "expected random_forest hyperparameters"));
    }
    fit_any(spec, x, y, &default_feature_names(x.cols()))
}

pub fn fit_gbt(x: &Matrix, y: &[f64], spec: &RegressorSpec) -> Result<RegressorModel> {
    if !matches!(spec.hyperparams, Hyperparams::Gbt { .. }) {
        return Err(Error::invalid("family", "expected gbt hyperparameters"));
    }
    fit_any(spec, x, y, &default_feature_names(x.cols()))
}

fn mse(y: &[f64], f: &[f64]) -> f64 {
    y.iter().zip(f).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / y.len() as f64
}

/// Bagged CART trees; tree `i` draws its bootstrap sample and node feature
/// subsets from an rng stream derived from (seed, i).
pub(super) fn fit_forest(x: &Matrix, y: &[f64], spec: &RegressorSpec) -> Result<(Params, TrainingSummary)> {
    let Hyperparams::RandomForest { n_trees, max_depth, min_leaf, feature_subsample } = spec.hyperparams else {
        unreachable!()
    };
    let n = x.rows();
    if n < 2 {
        return Err(Error::invalid("X", "random forest needs at least 2 rows"));
    }
    let p = x.cols();
    let max_features = ((feature_subsample * p as f64 - 1e-9).ceil() as usize).clamp(1, p.max(1));
    let params = TreeParams {
        max_depth,
        min_leaf,
        lambda: 0.0,
        max_features,
    };
    let trees: Vec<Tree> = (0..n_trees)
        .into_par_iter()
        .map(|i| {
            let mut rng = SeededRng::derive(spec.seed, i as u64);
            let rows: Vec<usize> = (0..n).map(|_| rng.below(n)).collect();
            let sorted = Presorted::new(x, rows);
            grow(x, y, &sorted, params, &mut rng)
        })
        .collect();
    let fitted: Vec<f64> = x
        .row_iter()
        .map(|r| trees.iter().map(|t| t.predict_row(r)).sum::<f64>() / trees.len() as f64)
        .collect();
    Ok((
        Params::Forest { trees },
        TrainingSummary {
            final_loss: mse(y, &fitted),
            iterations: n_trees,
            loss_trace: Vec::new(),
        },
    ))
}

/// Squared-loss boosting with ridge-shrunk leaves. `loss_trace[0]` is the
/// training MSE of the base score, entry `m` the MSE after round `m`.
pub(super) fn fit_boosted(x: &Matrix, y: &[f64], spec: &RegressorSpec) -> Result<(Params, TrainingSummary)> {
    let Hyperparams::Gbt { n_rounds, learning_rate, max_depth, lambda, min_leaf } = spec.hyperparams else {
        unreachable!()
    };
    let n = x.rows();
    if n < 2 {
        return Err(Error::invalid("X", "gradient boosting needs at least 2 rows"));
    }
    let base = y.iter().sum::<f64>() / n as f64;
    let mut f = vec![base; n];
    let sorted = Presorted::new(x, (0..n).collect());
    let params = TreeParams {
        max_depth,
        min_leaf,
        lambda,
        max_features: x.cols(),
    };
    // never consulted: no feature subsampling in boosting
    let mut rng = SeededRng::new(spec.seed);
    let mut trace = Vec::with_capacity(n_rounds + 1);
    trace.push(mse(y, &f));
    let mut trees = Vec::with_capacity(n_rounds);
    let mut resid = vec![0.0; n];
    for _ in 0..n_rounds {
        for i in 0..n {
            resid[i] = y[i] - f[i];
        }
        let tree = grow(x, &resid, &sorted, params, &mut rng);
        for (i, fi) in f.iter_mut().enumerate() {
            *fi += learning_rate * tree.predict_row(x.row(i));
        }
        trace.push(mse(y, &f));
        trees.push(tree);
    }
    Ok((
        Params::Boosted {
            base,
            learning_rate,
            trees,
        },
        TrainingSummary {
            final_loss: *trace.last().unwrap(),
            iterations: n_rounds,
            loss_trace: trace,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn forest(n_trees: usize, max_depth: usize) -> RegressorSpec {
        RegressorSpec::new(
            Hyperparams::RandomForest {
                n_trees,
                max_depth,
                min_leaf: 1,
                feature_subsample: 1.0,
            },
            1,
        )
    }

    fn gbt(n_rounds: usize, learning_rate: f64, max_depth: usize) -> RegressorSpec {
        RegressorSpec::new(
            Hyperparams::Gbt {
                n_rounds,
                learning_rate,
                max_depth,
                lambda: 0.0,
                min_leaf: 1,
            },
            1,
        )
    }

    #[test]
    fn constant_target_forest() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0], [3.0]]);
        let m = fit_random_forest(&x, &[7.0; 4], &forest(5, 3)).unwrap();
        assert!(m.predict(&Matrix::from_rows(&[[0.5], [9.0]])).unwrap().iter().all(|v| *v == 7.0));
    }

    #[test]
    fn gbt_exact_fit_on_separable_points() {
        let x = Matrix::from_rows(&[[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]);
        let y = [1.0, 2.0, 5.0, -3.0];
        let m = fit_gbt(&x, &y, &gbt(1, 1.0, 10)).unwrap();
        let p = m.predict(&x).unwrap();
        for (a, b) in p.iter().zip(&y) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn gbt_tiny_learning_rate_is_mean() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0]]);
        let m = fit_gbt(&x, &[1.0, 2.0, 6.0], &gbt(1, 1e-12, 3)).unwrap();
        assert!(m.predict(&x).unwrap().iter().all(|v| (v - 3.0).abs() < 1e-9));
    }

    #[test]
    fn invalid_tree_hyperparameters() {
        let x = Matrix::from_rows(&[[0.0], [1.0]]);
        let mut s = forest(1, 0);
        assert!(fit_random_forest(&x, &[0.0, 1.0], &s).is_err());
        s = forest(0, 1);
        assert!(fit_random_forest(&x, &[0.0, 1.0], &s).is_err());
        assert!(fit_gbt(&x, &[0.0, 1.0], &gbt(1, 1.5, 1)).is_err());
    }

    #[test]
    fn forest_is_deterministic() {
        let mut rng = SeededRng::new(3);
        let rows: Vec<[f64; 3]> = (0..60).map(|_| [rng.normal(), rng.normal(), rng.normal()]).collect();
        let x = Matrix::from_rows(&rows);
        let y: Vec<f64> = rows.iter().map(|r| r[0] * r[1] + r[2]).collect();
        let mut spec = forest(8, 4);
        if let Hyperparams::RandomForest { feature_subsample, .. } = &mut spec.hyperparams {
            *feature_subsample = 0.5;
        }
        let a = fit_random_forest(&x, &y, &spec).unwrap();
        let b = fit_random_forest(&x, &y, &spec).unwrap();
        assert_eq!(a, b);
    }
}
