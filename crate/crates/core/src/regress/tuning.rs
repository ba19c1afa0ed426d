use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{default_feature_names, fit, RegressorSpec};
use crate::error::{Error, Result};
use crate::evalx::{compute_metrics, kfold_indices};
use crate::linalg::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMetric {
    /// Lowest mean validation MAE wins.
    Mae,
    /// Highest mean validation R² wins.
    R2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub spec: RegressorSpec,
    pub mean: f64,
    pub std: f64,
    pub fold_scores: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best_index: usize,
    pub best: RegressorSpec,
    pub metric: SelectionMetric,
    pub table: Vec<GridRow>,
}

/// Scores every spec on one shared seeded k-fold partition. Ties go to the
/// earlier grid entry.
pub fn grid_search_cv(
    grid: &[RegressorSpec],
    x: &Matrix,
    y: &[f64],
    k: usize,
    metric: SelectionMetric,
    seed: u64,
) -> Result<GridResult> {
    if grid.is_empty() {
        return Err(Error::invalid("grid", "must contain at least one spec"));
    }
    if x.rows() != y.len() {
        return Err(Error::invalid("y", "length differs from the number of rows"));
    }
    let folds = kfold_indices(x.rows(), k, seed)?;
    let names = default_feature_names(x.cols());
    let jobs: Vec<(usize, usize)> = (0..grid.len()).flat_map(|g| (0..k).map(move |f| (g, f))).collect();
    let scores: Vec<Result<f64>> = jobs
        .par_iter()
        .map(|&(g, f)| {
            let (train, valid) = &folds[f];
            let ytr: Vec<f64> = train.iter().map(|&i| y[i]).collect();
            let yva: Vec<f64> = valid.iter().map(|&i| y[i]).collect();
            let model = fit(&grid[g], &x.select_rows(train), &ytr, &names)?;
            let m = compute_metrics(&yva, &model.predict(&x.select_rows(valid))?)?;
            Ok(match metric {
                SelectionMetric::Mae => m.mae,
                SelectionMetric::R2 => m.r2,
            })
        })
        .collect();
    let scores = scores.into_iter().collect::<Result<Vec<f64>>>()?;

    let table: Vec<GridRow> = grid
        .iter()
        .enumerate()
        .map(|(g, spec)| {
            let s = scores[g * k..(g + 1) * k].to_vec();
            let mean = s.iter().sum::<f64>() / k as f64;
            let std = (s.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / k as f64).sqrt();
            GridRow {
                spec: spec.clone(),
                mean,
                std,
                fold_scores: s,
            }
        })
        .collect();
    let mut best_index = 0;
    for (i, row) in table.iter().enumerate().skip(1) {
        let better = match metric {
            SelectionMetric::Mae => row.mean < table[best_index].mean,
            SelectionMetric::R2 => row.mean > table[best_index].mean,
        };
        if better {
            best_index = i;
        }
    }
    Ok(GridResult {
        best_index,
        best: grid[best_index].clone(),
        metric,
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regress::Hyperparams;
    use crate::rng::SeededRng;

    fn gbt(depth: usize) -> RegressorSpec {
        RegressorSpec::new(
            Hyperparams::Gbt {
                n_rounds: 60,
                learning_rate: 0.2,
                max_depth: depth,
                lambda: 1.0,
                min_leaf: 2,
            },
            0,
        )
    }

    #[test]
    fn single_spec_grid() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0], [3.0]]);
        let r = grid_search_cv(&[RegressorSpec::new(Hyperparams::Ols, 0)], &x, &[0.0, 1.0, 2.5, 3.0], 2, SelectionMetric::Mae, 0).unwrap();
        assert_eq!(r.best_index, 0);
    }

    #[test]
    fn interaction_prefers_depth() {
        let mut rng = SeededRng::new(8);
        let rows: Vec<[f64; 2]> = (0..200).map(|_| [rng.uniform_range(-1.0, 1.0), rng.uniform_range(-1.0, 1.0)]).collect();
        let x = Matrix::from_rows(&rows);
        let y: Vec<f64> = rows.iter().map(|r| r[0] * r[1]).collect();
        let r = grid_search_cv(&[gbt(1), gbt(4)], &x, &y, 5, SelectionMetric::Mae, 3).unwrap();
        assert_eq!(r.best_index, 1, "{:?}", r.table.iter().map(|t| t.mean).collect::<Vec<_>>());
    }

    #[test]
    fn errors() {
        let x = Matrix::from_rows(&[[0.0], [1.0]]);
        assert!(grid_search_cv(&[], &x, &[0.0, 1.0], 2, SelectionMetric::Mae, 0).is_err());
        assert!(grid_search_cv(&[gbt(1)], &x, &[0.0, 1.0], 3, SelectionMetric::Mae, 0).is_err());
    }
}
