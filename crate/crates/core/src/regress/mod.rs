//! Regression model zoo: OLS, elastic net, random forest, gradient-boosted
//! trees, MLP and epsilon-SVR, plus grid-search tuning and stacking.

mod defaults;
mod elastic_net;
mod ensemble;
mod mlp;
mod ols;
mod stack;
mod svr;
pub mod tree;
mod tuning;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};

pub use defaults::{default_grid, default_spec, DEFAULTS_VERSION};
pub use elastic_net::{fit_elastic_net, soft_threshold};
pub use ensemble::{fit_gbt, fit_random_forest};
pub use mlp::{fit_mlp, Layer, Network};
pub use ols::fit_ols;
pub use stack::fit_stack;
pub use svr::{fit_svr, KERNEL_ROW_LIMIT};
pub use tuning::{grid_search_cv, GridResult, GridRow, SelectionMetric};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Ols,
    ElasticNet,
    RandomForest,
    Gbt,
    Mlp,
    Svr,
    Stack,
}

impl Family {
    /// The six single-model families, in report order.
    pub const ZOO: [Family; 6] = [
        Family::Ols,
        Family::ElasticNet,
        Family::RandomForest,
        Family::Gbt,
        Family::Mlp,
        Family::Svr,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Ols => "ols",
            Family::ElasticNet => "elastic_net",
            Family::RandomForest => "random_forest",
            Family::Gbt => "gbt",
            Family::Mlp => "mlp",
            Family::Svr => "svr",
            Family::Stack => "stack",
        }
    }

    pub fn parse(s: &str) -> Result<Family> {
        Family::ZOO
            .iter()
            .chain(&[Family::Stack])
            .copied()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::invalid("family", format!("unknown family {s:?}")))
    }

    pub fn is_linear(self) -> bool {
        matches!(self, Family::Ols | Family::ElasticNet)
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    Linear,
    Rbf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// Symmetric uniform scaled by fan-in, U(-sqrt(6/fan_in), sqrt(6/fan_in)).
    #[default]
    HeUniform,
    Zero,
}

fn default_min_leaf() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Hyperparams {
    Ols,
    ElasticNet {
        alpha: f64,
        l1_ratio: f64,
    },
    RandomForest {
        n_trees: usize,
        max_depth: usize,
        min_leaf: usize,
        feature_subsample: f64,
    },
    Gbt {
        n_rounds: usize,
        learning_rate: f64,
        max_depth: usize,
        lambda: f64,
        #[serde(default = "default_min_leaf")]
        min_leaf: usize,
    },
    Mlp {
        hidden_layers: Vec<usize>,
        learning_rate: f64,
        epochs: usize,
        batch_size: usize,
        #[serde(default)]
        init: Init,
    },
    Svr {
        epsilon: f64,
        c: f64,
        kernel: Kernel,
        gamma: f64,
        epochs: usize,
    },
    Stack {
        bases: Vec<RegressorSpec>,
        k: usize,
    },
}

impl Hyperparams {
    pub fn family(&self) -> Family {
        match self {
            Hyperparams::Ols => Family::Ols,
            Hyperparams::ElasticNet { .. } => Family::ElasticNet,
            Hyperparams::RandomForest { .. } => Family::RandomForest,
            Hyperparams::Gbt { .. } => Family::Gbt,
            Hyperparams::Mlp { .. } => Family::Mlp,
            Hyperparams::Svr { .. } => Family::Svr,
            Hyperparams::Stack { .. } => Family::Stack,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, reason: &str| Err(Error::invalid(field, reason));
        match self {
            Hyperparams::Ols => Ok(()),
            Hyperparams::ElasticNet { alpha, l1_ratio } => {
                if !(*alpha >= 0.0) {
                    return bad("alpha", "must be >= 0");
                }
                if !(0.0..=1.0).contains(l1_ratio) {
                    return bad("l1_ratio", "must lie in [0, 1]");
                }
                Ok(())
            }
            Hyperparams::RandomForest { n_trees, max_depth, min_leaf, feature_subsample } => {
                if *n_trees < 1 {
                    return bad("n_trees", "must be >= 1");
                }
                if *max_depth < 1 {
                    return bad("max_depth", "must be >= 1");
                }
                if *min_leaf < 1 {
                    return bad("min_leaf", "must be >= 1");
                }
                if !(*feature_subsample > 0.0 && *feature_subsample <= 1.0) {
                    return bad("feature_subsample", "must lie in (0, 1]");
                }
                Ok(())
            }
            Hyperparams::Gbt { n_rounds, learning_rate, max_depth, lambda, min_leaf } => {
                if *n_rounds < 1 {
                    return bad("n_rounds", "must be >= 1");
                }
                if !(*learning_rate > 0.0 && *learning_rate <= 1.0) {
                    return bad("learning_rate", "must lie in (0, 1]");
                }
                if *max_depth < 1 {
                    return bad("max_depth", "must be >= 1");
                }
                if !(*lambda >= 0.0) {
                    return bad("lambda", "must be >= 0");
                }
                if *min_leaf < 1 {
                    return bad("min_leaf", "must be >= 1");
                }
                Ok(())
            }
            Hyperparams::Mlp { hidden_layers, learning_rate, epochs, batch_size, .. } => {
                if hidden_layers.iter().any(|h| *h == 0) {
                    return bad("hidden_layers", "layer sizes must be positive");
                }
                if !(*learning_rate > 0.0 && learning_rate.is_finite()) {
                    return bad("learning_rate", "must be positive");
                }
                if *epochs < 1 {
                    return bad("epochs", "must be >= 1");
                }
                if *batch_size < 1 {
                    return bad("batch_size", "must be >= 1");
                }
                Ok(())
            }
            Hyperparams::Svr { epsilon, c, gamma, epochs, .. } => {
                if !(*epsilon >= 0.0) {
                    return bad("epsilon", "must be >= 0");
                }
                if !(*c > 0.0) {
                    return bad("C", "must be > 0");
                }
                if !(*gamma > 0.0) {
                    return bad("gamma", "must be > 0");
                }
                if *epochs < 1 {
                    return bad("epochs", "must be >= 1");
                }
                Ok(())
            }
            Hyperparams::Stack { bases, k } => {
                if bases.is_empty() {
                    return bad("bases", "need at least one base model");
                }
                if *k < 2 {
                    return bad("k", "must be >= 2");
                }
                bases.iter().try_for_each(|b| b.hyperparams.validate())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressorSpec {
    #[serde(flatten)]
    pub hyperparams: Hyperparams,
    pub seed: u64,
}

impl RegressorSpec {
    pub fn new(hyperparams: Hyperparams, seed: u64) -> Self {
        Self { hyperparams, seed }
    }

    pub fn family(&self) -> Family {
        self.hyperparams.family()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Params {
    Linear {
        coef: Vec<f64>,
        intercept: f64,
    },
    Forest {
        trees: Vec<tree::Tree>,
    },
    Boosted {
        base: f64,
        learning_rate: f64,
        trees: Vec<tree::Tree>,
    },
    Mlp {
        network: Network,
        y_mean: f64,
        y_std: f64,
    },
    KernelSvr {
        support: Matrix,
        alpha: Vec<f64>,
        intercept: f64,
        gamma: f64,
        y_mean: f64,
        y_std: f64,
    },
    Stack {
        bases: Vec<RegressorModel>,
        weights: Vec<f64>,
        intercept: f64,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub final_loss: f64,
    pub iterations: usize,
    /// Per-round (boosting) or per-epoch (MLP, SVR) training loss.
    #[serde(default)]
    pub loss_trace: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressorModel {
    pub spec: RegressorSpec,
    pub feature_names: Vec<String>,
    pub params: Params,
    pub training_summary: TrainingSummary,
}

pub fn default_feature_names(p: usize) -> Vec<String> {
    (0..p).map(|j| format!("x{j}")).collect()
}

pub(crate) fn check_xy(x: &Matrix, y: &[f64]) -> Result<()> {
    if x.rows() != y.len() {
        return Err(Error::invalid("y", format!("has {} values for {} rows", y.len(), x.rows())));
    }
    if x.rows() == 0 {
        return Err(Error::invalid("X", "has no rows"));
    }
    if x.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("X", "contains non-finite values"));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("y", "contains non-finite values"));
    }
    Ok(())
}

/// Fits any family. `feature_names` must have one entry per column of `x`.
pub fn fit(spec: &RegressorSpec, x: &Matrix, y: &[f64], feature_names: &[String]) -> Result<RegressorModel> {
    if feature_names.len() != x.cols() {
        return Err(Error::DimensionMismatch {
            expected: x.cols(),
            received: feature_names.len(),
        });
    }
    spec.hyperparams.validate()?;
    check_xy(x, y)?;
    let (params, training_summary) = match &spec.hyperparams {
        Hyperparams::Ols => ols::fit(x, y, feature_names)?,
        Hyperparams::ElasticNet { alpha, l1_ratio } => elastic_net::fit(x, y, *alpha, *l1_ratio)?,
        Hyperparams::RandomForest { .. } => ensemble::fit_forest(x, y, spec)?,
        Hyperparams::Gbt { .. } => ensemble::fit_boosted(x, y, spec)?,
        Hyperparams::Mlp { .. } => mlp::fit(x, y, spec)?,
        Hyperparams::Svr { .. } => svr::fit(x, y, spec)?,
        Hyperparams::Stack { bases, k } => stack::fit(x, y, bases, *k, spec.seed, feature_names)?,
    };
    Ok(RegressorModel {
        spec: spec.clone(),
        feature_names: feature_names.to_vec(),
        params,
        training_summary,
    })
}

impl RegressorModel {
    pub fn family(&self) -> Family {
        self.spec.family()
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.cols() != self.feature_names.len() {
            return Err(Error::DimensionMismatch {
                expected: self.feature_names.len(),
                received: x.cols(),
            });
        }
        Ok(x.row_iter().map(|r| self.predict_unchecked(r)).collect())
    }

    pub fn predict_row(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.feature_names.len() {
            return Err(Error::DimensionMismatch {
                expected: self.feature_names.len(),
                received: row.len(),
            });
        }
        Ok(self.predict_unchecked(row))
    }

    fn predict_unchecked(&self, row: &[f64]) -> f64 {
        match &self.params {
            Params::Linear { coef, intercept } => intercept + dot(coef, row),
            Params::Forest { trees } => trees.iter().map(|t| t.predict_row(row)).sum::<f64>() / trees.len() as f64,
            Params::Boosted { base, learning_rate, trees } => {
                trees.iter().fold(*base, |acc, t| acc + learning_rate * t.predict_row(row))
            }
            Params::Mlp { network, y_mean, y_std } => y_mean + y_std * network.forward_row(row),
            Params::KernelSvr { support, alpha, intercept, gamma, y_mean, y_std } => {
                let f = support
                    .row_iter()
                    .zip(alpha)
                    .fold(*intercept, |acc, (s, a)| acc + a * svr::rbf(s, row, *gamma));
                y_mean + y_std * f
            }
            Params::Stack { bases, weights, intercept } => {
                bases.iter().zip(weights).fold(*intercept, |acc, (b, w)| acc + w * b.predict_unchecked(row))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_json_is_tagged_by_family() {
        let spec = RegressorSpec::new(
            Hyperparams::ElasticNet {
                alpha: 0.1,
                l1_ratio: 0.5,
            },
            3,
        );
        let json = serde_json::to_value(&spec).unwrap();
        assert_eq!(json["family"], "elastic_net");
        assert_eq!(json["seed"], 3);
        assert_eq!(serde_json::from_value::<RegressorSpec>(json).unwrap(), spec);
    }

    #[test]
    fn dimension_mismatch_names_sizes() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0]]);
        let m = fit(&RegressorSpec::new(Hyperparams::Ols, 0), &x, &[1.0, 3.0, 5.0], &default_feature_names(1)).unwrap();
        let bad = Matrix::from_rows(&[[1.0, 2.0]]);
        assert!(matches!(m.predict(&bad), Err(Error::DimensionMismatch { expected: 1, received: 2 })));
        assert_eq!(m.predict(&Matrix::from_rows(&[[5.0]])).unwrap()[0], 11.0);
    }

    #[test]
    fn family_names_round_trip() {
        for f in Family::ZOO {
            assert_eq!(Family::parse(f.as_str()).unwrap(), f);
        }
        assert!(Family::parse("xgb").is_err());
    }
}
