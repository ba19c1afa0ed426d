//! Frozen hyperparameter defaults. Changing any value requires bumping
//! `DEFAULTS_VERSION`, which is written into every report and bundle.

use super::{Family, Hyperparams, Init, Kernel, RegressorSpec};

pub const DEFAULTS_VERSION: &str = "defaults/1";

pub fn default_spec(family: Family, seed: u64) -> RegressorSpec {
    let hyperparams = match family {
        Family::Ols => Hyperparams::Ols,
        Family::ElasticNet => Hyperparams::ElasticNet {
            alpha: 0.01,
            l1_ratio: 0.5,
        },
        Family::RandomForest => Hyperparams::RandomForest {
            n_trees: 50,
            max_depth: 16,
            min_leaf: 1,
            feature_subsample: 0.8,
        },
        Family::Gbt => Hyperparams::Gbt {
            n_rounds: 300,
            learning_rate: 0.1,
            max_depth: 4,
            lambda: 5.0,
            min_leaf: 10,
        },
        Family::Mlp => Hyperparams::Mlp {
            hidden_layers: vec![11, 11, 11],
            learning_rate: 0.01,
            epochs: 100,
            batch_size: 32,
            init: Init::HeUniform,
        },
        Family::Svr => Hyperparams::Svr {
            epsilon: 0.1,
            c: 1.0,
            kernel: Kernel::Linear,
            gamma: 0.1,
            epochs: 30,
        },
        Family::Stack => Hyperparams::Stack {
            bases: [Family::Ols, Family::RandomForest, Family::Gbt]
                .into_iter()
                .map(|f| default_spec(f, seed))
                .collect(),
            k: 5,
        },
    };
    RegressorSpec::new(hyperparams, seed)
}

/// Small tuning grid around the default, default first.
pub fn default_grid(family: Family, seed: u64) -> Vec<RegressorSpec> {
    let base = default_spec(family, seed);
    let mut grid = vec![base.clone()];
    let vary = |f: &dyn Fn(&mut Hyperparams)| {
        let mut s = base.clone();
        f(&mut s.hyperparams);
        s
    };
    match family {
        Family::ElasticNet => {
            for a in [0.1, 1.0] {
                grid.push(vary(&|h| {
                    if let Hyperparams::ElasticNet { alpha, .. } = h {
                        *alpha = a;
                    }
                }));
            }
        }
        Family::RandomForest => {
            for d in [8, 24] {
                grid.push(vary(&|h| {
                    if let Hyperparams::RandomForest { max_depth, .. } = h {
                        *max_depth = d;
                    }
                }));
            }
        }
        Family::Gbt => {
            for d in [2, 6] {
                grid.push(vary(&|h| {
                    if let Hyperparams::Gbt { max_depth, .. } = h {
                        *max_depth = d;
                    }
                }));
            }
        }
        Family::Mlp => {
            for lr in [0.003, 0.03] {
                grid.push(vary(&|h| {
                    if let Hyperparams::Mlp { learning_rate, .. } = h {
                        *learning_rate = lr;
                    }
                }));
            }
        }
        Family::Svr => {
            for cc in [0.1, 10.0] {
                grid.push(vary(&|h| {
                    if let Hyperparams::Svr { c, .. } = h {
                        *c = cc;
                    }
                }));
            }
        }
        Family::Ols | Family::Stack => {}
    }
    grid
}
