//! Acceptance criteria on the default corpus (n = 5000, seed 7). Thresholds
//! are pinned here and re-applied to the measured values, independently of
//! the verdicts the checks compute for `repro`.

use std::io::Write;

use greenroute_cli::checks::{run_all, Outcome};

const SEED: u64 = 7;

fn v(o: &Outcome, name: &str) -> f64 {
    o.value(name).unwrap_or(f64::NAN)
}

fn pinned(o: &Outcome) -> bool {
    match o.id {
        1 => {
            let tree_mae = v(o, "gbt_mae").max(v(o, "rf_mae"));
            v(o, "gbt_r2") >= 0.99
                && v(o, "rf_r2") >= 0.99
                && v(o, "ols_r2") >= 0.90
                && v(o, "enet_r2") >= 0.90
                && v(o, "ols_mae") > tree_mae
                && v(o, "enet_mae") > tree_mae
        }
        2 => {
            let linear = v(o, "ols_r2").max(v(o, "enet_r2"));
            v(o, "gbt_r2") >= linear + 0.2 && v(o, "gbt_mae") < v(o, "other_min_mae") && linear <= 0.1
        }
        3 => {
            let (ols, mlp) = (v(o, "ols_r2"), v(o, "mlp_r2"));
            (0.55..=0.70).contains(&ols) && (0.55..=0.70).contains(&mlp) && (ols - mlp).abs() <= 0.05
        }
        4 => v(o, "k") == 3.0 && v(o, "ari") >= 0.9,
        5 => v(o, "injected") == 48.0 && v(o, "recall") >= 0.95 && v(o, "fpr") <= 0.02,
        6 => v(o, "fuel_rank_first") == 1.0,
        7 => {
            v(o, "ols_err") < 1e-8
                && v(o, "kmeans_gap") <= 1e-9
                && v(o, "dbscan_mismatches") == 0.0
                && v(o, "pca_err") < 1e-8
                && v(o, "lasso_err") < 1e-6
        }
        8 => {
            v(o, "mlp_grad_rel_err") < 1e-4
                && v(o, "gbt_monotone") == 1.0
                && v(o, "jensen_violations") == 0.0
                && v(o, "shifted_linear_r2") < 0.0
                && v(o, "shifted_linear_r2_formula_gap") <= 1e-12
        }
        9 => {
            v(o, "artifacts_identical") == 1.0
                && v(o, "http_answers") >= 300.0
                && v(o, "http_mismatches") == 0.0
                && v(o, "concurrent_mismatches") == 0.0
        }
        _ => false,
    }
}

#[test]
fn acceptance() {
    let (_, outcomes) = run_all(SEED).expect("pipeline runs");
    assert_eq!(outcomes.len(), 9);
    // written straight to stderr so the lines survive output capture
    let mut err = std::io::stderr().lock();
    let mut failed = Vec::new();
    for o in &outcomes {
        let ok = pinned(o);
        let verdict = if ok { "PASS" } else { "FAIL" };
        writeln!(err, "{verdict} criterion {}: {} ({})", o.id, o.name, o.detail).unwrap();
        assert_eq!(ok, o.pass, "criterion {} verdict differs from the checks module", o.id);
        if !ok {
            failed.push(o.id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
