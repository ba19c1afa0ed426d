use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::metrics::compute_metrics;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::regress::RegressorModel;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub model: String,
    pub mae: f64,
    pub mse: f64,
    pub r2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: String,
    pub rows: Vec<ReportRow>,
    pub best_model: String,
    pub seed: u64,
    pub corpus_hash: String,
}

/// A fitted model together with the hash of the feature pipeline that produced its inputs.
#[derive(Clone, Copy, Debug)]
pub struct ModelEntry<'a> {
    pub name: &'a str,
    pub model: &'a RegressorModel,
    pub pipeline_hash: &'a str,
}

/// Scores each model on the test split. All models must share one feature pipeline.
pub fn comparison_report(
    task: &str,
    models: &[ModelEntry<'_>],
    x_test: &Matrix,
    y_test: &[f64],
    seed: u64,
    corpus_hash: &str,
) -> Result<EvalReport> {
    let first = models.first().ok_or_else(|| Error::invalid("models", "need at least one model"))?;
    for m in models {
        if m.pipeline_hash != first.pipeline_hash {
            return Err(Error::PipelineMismatch {
                model: m.name.to_string(),
                expected: first.pipeline_hash.to_string(),
                found: m.pipeline_hash.to_string(),
            });
        }
    }
    let rows = models
        .iter()
        .map(|m| {
            let met = compute_metrics(y_test, &m.model.predict(x_test)?)?;
            Ok(ReportRow {
                model: m.name.to_string(),
                mae: met.mae,
                mse: met.mse,
                r2: met.r2,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport::new(task, rows, seed, corpus_hash))
}

impl EvalReport {
    pub fn new(task: &str, rows: Vec<ReportRow>, seed: u64, corpus_hash: &str) -> Self {
        let best_model = rows
            .iter()
            .min_by(|a, b| a.mae.total_cmp(&b.mae).then_with(|| a.model.cmp(&b.model)))
            .map(|r| r.model.clone())
            .unwrap_or_default();
        Self {
            task: task.to_string(),
            rows,
            best_model,
            seed,
            corpus_hash: corpus_hash.to_string(),
        }
    }

    pub fn row(&self, model: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.model == model)
    }

    /// Rows where mse < mae² beyond rounding (Jensen says this never happens).
    pub fn jensen_violations(&self) -> Vec<&str> {
        self.rows
            .iter()
            .filter(|r| r.mse < r.mae * r.mae * (1.0 - 1e-12))
            .map(|r| r.model.as_str())
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let w = self.rows.iter().map(|r| r.model.len()).max().unwrap_or(5).max(5);
        let mut s = format!("task: {}  seed: {}  corpus: {}\n", self.task, self.seed, self.corpus_hash);
        let _ = writeln!(s, "{:<w$}  {:>12}  {:>14}  {:>9}", "model", "MAE", "MSE", "R2");
        for r in &self.rows {
            let mark = if r.model == self.best_model { " *" } else { "" };
            let _ = writeln!(s, "{:<w$}  {:>12.4}  {:>14.4}  {:>9.4}{mark}", r.model, r.mae, r.mse, r.r2);
        }
        s
    }

    /// Plot-ready (model, mae, r2) table.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("model,mae,r2\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{}", r.model, r.mae, r.r2);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regress::fit_ols;

    fn fixture() -> (RegressorModel, Matrix, Vec<f64>) {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0], [3.0]]);
        let y = vec![0.0, 1.2, 1.9, 3.1];
        (fit_ols(&x, &y).unwrap(), x, y)
    }

    #[test]
    fn single_model_is_best() {
        let (m, x, y) = fixture();
        let r = comparison_report("emissions", &[ModelEntry { name: "ols", model: &m, pipeline_hash: "h" }], &x, &y, 7, "c").unwrap();
        assert_eq!(r.best_model, "ols");
        assert!(r.jensen_violations().is_empty());
        let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        for key in ["task", "rows", "best_model", "seed", "corpus_hash"] {
            assert!(json.get(key).is_some(), "{key}");
        }
        assert!(json["rows"][0].get("mse").is_some());
    }

    #[test]
    fn pipeline_mismatch() {
        let (m, x, y) = fixture();
        let entries = [
            ModelEntry { name: "a", model: &m, pipeline_hash: "h1" },
            ModelEntry { name: "b", model: &m, pipeline_hash: "h2" },
        ];
        assert!(matches!(comparison_report("t", &entries, &x, &y, 0, ""), Err(Error::PipelineMismatch { .. })));
    }

    #[test]
    fn ties_break_by_name() {
        let row = |m: &str| ReportRow { model: m.into(), mae: 1.0, mse: 1.0, r2: 0.0 };
        let r = EvalReport::new("t", vec![row("zeta"), row("alpha")], 0, "");
        assert_eq!(r.best_model, "alpha");
    }
}
