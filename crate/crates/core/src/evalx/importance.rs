use crate::error::{Error, Result};
use crate::regress::{Params, RegressorModel};

/// Gain importance summed over every split of every tree, normalized to sum 1,
/// sorted descending (feature order breaks ties).
pub fn feature_importance(model: &RegressorModel) -> Result<Vec<(String, f64)>> {
    let trees = match &model.params {
        Params::Forest { trees } | Params::Boosted { trees, .. } => trees,
        _ => return Err(Error::UnsupportedFamily(model.family().to_string())),
    };
    let mut gain = vec![0.0; model.feature_names.len()];
    for t in trees {
        t.accumulate_gain(&mut gain);
    }
    let total: f64 = gain.iter().sum();
    if !(total > 0.0) {
        return Err(Error::invalid("model", "no splits, so importance is undefined"));
    }
    let mut out: Vec<(String, f64)> = model
        .feature_names
        .iter()
        .cloned()
        .zip(gain.into_iter().map(|g| g / total))
        .collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::regress::{default_spec, fit, fit_ols, Family};
    use crate::rng::SeededRng;

    #[test]
    fn single_relevant_feature_dominates() {
        let mut rng = SeededRng::new(1);
        let rows: Vec<[f64; 2]> = (0..300).map(|_| [rng.normal(), rng.normal()]).collect();
        let y: Vec<f64> = rows.iter().map(|r| 5.0 * r[0]).collect();
        let x = Matrix::from_rows(&rows);
        let names = vec!["A".to_string(), "B".to_string()];
        for fam in [Family::Gbt, Family::RandomForest] {
            let m = fit(&default_spec(fam, 3), &x, &y, &names).unwrap();
            let imp = feature_importance(&m).unwrap();
            assert_eq!(imp[0].0, "A");
            assert!(imp[0].1 >= 0.95, "{fam}: {imp:?}");
            assert!((imp.iter().map(|p| p.1).sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn linear_model_unsupported() {
        let m = fit_ols(&Matrix::from_rows(&[[0.0], [1.0], [3.0]]), &[0.0, 1.0, 2.0]).unwrap();
        assert!(matches!(feature_importance(&m), Err(Error::UnsupportedFamily(_))));
    }
}
