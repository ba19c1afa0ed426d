use serde::{Deserialize, Serialize};

use super::dbscan::{dbscan_fit, k_distance_profile, DbscanModel};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::tabular::Dataset;

pub const OUTLIER_COLUMNS: [&str; 2] = ["distance_km", "transit_time_days"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutlierReport {
    pub outlier_indices: Vec<usize>,
    pub model: DbscanModel,
    /// k-th neighbour distance per row; larger means more isolated.
    pub severity: Vec<f64>,
}

/// z-scores of `v` (population standard deviation).
pub fn zscore(v: &[f64], name: &str) -> Result<Vec<f64>> {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    if sd <= 1e-12 * mean.abs().max(1.0) {
        return Err(Error::ZeroVariance(name.to_string()));
    }
    Ok(v.iter().map(|x| (x - mean) / sd).collect())
}

/// DBSCAN noise on z-scored (distance_km, transit_time_days).
///
/// `min_pts` defaults to 4 (twice the dimension); `eps` defaults to the knee
/// of the k-distance profile with k = min_pts.
pub fn detect_transit_outliers(data: &Dataset, min_pts: Option<usize>, eps: Option<f64>) -> Result<OutlierReport> {
    if data.n_rows() == 0 {
        return Err(Error::invalid("data", "dataset is empty"));
    }
    let cols = OUTLIER_COLUMNS
        .iter()
        .map(|c| zscore(&data.numeric_column(c)?, c))
        .collect::<Result<Vec<_>>>()?;
    let x = Matrix::from_columns(&cols);
    let min_pts = min_pts.unwrap_or(2 * OUTLIER_COLUMNS.len());
    let k = min_pts.min(x.rows() - 1).max(1);
    let profile = k_distance_profile(&x, k)?;
    let eps = eps.unwrap_or(profile.suggested_eps);
    let model = dbscan_fit(&x, eps, min_pts)?;
    Ok(OutlierReport {
        outlier_indices: model.noise_indices(),
        model,
        severity: profile.per_point,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutlierMethod {
    Iqr,
    ZScore,
}

impl OutlierMethod {
    pub fn default_threshold(self) -> f64 {
        match self {
            OutlierMethod::Iqr => 1.5,
            OutlierMethod::ZScore => 3.0,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "iqr" => Ok(OutlierMethod::Iqr),
            "z_score" | "zscore" => Ok(OutlierMethod::ZScore),
            _ => Err(Error::invalid("method", format!("unknown outlier method {s:?}"))),
        }
    }
}

/// Quantile by linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Indices of the values kept by the rule, ascending.
pub fn filter_outliers(column: &[f64], method: OutlierMethod, threshold: Option<f64>) -> Result<Vec<usize>> {
    let t = threshold.unwrap_or(method.default_threshold());
    if !(t > 0.0) {
        return Err(Error::invalid("threshold", "must be positive"));
    }
    if column.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("column", "contains non-finite values"));
    }
    let keep: Box<dyn Fn(f64) -> bool> = match method {
        OutlierMethod::Iqr => {
            if column.len() < 4 {
                return Err(Error::invalid("column", "iqr needs at least 4 values"));
            }
            let mut s = column.to_vec();
            s.sort_by(f64::total_cmp);
            let (q1, q3) = (quantile(&s, 0.25), quantile(&s, 0.75));
            let iqr = q3 - q1;
            let (lo, hi) = (q1 - t * iqr, q3 + t * iqr);
            Box::new(move |v| v >= lo && v <= hi)
        }
        OutlierMethod::ZScore => {
            let z = zscore(column, "column")?;
            return Ok((0..column.len()).filter(|&i| z[i].abs() <= t).collect());
        }
    };
    Ok((0..column.len()).filter(|&i| keep(column[i])).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iqr_drops_the_spike() {
        let kept = filter_outliers(&[1.0, 2.0, 3.0, 4.0, 100.0], OutlierMethod::Iqr, None).unwrap();
        assert_eq!(kept, vec![0, 1, 2, 3]);
    }

    #[test]
    fn constant_column_under_iqr() {
        assert_eq!(filter_outliers(&[5.0; 6], OutlierMethod::Iqr, None).unwrap().len(), 6);
    }

    #[test]
    fn zero_variance_under_z() {
        assert!(matches!(
            filter_outliers(&[0.0; 3], OutlierMethod::ZScore, None),
            Err(Error::ZeroVariance(_))
        ));
    }

    #[test]
    fn z_rule() {
        let mut v = vec![0.0; 20];
        v[0] = 10.0;
        v[1] = 1.0;
        assert_eq!(filter_outliers(&v, OutlierMethod::ZScore, Some(3.0)).unwrap()[0], 1);
    }

    #[test]
    fn iqr_needs_four() {
        assert!(filter_outliers(&[1.0, 2.0, 3.0], OutlierMethod::Iqr, None).is_err());
    }
}
