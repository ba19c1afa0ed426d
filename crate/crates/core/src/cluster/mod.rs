//! k-means with elbow selection, DBSCAN with a k-distance eps heuristic,
//! PCA projection and transit outlier detection.

mod dbscan;
mod kmeans;
mod outliers;
mod pca;

use std::collections::HashMap;
use std::hash::Hash;
use std::io::Write;

pub use dbscan::{dbscan_fit, k_distance_profile, DbscanModel, KDistanceProfile, PointClass, NOISE};
pub use kmeans::{elbow_select_k, kmeans_fit, kmeans_fit_with, Elbow, KMeansModel, KMeansOptions, ELBOW_RESTARTS};
pub use outliers::{
    detect_transit_outliers, filter_outliers, quantile, zscore, OutlierMethod, OutlierReport, OUTLIER_COLUMNS,
};
pub use pca::{pca_project, PcaProjection, EIGEN_MAX_SWEEPS, EIGEN_TOL};

use crate::error::Result;
use crate::linalg::Matrix;
use crate::pipeline::{FeaturePipeline, Task};
use crate::tabular::Dataset;

/// z-scored (distance_km, traffic_level, transit_time_days), with statistics
/// taken from `data` itself.
pub fn route_features(data: &Dataset) -> Result<(FeaturePipeline, Matrix)> {
    let p = FeaturePipeline::fit(Task::Cluster, data)?;
    let x = p.transform(data)?;
    Ok((p, x))
}

fn pairs(c: u64) -> f64 {
    (c * c.saturating_sub(1)) as f64 / 2.0
}

/// Adjusted Rand index between two labelings of the same points.
pub fn adjusted_rand_index<A: Eq + Hash, B: Eq + Hash>(a: &[A], b: &[B]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings differ in length");
    let mut table: HashMap<(&A, &B), u64> = HashMap::new();
    let mut rows: HashMap<&A, u64> = HashMap::new();
    let mut cols: HashMap<&B, u64> = HashMap::new();
    for (x, y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&c| pairs(c)).sum();
    let sa: f64 = rows.values().map(|&c| pairs(c)).sum();
    let sb: f64 = cols.values().map(|&c| pairs(c)).sum();
    let expected = sa * sb / pairs(a.len() as u64).max(1.0);
    let max = 0.5 * (sa + sb);
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

pub fn write_inertia_csv<W: Write>(curve: &[(usize, f64)], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["k", "inertia"])?;
    for (k, i) in curve {
        out.write_record([k.to_string(), i.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_k_distance_csv<W: Write>(sorted: &[f64], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["rank", "distance"])?;
    for (r, d) in sorted.iter().enumerate() {
        out.write_record([r.to_string(), d.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

/// Rows of (pc1, pc2, cluster_label, is_outlier).
pub fn write_pca_scatter_csv<W: Write>(scores: &Matrix, labels: &[i64], outlier: &[bool], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["pc1", "pc2", "cluster_label", "is_outlier"])?;
    for i in 0..scores.rows() {
        let r = scores.row(i);
        out.write_record([
            r[0].to_string(),
            r.get(1).copied().unwrap_or(0.0).to_string(),
            labels[i].to_string(),
            outlier[i].to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
