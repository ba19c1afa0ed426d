use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{squared_distance, Matrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointClass {
    Core,
    Border,
    Noise,
}

pub const NOISE: i64 = -1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DbscanModel {
    pub eps: f64,
    pub min_pts: usize,
    /// Cluster id per point, `NOISE` for noise.
    pub labels: Vec<i64>,
    pub point_class: Vec<PointClass>,
}

impl DbscanModel {
    pub fn n_clusters(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| (m + 1).max(0) as usize)
    }

    pub fn noise_indices(&self) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] == NOISE).collect()
    }
}

/// Ascending indices of all points within `eps` of point `i` (itself included).
fn neighbourhoods(x: &Matrix, eps: f64) -> Vec<Vec<u32>> {
    let eps2 = eps * eps;
    (0..x.rows())
        .into_par_iter()
        .map(|i| {
            let xi = x.row(i);
            (0..x.rows())
                .filter(|&j| squared_distance(xi, x.row(j)) <= eps2)
                .map(|j| j as u32)
                .collect()
        })
        .collect()
}

/// Clusters are numbered in order of their lowest-index core point; a border
/// point reachable from several clusters joins the lowest-numbered one.
pub fn dbscan_fit(x: &Matrix, eps: f64, min_pts: usize) -> Result<DbscanModel> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::invalid("eps", "must be a positive finite number"));
    }
    if min_pts < 1 {
        return Err(Error::invalid("min_pts", "must be at least 1"));
    }
    if x.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("X", "contains non-finite values"));
    }
    let n = x.rows();
    let nbrs = neighbourhoods(x, eps);
    let core: Vec<bool> = nbrs.iter().map(|nb| nb.len() >= min_pts).collect();
    let mut labels = vec![NOISE; n];
    let mut next = 0i64;
    let mut queue = VecDeque::new();
    for start in 0..n {
        if !core[start] || labels[start] != NOISE {
            continue;
        }
        labels[start] = next;
        queue.push_back(start);
        while let Some(p) = queue.pop_front() {
            for &q in &nbrs[p] {
                let q = q as usize;
                if labels[q] == NOISE {
                    labels[q] = next;
                    if core[q] {
                        queue.push_back(q);
                    }
                }
            }
        }
        next += 1;
    }
    let point_class = (0..n)
        .map(|i| match (core[i], labels[i]) {
            (true, _) => PointClass::Core,
            (false, NOISE) => PointClass::Noise,
            _ => PointClass::Border,
        })
        .collect();
    Ok(DbscanModel {
        eps,
        min_pts,
        labels,
        point_class,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KDistanceProfile {
    pub k: usize,
    /// k-th nearest neighbour distance of each point, in row order.
    pub per_point: Vec<f64>,
    /// The same values sorted ascending.
    pub sorted: Vec<f64>,
    pub knee_index: usize,
    pub suggested_eps: f64,
}

/// Distance from each point to its k-th nearest neighbour (self excluded).
///
/// The knee is the point of the sorted profile farthest below the chord
/// joining its endpoints, after scaling both axes to [0, 1].
pub fn k_distance_profile(x: &Matrix, k: usize) -> Result<KDistanceProfile> {
    let n = x.rows();
    if k < 1 || k >= n {
        return Err(Error::invalid("k", format!("must satisfy 1 <= k < n (k = {k}, n = {n})")));
    }
    let per_point: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = x.row(i);
            let mut d: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| squared_distance(xi, x.row(j))).collect();
            let (_, kth, _) = d.select_nth_unstable_by(k - 1, f64::total_cmp);
            kth.sqrt()
        })
        .collect();
    let mut sorted = per_point.clone();
    sorted.sort_by(f64::total_cmp);
    let knee_index = knee(&sorted);
    Ok(KDistanceProfile {
        k,
        suggested_eps: sorted[knee_index],
        per_point,
        sorted,
        knee_index,
    })
}

fn knee(sorted: &[f64]) -> usize {
    let n = sorted.len();
    let (lo, hi) = (sorted[0], sorted[n - 1]);
    if n < 3 || hi <= lo {
        return n / 2;
    }
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in sorted.iter().enumerate().take(n - 1).skip(1) {
        let gap = i as f64 / (n - 1) as f64 - (v - lo) / (hi - lo);
        if gap > best.1 {
            best = (i, gap);
        }
    }
    best.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_blobs_and_a_stray() {
        let mut rows = Vec::new();
        for i in 0..5 {
            rows.push([i as f64 * 0.1, 0.0]);
            rows.push([10.0 + i as f64 * 0.1, 0.0]);
        }
        rows.push([50.0, 50.0]);
        let m = dbscan_fit(&Matrix::from_rows(&rows), 0.15, 3).unwrap();
        assert_eq!(m.n_clusters(), 2);
        assert_eq!(m.noise_indices(), vec![10]);
    }

    #[test]
    fn identical_points() {
        let m = dbscan_fit(&Matrix::from_rows(&vec![[1.0, 1.0]; 6]), 0.5, 6).unwrap();
        assert_eq!(m.labels, vec![0; 6]);
    }

    #[test]
    fn bad_parameters() {
        let x = Matrix::from_rows(&[[0.0]]);
        assert!(dbscan_fit(&x, 0.0, 1).is_err());
        assert!(dbscan_fit(&x, 1.0, 0).is_err());
    }

    #[test]
    fn grid_k_distance() {
        let rows: Vec<[f64; 1]> = (0..10).map(|i| [0.5 * i as f64]).collect();
        let p = k_distance_profile(&Matrix::from_rows(&rows), 1).unwrap();
        assert!(p.sorted.iter().all(|d| (d - 0.5).abs() < 1e-12));
        assert!(k_distance_profile(&Matrix::from_rows(&rows), 10).is_err());
    }
}
