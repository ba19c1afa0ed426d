use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, jacobi_eigen, Matrix};

pub const EIGEN_TOL: f64 = 1e-10;
pub const EIGEN_MAX_SWEEPS: usize = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaProjection {
    pub mean: Vec<f64>,
    /// n_components x d, orthonormal rows.
    pub components: Matrix,
    pub explained_variance: Vec<f64>,
    pub scores: Matrix,
}

impl PcaProjection {
    pub fn project_row(&self, x: &[f64]) -> Vec<f64> {
        let c: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        self.components.row_iter().map(|r| dot(r, &c)).collect()
    }
}

/// Principal components of the sample covariance (n - 1 denominator).
pub fn pca_project(x: &Matrix, n_components: usize) -> Result<PcaProjection> {
    let (n, d) = (x.rows(), x.cols());
    if n_components < 1 || n_components > d {
        return Err(Error::invalid("n_components", format!("must lie in [1, {d}]")));
    }
    if n < 2 {
        return Err(Error::invalid("X", "needs at least 2 rows"));
    }
    let mean = x.column_means();
    let mut centered = x.clone();
    for i in 0..n {
        for (v, m) in centered.row_mut(i).iter_mut().zip(&mean) {
            *v -= m;
        }
    }
    let mut cov = centered.transpose().matmul(&centered);
    for i in 0..d {
        for v in cov.row_mut(i) {
            *v /= (n - 1) as f64;
        }
    }
    let (values, vectors) = jacobi_eigen(&cov, EIGEN_TOL, EIGEN_MAX_SWEEPS);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));

    let mut rows = Vec::with_capacity(n_components);
    for &j in order.iter().take(n_components) {
        let mut v = vectors.column(j);
        let mut big = 0;
        for (i, c) in v.iter().enumerate() {
            if c.abs() > v[big].abs() {
                big = i;
            }
        }
        if v[big] < 0.0 {
            v.iter_mut().for_each(|c| *c = -*c);
        }
        rows.push(v);
    }
    let components = Matrix::from_rows(&rows);
    let explained_variance = order.iter().take(n_components).map(|&j| values[j].max(0.0)).collect();
    let scores = centered.matmul(&components.transpose());
    Ok(PcaProjection {
        mean,
        components,
        explained_variance,
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_line() {
        let rows: Vec<[f64; 2]> = (0..6).map(|i| [i as f64, 2.0 * i as f64]).collect();
        let p = pca_project(&Matrix::from_rows(&rows), 2).unwrap();
        let s = 5f64.sqrt();
        assert!((p.components[(0, 0)] - 1.0 / s).abs() < 1e-9);
        assert!((p.components[(0, 1)] - 2.0 / s).abs() < 1e-9);
        assert!(p.explained_variance[1].abs() < 1e-9);
    }

    #[test]
    fn too_many_components() {
        assert!(pca_project(&Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]), 3).is_err());
    }
}
