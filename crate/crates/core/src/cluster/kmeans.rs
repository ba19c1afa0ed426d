use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{squared_distance, Matrix};
use crate::rng::SeededRng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KMeansModel {
    pub k: usize,
    pub centroids: Matrix,
    pub labels: Vec<usize>,
    pub inertia: f64,
    pub iterations_run: usize,
    /// Inertia after each assignment step of the winning restart.
    pub inertia_trace: Vec<f64>,
}

#[derive(Clone, Copy, Debug)]
pub struct KMeansOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub n_init: usize,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self {
            max_iter: 300,
            tol: 1e-6,
            n_init: 1,
        }
    }
}

impl KMeansModel {
    /// Index of the nearest centroid (lowest index on ties).
    pub fn predict_row(&self, x: &[f64]) -> usize {
        nearest(&self.centroids, x).0
    }
}

fn nearest(c: &Matrix, x: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for j in 0..c.rows() {
        let d = squared_distance(c.row(j), x);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

pub fn kmeans_fit(x: &Matrix, k: usize, seed: u64) -> Result<KMeansModel> {
    kmeans_fit_with(x, k, seed, KMeansOptions::default())
}

/// k-means++ seeding and Lloyd iterations; with `n_init > 1` the restart with
/// the lowest inertia wins (earliest on ties). Restart `r` draws from the rng
/// stream derived from (seed, r).
pub fn kmeans_fit_with(x: &Matrix, k: usize, seed: u64, opts: KMeansOptions) -> Result<KMeansModel> {
    let n = x.rows();
    if k < 1 {
        return Err(Error::invalid("k", "must be at least 1"));
    }
    if k > n {
        return Err(Error::invalid("k", format!("k = {k} exceeds the number of points ({n})")));
    }
    if x.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("X", "contains non-finite values"));
    }
    let runs: Vec<KMeansModel> = (0..opts.n_init.max(1))
        .into_par_iter()
        .map(|r| {
            let mut rng = SeededRng::derive(seed, r as u64);
            lloyd(x, plus_plus(x, k, &mut rng), opts)
        })
        .collect();
    let mut best = 0;
    for (i, m) in runs.iter().enumerate() {
        if m.inertia < runs[best].inertia {
            best = i;
        }
    }
    Ok(runs.into_iter().nth(best).unwrap())
}

fn plus_plus(x: &Matrix, k: usize, rng: &mut SeededRng) -> Matrix {
    let n = x.rows();
    let mut chosen = vec![rng.below(n)];
    let mut d2: Vec<f64> = (0..n).map(|i| squared_distance(x.row(i), x.row(chosen[0]))).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 { rng.categorical(&d2) } else { rng.below(n) };
        chosen.push(next);
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(squared_distance(x.row(i), x.row(next)));
        }
    }
    Matrix::from_rows(&chosen.iter().map(|&i| x.row(i).to_vec()).collect::<Vec<_>>())
}

fn assign(x: &Matrix, c: &Matrix, labels: &mut [usize]) -> f64 {
    let mut inertia = 0.0;
    for (i, l) in labels.iter_mut().enumerate() {
        let (j, d) = nearest(c, x.row(i));
        *l = j;
        inertia += d;
    }
    inertia
}

/// Cluster means. An empty cluster takes the point farthest from its current
/// centroid (drawn from a cluster that keeps at least one member).
fn update(x: &Matrix, c: &Matrix, labels: &mut [usize]) -> Matrix {
    let (n, d, k) = (x.rows(), x.cols(), c.rows());
    let mut counts = vec![0usize; k];
    for &l in labels.iter() {
        counts[l] += 1;
    }
    for j in 0..k {
        if counts[j] > 0 {
            continue;
        }
        let mut far = None;
        let mut far_d = -1.0;
        for i in 0..n {
            if counts[labels[i]] > 1 {
                let dist = squared_distance(x.row(i), c.row(labels[i]));
                if dist > far_d {
                    far_d = dist;
                    far = Some(i);
                }
            }
        }
        let i = far.expect("k <= n leaves a donor cluster");
        counts[labels[i]] -= 1;
        labels[i] = j;
        counts[j] = 1;
    }
    let mut out = Matrix::zeros(k, d);
    for i in 0..n {
        let row = out.row_mut(labels[i]);
        for (o, v) in row.iter_mut().zip(x.row(i)) {
            *o += v;
        }
    }
    for j in 0..k {
        let cnt = counts[j] as f64;
        for v in out.row_mut(j) {
            *v /= cnt;
        }
    }
    out
}

fn sse(x: &Matrix, c: &Matrix, labels: &[usize]) -> f64 {
    (0..x.rows()).map(|i| squared_distance(x.row(i), c.row(labels[i]))).sum()
}

/// Single-point transfers after Lloyd has settled: move point i from A to B
/// whenever n_B/(n_B+1) |x-c_B|^2 < n_A/(n_A-1) |x-c_A|^2, which lowers the
/// inertia strictly. Lloyd stops at any Voronoi-consistent partition; this
/// escapes many of those local minima. Returns whether anything moved.
fn hartigan(x: &Matrix, c: &mut Matrix, labels: &mut [usize], max_passes: usize) -> bool {
    let (n, k) = (x.rows(), c.rows());
    let mut counts = vec![0usize; k];
    for &l in labels.iter() {
        counts[l] += 1;
    }
    let mut any = false;
    for _ in 0..max_passes {
        let mut moved = false;
        for i in 0..n {
            let a = labels[i];
            if counts[a] < 2 {
                continue;
            }
            let xi = x.row(i);
            let na = counts[a] as f64;
            let cost_out = na / (na - 1.0) * squared_distance(xi, c.row(a));
            let mut best = (a, cost_out);
            for b in (0..k).filter(|&b| b != a) {
                let nb = counts[b] as f64;
                let cost_in = nb / (nb + 1.0) * squared_distance(xi, c.row(b));
                // relative margin so rounding cannot cycle a point back and forth
                if cost_in < best.1 * (1.0 - 1e-12) {
                    best = (b, cost_in);
                }
            }
            let b = best.0;
            if b == a {
                continue;
            }
            let nb = counts[b] as f64;
            for (cj, v) in c.row_mut(a).iter_mut().zip(xi) {
                *cj = (*cj * na - v) / (na - 1.0);
            }
            for (cj, v) in c.row_mut(b).iter_mut().zip(xi) {
                *cj = (*cj * nb + v) / (nb + 1.0);
            }
            counts[a] -= 1;
            counts[b] += 1;
            labels[i] = b;
            moved = true;
        }
        if !moved {
            break;
        }
        any = true;
    }
    if any {
        // recompute means exactly rather than trusting the running updates
        let mut l = labels.to_vec();
        *c = update(x, c, &mut l);
    }
    any
}

fn lloyd(x: &Matrix, mut c: Matrix, opts: KMeansOptions) -> KMeansModel {
    let n = x.rows();
    let k = c.rows();
    let mut labels = vec![0; n];
    let mut trace = vec![assign(x, &c, &mut labels)];
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let mut moved = labels.clone();
        let next = update(x, &c, &mut moved);
        let shift = (0..k)
            .map(|j| squared_distance(c.row(j), next.row(j)).sqrt())
            .fold(0.0, f64::max);
        c = next;
        let mut new_labels = vec![0; n];
        trace.push(assign(x, &c, &mut new_labels));
        let unchanged = new_labels == moved;
        labels = new_labels;
        if unchanged || shift < opts.tol {
            break;
        }
    }
    // centroids as exact means of the final assignment
    let mut final_labels = labels.clone();
    c = update(x, &c, &mut final_labels);
    labels = final_labels;
    if hartigan(x, &mut c, &mut labels, opts.max_iter) {
        trace.push(sse(x, &c, &labels));
    }
    let inertia = sse(x, &c, &labels);
    KMeansModel {
        k,
        centroids: c,
        labels,
        inertia,
        iterations_run: iterations,
        inertia_trace: trace,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Elbow {
    pub chosen_k: usize,
    /// (k, best-of-restarts inertia)
    pub curve: Vec<(usize, f64)>,
}

pub const ELBOW_RESTARTS: usize = 5;

/// Fits k-means (best of 5 restarts, shared seed) for every k in `k_min..=k_max`
/// and picks the interior k maximising I(k-1) - 2 I(k) + I(k+1), smaller k on ties.
pub fn elbow_select_k(x: &Matrix, k_min: usize, k_max: usize, seed: u64) -> Result<Elbow> {
    if k_min < 1 || k_max > x.rows() || k_min > k_max {
        return Err(Error::invalid("k_range", format!("must lie within [1, {}]", x.rows())));
    }
    if k_max - k_min < 2 {
        return Err(Error::invalid("k_range", "needs at least 3 values for curvature"));
    }
    let opts = KMeansOptions {
        n_init: ELBOW_RESTARTS,
        ..KMeansOptions::default()
    };
    let curve = (k_min..=k_max)
        .map(|k| Ok((k, kmeans_fit_with(x, k, seed, opts)?.inertia)))
        .collect::<Result<Vec<_>>>()?;
    let top = curve.iter().map(|c| c.1).fold(0.0, f64::max);
    if top <= 0.0 {
        return Err(Error::DegenerateCurve(top));
    }
    let mut chosen = curve[1].0;
    let mut best = f64::NEG_INFINITY;
    for w in curve.windows(3) {
        let curv = w[0].1 - 2.0 * w[1].1 + w[2].1;
        if curv > best {
            best = curv;
            chosen = w[1].0;
        }
    }
    Ok(Elbow { chosen_k: chosen, curve })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_obvious_pairs() {
        let x = Matrix::from_rows(&[[0.0, 0.0], [0.0, 1.0], [10.0, 10.0], [10.0, 11.0]]);
        let m = kmeans_fit(&x, 2, 1).unwrap();
        assert!((m.inertia - 1.0).abs() < 1e-12);
        let mut c: Vec<Vec<f64>> = m.centroids.row_iter().map(<[f64]>::to_vec).collect();
        c.sort_by(|a, b| a[0].total_cmp(&b[0]));
        assert_eq!(c, vec![vec![0.0, 0.5], vec![10.0, 10.5]]);
    }

    #[test]
    fn k_one_is_mean() {
        let x = Matrix::from_rows(&[[1.0, 2.0], [3.0, 6.0], [5.0, 1.0]]);
        let m = kmeans_fit(&x, 1, 0).unwrap();
        assert_eq!(m.labels, vec![0, 0, 0]);
        assert!((m.centroids[(0, 0)] - 3.0).abs() < 1e-12 && (m.centroids[(0, 1)] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn k_out_of_range() {
        let x = Matrix::from_rows(&[[1.0], [2.0]]);
        assert!(kmeans_fit(&x, 3, 0).is_err());
        assert!(kmeans_fit(&x, 0, 0).is_err());
    }

    #[test]
    fn identical_points_fill_every_cluster() {
        let x = Matrix::from_rows(&[[1.0], [1.0], [1.0], [1.0]]);
        let m = kmeans_fit(&x, 3, 0).unwrap();
        let mut seen = m.labels.clone();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 3);
        assert_eq!(m.inertia, 0.0);
    }

    #[test]
    fn degenerate_elbow() {
        let x = Matrix::from_rows(&vec![[2.0, 2.0]; 10]);
        assert!(matches!(elbow_select_k(&x, 1, 5, 0), Err(Error::DegenerateCurve(_))));
    }

    #[test]
    fn elbow_range_too_short() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0], [3.0]]);
        assert!(elbow_select_k(&x, 1, 2, 0).is_err());
    }
}
