use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeededRng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub train_indices: Vec<usize>,
    pub valid_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub fractions: [f64; 3],
    pub seed: u64,
}

pub const DEFAULT_FRACTIONS: [f64; 3] = [0.7, 0.15, 0.15];

/// Sizes by largest remainder: floor every share, then hand the leftover rows
/// to the largest fractional parts, lower index first on ties.
pub fn largest_remainder(n: usize, fractions: &[f64]) -> Vec<usize> {
    let raw: Vec<f64> = fractions.iter().map(|f| f * n as f64).collect();
    let mut sizes: Vec<usize> = raw.iter().map(|r| (r + 1e-9).floor() as usize).collect();
    let assigned: usize = sizes.iter().sum();
    let mut order: Vec<usize> = (0..fractions.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = raw[a] - sizes[a] as f64;
        let rb = raw[b] - sizes[b] as f64;
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        sizes[i] += 1;
    }
    sizes
}

/// Seeded shuffle followed by a contiguous train/valid/test partition.
/// Each index list is returned sorted.
pub fn split_three_way(n: usize, fractions: [f64; 3], seed: u64) -> Result<SplitPlan> {
    if n < 3 {
        return Err(Error::invalid("n", "must be at least 3"));
    }
    if fractions.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
        return Err(Error::invalid("fractions", "each fraction must be positive"));
    }
    let sum: f64 = fractions.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("fractions", format!("sum to {sum}, not 1")));
    }
    let sizes = largest_remainder(n, &fractions);
    if let Some(i) = sizes.iter().position(|s| *s == 0) {
        let name = ["train", "valid", "test"][i];
        return Err(Error::invalid("fractions", format!("{name} split would be empty for n = {n}")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    SeededRng::new(seed).shuffle(&mut idx);
    let mut parts = [
        idx[..sizes[0]].to_vec(),
        idx[sizes[0]..sizes[0] + sizes[1]].to_vec(),
        idx[sizes[0] + sizes[1]..].to_vec(),
    ];
    for p in &mut parts {
        p.sort_unstable();
    }
    let [train_indices, valid_indices, test_indices] = parts;
    Ok(SplitPlan {
        train_indices,
        valid_indices,
        test_indices,
        fractions,
        seed,
    })
}

/// Seeded k-fold partition; the first `n % k` folds hold one extra row.
/// Returns (train, valid) pairs with sorted index lists.
pub fn kfold_indices(n: usize, k: usize, seed: u64) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    if k < 2 || k > n {
        return Err(Error::invalid("k", format!("must satisfy 2 <= k <= n (k = {k}, n = {n})")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    SeededRng::new(seed).shuffle(&mut idx);
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        let mut valid = idx[start..start + len].to_vec();
        valid.sort_unstable();
        let mut train: Vec<usize> = idx[..start].iter().chain(&idx[start + len..]).copied().collect();
        train.sort_unstable();
        folds.push((train, valid));
        start += len;
    }
    Ok(folds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_rows_split_7_2_1() {
        let p = split_three_way(10, DEFAULT_FRACTIONS, 1).unwrap();
        assert_eq!((p.train_indices.len(), p.valid_indices.len(), p.test_indices.len()), (7, 2, 1));
        let mut all: Vec<usize> = p.train_indices.iter().chain(&p.valid_indices).chain(&p.test_indices).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert_eq!(p, split_three_way(10, DEFAULT_FRACTIONS, 1).unwrap());
    }

    #[test]
    fn empty_split_is_error() {
        assert!(split_three_way(10, [1.0, 0.0, 0.0], 1).is_err());
        assert!(split_three_way(3, [0.98, 0.01, 0.01], 1).is_err());
    }

    #[test]
    fn kfold_sizes() {
        let f = kfold_indices(7, 3, 0).unwrap();
        assert_eq!(f.iter().map(|(_, v)| v.len()).collect::<Vec<_>>(), vec![3, 2, 2]);
        let f = kfold_indices(6, 3, 0).unwrap();
        assert!(f.iter().all(|(t, v)| v.len() == 2 && t.len() == 4));
        let loo = kfold_indices(5, 5, 0).unwrap();
        assert!(loo.iter().all(|(t, v)| v.len() == 1 && t.len() == 4));
        assert!(kfold_indices(3, 4, 0).is_err());
        assert!(kfold_indices(3, 1, 0).is_err());
    }
}
