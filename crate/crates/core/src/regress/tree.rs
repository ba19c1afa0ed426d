//! CART regression trees over presorted feature orders.
//!
//! One builder serves both ensembles: the forest grows trees on bootstrap
//! multisets with `lambda = 0` (plain variance reduction), boosting grows them on
//! residuals with ridge-shrunk leaves.

use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::rng::SeededRng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        /// Reduction of the split criterion achieved here.
        gain: f64,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split { feature, threshold, left, right, .. } => {
                    i = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Adds each split's gain to `out[feature]`.
    pub fn accumulate_gain(&self, out: &mut [f64]) {
        for n in &self.nodes {
            if let Node::Split { feature, gain, .. } = n {
                out[*feature] += gain;
            }
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
    pub lambda: f64,
    /// Features examined per node; equal to p disables subsampling.
    pub max_features: usize,
}

/// Sample positions sorted by each feature. A sample is one entry of the row
/// multiset, so bootstrap duplicates are separate samples pointing at one row.
#[derive(Clone, Debug)]
pub struct Presorted {
    rows: Vec<usize>,
    orders: Vec<Vec<u32>>,
}

impl Presorted {
    pub fn new(x: &Matrix, rows: Vec<usize>) -> Self {
        let orders = (0..x.cols())
            .map(|f| {
                let mut o: Vec<u32> = (0..rows.len() as u32).collect();
                o.sort_by(|&a, &b| {
                    x[(rows[a as usize], f)]
                        .total_cmp(&x[(rows[b as usize], f)])
                        .then(a.cmp(&b))
                });
                o
            })
            .collect();
        Self { rows, orders }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

struct Builder<'a> {
    x: &'a Matrix,
    rows: &'a [usize],
    target: Vec<f64>,
    params: TreeParams,
    min_gain: f64,
    orders: Vec<Vec<u32>>,
    go_left: Vec<bool>,
    scratch: Vec<u32>,
    nodes: Vec<Node>,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    split_at: usize,
    gain: f64,
}

/// Grows one tree. `target` is indexed by matrix row. `rng` drives per-node
/// feature subsampling and is only consulted when `max_features < p`.
pub fn grow(x: &Matrix, target: &[f64], sorted: &Presorted, params: TreeParams, rng: &mut SeededRng) -> Tree {
    let sample_target: Vec<f64> = sorted.rows.iter().map(|&r| target[r]).collect();
    let total_sq: f64 = sample_target.iter().map(|v| v * v).sum();
    let mut b = Builder {
        x,
        rows: &sorted.rows,
        target: sample_target,
        params,
        min_gain: 1e-12 * total_sq.max(f64::MIN_POSITIVE),
        orders: sorted.orders.clone(),
        go_left: vec![false; sorted.len()],
        scratch: vec![0; sorted.len()],
        nodes: Vec::new(),
    };
    b.build(0, sorted.len(), 0, rng);
    Tree { nodes: b.nodes }
}

impl Builder<'_> {
    fn value(&self, f: usize, s: u32) -> f64 {
        self.x[(self.rows[s as usize], f)]
    }

    fn build(&mut self, start: usize, end: usize, depth: usize, rng: &mut SeededRng) -> usize {
        let id = self.nodes.len();
        let n = end - start;
        let g: f64 = self.orders[0][start..end].iter().map(|&s| self.target[s as usize]).sum();
        self.nodes.push(Node::Leaf {
            value: g / (n as f64 + self.params.lambda),
        });
        if depth >= self.params.max_depth || n < 2 * self.params.min_leaf.max(1) {
            return id;
        }
        let Some(best) = self.best_split(start, end, g, rng) else {
            return id;
        };

        for &s in &self.orders[best.feature][start..end] {
            self.go_left[s as usize] = false;
        }
        for &s in &self.orders[best.feature][start..start + best.split_at] {
            self.go_left[s as usize] = true;
        }
        for f in 0..self.orders.len() {
            let order = &mut self.orders[f];
            let (mut l, mut r) = (start, 0);
            for k in start..end {
                let s = order[k];
                if self.go_left[s as usize] {
                    order[l] = s;
                    l += 1;
                } else {
                    self.scratch[r] = s;
                    r += 1;
                }
            }
            order[l..end].copy_from_slice(&self.scratch[..r]);
        }

        let mid = start + best.split_at;
        let left = self.build(start, mid, depth + 1, rng);
        let right = self.build(mid, end, depth + 1, rng);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
            gain: best.gain,
        };
        id
    }

    fn best_split(&self, start: usize, end: usize, g: f64, rng: &mut SeededRng) -> Option<Candidate> {
        let p = self.orders.len();
        let features: Vec<usize> = if self.params.max_features < p {
            let mut f = rng.sample_indices(p, self.params.max_features);
            f.sort_unstable();
            f
        } else {
            (0..p).collect()
        };
        let n = (end - start) as f64;
        let lambda = self.params.lambda;
        let parent = g * g / (n + lambda);
        let min_leaf = self.params.min_leaf.max(1);
        let mut best: Option<Candidate> = None;

        for f in features {
            let order = &self.orders[f][start..end];
            let mut gl = 0.0;
            for i in 0..order.len() - 1 {
                gl += self.target[order[i] as usize];
                let nl = i + 1;
                let nr = order.len() - nl;
                if nl < min_leaf {
                    continue;
                }
                if nr < min_leaf {
                    break;
                }
                let a = self.value(f, order[i]);
                let b = self.value(f, order[i + 1]);
                if a == b {
                    continue;
                }
                let gr = g - gl;
                let gain = gl * gl / (nl as f64 + lambda) + gr * gr / (nr as f64 + lambda) - parent;
                if gain > self.min_gain && best.as_ref().is_none_or(|c| gain > c.gain) {
                    let mid = a + (b - a) / 2.0;
                    let threshold = if mid < b { mid } else { a };
                    best = Some(Candidate {
                        feature: f,
                        threshold,
                        split_at: nl,
                        gain,
                    });
                }
            }
        }
        best
    }
}
