//! CART regression trees with variance-reduction splits.

use alloc::boxed::Box;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeOptions {
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for TreeOptions {
    fn default() -> Self {
        TreeOptions { max_depth: 3, min_leaf: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        value: f64,
        n: usize,
    },
    Split {
        feature: usize,
        /// Rows with `x[feature] <= threshold` go left.
        threshold: f64,
        /// Reduction of the summed squared error.
        gain: f64,
        value: f64,
        n: usize,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Node::Leaf { n, .. } | Node::Split { n, .. } => *n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub root: Node,
    pub n_features: usize,
}

fn sse(y: &[f64], idx: &[usize]) -> (f64, f64) {
    let n = idx.len() as f64;
    let mean = idx.iter().map(|&i| y[i]).sum::<f64>() / n;
    (idx.iter().map(|&i| (y[i] - mean) * (y[i] - mean)).sum(), mean)
}

struct Best {
    feature: usize,
    threshold: f64,
    gain: f64,
}

fn best_split(x: &[Vec<f64>], y: &[f64], idx: &[usize], parent_sse: f64, opts: &TreeOptions) -> Option<Best> {
    let n = idx.len();
    if n < 2 * opts.min_leaf.max(1) {
        return None;
    }
    let mut best: Option<Best> = None;
    let k = x[idx[0]].len();
    for f in 0..k {
        let mut order = idx.to_vec();
        order.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]).then(a.cmp(&b)));
        // prefix sums for O(n) scanning
        let mut sum_l = 0.0;
        let mut sq_l = 0.0;
        let total: f64 = order.iter().map(|&i| y[i]).sum();
        let total_sq: f64 = order.iter().map(|&i| y[i] * y[i]).sum();
        for s in 1..n {
            let v = y[order[s - 1]];
            sum_l += v;
            sq_l += v * v;
            let (lo, hi) = (x[order[s - 1]][f], x[order[s]][f]);
            if lo == hi || s < opts.min_leaf || n - s < opts.min_leaf {
                continue;
            }
            let nl = s as f64;
            let nr = (n - s) as f64;
            let sum_r = total - sum_l;
            let sse_l = (sq_l - sum_l * sum_l / nl).max(0.0);
            let sse_r = ((total_sq - sq_l) - sum_r * sum_r / nr).max(0.0);
            let gain = parent_sse - sse_l - sse_r;
            if best.as_ref().is_none_or(|b| gain > b.gain) {
                best = Some(Best { feature: f, threshold: 0.5 * (lo + hi), gain });
            }
        }
    }
    best.filter(|b| b.gain > 1e-12 * (1.0 + parent_sse))
}

fn grow(x: &[Vec<f64>], y: &[f64], idx: &[usize], depth: usize, opts: &TreeOptions) -> Node {
    let (parent_sse, value) = sse(y, idx);
    let n = idx.len();
    if depth >= opts.max_depth {
        return Node::Leaf { value, n };
    }
    let Some(b) = best_split(x, y, idx, parent_sse, opts) else { return Node::Leaf { value, n } };
    let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| x[i][b.feature] <= b.threshold);
    // recompute the exact gain on the final partition
    let gain = parent_sse - sse(y, &l).0 - sse(y, &r).0;
    if !(gain > 0.0) {
        return Node::Leaf { value, n };
    }
    Node::Split {
        feature: b.feature,
        threshold: b.threshold,
        gain,
        value,
        n,
        left: Box::new(grow(x, y, &l, depth + 1, opts)),
        right: Box::new(grow(x, y, &r, depth + 1, opts)),
    }
}

impl RegressionTree {
    pub fn fit(x: &[Vec<f64>], y: &[f64], opts: &TreeOptions) -> Result<Self> {
        if x.is_empty() || x.len() != y.len() {
            return Err(Error::InvalidInput(alloc::format!("{} rows for {} targets", x.len(), y.len())));
        }
        let k = x[0].len();
        if x.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidInput("ragged feature matrix".into()));
        }
        if x.iter().flatten().chain(y).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let idx: Vec<usize> = (0..y.len()).collect();
        Ok(RegressionTree { root: grow(x, y, &idx, 0, opts), n_features: k })
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { value, .. } => return *value,
                Node::Split { feature, threshold, left, right, .. } => {
                    node = if row[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn root_feature(&self) -> Option<usize> {
        match &self.root {
            Node::Split { feature, .. } => Some(*feature),
            Node::Leaf { .. } => None,
        }
    }

    /// Split features at `layer` (0 = root), left to right.
    pub fn layer_features(&self, layer: usize) -> Vec<(usize, f64)> {
        fn walk(node: &Node, layer: usize, out: &mut Vec<(usize, f64)>) {
            if let Node::Split { feature, threshold, left, right, .. } = node {
                if layer == 0 {
                    out.push((*feature, *threshold));
                } else {
                    walk(left, layer - 1, out);
                    walk(right, layer - 1, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.root, layer, &mut out);
        out
    }

    /// Every internal node as `(depth, feature, threshold, gain)`, preorder.
    pub fn splits(&self) -> Vec<(usize, usize, f64, f64)> {
        fn walk(node: &Node, d: usize, out: &mut Vec<(usize, usize, f64, f64)>) {
            if let Node::Split { feature, threshold, gain, left, right, .. } = node {
                out.push((d, *feature, *threshold, *gain));
                walk(left, d + 1, out);
                walk(right, d + 1, out);
            }
        }
        let mut out = Vec::new();
        walk(&self.root, 0, &mut out);
        out
    }
}
