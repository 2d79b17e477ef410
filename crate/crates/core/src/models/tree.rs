//! Greedy CART classification tree.
//!
//! Candidate thresholds are midpoints between consecutive distinct sorted
//! values and a sample goes left when `x <= threshold`, so a one-hot column
//! sends its zeros left. Among equally good splits the lowest column index
//! wins, then the lowest threshold.

use ndarray::ArrayView1;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::EncodedMatrix;
use crate::error::{Error, Result};
use crate::seed;

const FEATURE_THRESHOLD: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Gini,
    Entropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaxFeatures {
    All,
    Sqrt,
    Log2,
}

impl MaxFeatures {
    /// Number of columns drawn at each split out of `p`.
    pub fn count(self, p: usize) -> usize {
        let k = match self {
            MaxFeatures::All => p,
            MaxFeatures::Sqrt => (p as f64).sqrt() as usize,
            MaxFeatures::Log2 => (p as f64).log2() as usize,
        };
        k.clamp(1, p.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub criterion: Criterion,
    pub max_depth: usize,
    pub min_split: usize,
    pub min_leaf: usize,
    pub max_features: MaxFeatures,
    pub min_impurity_decrease: f64,
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_depth == 0 || self.min_split < 2 || self.min_leaf == 0 {
            return Err(Error::InvalidArgument(
                "tree needs max_depth >= 1, min_split >= 2, min_leaf >= 1".into(),
            ));
        }
        if !(self.min_impurity_decrease >= 0.0) {
            return Err(Error::InvalidArgument("min_impurity_decrease must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Node {
    Leaf {
        n_samples: usize,
        proba: f64,
        depth: usize,
    },
    Split {
        column: usize,
        threshold: f64,
        left: usize,
        right: usize,
        n_samples: usize,
        depth: usize,
        /// Weighted impurity decrease, relative to the whole training sample.
        impurity_decrease: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub feature_names: Vec<String>,
    pub params: TreeParams,
    pub seed: u64,
    /// Node 0 is the root.
    pub nodes: Vec<Node>,
}

fn impurity(criterion: Criterion, pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    let q = 1.0 - p;
    match criterion {
        Criterion::Gini => 1.0 - p * p - q * q,
        Criterion::Entropy => {
            let h = |v: f64| if v > 0.0 { -v * v.log2() } else { 0.0 };
            h(p) + h(q)
        }
    }
}

struct Builder<'a> {
    x: &'a EncodedMatrix,
    y: &'a [u8],
    params: TreeParams,
    n_total: f64,
    k: usize,
    rng: Option<rand_chacha::ChaCha8Rng>,
    nodes: Vec<Node>,
}

struct Best {
    column: usize,
    threshold: f64,
    position: usize,
    child_cost: f64,
}

impl Builder<'_> {
    fn build(&mut self, rows: &mut [usize], depth: usize) -> usize {
        let n = rows.len();
        let pos = rows.iter().filter(|&&r| self.y[r] == 1).count();
        let id = self.nodes.len();
        let leaf = Node::Leaf { n_samples: n, proba: pos as f64 / n as f64, depth };
        self.nodes.push(leaf);

        let node_impurity = impurity(self.params.criterion, pos, n);
        if depth >= self.params.max_depth
            || n < self.params.min_split
            || n < 2 * self.params.min_leaf
            || node_impurity <= f64::EPSILON
        {
            return id;
        }
        let Some(best) = self.best_split(rows) else {
            return id;
        };
        let nf = n as f64;
        let decrease = nf / self.n_total * (node_impurity - best.child_cost / nf);
        if decrease + f64::EPSILON < self.params.min_impurity_decrease {
            return id;
        }

        let col = self.x.values().column(best.column);
        rows.sort_by(|&a, &b| col[a].total_cmp(&col[b]).then(a.cmp(&b)));
        let (l, r) = rows.split_at_mut(best.position);
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        self.nodes[id] = Node::Split {
            column: best.column,
            threshold: best.threshold,
            left,
            right,
            n_samples: n,
            depth,
            impurity_decrease: decrease,
        };
        id
    }

    /// Columns examined at this node, in ascending order.
    fn candidate_columns(&mut self, rows: &[usize]) -> Vec<usize> {
        let p = self.x.n_cols();
        let values = self.x.values();
        let is_constant = |c: usize| {
            let (lo, hi) = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| {
                let v = values[[r, c]];
                (lo.min(v), hi.max(v))
            });
            hi <= lo + FEATURE_THRESHOLD
        };
        let mut out = Vec::new();
        match &mut self.rng {
            None => out.extend((0..p).filter(|&c| !is_constant(c))),
            Some(rng) => {
                let mut order: Vec<usize> = (0..p).collect();
                order.shuffle(rng);
                let mut visited = 0;
                for c in order {
                    if visited >= self.k && !out.is_empty() {
                        break;
                    }
                    visited += 1;
                    if !is_constant(c) {
                        out.push(c);
                    }
                }
                out.sort_unstable();
            }
        }
        out
    }

    fn best_split(&mut self, rows: &[usize]) -> Option<Best> {
        let columns = self.candidate_columns(rows);
        let n = rows.len();
        let total_pos = rows.iter().filter(|&&r| self.y[r] == 1).count();
        let min_leaf = self.params.min_leaf;
        let mut best: Option<Best> = None;
        let mut pairs: Vec<(f64, u8)> = Vec::with_capacity(n);
        for c in columns {
            let col = self.x.values().column(c);
            pairs.clear();
            pairs.extend(rows.iter().map(|&r| (col[r], self.y[r])));
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_pos = 0;
            for i in 1..n {
                left_pos += usize::from(pairs[i - 1].1);
                if pairs[i].0 <= pairs[i - 1].0 + FEATURE_THRESHOLD {
                    continue;
                }
                if i < min_leaf || n - i < min_leaf {
                    continue;
                }
                let cost = i as f64 * impurity(self.params.criterion, left_pos, i)
                    + (n - i) as f64 * impurity(self.params.criterion, total_pos - left_pos, n - i);
                if best.as_ref().is_none_or(|b| cost < b.child_cost) {
                    let (a, b) = (pairs[i - 1].0, pairs[i].0);
                    let mut threshold = a / 2.0 + b / 2.0;
                    if threshold == b || !threshold.is_finite() {
                        threshold = a;
                    }
                    best = Some(Best { column: c, threshold, position: i, child_cost: cost });
                }
            }
        }
        best
    }
}

pub fn train_tree(x: &EncodedMatrix, y: &[u8], params: &TreeParams, seed_value: u64) -> Result<TreeModel> {
    params.validate()?;
    if x.n_rows() != y.len() {
        return Err(Error::LengthMismatch { left: x.n_rows(), right: y.len() });
    }
    if y.is_empty() {
        return Err(Error::EmptyInput);
    }
    if y.iter().any(|&v| v > 1) {
        return Err(Error::InvalidArgument("outcome must be 0/1".into()));
    }
    let rng = (params.max_features != MaxFeatures::All).then(|| seed::rng(seed_value));
    let mut builder = Builder {
        x,
        y,
        params: *params,
        n_total: y.len() as f64,
        k: params.max_features.count(x.n_cols()),
        rng,
        nodes: Vec::new(),
    };
    let mut rows: Vec<usize> = (0..y.len()).collect();
    builder.build(&mut rows, 0);
    Ok(TreeModel {
        feature_names: x.column_names().to_vec(),
        params: *params,
        seed: seed_value,
        nodes: builder.nodes,
    })
}

impl TreeModel {
    pub fn predict_proba_row(&self, row: ArrayView1<'_, f64>) -> f64 {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Leaf { proba, .. } => return *proba,
                Node::Split { column, threshold, left, right, .. } => {
                    id = if row[*column] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    /// Sorted indices of the columns used by at least one split.
    pub fn used_columns(&self) -> Vec<usize> {
        let mut cols: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { column, .. } => Some(*column),
                Node::Leaf { .. } => None,
            })
            .collect();
        cols.sort_unstable();
        cols.dedup();
        cols
    }

    pub fn depth(&self) -> usize {
        self.nodes
            .iter()
            .map(|n| match n {
                Node::Leaf { depth, .. } | Node::Split { depth, .. } => *depth,
            })
            .max()
            .unwrap_or(0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}
