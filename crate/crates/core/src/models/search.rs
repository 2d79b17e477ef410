//! Random search over tree hyperparameters, scored by mean out-of-fold PCC.

use rand::seq::IndexedRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{classify, pcc};
use super::tree::{train_tree, Criterion, MaxFeatures, TreeParams};
use crate::dataset::{kfold_indices, EncodedMatrix};
use crate::error::{Error, Result};
use crate::seed;

/// Inclusive integer range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntRange {
    pub lo: usize,
    pub hi: usize,
}

impl IntRange {
    pub const fn new(lo: usize, hi: usize) -> Self {
        Self { lo, hi }
    }

    pub fn single(v: usize) -> Self {
        Self { lo: v, hi: v }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperparamSpace {
    pub criterion: Vec<Criterion>,
    pub max_depth: IntRange,
    pub min_split: IntRange,
    pub min_leaf: IntRange,
    pub max_features: Vec<MaxFeatures>,
    pub min_impurity_decrease: Vec<f64>,
}

fn impurity_grid() -> Vec<f64> {
    (0..10).map(|i| f64::from(i) / 10.0).collect()
}

impl HyperparamSpace {
    pub fn tree() -> Self {
        Self {
            criterion: vec![Criterion::Entropy, Criterion::Gini],
            max_depth: IntRange::new(1, 29),
            min_split: IntRange::new(2, 9),
            min_leaf: IntRange::new(1, 19),
            max_features: vec![MaxFeatures::All, MaxFeatures::Sqrt, MaxFeatures::Log2],
            min_impurity_decrease: impurity_grid(),
        }
    }

    pub fn tree_prime() -> Self {
        Self {
            max_depth: IntRange::new(1, 9),
            min_split: IntRange::new(2, 59),
            min_leaf: IntRange::new(1, 59),
            ..Self::tree()
        }
    }

    /// The space containing exactly `p`.
    pub fn single(p: &TreeParams) -> Self {
        Self {
            criterion: vec![p.criterion],
            max_depth: IntRange::single(p.max_depth),
            min_split: IntRange::single(p.min_split),
            min_leaf: IntRange::single(p.min_leaf),
            max_features: vec![p.max_features],
            min_impurity_decrease: vec![p.min_impurity_decrease],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ranges = [self.max_depth, self.min_split, self.min_leaf];
        if ranges.iter().any(|r| r.lo > r.hi)
            || self.criterion.is_empty()
            || self.max_features.is_empty()
            || self.min_impurity_decrease.is_empty()
        {
            return Err(Error::InvalidArgument("hyperparameter ranges must be non-empty".into()));
        }
        if self.max_depth.lo == 0 || self.min_split.lo < 2 || self.min_leaf.lo == 0 {
            return Err(Error::InvalidArgument("hyperparameter range below its minimum".into()));
        }
        Ok(())
    }

    pub fn contains(&self, p: &TreeParams) -> bool {
        let within = |r: IntRange, v: usize| (r.lo..=r.hi).contains(&v);
        self.criterion.contains(&p.criterion)
            && within(self.max_depth, p.max_depth)
            && within(self.min_split, p.min_split)
            && within(self.min_leaf, p.min_leaf)
            && self.max_features.contains(&p.max_features)
            && self.min_impurity_decrease.contains(&p.min_impurity_decrease)
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> TreeParams {
        let mut int = |r: IntRange| rng.random_range(r.lo..=r.hi);
        let max_depth = int(self.max_depth);
        let min_split = int(self.min_split);
        let min_leaf = int(self.min_leaf);
        TreeParams {
            criterion: *self.criterion.choose(rng).expect("validated"),
            max_depth,
            min_split,
            min_leaf,
            max_features: *self.max_features.choose(rng).expect("validated"),
            min_impurity_decrease: *self.min_impurity_decrease.choose(rng).expect("validated"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchRow {
    pub params: TreeParams,
    pub fold_pcc: Vec<f64>,
    pub mean_pcc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best: TreeParams,
    pub best_mean_pcc: f64,
    /// One row per draw, in draw order.
    pub table: Vec<SearchRow>,
}

/// Draws `draws` configurations and keeps the one with the highest mean
/// out-of-fold PCC; the earliest draw wins ties.
pub fn random_search_cv(
    space: &HyperparamSpace,
    x: &EncodedMatrix,
    y: &[u8],
    k: usize,
    draws: usize,
    seed_value: u64,
    delta: f64,
) -> Result<SearchResult> {
    space.validate()?;
    if draws == 0 {
        return Err(Error::InvalidArgument("draws must be >= 1".into()));
    }
    if x.n_rows() != y.len() {
        return Err(Error::LengthMismatch { left: x.n_rows(), right: y.len() });
    }
    let folds = kfold_indices(y.len(), k, seed::substream(seed_value, "cv-folds"))?;
    let mut rng = seed::rng(seed::substream(seed_value, "search-draws"));
    let candidates: Vec<TreeParams> = (0..draws).map(|_| space.sample(&mut rng)).collect();
    let tree_seed = seed::substream(seed_value, seed::TREE);

    let splits: Vec<(EncodedMatrix, Vec<u8>, EncodedMatrix, Vec<u8>)> = folds
        .iter()
        .map(|test| {
            let mut in_test = vec![false; y.len()];
            test.iter().for_each(|&i| in_test[i] = true);
            let train: Vec<usize> = (0..y.len()).filter(|&i| !in_test[i]).collect();
            (
                x.select_rows(&train),
                train.iter().map(|&i| y[i]).collect(),
                x.select_rows(test),
                test.iter().map(|&i| y[i]).collect(),
            )
        })
        .collect();

    let table = candidates
        .par_iter()
        .map(|params| -> Result<SearchRow> {
            let fold_pcc = splits
                .iter()
                .map(|(xtr, ytr, xte, yte)| {
                    let model = train_tree(xtr, ytr, params, tree_seed)?;
                    let scores: Vec<f64> = (0..xte.n_rows()).map(|i| model.predict_proba_row(xte.row(i))).collect();
                    pcc(yte, &classify(&scores, delta)?)
                })
                .collect::<Result<Vec<f64>>>()?;
            let mean_pcc = fold_pcc.iter().sum::<f64>() / fold_pcc.len() as f64;
            Ok(SearchRow { params: *params, fold_pcc, mean_pcc })
        })
        .collect::<Result<Vec<SearchRow>>>()?;

    let mut best = 0;
    for (i, row) in table.iter().enumerate() {
        if row.mean_pcc > table[best].mean_pcc {
            best = i;
        }
    }
    Ok(SearchResult { best: table[best].params, best_mean_pcc: table[best].mean_pcc, table })
}
