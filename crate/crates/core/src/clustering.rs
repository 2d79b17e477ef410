//! K-prototypes partition of applicants into risk classes.
//!
//! Distance between a row and a prototype is the squared Euclidean distance
//! over standardized numeric features plus `gamma` times the number of
//! categorical mismatches. Only columns with the feature role take part; the
//! target, the protected attribute and excluded columns never do.

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnData, Dataset, FeatureKind, Role};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KPrototypesConfig {
    pub n_classes: usize,
    /// Weight of categorical mismatches; `None` selects 0.5 x the mean
    /// standard deviation of the standardized numeric columns.
    pub gamma: Option<f64>,
    pub seed: u64,
    pub max_iter: usize,
    /// Independent initializations; the lowest-cost partition is kept.
    pub n_init: usize,
}

impl Default for KPrototypesConfig {
    fn default() -> Self {
        Self { n_classes: 2, gamma: None, seed: 0, max_iter: 100, n_init: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prototype {
    pub numeric: Vec<f64>,
    pub categorical: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskClassAssignment {
    /// Class of every row, in `0..n_classes`. Class 0 is the largest.
    pub labels: Vec<usize>,
    pub prototypes: Vec<Prototype>,
    pub n_classes: usize,
    pub gamma: f64,
    pub cost: f64,
    /// Objective after every update/assign round.
    pub cost_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl RiskClassAssignment {
    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.n_classes];
        for &l in &self.labels {
            s[l] += 1;
        }
        s
    }
}

/// Standardized numeric block and categorical codes, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringFeatures {
    pub numeric_names: Vec<String>,
    pub categorical_names: Vec<String>,
    numeric: Vec<Vec<f64>>,
    categorical: Vec<Vec<u32>>,
    n_levels: Vec<usize>,
    numeric_stds: Vec<f64>,
}

impl ClusteringFeatures {
    pub fn from_dataset(d: &Dataset) -> Result<Self> {
        let n = d.n_rows();
        let mut numeric_names = Vec::new();
        let mut categorical_names = Vec::new();
        let mut num_cols: Vec<Vec<f64>> = Vec::new();
        let mut cat_cols: Vec<&[u32]> = Vec::new();
        let mut n_levels = Vec::new();
        for (spec, col) in d.specs().iter().zip(d.columns()) {
            if spec.role != Role::Feature {
                continue;
            }
            match (&spec.kind, col) {
                (FeatureKind::Numeric, ColumnData::Numeric(v)) => {
                    let mean = v.iter().sum::<f64>() / n as f64;
                    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0).max(1.0);
                    // constant columns carry no distance information
                    if var > 0.0 {
                        let sd = var.sqrt();
                        numeric_names.push(spec.name.clone());
                        num_cols.push(v.iter().map(|x| (x - mean) / sd).collect());
                    }
                }
                (FeatureKind::Categorical { levels }, ColumnData::Categorical(v)) => {
                    categorical_names.push(spec.name.clone());
                    cat_cols.push(v);
                    n_levels.push(levels.len());
                }
                _ => unreachable!(),
            }
        }
        if num_cols.is_empty() && cat_cols.is_empty() {
            return Err(Error::InvalidArgument("no feature columns to cluster on".into()));
        }
        let numeric_stds = num_cols
            .iter()
            .map(|c| {
                let m = c.iter().sum::<f64>() / n as f64;
                (c.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n as f64 - 1.0).max(1.0)).sqrt()
            })
            .collect();
        Ok(Self {
            numeric_names,
            categorical_names,
            numeric: (0..n).map(|i| num_cols.iter().map(|c| c[i]).collect()).collect(),
            categorical: (0..n).map(|i| cat_cols.iter().map(|c| c[i]).collect()).collect(),
            n_levels,
            numeric_stds,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.numeric.len()
    }

    pub fn default_gamma(&self) -> f64 {
        if self.numeric_stds.is_empty() {
            return 0.5;
        }
        0.5 * self.numeric_stds.iter().sum::<f64>() / self.numeric_stds.len() as f64
    }

    /// Row `i` as a prototype.
    pub fn prototype_of(&self, i: usize) -> Prototype {
        Prototype { numeric: self.numeric[i].clone(), categorical: self.categorical[i].clone() }
    }

    /// Same features with rows reordered by `perm` (row `k` of the result is row `perm[k]`).
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            numeric: perm.iter().map(|&i| self.numeric[i].clone()).collect(),
            categorical: perm.iter().map(|&i| self.categorical[i].clone()).collect(),
            ..self.clone()
        }
    }

    fn distance(&self, i: usize, p: &Prototype, gamma: f64) -> f64 {
        let num: f64 = self.numeric[i].iter().zip(&p.numeric).map(|(a, b)| (a - b) * (a - b)).sum();
        let mismatches = self.categorical[i].iter().zip(&p.categorical).filter(|(a, b)| a != b).count();
        num + gamma * mismatches as f64
    }

    fn nearest(&self, i: usize, protos: &[Prototype], gamma: f64) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (k, p) in protos.iter().enumerate() {
            let dist = self.distance(i, p, gamma);
            if dist < best.1 {
                best = (k, dist);
            }
        }
        best
    }
}

pub fn kprototypes(d: &Dataset, cfg: &KPrototypesConfig) -> Result<RiskClassAssignment> {
    let features = ClusteringFeatures::from_dataset(d)?;
    kprototypes_on(&features, cfg)
}

pub fn kprototypes_on(features: &ClusteringFeatures, cfg: &KPrototypesConfig) -> Result<RiskClassAssignment> {
    let n = features.n_rows();
    let k = cfg.n_classes;
    if k < 2 || k > n {
        return Err(Error::InvalidArgument(format!("class count {k} must lie in [2, {n}]")));
    }
    let gamma = cfg.gamma.unwrap_or_else(|| features.default_gamma());
    if !(gamma >= 0.0) {
        return Err(Error::InvalidArgument(format!("gamma must be >= 0, got {gamma}")));
    }
    let runs: Vec<RiskClassAssignment> = (0..cfg.n_init.max(1))
        .into_par_iter()
        .map(|r| {
            let mut rng = seed::rng(seed::substream(cfg.seed, &format!("kprototypes-init-{r}")));
            let mut rows = sample(&mut rng, n, k).into_vec();
            rows.sort_unstable();
            let init = rows.iter().map(|&i| features.prototype_of(i)).collect();
            fit_from_prototypes(features, init, gamma, cfg.max_iter)
        })
        .collect();
    let best = runs
        .into_iter()
        .reduce(|best, run| if run.cost < best.cost { run } else { best })
        .expect("at least one run");
    Ok(best)
}

/// Lloyd-style alternation from explicit initial prototypes.
pub fn fit_from_prototypes(
    features: &ClusteringFeatures,
    init: Vec<Prototype>,
    gamma: f64,
    max_iter: usize,
) -> RiskClassAssignment {
    let k = init.len();
    let mut protos = init;
    let assign = |protos: &[Prototype]| -> Vec<(usize, f64)> {
        (0..features.n_rows()).into_par_iter().map(|i| features.nearest(i, protos, gamma)).collect()
    };
    let mut current = assign(&protos);
    let mut cost_history = vec![current.iter().map(|x| x.1).sum::<f64>()];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        fill_empty_classes(&mut current, k);
        protos = update_prototypes(features, &current, k);
        let next = assign(&protos);
        cost_history.push(next.iter().map(|x| x.1).sum());
        let stable = next.iter().zip(&current).all(|(a, b)| a.0 == b.0);
        current = next;
        if stable {
            converged = true;
            break;
        }
    }
    fill_empty_classes(&mut current, k);
    let labels: Vec<usize> = current.iter().map(|x| x.0).collect();
    let protos = update_prototypes(features, &current, k);
    let cost = (0..features.n_rows()).map(|i| features.distance(i, &protos[labels[i]], gamma)).sum();
    relabel(RiskClassAssignment {
        labels,
        prototypes: protos,
        n_classes: k,
        gamma,
        cost,
        cost_history,
        iterations,
        converged,
    })
}

/// Moves the farthest row of a class with at least two members into each empty class.
fn fill_empty_classes(assigned: &mut [(usize, f64)], k: usize) {
    loop {
        let mut sizes = vec![0usize; k];
        for a in assigned.iter() {
            sizes[a.0] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else { return };
        let donor = assigned
            .iter()
            .enumerate()
            .filter(|(_, a)| sizes[a.0] >= 2)
            .fold(None::<(usize, f64)>, |best, (i, a)| match best {
                Some((_, d)) if d >= a.1 => best,
                _ => Some((i, a.1)),
            })
            .map(|(i, _)| i)
            .expect("n >= k guarantees a donor");
        assigned[donor] = (empty, 0.0);
    }
}

fn update_prototypes(features: &ClusteringFeatures, assigned: &[(usize, f64)], k: usize) -> Vec<Prototype> {
    let pn = features.numeric_names.len();
    let mut sums = vec![vec![0.0; pn]; k];
    let mut counts = vec![0usize; k];
    let mut freq: Vec<Vec<Vec<usize>>> =
        (0..k).map(|_| features.n_levels.iter().map(|&l| vec![0; l]).collect()).collect();
    for (i, a) in assigned.iter().enumerate() {
        let c = a.0;
        counts[c] += 1;
        for (s, x) in sums[c].iter_mut().zip(&features.numeric[i]) {
            *s += x;
        }
        for (j, &code) in features.categorical[i].iter().enumerate() {
            freq[c][j][code as usize] += 1;
        }
    }
    (0..k)
        .map(|c| Prototype {
            numeric: sums[c].iter().map(|s| s / counts[c].max(1) as f64).collect(),
            // mode, ties to the lowest level
            categorical: freq[c]
                .iter()
                .map(|f| f.iter().enumerate().fold((0, 0), |b, (l, &m)| if m > b.1 { (l, m) } else { b }).0 as u32)
                .collect(),
        })
        .collect()
}

/// Orders classes by decreasing size, ties by first row.
fn relabel(mut a: RiskClassAssignment) -> RiskClassAssignment {
    let sizes = a.sizes();
    let first: Vec<usize> =
        (0..a.n_classes).map(|c| a.labels.iter().position(|&l| l == c).unwrap_or(usize::MAX)).collect();
    let mut order: Vec<usize> = (0..a.n_classes).collect();
    order.sort_by_key(|&c| (std::cmp::Reverse(sizes[c]), first[c]));
    let mut new_of = vec![0; a.n_classes];
    for (new, &old) in order.iter().enumerate() {
        new_of[old] = new;
    }
    for l in &mut a.labels {
        *l = new_of[*l];
    }
    a.prototypes = order.iter().map(|&old| a.prototypes[old].clone()).collect();
    a
}
