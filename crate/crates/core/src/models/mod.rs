//! Scoring models, their presets and persistence, hyperparameter search and
//! performance metrics.

mod logistic;
mod metrics;
mod search;
mod tree;

use std::fs;
use std::path::Path;
use std::str::FromStr;

use ndarray::ArrayView1;
use serde::{Deserialize, Serialize};

use crate::dataset::EncodedMatrix;
use crate::error::{Error, Result};

pub use logistic::{train_logistic, LogisticModel, LogisticParams};
pub use metrics::{auc, classify, pcc};
pub use search::{random_search_cv, HyperparamSpace, IntRange, SearchResult, SearchRow};
pub use tree::{train_tree, Criterion, MaxFeatures, Node, TreeModel, TreeParams};

/// A fitted model mapping an encoded row to the probability of the good type.
pub trait Classifier: Sync {
    fn predict_proba_row(&self, row: ArrayView1<'_, f64>) -> f64;

    /// Names of the encoded columns the model was trained on, in order.
    fn feature_names(&self) -> &[String];

    fn predict_proba(&self, x: &EncodedMatrix) -> Vec<f64> {
        (0..x.n_rows()).map(|i| self.predict_proba_row(x.row(i))).collect()
    }
}

impl Classifier for LogisticModel {
    fn predict_proba_row(&self, row: ArrayView1<'_, f64>) -> f64 {
        LogisticModel::predict_proba_row(self, row)
    }

    fn feature_names(&self) -> &[String] {
        &self.feature_names
    }
}

impl Classifier for TreeModel {
    fn predict_proba_row(&self, row: ArrayView1<'_, f64>) -> f64 {
        TreeModel::predict_proba_row(self, row)
    }

    fn feature_names(&self) -> &[String] {
        &self.feature_names
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Model {
    Logistic(LogisticModel),
    Tree(TreeModel),
}

impl Classifier for Model {
    fn predict_proba_row(&self, row: ArrayView1<'_, f64>) -> f64 {
        match self {
            Model::Logistic(m) => m.predict_proba_row(row),
            Model::Tree(m) => m.predict_proba_row(row),
        }
    }

    fn feature_names(&self) -> &[String] {
        match self {
            Model::Logistic(m) => &m.feature_names,
            Model::Tree(m) => &m.feature_names,
        }
    }
}

impl Model {
    /// Errors unless `x` has exactly the columns the model was trained on.
    pub fn check_columns(&self, x: &EncodedMatrix) -> Result<()> {
        if self.feature_names() != x.column_names() {
            return Err(Error::Schema(format!(
                "model expects columns [{}], data has [{}]",
                self.feature_names().join(", "),
                x.column_names().join(", ")
            )));
        }
        Ok(())
    }

    /// Sorted indices of the columns that can influence a prediction.
    pub fn used_columns(&self) -> Vec<usize> {
        match self {
            Model::Logistic(m) => (0..m.weights.len()).filter(|&i| m.weights[i] != 0.0).collect(),
            Model::Tree(m) => m.used_columns(),
        }
    }

    /// Original feature names behind [`Model::used_columns`], in column order.
    pub fn selected_features(&self, x: &EncodedMatrix) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for c in self.used_columns() {
            if let Some(f) = x.feature_of_column(c) {
                if !out.iter().any(|o| o == f) {
                    out.push(f.to_string());
                }
            }
        }
        out
    }

    /// Hyperparameters to retrain the same kind of model, and the seed it used.
    pub fn params(&self) -> (ModelParams, u64) {
        match self {
            Model::Logistic(m) => {
                (ModelParams::Logistic(LogisticParams { lambda: m.lambda, ..LogisticParams::default() }), 0)
            }
            Model::Tree(m) => (ModelParams::Tree(m.params), m.seed),
        }
    }

    pub fn converged(&self) -> bool {
        match self {
            Model::Logistic(m) => m.converged,
            Model::Tree(_) => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ModelParams {
    Logistic(LogisticParams),
    Tree(TreeParams),
}

/// Trains the model described by `params`; `seed` only matters for trees
/// that sample columns.
pub fn train(x: &EncodedMatrix, y: &[u8], params: &ModelParams, seed: u64) -> Result<Model> {
    match params {
        ModelParams::Logistic(p) => train_logistic(x, y, p).map(Model::Logistic),
        ModelParams::Tree(p) => train_tree(x, y, p, seed).map(Model::Tree),
    }
}

/// Named model configurations with fixed hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Lr,
    Ridge,
    Tree,
    TreePrime,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Lr, Preset::Ridge, Preset::Tree, Preset::TreePrime];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Lr => "lr",
            Preset::Ridge => "ridge",
            Preset::Tree => "tree",
            Preset::TreePrime => "tree-prime",
        }
    }

    pub fn params(self) -> ModelParams {
        match self {
            Preset::Lr => ModelParams::Logistic(LogisticParams::default()),
            Preset::Ridge => ModelParams::Logistic(LogisticParams { lambda: 0.2001, ..LogisticParams::default() }),
            Preset::Tree => ModelParams::Tree(TreeParams {
                criterion: Criterion::Gini,
                max_depth: 20,
                min_split: 2,
                min_leaf: 5,
                max_features: MaxFeatures::Sqrt,
                min_impurity_decrease: 0.0,
            }),
            Preset::TreePrime => ModelParams::Tree(TreeParams {
                criterion: Criterion::Gini,
                max_depth: 7,
                min_split: 56,
                min_leaf: 18,
                max_features: MaxFeatures::All,
                min_impurity_decrease: 0.0,
            }),
        }
    }

    /// Search space the preset's tree hyperparameters were tuned over.
    pub fn search_space(self) -> Option<HyperparamSpace> {
        match self {
            Preset::Tree => Some(HyperparamSpace::tree()),
            Preset::TreePrime => Some(HyperparamSpace::tree_prime()),
            Preset::Lr | Preset::Ridge => None,
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['_', ' '], "-");
        match key.as_str() {
            "lr" | "logistic" => Ok(Preset::Lr),
            "ridge" => Ok(Preset::Ridge),
            "tree" => Ok(Preset::Tree),
            "tree-prime" | "treeprime" => Ok(Preset::TreePrime),
            _ => Err(Error::InvalidArgument(format!(
                "unknown preset `{s}` (expected one of lr, ridge, tree, tree-prime)"
            ))),
        }
    }
}

pub const MODEL_FORMAT: &str = "fairaudit-model";
pub const MODEL_VERSION: u32 = 1;

/// Versioned on-disk form of a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format: String,
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    pub model: Model,
}

impl ModelDocument {
    pub fn new(model: Model, preset: Option<Preset>) -> Self {
        Self { format: MODEL_FORMAT.into(), version: MODEL_VERSION, preset, model }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(text)?;
        if doc.format != MODEL_FORMAT {
            return Err(Error::Schema(format!("not a model document (format `{}`)", doc.format)));
        }
        if doc.version != MODEL_VERSION {
            return Err(Error::Schema(format!("unsupported model document version {}", doc.version)));
        }
        Ok(doc)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}
