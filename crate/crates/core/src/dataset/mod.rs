//! Typed tabular lending data.
//!
//! A [`Dataset`] is column-major: numeric columns hold `f64`, categorical
//! columns hold indices into the declared level list of their
//! [`FeatureSpec`]. Exactly one column carries the target role and exactly one
//! the protected role; both are stored as numeric 0/1 columns.

mod encode;
mod german;
mod schema;
mod split;

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use encode::{one_hot_encode, standardize, EncodedMatrix, FeatureGroup, GroupEncoding, Standardization};
pub use german::{derive_gender, load_german_credit, parse_german_credit, GENDER, TARGET};
pub use schema::{load_csv_with_schema, parse_schema, SchemaColumn, SchemaFile};
pub use split::kfold_indices;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Categorical { levels: Vec<String> },
    Numeric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Feature,
    Target,
    Protected,
    Excluded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
    pub role: Role,
}

impl FeatureSpec {
    pub fn numeric(name: impl Into<String>, role: Role) -> Self {
        Self { name: name.into(), kind: FeatureKind::Numeric, role }
    }

    pub fn categorical<S: Into<String>>(
        name: impl Into<String>,
        levels: impl IntoIterator<Item = S>,
        role: Role,
    ) -> Self {
        Self {
            name: name.into(),
            kind: FeatureKind::Categorical { levels: levels.into_iter().map(Into::into).collect() },
            role,
        }
    }

    pub fn levels(&self) -> Option<&[String]> {
        match &self.kind {
            FeatureKind::Categorical { levels } => Some(levels),
            FeatureKind::Numeric => None,
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self.kind, FeatureKind::Numeric)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Numeric(Vec<f64>),
    /// Indices into the level list of the column's [`FeatureSpec`].
    Categorical(Vec<u32>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Numeric(v) => v.len(),
            ColumnData::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A single cell value, used when overwriting a feature for every row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Number(f64),
    Level(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Number(x) => write!(f, "{x}"),
            Value::Level(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    specs: Vec<FeatureSpec>,
    columns: Vec<ColumnData>,
    n: usize,
}

impl Dataset {
    pub fn new(specs: Vec<FeatureSpec>, columns: Vec<ColumnData>) -> Result<Self> {
        if specs.len() != columns.len() {
            return Err(Error::LengthMismatch { left: specs.len(), right: columns.len() });
        }
        let n = columns.first().map(ColumnData::len).unwrap_or(0);
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        let mut names = HashSet::new();
        let mut targets = 0;
        let mut protected = 0;
        for (spec, col) in specs.iter().zip(&columns) {
            if !names.insert(spec.name.as_str()) {
                return Err(Error::Schema(format!("duplicate column `{}`", spec.name)));
            }
            if col.len() != n {
                return Err(Error::LengthMismatch { left: n, right: col.len() });
            }
            match spec.role {
                Role::Target => targets += 1,
                Role::Protected => protected += 1,
                _ => {}
            }
            match (&spec.kind, col) {
                (FeatureKind::Categorical { levels }, ColumnData::Categorical(codes)) => {
                    check_levels(&spec.name, levels)?;
                    if codes.iter().any(|&c| c as usize >= levels.len()) {
                        return Err(Error::Schema(format!("column `{}` has an undeclared level", spec.name)));
                    }
                }
                (FeatureKind::Numeric, ColumnData::Numeric(values)) => {
                    if values.iter().any(|v| !v.is_finite()) {
                        return Err(Error::Schema(format!("column `{}` has a non-finite value", spec.name)));
                    }
                }
                _ => {
                    return Err(Error::Schema(format!("column `{}` does not match its declared kind", spec.name)));
                }
            }
            if matches!(spec.role, Role::Target | Role::Protected) {
                match col {
                    ColumnData::Numeric(values) if values.iter().all(|&v| v == 0.0 || v == 1.0) => {}
                    _ => {
                        return Err(Error::Schema(format!("column `{}` must contain only 0 and 1", spec.name)));
                    }
                }
            }
        }
        if targets != 1 || protected != 1 {
            return Err(Error::Schema(format!(
                "expected exactly one target and one protected column, found {targets} and {protected}"
            )));
        }
        Ok(Self { specs, columns, n })
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn specs(&self) -> &[FeatureSpec] {
        &self.specs
    }

    pub fn columns(&self) -> &[ColumnData] {
        &self.columns
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.specs.iter().position(|s| s.name == name)
    }

    pub fn spec(&self, name: &str) -> Option<&FeatureSpec> {
        self.index_of(name).map(|i| &self.specs[i])
    }

    pub fn column(&self, name: &str) -> Option<&ColumnData> {
        self.index_of(name).map(|i| &self.columns[i])
    }

    fn role_index(&self, role: Role) -> usize {
        self.specs.iter().position(|s| s.role == role).expect("validated at construction")
    }

    pub fn target_name(&self) -> &str {
        &self.specs[self.role_index(Role::Target)].name
    }

    pub fn protected_name(&self) -> &str {
        &self.specs[self.role_index(Role::Protected)].name
    }

    pub fn target(&self) -> Vec<u8> {
        self.binary(self.role_index(Role::Target))
    }

    pub fn protected(&self) -> Vec<u8> {
        self.binary(self.role_index(Role::Protected))
    }

    fn binary(&self, idx: usize) -> Vec<u8> {
        match &self.columns[idx] {
            ColumnData::Numeric(v) => v.iter().map(|&x| x as u8).collect(),
            ColumnData::Categorical(_) => unreachable!("binary roles are numeric"),
        }
    }

    /// Names of the columns playing the feature role, in column order.
    pub fn feature_names(&self) -> Vec<&str> {
        self.specs.iter().filter(|s| s.role == Role::Feature).map(|s| s.name.as_str()).collect()
    }

    /// The cell at (`row`, column `name`) as a [`Value`].
    pub fn value(&self, row: usize, name: &str) -> Option<Value> {
        let i = self.index_of(name)?;
        Some(match (&self.columns[i], &self.specs[i].kind) {
            (ColumnData::Numeric(v), _) => Value::Number(*v.get(row)?),
            (ColumnData::Categorical(c), FeatureKind::Categorical { levels }) => {
                Value::Level(levels[*c.get(row)? as usize].clone())
            }
            _ => unreachable!(),
        })
    }

    /// A copy with `role` assigned to column `name`.
    pub fn with_role(&self, name: &str, role: Role) -> Result<Self> {
        let i = self.index_of(name).ok_or_else(|| Error::UnknownFeature(name.to_string()))?;
        let mut specs = self.specs.clone();
        specs[i].role = role;
        Self::new(specs, self.columns.clone())
    }

    /// A copy in which every row of `name` holds `value`.
    pub fn with_constant(&self, name: &str, value: &Value) -> Result<Self> {
        let i = self.index_of(name).ok_or_else(|| Error::UnknownFeature(name.to_string()))?;
        let invalid = || Error::InvalidValue { feature: name.to_string(), value: value.to_string() };
        let col = match (&self.specs[i].kind, value) {
            (FeatureKind::Numeric, Value::Number(x)) if x.is_finite() => ColumnData::Numeric(vec![*x; self.n]),
            (FeatureKind::Categorical { levels }, Value::Level(l)) => {
                let code = levels.iter().position(|x| x == l).ok_or_else(invalid)?;
                ColumnData::Categorical(vec![code as u32; self.n])
            }
            _ => return Err(invalid()),
        };
        let mut columns = self.columns.clone();
        columns[i] = col;
        Self::new(self.specs.clone(), columns)
    }

    /// Rows at `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let columns = self
            .columns
            .iter()
            .map(|c| match c {
                ColumnData::Numeric(v) => ColumnData::Numeric(indices.iter().map(|&i| v[i]).collect()),
                ColumnData::Categorical(v) => ColumnData::Categorical(indices.iter().map(|&i| v[i]).collect()),
            })
            .collect();
        Self { specs: self.specs.clone(), columns, n: indices.len() }
    }
}

fn check_levels(name: &str, levels: &[String]) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::Schema(format!("categorical column `{name}` declares no levels")));
    }
    let mut seen = HashSet::new();
    for l in levels {
        if l.is_empty() || !seen.insert(l.as_str()) {
            return Err(Error::Schema(format!("categorical column `{name}` has an empty or repeated level")));
        }
    }
    Ok(())
}
