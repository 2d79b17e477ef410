use ndarray::{Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use super::{ColumnData, Dataset, FeatureKind, Role, Value};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GroupEncoding {
    Numeric,
    OneHot { levels: Vec<String> },
}

/// The encoded columns that stem from one original feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureGroup {
    pub name: String,
    pub columns: Vec<usize>,
    pub encoding: GroupEncoding,
}

/// Model-ready numeric matrix (rows in dataset order).
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedMatrix {
    column_names: Vec<String>,
    values: Array2<f64>,
    groups: Vec<FeatureGroup>,
}

pub fn one_hot_encode(d: &Dataset, include_protected: bool) -> EncodedMatrix {
    let n = d.n_rows();
    let mut names = Vec::new();
    let mut groups = Vec::new();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for (spec, col) in d.specs().iter().zip(d.columns()) {
        let keep = match spec.role {
            Role::Feature => true,
            Role::Protected => include_protected,
            Role::Target | Role::Excluded => false,
        };
        if !keep {
            continue;
        }
        match (&spec.kind, col) {
            (FeatureKind::Numeric, ColumnData::Numeric(v)) => {
                groups.push(FeatureGroup {
                    name: spec.name.clone(),
                    columns: vec![names.len()],
                    encoding: GroupEncoding::Numeric,
                });
                names.push(spec.name.clone());
                cols.push(v.clone());
            }
            (FeatureKind::Categorical { levels }, ColumnData::Categorical(codes)) => {
                let start = names.len();
                for (li, level) in levels.iter().enumerate() {
                    names.push(format!("{}={}", spec.name, level));
                    cols.push(codes.iter().map(|&c| if c as usize == li { 1.0 } else { 0.0 }).collect());
                }
                groups.push(FeatureGroup {
                    name: spec.name.clone(),
                    columns: (start..names.len()).collect(),
                    encoding: GroupEncoding::OneHot { levels: levels.clone() },
                });
            }
            _ => unreachable!("dataset kinds are validated"),
        }
    }
    let p = names.len();
    let values = Array2::from_shape_fn((n, p), |(i, j)| cols[j][i]);
    EncodedMatrix { column_names: names, values, groups }
}

impl EncodedMatrix {
    pub fn new(column_names: Vec<String>, values: Array2<f64>, groups: Vec<FeatureGroup>) -> Result<Self> {
        if column_names.len() != values.ncols() {
            return Err(Error::LengthMismatch { left: column_names.len(), right: values.ncols() });
        }
        let mut seen = vec![false; column_names.len()];
        for g in &groups {
            for &c in &g.columns {
                if c >= seen.len() || std::mem::replace(&mut seen[c], true) {
                    return Err(Error::Schema(format!("group `{}` has an invalid column index", g.name)));
                }
            }
            if let GroupEncoding::OneHot { levels } = &g.encoding {
                if levels.len() != g.columns.len() {
                    return Err(Error::Schema(format!("group `{}` level count mismatch", g.name)));
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Schema("every column must belong to a group".into()));
        }
        Ok(Self { column_names, values, groups })
    }

    /// Plain numeric matrix: one group per column.
    pub fn from_numeric(column_names: Vec<String>, values: Array2<f64>) -> Result<Self> {
        let groups = column_names
            .iter()
            .enumerate()
            .map(|(i, n)| FeatureGroup { name: n.clone(), columns: vec![i], encoding: GroupEncoding::Numeric })
            .collect();
        Self::new(column_names, values, groups)
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.values.row(i)
    }

    pub fn groups(&self) -> &[FeatureGroup] {
        &self.groups
    }

    pub fn group(&self, name: &str) -> Option<&FeatureGroup> {
        self.groups.iter().find(|g| g.name == name)
    }

    fn group_or_err(&self, name: &str) -> Result<&FeatureGroup> {
        self.group(name).ok_or_else(|| Error::UnknownFeature(name.to_string()))
    }

    /// Original feature that produced encoded column `col`.
    pub fn feature_of_column(&self, col: usize) -> Option<&str> {
        self.groups.iter().find(|g| g.columns.contains(&col)).map(|g| g.name.as_str())
    }

    /// Level held by `row` in the one-hot block of `feature`.
    pub fn decode_level(&self, row: usize, feature: &str) -> Option<&str> {
        let g = self.group(feature)?;
        match &g.encoding {
            GroupEncoding::OneHot { levels } => g
                .columns
                .iter()
                .position(|&c| self.values[[row, c]] == 1.0)
                .map(|k| levels[k].as_str()),
            GroupEncoding::Numeric => None,
        }
    }

    /// Sorted distinct values of a numeric feature.
    pub fn distinct_values(&self, feature: &str) -> Result<Vec<f64>> {
        let g = self.group_or_err(feature)?;
        if g.encoding != GroupEncoding::Numeric {
            return Err(Error::InvalidArgument(format!("`{feature}` is not numeric")));
        }
        let mut v: Vec<f64> = self.values.column(g.columns[0]).to_vec();
        v.sort_by(f64::total_cmp);
        v.dedup();
        Ok(v)
    }

    /// Overwrites `feature` with `value` for every row. For a one-hot block the
    /// level's column is set to 1 and its siblings to 0.
    pub fn set_feature(&mut self, feature: &str, value: &Value) -> Result<()> {
        let g = self.group_or_err(feature)?.clone();
        let invalid = || Error::InvalidValue { feature: feature.to_string(), value: value.to_string() };
        match (&g.encoding, value) {
            (GroupEncoding::Numeric, Value::Number(x)) if x.is_finite() => {
                self.values.column_mut(g.columns[0]).fill(*x);
            }
            (GroupEncoding::OneHot { levels }, Value::Level(l)) => {
                let k = levels.iter().position(|x| x == l).ok_or_else(invalid)?;
                for (i, &c) in g.columns.iter().enumerate() {
                    self.values.column_mut(c).fill(if i == k { 1.0 } else { 0.0 });
                }
            }
            _ => return Err(invalid()),
        }
        Ok(())
    }

    pub fn with_feature(&self, feature: &str, value: &Value) -> Result<Self> {
        let mut m = self.clone();
        m.set_feature(feature, value)?;
        Ok(m)
    }

    /// A copy without any column of `feature`.
    pub fn drop_feature(&self, feature: &str) -> Result<Self> {
        let g = self.group_or_err(feature)?;
        let keep: Vec<usize> = (0..self.n_cols()).filter(|c| !g.columns.contains(c)).collect();
        let remap = |c: usize| keep.iter().position(|&k| k == c).expect("kept column");
        let groups = self
            .groups
            .iter()
            .filter(|h| h.name != feature)
            .map(|h| FeatureGroup { columns: h.columns.iter().map(|&c| remap(c)).collect(), ..h.clone() })
            .collect();
        Ok(Self {
            column_names: keep.iter().map(|&c| self.column_names[c].clone()).collect(),
            values: self.values.select(Axis(1), &keep),
            groups,
        })
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            column_names: self.column_names.clone(),
            values: self.values.select(Axis(0), rows),
            groups: self.groups.clone(),
        }
    }

    /// Columns that come from numeric features.
    pub fn numeric_columns(&self) -> Vec<usize> {
        self.groups
            .iter()
            .filter(|g| g.encoding == GroupEncoding::Numeric)
            .flat_map(|g| g.columns.iter().copied())
            .collect()
    }
}

/// Per-column affine transform `(x - mean) / std` learned on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub columns: Vec<usize>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardization {
    pub fn fit(m: &EncodedMatrix, columns: &[usize]) -> Result<Self> {
        let n = m.n_rows() as f64;
        if m.n_rows() < 2 {
            return Err(Error::InvalidArgument("standardization needs at least two rows".into()));
        }
        let mut means = Vec::with_capacity(columns.len());
        let mut stds = Vec::with_capacity(columns.len());
        for &c in columns {
            let name = m.column_names.get(c).ok_or_else(|| Error::InvalidArgument(format!("no column {c}")))?;
            let col = m.values.column(c);
            let mean = col.sum() / n;
            // sample divisor (n - 1)
            let var = col.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
            if var <= 0.0 {
                return Err(Error::ZeroVariance(name.clone()));
            }
            means.push(mean);
            stds.push(var.sqrt());
        }
        Ok(Self { columns: columns.to_vec(), means, stds })
    }

    pub fn apply_row(&self, row: &mut [f64]) {
        for ((&c, m), s) in self.columns.iter().zip(&self.means).zip(&self.stds) {
            row[c] = (row[c] - m) / s;
        }
    }

    pub fn apply(&self, m: &EncodedMatrix) -> EncodedMatrix {
        let mut out = m.clone();
        for ((&c, mean), s) in self.columns.iter().zip(&self.means).zip(&self.stds) {
            out.values.column_mut(c).mapv_inplace(|x| (x - mean) / s);
        }
        out
    }
}

pub fn standardize(m: &EncodedMatrix, columns: &[usize]) -> Result<(EncodedMatrix, Standardization)> {
    let s = Standardization::fit(m, columns)?;
    Ok((s.apply(m), s))
}
