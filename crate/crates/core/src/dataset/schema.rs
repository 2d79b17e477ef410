//! Generic CSV ingestion driven by a JSON schema sidecar.
//!
//! ```json
//! {"columns": [
//!   {"name": "income", "kind": "numeric", "role": "feature"},
//!   {"name": "region", "kind": "categorical", "levels": ["n", "s"], "role": "feature"},
//!   {"name": "good", "kind": "numeric", "role": "target"},
//!   {"name": "female", "kind": "numeric", "role": "protected"}
//! ]}
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ColumnData, Dataset, FeatureKind, FeatureSpec, Role};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemaKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaColumn {
    pub name: String,
    pub kind: SchemaKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<String>>,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaFile {
    pub columns: Vec<SchemaColumn>,
}

impl SchemaFile {
    pub fn specs(&self) -> Result<Vec<FeatureSpec>> {
        self.columns
            .iter()
            .map(|c| {
                let kind = match (&c.kind, &c.levels) {
                    (SchemaKind::Numeric, None) => FeatureKind::Numeric,
                    (SchemaKind::Categorical, Some(levels)) => FeatureKind::Categorical { levels: levels.clone() },
                    (SchemaKind::Numeric, Some(_)) => {
                        return Err(Error::Schema(format!("numeric column `{}` declares levels", c.name)))
                    }
                    (SchemaKind::Categorical, None) => {
                        return Err(Error::Schema(format!("categorical column `{}` needs levels", c.name)))
                    }
                };
                Ok(FeatureSpec { name: c.name.clone(), kind, role: c.role })
            })
            .collect()
    }
}

pub fn parse_schema(json: &str) -> Result<SchemaFile> {
    Ok(serde_json::from_str(json)?)
}

pub fn load_csv_with_schema(csv_path: impl AsRef<Path>, schema_path: impl AsRef<Path>) -> Result<Dataset> {
    let schema = parse_schema(&fs::read_to_string(schema_path)?)?;
    parse_csv(fs::File::open(csv_path)?, &schema)
}

pub(crate) fn parse_csv(reader: impl std::io::Read, schema: &SchemaFile) -> Result<Dataset> {
    let specs = schema.specs()?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.len() != specs.len() {
        return Err(Error::Schema(format!("CSV has {} columns, schema declares {}", header.len(), specs.len())));
    }
    // CSV column index for every schema column
    let positions: Vec<usize> = specs
        .iter()
        .map(|s| {
            header
                .iter()
                .position(|h| h == s.name)
                .ok_or_else(|| Error::Schema(format!("column `{}` missing from CSV header", s.name)))
        })
        .collect::<Result<_>>()?;
    let mut columns: Vec<ColumnData> = specs
        .iter()
        .map(|s| match s.kind {
            FeatureKind::Numeric => ColumnData::Numeric(Vec::new()),
            FeatureKind::Categorical { .. } => ColumnData::Categorical(Vec::new()),
        })
        .collect();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        // header is line 1
        let line = i + 2;
        for ((spec, col), &pos) in specs.iter().zip(columns.iter_mut()).zip(&positions) {
            let cell = record.get(pos).unwrap_or("");
            if cell.is_empty() {
                return Err(Error::Parse { line, message: format!("empty cell in column `{}`", spec.name) });
            }
            match (&spec.kind, col) {
                (FeatureKind::Numeric, ColumnData::Numeric(v)) => {
                    let x: f64 = cell.parse().map_err(|_| Error::Parse {
                        line,
                        message: format!("`{cell}` is not a number ({})", spec.name),
                    })?;
                    v.push(x);
                }
                (FeatureKind::Categorical { levels }, ColumnData::Categorical(v)) => {
                    let code = levels.iter().position(|l| l == cell).ok_or_else(|| Error::UnknownCode {
                        line,
                        column: spec.name.clone(),
                        code: cell.to_string(),
                    })?;
                    v.push(code as u32);
                }
                _ => unreachable!(),
            }
        }
    }
    if columns.first().is_none_or(ColumnData::is_empty) {
        return Err(Error::EmptyInput);
    }
    Dataset::new(specs, columns)
}
