//! Dataset description for `ingest`: counts, marginals and Cramér's V of each
//! feature against the outcome and the protected attribute.

use anyhow::Result;
use fairaudit::dataset::{one_hot_encode, ColumnData, Dataset, FeatureKind, Role};
use fairaudit::stats::cramers_v;
use serde::Serialize;

/// Numeric columns with more distinct values than this are binned into quintiles.
const MAX_RAW_LEVELS: usize = 10;
const BINS: usize = 5;

#[derive(Debug, Serialize)]
pub struct LevelCount {
    pub level: String,
    pub count: usize,
}

#[derive(Debug, Serialize)]
pub struct NumericSummary {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub distinct: usize,
}

#[derive(Debug, Serialize)]
pub struct FeatureSummary {
    pub name: String,
    pub role: Role,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<LevelCount>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub numeric: Option<NumericSummary>,
}

#[derive(Debug, Serialize)]
pub struct DatasetSummary {
    pub n_rows: usize,
    pub target: String,
    pub protected: String,
    pub n_protected: usize,
    pub n_unprotected: usize,
    /// Rows with outcome 0 (bad type).
    pub n_defaults: usize,
    pub defaults_protected: usize,
    pub defaults_unprotected: usize,
    pub default_rate_protected: f64,
    pub default_rate_unprotected: f64,
    pub encoded_width: usize,
    pub encoded_width_with_protected: usize,
    pub features: Vec<FeatureSummary>,
}

#[derive(Debug, Serialize)]
pub struct Association {
    pub feature: String,
    pub v_target: f64,
    pub v_protected: f64,
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

pub fn summarize(d: &Dataset) -> DatasetSummary {
    let y = d.target();
    let p = d.protected();
    let n_protected = p.iter().filter(|&&v| v == 1).count();
    let defaults_protected = y.iter().zip(&p).filter(|(&yi, &pi)| yi == 0 && pi == 1).count();
    let n_defaults = y.iter().filter(|&&v| v == 0).count();
    let n_unprotected = d.n_rows() - n_protected;
    let defaults_unprotected = n_defaults - defaults_protected;
    let features = d
        .specs()
        .iter()
        .zip(d.columns())
        .map(|(spec, col)| match (&spec.kind, col) {
            (FeatureKind::Categorical { levels }, ColumnData::Categorical(codes)) => {
                let mut counts = vec![0; levels.len()];
                codes.iter().for_each(|&c| counts[c as usize] += 1);
                FeatureSummary {
                    name: spec.name.clone(),
                    role: spec.role,
                    levels: Some(
                        levels.iter().zip(counts).map(|(l, count)| LevelCount { level: l.clone(), count }).collect(),
                    ),
                    numeric: None,
                }
            }
            (_, ColumnData::Numeric(v)) => {
                let mut sorted = v.clone();
                sorted.sort_by(f64::total_cmp);
                sorted.dedup();
                FeatureSummary {
                    name: spec.name.clone(),
                    role: spec.role,
                    levels: None,
                    numeric: Some(NumericSummary {
                        min: sorted[0],
                        max: sorted[sorted.len() - 1],
                        mean: v.iter().sum::<f64>() / v.len() as f64,
                        distinct: sorted.len(),
                    }),
                }
            }
            _ => unreachable!("dataset columns match their specs"),
        })
        .collect();
    DatasetSummary {
        n_rows: d.n_rows(),
        target: d.target_name().to_string(),
        protected: d.protected_name().to_string(),
        n_protected,
        n_unprotected,
        n_defaults,
        defaults_protected,
        defaults_unprotected,
        default_rate_protected: ratio(defaults_protected, n_protected),
        default_rate_unprotected: ratio(defaults_unprotected, n_unprotected),
        encoded_width: one_hot_encode(d, false).n_cols(),
        encoded_width_with_protected: one_hot_encode(d, true).n_cols(),
        features,
    }
}

/// Discrete codes for a column: level codes, raw values for low-cardinality
/// numerics, otherwise the quintile bin.
fn codes(col: &ColumnData) -> Vec<u64> {
    match col {
        ColumnData::Categorical(c) => c.iter().map(|&v| u64::from(v)).collect(),
        ColumnData::Numeric(v) => {
            let mut sorted = v.clone();
            sorted.sort_by(f64::total_cmp);
            let mut distinct = sorted.clone();
            distinct.dedup();
            if distinct.len() <= MAX_RAW_LEVELS {
                return v.iter().map(|x| distinct.iter().position(|d| d == x).unwrap() as u64).collect();
            }
            let cuts: Vec<f64> = (1..BINS).map(|k| sorted[k * sorted.len() / BINS]).collect();
            v.iter().map(|x| cuts.iter().filter(|&&c| *x >= c).count() as u64).collect()
        }
    }
}

/// Cramér's V of every feature-role column against the outcome and the
/// protected attribute, strongest outcome association first.
pub fn associations(d: &Dataset) -> Result<Vec<Association>> {
    let y = d.target();
    let p = d.protected();
    let mut rows = Vec::new();
    for (spec, col) in d.specs().iter().zip(d.columns()) {
        if spec.role != Role::Feature {
            continue;
        }
        let c = codes(col);
        rows.push(Association {
            feature: spec.name.clone(),
            v_target: cramers_v(&c, &y).unwrap_or(0.0),
            v_protected: cramers_v(&c, &p).unwrap_or(0.0),
        });
    }
    rows.sort_by(|a, b| b.v_target.total_cmp(&a.v_target).then_with(|| a.feature.cmp(&b.feature)));
    Ok(rows)
}

pub fn associations_csv(rows: &[Association]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["feature", "v_target", "v_protected"])?;
    for r in rows {
        w.write_record([r.feature.clone(), format!("{:.6}", r.v_target), format!("{:.6}", r.v_protected)])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}
