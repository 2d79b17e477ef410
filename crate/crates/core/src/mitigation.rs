//! Mitigation by dropping a candidate feature and retraining, or by fixing it
//! to one value for every applicant without retraining, and the resulting
//! fairness/performance trade-off table.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{EncodedMatrix, Value};
use crate::error::{Error, Result};
use crate::fairness::{audit_predictions, AuditData, AuditSuite, Hypothesis};
use crate::fpdp::{FpdpCurve, SweepContext};
use crate::models::{auc, classify, pcc, train, Classifier, ModelParams};

/// Which tests must pass, and at what level, for a row to count as fair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessCriterion {
    pub alpha: f64,
    pub hypotheses: Vec<Hypothesis>,
}

impl Default for FairnessCriterion {
    /// SP, global CSP, EOP and EO at 10%; predictive equality is reported but not required.
    fn default() -> Self {
        Self { alpha: 0.10, hypotheses: vec![Hypothesis::SP, Hypothesis::CSP, Hypothesis::EOP, Hypothesis::EO] }
    }
}

impl FairnessCriterion {
    pub fn is_fair(&self, suite: &AuditSuite) -> bool {
        self.hypotheses.iter().all(|&h| suite.p_value(h) > self.alpha)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Strategy {
    Reestimate { feature: String },
    FixValue { feature: String, value: Value },
}

impl Strategy {
    pub fn feature(&self) -> &str {
        match self {
            Strategy::Reestimate { feature } | Strategy::FixValue { feature, .. } => feature,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Strategy::Reestimate { feature } => format!("{feature} (dropped)"),
            Strategy::FixValue { feature, value } => format!("{feature} (= {value})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MitigationRow {
    pub strategy: Strategy,
    pub label: String,
    pub p_values: BTreeMap<Hypothesis, f64>,
    pub auc: f64,
    pub pcc: f64,
    pub fair: bool,
    /// Labels of the mitigated model, used to group rows with identical decisions.
    #[serde(skip)]
    pub predictions: Vec<u8>,
}

fn row(strategy: Strategy, suite: &AuditSuite, scores: &[f64], yhat: Vec<u8>, y: &[u8], criterion: &FairnessCriterion) -> Result<MitigationRow> {
    Ok(MitigationRow {
        label: strategy.label(),
        strategy,
        p_values: suite.reports.iter().map(|(&h, r)| (h, r.p_value)).collect(),
        auc: auc(y, scores)?,
        pcc: pcc(y, &yhat)?,
        fair: criterion.is_fair(suite),
        predictions: yhat,
    })
}

fn score_and_audit(
    model: &dyn Classifier,
    x: &EncodedMatrix,
    data: &AuditData<'_>,
    delta: f64,
    alpha: f64,
) -> Result<(Vec<f64>, Vec<u8>, AuditSuite)> {
    let scores = model.predict_proba(x);
    let yhat = classify(&scores, delta)?;
    let mut suite = audit_predictions(&yhat, data, alpha)?;
    suite.delta = Some(delta);
    Ok((scores, yhat, suite))
}

/// Row for the unmodified model.
pub fn baseline(ctx: &SweepContext<'_>, criterion: &FairnessCriterion) -> Result<(MitigationRow, AuditSuite)> {
    let (scores, yhat, suite) = score_and_audit(ctx.model, ctx.x, &ctx.data, ctx.delta, criterion.alpha)?;
    let mut r = row(Strategy::Reestimate { feature: String::new() }, &suite, &scores, yhat, ctx.data.y, criterion)?;
    r.label = "Baseline".into();
    Ok((r, suite))
}

/// Sets `feature` to `value` for every row and re-scores with the same model.
pub fn mitigate_fix_value(
    ctx: &SweepContext<'_>,
    feature: &str,
    value: &Value,
    criterion: &FairnessCriterion,
) -> Result<MitigationRow> {
    let modified = ctx.x.with_feature(feature, value)?;
    let (scores, yhat, suite) = score_and_audit(ctx.model, &modified, &ctx.data, ctx.delta, criterion.alpha)?;
    row(
        Strategy::FixValue { feature: feature.to_string(), value: value.clone() },
        &suite,
        &scores,
        yhat,
        ctx.data.y,
        criterion,
    )
}

/// Removes every column of `feature` and retrains with the same hyperparameters.
pub fn mitigate_reestimate(
    params: &ModelParams,
    x: &EncodedMatrix,
    data: &AuditData<'_>,
    feature: &str,
    delta: f64,
    criterion: &FairnessCriterion,
    seed: u64,
) -> Result<MitigationRow> {
    let reduced = x.drop_feature(feature)?;
    let model = train(&reduced, data.y, params, seed)?;
    let (scores, yhat, suite) = score_and_audit(&model, &reduced, data, delta, criterion.alpha)?;
    row(Strategy::Reestimate { feature: feature.to_string() }, &suite, &scores, yhat, data.y, criterion)
}

/// Fix-value rows for every witness value of the given FPDP curves; a
/// (feature, value) pair appearing in several curves is evaluated once.
pub fn fix_value_rows(
    ctx: &SweepContext<'_>,
    curves: &[FpdpCurve],
    criterion: &FairnessCriterion,
) -> Result<Vec<MitigationRow>> {
    let mut jobs: Vec<(String, Value)> = Vec::new();
    for c in curves {
        for v in c.witness_values() {
            if !jobs.iter().any(|(f, w)| f == &c.feature && w == &v) {
                jobs.push((c.feature.clone(), v));
            }
        }
    }
    jobs.par_iter().map(|(f, v)| mitigate_fix_value(ctx, f, v, criterion)).collect()
}

pub fn reestimate_rows(
    params: &ModelParams,
    x: &EncodedMatrix,
    data: &AuditData<'_>,
    features: &[String],
    delta: f64,
    criterion: &FairnessCriterion,
    seed: u64,
) -> Result<Vec<MitigationRow>> {
    features.par_iter().map(|f| mitigate_reestimate(params, x, data, f, delta, criterion, seed)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffTable {
    pub rows: Vec<MitigationRow>,
    /// Per row, the index of its group of rows with identical predictions
    /// (groups numbered in table order).
    pub equivalence_class: Vec<usize>,
}

impl TradeoffTable {
    /// Highest-ranked fair row.
    pub fn best_fair(&self) -> Option<&MitigationRow> {
        self.rows.iter().find(|r| r.fair)
    }

    /// Groups of row labels sharing one prediction vector, in table order.
    pub fn equivalence_groups(&self) -> Vec<Vec<String>> {
        let n_groups = self.equivalence_class.iter().copied().max().map_or(0, |m| m + 1);
        let mut groups = vec![Vec::new(); n_groups];
        for (r, &g) in self.rows.iter().zip(&self.equivalence_class) {
            groups[g].push(r.label.clone());
        }
        groups
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Strategy, p-values, AUC, PCC, fairness flag and equivalence class.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["strategy", "SP", "CSP", "EOP", "EO", "PE", "AUC", "PCC", "fair", "equivalence_class"])?;
        for (r, g) in self.rows.iter().zip(&self.equivalence_class) {
            let p = |h: Hypothesis| r.p_values.get(&h).map_or(String::new(), |v| format!("{v:.4}"));
            w.write_record([
                r.label.clone(),
                p(Hypothesis::SP),
                p(Hypothesis::CSP),
                p(Hypothesis::EOP),
                p(Hypothesis::EO),
                p(Hypothesis::PE),
                format!("{:.4}", r.auc),
                format!("{:.1}", r.pcc),
                r.fair.to_string(),
                g.to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Orders rows by AUC, then PCC (both descending), then label.
pub fn tradeoff_table(mut rows: Vec<MitigationRow>) -> Result<TradeoffTable> {
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    rows.sort_by(|a, b| {
        b.auc.total_cmp(&a.auc).then(b.pcc.total_cmp(&a.pcc)).then_with(|| a.label.cmp(&b.label))
    });
    let mut seen: Vec<&[u8]> = Vec::new();
    let mut equivalence_class = Vec::with_capacity(rows.len());
    for r in &rows {
        let id = match seen.iter().position(|p| !r.predictions.is_empty() && *p == r.predictions.as_slice()) {
            Some(i) => i,
            None => {
                seen.push(&r.predictions);
                seen.len() - 1
            }
        };
        equivalence_class.push(id);
    }
    Ok(TradeoffTable { rows, equivalence_class })
}
