//! Chi-squared fairness tests of the predicted label against the protected
//! attribute: statistical parity (SP), conditional statistical parity within
//! risk classes (CSP), equal odds (EO), equal opportunity (EOP, Y = 1) and
//! predictive equality (PE, Y = 0).
//!
//! Each test cross-tabulates ŷ against D inside one or more strata. The global
//! statistic sums the non-degenerate strata and has one degree of freedom per
//! such stratum; a test with no usable stratum has p-value 1.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::EncodedMatrix;
use crate::error::{Error, Result};
use crate::models::{classify, Classifier};
use crate::stats::{build_table, chi2_sf, pearson_chi2_stratum, ChiSquareResult, ContingencyTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Hypothesis {
    SP,
    CSP,
    EO,
    EOP,
    PE,
}

impl Hypothesis {
    pub const ALL: [Hypothesis; 5] = [Hypothesis::SP, Hypothesis::CSP, Hypothesis::EO, Hypothesis::EOP, Hypothesis::PE];

    pub fn tag(self) -> &'static str {
        match self {
            Hypothesis::SP => "SP",
            Hypothesis::CSP => "CSP",
            Hypothesis::EO => "EO",
            Hypothesis::EOP => "EOP",
            Hypothesis::PE => "PE",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Hypothesis::SP => "Statistical parity",
            Hypothesis::CSP => "Cond. parity (global)",
            Hypothesis::EO => "Equal odds",
            Hypothesis::EOP => "Equal opportunity",
            Hypothesis::PE => "Predictive equality",
        }
    }
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Hypothesis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Hypothesis::ALL
            .into_iter()
            .find(|h| h.tag().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown hypothesis `{s}` (expected SP, CSP, EO, EOP or PE)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumReport {
    pub label: String,
    /// `counts[u][v]`: u = 0 for ŷ = 1, u = 1 for ŷ = 0; v = 0 for D = 1, v = 1 for D = 0.
    pub counts: [[u64; 2]; 2],
    pub statistic: f64,
    pub dof: u32,
    pub p_value: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub hypothesis: Hypothesis,
    pub strata: Vec<StratumReport>,
    pub statistic: f64,
    pub dof: u32,
    pub p_value: f64,
    pub alpha: f64,
    pub reject: bool,
}

impl FairnessReport {
    /// True when no stratum contributed, so the null cannot be tested.
    pub fn degenerate(&self) -> bool {
        self.dof == 0
    }

    pub fn result(&self) -> ChiSquareResult {
        ChiSquareResult { statistic: self.statistic, dof: self.dof, p_value: self.p_value, degenerate: self.dof == 0 }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("significance level must lie in (0, 1), got {alpha}")))
    }
}

fn report(hypothesis: Hypothesis, table: ContingencyTable, alpha: f64) -> Result<FairnessReport> {
    check_alpha(alpha)?;
    let mut strata = Vec::with_capacity(table.strata.len());
    let mut statistic = 0.0;
    let mut dof = 0;
    for s in table.strata {
        let r = pearson_chi2_stratum(&s)?;
        if !r.degenerate {
            statistic += r.statistic;
            dof += r.dof;
        }
        strata.push(StratumReport {
            label: s.label,
            counts: s.counts,
            statistic: r.statistic,
            dof: r.dof,
            p_value: r.p_value,
            degenerate: r.degenerate,
        });
    }
    let p_value = if dof == 0 { 1.0 } else { chi2_sf(statistic, dof)? };
    Ok(FairnessReport { hypothesis, strata, statistic, dof, p_value, alpha, reject: p_value < alpha })
}

fn check_len(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::LengthMismatch { left: a, right: b })
    }
}

pub fn test_statistical_parity(yhat: &[u8], d: &[u8], alpha: f64) -> Result<FairnessReport> {
    check_len(yhat.len(), d.len())?;
    if yhat.is_empty() {
        return Err(Error::EmptyInput);
    }
    let labels = vec!["All"; yhat.len()];
    report(Hypothesis::SP, build_table(yhat, d, &labels)?, alpha)
}

/// Strata are the distinct class labels, reported as "Class k" with k
/// counted from 1 in ascending label order.
pub fn test_conditional_parity(yhat: &[u8], d: &[u8], classes: &[usize], alpha: f64) -> Result<FairnessReport> {
    check_len(yhat.len(), d.len())?;
    check_len(yhat.len(), classes.len())?;
    if yhat.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut table = build_table(yhat, d, classes)?;
    for s in &mut table.strata {
        let k: usize = s.label.parse().expect("numeric class label");
        s.label = format!("Class {}", k + 1);
    }
    report(Hypothesis::CSP, table, alpha)
}

fn outcome_subset(yhat: &[u8], y: &[u8], d: &[u8], keep: u8) -> Result<(Vec<u8>, Vec<u8>)> {
    check_len(yhat.len(), y.len())?;
    check_len(yhat.len(), d.len())?;
    let (a, b): (Vec<u8>, Vec<u8>) =
        yhat.iter().zip(y).zip(d).filter(|((_, &yi), _)| yi == keep).map(|((&p, _), &di)| (p, di)).unzip();
    if a.is_empty() {
        return Err(Error::MissingStratum(format!("Y={keep}")));
    }
    Ok((a, b))
}

pub fn test_equal_odds(yhat: &[u8], y: &[u8], d: &[u8], alpha: f64) -> Result<FairnessReport> {
    outcome_subset(yhat, y, d, 0)?;
    outcome_subset(yhat, y, d, 1)?;
    if y.iter().any(|&v| v > 1) {
        return Err(Error::InvalidArgument("outcome must be 0/1".into()));
    }
    let labels: Vec<String> = y.iter().map(|v| format!("Y={v}")).collect();
    report(Hypothesis::EO, build_table(yhat, d, &labels)?, alpha)
}

pub fn test_equal_opportunity(yhat: &[u8], y: &[u8], d: &[u8], alpha: f64) -> Result<FairnessReport> {
    let (a, b) = outcome_subset(yhat, y, d, 1)?;
    report(Hypothesis::EOP, build_table(&a, &b, &vec!["Y=1"; a.len()])?, alpha)
}

pub fn test_predictive_equality(yhat: &[u8], y: &[u8], d: &[u8], alpha: f64) -> Result<FairnessReport> {
    let (a, b) = outcome_subset(yhat, y, d, 0)?;
    report(Hypothesis::PE, build_table(&a, &b, &vec!["Y=0"; a.len()])?, alpha)
}

/// Inputs shared by every test: true outcome, protected attribute and the
/// risk classes used for conditional parity.
#[derive(Debug, Clone, Copy)]
pub struct AuditData<'a> {
    pub y: &'a [u8],
    pub d: &'a [u8],
    pub classes: &'a [usize],
}

pub fn run_test(h: Hypothesis, yhat: &[u8], data: &AuditData<'_>, alpha: f64) -> Result<FairnessReport> {
    match h {
        Hypothesis::SP => test_statistical_parity(yhat, data.d, alpha),
        Hypothesis::CSP => test_conditional_parity(yhat, data.d, data.classes, alpha),
        Hypothesis::EO => test_equal_odds(yhat, data.y, data.d, alpha),
        Hypothesis::EOP => test_equal_opportunity(yhat, data.y, data.d, alpha),
        Hypothesis::PE => test_predictive_equality(yhat, data.y, data.d, alpha),
    }
}

/// Informal aggregation rules for the per-class conditional parity tests,
/// reported next to the summed test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CspAdvisory {
    pub n_classes: usize,
    pub classes_rejected: usize,
    /// Unfair if at least one class rejects.
    pub unfair_any_class: bool,
    /// Unfair if a strict majority of classes reject.
    pub unfair_majority: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditSuite {
    pub n: usize,
    pub delta: Option<f64>,
    pub alpha: f64,
    pub positive_rate: f64,
    pub reports: BTreeMap<Hypothesis, FairnessReport>,
    pub csp_advisory: CspAdvisory,
}

impl AuditSuite {
    pub fn get(&self, h: Hypothesis) -> &FairnessReport {
        &self.reports[&h]
    }

    pub fn p_value(&self, h: Hypothesis) -> f64 {
        self.get(h).p_value
    }

    /// True when none of `hypotheses` is rejected at `alpha`.
    pub fn fair_at(&self, hypotheses: &[Hypothesis], alpha: f64) -> bool {
        hypotheses.iter().all(|&h| self.p_value(h) >= alpha)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Runs the five tests on fixed predictions.
pub fn audit_predictions(yhat: &[u8], data: &AuditData<'_>, alpha: f64) -> Result<AuditSuite> {
    check_alpha(alpha)?;
    let reports = Hypothesis::ALL
        .iter()
        .map(|&h| Ok((h, run_test(h, yhat, data, alpha)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let csp = &reports[&Hypothesis::CSP];
    let n_classes = csp.strata.len();
    let classes_rejected = csp.strata.iter().filter(|s| !s.degenerate && s.p_value < alpha).count();
    let positives = yhat.iter().filter(|&&v| v == 1).count();
    Ok(AuditSuite {
        n: yhat.len(),
        delta: None,
        alpha,
        positive_rate: positives as f64 / yhat.len() as f64,
        reports,
        csp_advisory: CspAdvisory {
            n_classes,
            classes_rejected,
            unfair_any_class: classes_rejected > 0,
            unfair_majority: 2 * classes_rejected > n_classes,
        },
    })
}

/// Scores `x` once, thresholds at `delta` and runs the five tests.
pub fn audit<C: Classifier + ?Sized>(
    model: &C,
    x: &EncodedMatrix,
    data: &AuditData<'_>,
    delta: f64,
    alpha: f64,
) -> Result<AuditSuite> {
    let yhat = classify(&model.predict_proba(x), delta)?;
    let mut suite = audit_predictions(&yhat, data, alpha)?;
    suite.delta = Some(delta);
    Ok(suite)
}

fn format_p(p: f64, alpha: f64) -> String {
    if p < alpha {
        format!("{p:.4}*")
    } else {
        format!("{p:.4}")
    }
}

/// P-value table with one column per audited model: SP, every conditional
/// parity class, global conditional parity, EO, EOP and PE. Rejections at the
/// suite's level carry a `*`.
pub fn p_value_table_csv(columns: &[(&str, &AuditSuite)]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["test".to_string()];
    header.extend(columns.iter().map(|(name, _)| name.to_string()));
    w.write_record(&header)?;

    let mut class_labels: Vec<String> = Vec::new();
    for (_, s) in columns {
        for st in &s.get(Hypothesis::CSP).strata {
            if !class_labels.contains(&st.label) {
                class_labels.push(st.label.clone());
            }
        }
    }
    class_labels.sort_by_key(|l| l.trim_start_matches("Class ").parse::<usize>().unwrap_or(usize::MAX));

    let row = |w: &mut csv::Writer<Vec<u8>>, name: String, cell: &dyn Fn(&AuditSuite) -> String| -> Result<()> {
        let mut rec = vec![name];
        rec.extend(columns.iter().map(|(_, s)| cell(s)));
        w.write_record(&rec)?;
        Ok(())
    };
    let global = |h: Hypothesis| move |s: &AuditSuite| format_p(s.p_value(h), s.alpha);

    row(&mut w, Hypothesis::SP.label().into(), &global(Hypothesis::SP))?;
    for label in &class_labels {
        row(&mut w, format!("Cond. parity {label}"), &|s: &AuditSuite| {
            s.get(Hypothesis::CSP)
                .strata
                .iter()
                .find(|st| &st.label == label)
                .map(|st| format_p(st.p_value, s.alpha))
                .unwrap_or_default()
        })?;
    }
    for h in [Hypothesis::CSP, Hypothesis::EO, Hypothesis::EOP, Hypothesis::PE] {
        row(&mut w, h.label().into(), &global(h))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{chi2_quantile, Stratum};
    use proptest::prelude::*;

    /// Expands a 2x2 count table into (ŷ, D) vectors.
    fn expand(counts: [[u64; 2]; 2]) -> (Vec<u8>, Vec<u8>) {
        let mut yhat = Vec::new();
        let mut d = Vec::new();
        for u in 0..2 {
            for v in 0..2 {
                for _ in 0..counts[u][v] {
                    yhat.push(1 - u as u8);
                    d.push(1 - v as u8);
                }
            }
        }
        (yhat, d)
    }

    #[test]
    fn worked_example_single_class() {
        let (yhat, d) = expand([[178, 433], [92, 124]]);
        let r = test_statistical_parity(&yhat, &d, 0.05).unwrap();
        assert!((r.statistic - 13.15).abs() < 0.01);
        assert!(r.reject);
        assert_eq!(r.dof, 1);
    }

    #[test]
    fn worked_example_global_with_second_class_fixture() {
        let c1 = pearson_chi2_stratum(&Stratum::new("C1", [[178, 433], [92, 124]])).unwrap();
        let global = c1.statistic + 3.24;
        assert!((global - 16.39).abs() < 0.02);
        let crit = chi2_quantile(0.95, 2).unwrap();
        assert!((crit - 5.99).abs() < 0.01);
        assert!(global > crit);
        assert!(chi2_sf(global, 2).unwrap() < 0.05);
    }

    #[test]
    fn degenerate_cases() {
        let r = test_statistical_parity(&[1, 0, 1], &[1, 1, 1], 0.05).unwrap();
        assert!(r.degenerate());
        assert_eq!(r.p_value, 1.0);
        assert!(!r.reject);
        let (yhat, d) = expand([[10, 20], [30, 60]]);
        assert_eq!(test_statistical_parity(&yhat, &d, 0.05).unwrap().statistic, 0.0);
    }

    #[test]
    fn degenerate_class_drops_out_of_global() {
        let (mut yhat, mut d) = expand([[30, 10], [10, 30]]);
        let mut classes = vec![1; yhat.len()];
        yhat.extend([1, 1, 1, 1]);
        d.extend([1, 0, 1, 0]);
        classes.extend([0; 4]);
        let r = test_conditional_parity(&yhat, &d, &classes, 0.05).unwrap();
        assert_eq!(r.dof, 1);
        assert!(r.strata[0].degenerate);
        assert_eq!(r.strata[0].label, "Class 1");
        assert_eq!(r.statistic, r.strata[1].statistic);
    }

    #[test]
    fn perfect_classifier_is_not_rejected_under_equal_odds() {
        let y = [1, 1, 0, 0, 1, 0, 1, 0];
        let d = [1, 0, 1, 0, 0, 1, 1, 0];
        let r = test_equal_odds(&y, &y, &d, 0.05).unwrap();
        assert!(!r.reject);
        assert_eq!(r.dof, 0);
    }

    #[test]
    fn unequal_true_positive_rates_are_rejected() {
        // 500 per group with Y = 1; TPR 0.9 for D = 1 and 0.5 for D = 0
        let yhat: Vec<u8> = (0..1000).map(|i| u8::from(if i < 500 { i < 450 } else { i < 750 })).collect();
        let d: Vec<u8> = (0..1000).map(|i| u8::from(i < 500)).collect();
        let y = vec![1; 1000];
        let r = test_equal_opportunity(&yhat, &y, &d, 0.05).unwrap();
        let a = 450.0;
        let b = 250.0;
        let c = 50.0;
        let dd = 250.0;
        let hand = 1000.0 * f64::powi(a * dd - b * c, 2) / ((a + b) * (c + dd) * (a + c) * (b + dd));
        assert!((r.statistic - hand).abs() < 1e-9);
        assert!(r.reject);
        assert!(test_predictive_equality(&yhat, &y, &d, 0.05).is_err());
        assert!(test_equal_odds(&yhat, &y, &d, 0.05).is_err());
    }

    #[test]
    fn missing_outcome_strata_are_errors() {
        assert!(matches!(
            test_equal_opportunity(&[1, 0], &[0, 0], &[1, 0], 0.05),
            Err(Error::MissingStratum(_))
        ));
        assert!(test_statistical_parity(&[1], &[1, 0], 0.05).is_err());
        assert!(test_statistical_parity(&[1, 0], &[1, 0], 1.5).is_err());
    }

    #[test]
    fn table_layout() {
        let yhat = [1, 0, 1, 1, 0, 1, 0, 0];
        let y = [1, 0, 1, 0, 0, 1, 1, 0];
        let d = [1, 1, 0, 0, 1, 0, 1, 0];
        let classes = [0, 0, 0, 0, 1, 1, 1, 1];
        let data = AuditData { y: &y, d: &d, classes: &classes };
        let s = audit_predictions(&yhat, &data, 0.05).unwrap();
        let csv = p_value_table_csv(&[("M", &s)]).unwrap();
        let rows: Vec<&str> = csv.lines().map(|l| l.split(',').next().unwrap()).collect();
        assert_eq!(
            rows,
            [
                "test",
                "Statistical parity",
                "Cond. parity Class 1",
                "Cond. parity Class 2",
                "Cond. parity (global)",
                "Equal odds",
                "Equal opportunity",
                "Predictive equality"
            ]
        );
        let back: AuditSuite = serde_json::from_str(&s.to_json().unwrap()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn hypothesis_tags_parse() {
        for h in Hypothesis::ALL {
            assert_eq!(h.tag().parse::<Hypothesis>().unwrap(), h);
        }
        assert!("XX".parse::<Hypothesis>().is_err());
    }

    fn inputs() -> impl Strategy<Value = (Vec<u8>, Vec<u8>, Vec<u8>, Vec<usize>)> {
        (8usize..120).prop_flat_map(|n| {
            (
                prop::collection::vec(0u8..2, n),
                prop::collection::vec(0u8..2, n),
                prop::collection::vec(0u8..2, n),
                prop::collection::vec(0usize..3, n),
            )
        })
    }

    fn all_tests(yhat: &[u8], y: &[u8], d: &[u8], classes: &[usize]) -> Vec<Result<FairnessReport>> {
        let data = AuditData { y, d, classes };
        Hypothesis::ALL.iter().map(|&h| run_test(h, yhat, &data, 0.05)).collect()
    }

    proptest! {
        #[test]
        fn relabeling_protected_attribute_changes_nothing((yhat, y, d, classes) in inputs()) {
            let flipped: Vec<u8> = d.iter().map(|v| 1 - v).collect();
            for (a, b) in all_tests(&yhat, &y, &d, &classes).into_iter().zip(all_tests(&yhat, &y, &flipped, &classes)) {
                match (a, b) {
                    (Ok(a), Ok(b)) => {
                        prop_assert!((a.statistic - b.statistic).abs() <= 1e-9 * a.statistic.max(1.0));
                        prop_assert!((a.p_value - b.p_value).abs() <= 1e-9);
                        prop_assert_eq!(a.dof, b.dof);
                    }
                    (Err(_), Err(_)) => {}
                    _ => prop_assert!(false, "error status differs"),
                }
            }
        }

        #[test]
        fn duplicating_the_sample_scales_statistics((yhat, y, d, classes) in inputs(), m in 2usize..5) {
            let rep = |v: &[u8]| v.repeat(m);
            let base = all_tests(&yhat, &y, &d, &classes);
            let dup = all_tests(&rep(&yhat), &rep(&y), &rep(&d), &classes.repeat(m));
            for (a, b) in base.into_iter().zip(dup) {
                if let (Ok(a), Ok(b)) = (a, b) {
                    prop_assert_eq!(a.dof, b.dof);
                    for (sa, sb) in a.strata.iter().zip(&b.strata) {
                        prop_assert!((sb.statistic - m as f64 * sa.statistic).abs() <= 1e-9 * sb.statistic.max(1.0));
                    }
                }
            }
        }

        #[test]
        fn equal_odds_is_the_sum_of_its_parts((yhat, y, d, classes) in inputs()) {
            let data = AuditData { y: &y, d: &d, classes: &classes };
            if let (Ok(eo), Ok(eop), Ok(pe)) = (
                run_test(Hypothesis::EO, &yhat, &data, 0.05),
                run_test(Hypothesis::EOP, &yhat, &data, 0.05),
                run_test(Hypothesis::PE, &yhat, &data, 0.05),
            ) {
                prop_assert!((eo.statistic - (eop.statistic + pe.statistic)).abs() <= 1e-12 * eo.statistic.max(1.0));
                prop_assert_eq!(eo.dof, eop.dof + pe.dof);
            }
        }

        #[test]
        fn conditional_global_is_the_sum_of_classes((yhat, _y, d, classes) in inputs()) {
            let r = test_conditional_parity(&yhat, &d, &classes, 0.05).unwrap();
            let sum: f64 = r.strata.iter().filter(|s| !s.degenerate).map(|s| s.statistic).sum();
            prop_assert_eq!(r.statistic, sum);
            prop_assert_eq!(r.reject, r.dof > 0 && r.statistic > chi2_quantile(0.95, r.dof).unwrap());
        }
    }
}
