use std::path::PathBuf;
use std::sync::OnceLock;

use fairaudit::clustering::{kprototypes, KPrototypesConfig};
use fairaudit::dataset::{load_german_credit, one_hot_encode, Dataset, EncodedMatrix, Value};
use fairaudit::fairness::{audit, audit_predictions, AuditData, Hypothesis};
use fairaudit::fpdp::{sweep_features, SweepContext};
use fairaudit::mitigation::{fix_value_rows, mitigate_fix_value, tradeoff_table, FairnessCriterion};
use fairaudit::models::{auc, classify, pcc, train, Classifier, Model, ModelDocument, Preset};
use fairaudit::seed;

struct Fixture {
    dataset: Dataset,
    x: EncodedMatrix,
    y: Vec<u8>,
    d: Vec<u8>,
    classes: Vec<usize>,
    tree_prime: Model,
}

fn data_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/german.data")
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let dataset = load_german_credit(data_path()).unwrap();
        let x = one_hot_encode(&dataset, false);
        let y = dataset.target();
        let d = dataset.protected();
        let cfg = KPrototypesConfig { seed: seed::substream(42, seed::CLUSTERING), ..KPrototypesConfig::default() };
        let classes = kprototypes(&dataset, &cfg).unwrap().labels;
        let tree_prime = train(&x, &y, &Preset::TreePrime.params(), seed::substream(42, seed::TREE)).unwrap();
        Fixture { dataset, x, y, d, classes, tree_prime }
    })
}

fn data(f: &Fixture) -> AuditData<'_> {
    AuditData { y: &f.y, d: &f.d, classes: &f.classes }
}

fn ctx(f: &Fixture) -> SweepContext<'_> {
    SweepContext { model: &f.tree_prime, x: &f.x, data: data(f), delta: 0.5 }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn marginals_and_widths() {
    let f = fixture();
    assert_eq!(f.dataset.n_rows(), 1000);
    let women = f.d.iter().filter(|&&v| v == 1).count();
    assert_eq!(women, 310);
    let defaults = f.y.iter().filter(|&&v| v == 0).count();
    assert_eq!(defaults, 300);
    let female_defaults = f.y.iter().zip(&f.d).filter(|(&y, &d)| y == 0 && d == 1).count();
    assert_eq!(female_defaults, 109);
    assert!(close(female_defaults as f64 / 310.0, 0.3516, 5e-5));
    assert!(close(191.0 / 690.0, 0.2768, 5e-5));
    assert_eq!(f.x.n_cols(), 55);
    assert_eq!(one_hot_encode(&f.dataset, true).n_cols(), 56);
}

#[test]
fn risk_classes_are_two_and_cover_everyone() {
    let f = fixture();
    assert_eq!(f.classes.len(), 1000);
    assert!(f.classes.iter().all(|&c| c < 2));
}

#[test]
fn logistic_auc_within_band() {
    let f = fixture();
    let m = train(&f.x, &f.y, &Preset::Lr.params(), 0).unwrap();
    let a = auc(&f.y, &m.predict_proba(&f.x)).unwrap();
    assert!((0.77..=0.87).contains(&a), "auc {a}");
}

#[test]
fn tree_prime_metrics_and_features() {
    let f = fixture();
    let scores = f.tree_prime.predict_proba(&f.x);
    let a = auc(&f.y, &scores).unwrap();
    let p = pcc(&f.y, &classify(&scores, 0.5).unwrap()).unwrap();
    assert!(close(a, 0.8393, 0.02), "auc {a}");
    assert!(close(p, 79.0, 1.5), "pcc {p}");
    assert_eq!(f.tree_prime.selected_features(&f.x).len(), 14);
}

#[test]
fn tree_prime_diagnosis_pattern() {
    let f = fixture();
    let suite = audit(&f.tree_prime, &f.x, &data(f), 0.5, 0.05).unwrap();
    for h in [Hypothesis::SP, Hypothesis::CSP, Hypothesis::EO, Hypothesis::EOP] {
        assert!(suite.get(h).reject, "{h} p {}", suite.p_value(h));
    }
    assert!(!suite.get(Hypothesis::PE).reject);
}

#[test]
fn candidate_set_matches_for_four_hypotheses() {
    let f = fixture();
    let features = f.tree_prime.selected_features(&f.x);
    let mut expected =
        vec!["AccountStatus", "CreditDuration", "CreditHistory", "Purpose", "Savings", "Telephone"];
    expected.sort_unstable();
    for h in [Hypothesis::SP, Hypothesis::CSP, Hypothesis::EO, Hypothesis::EOP] {
        let curves = sweep_features(&ctx(f), h, 0.10, &features).unwrap();
        let mut got: Vec<String> =
            curves.iter().filter(|c| c.verdict().is_candidate).map(|c| c.feature.clone()).collect();
        got.sort_unstable();
        assert_eq!(got, expected, "{h}");
    }
}

#[test]
fn telephone_fix_value_is_fair_and_ranked_first() {
    let f = fixture();
    let crit = FairnessCriterion::default();
    let row = mitigate_fix_value(&ctx(f), "Telephone", &Value::Level("A192".into()), &crit).unwrap();
    assert!(row.fair);
    for h in [Hypothesis::SP, Hypothesis::CSP, Hypothesis::EOP, Hypothesis::EO] {
        assert!(row.p_values[&h] > 0.10, "{h}");
    }
    assert!(close(row.auc, 0.8325, 0.005), "auc {}", row.auc);

    let features = f.tree_prime.selected_features(&f.x);
    let curves = sweep_features(&ctx(f), Hypothesis::SP, 0.10, &features).unwrap();
    let table = tradeoff_table(fix_value_rows(&ctx(f), &curves, &crit).unwrap()).unwrap();
    assert_eq!(table.best_fair().unwrap().label, "Telephone (= A192)");
}

#[test]
fn fix_value_row_equals_fpdp_point() {
    let f = fixture();
    let crit = FairnessCriterion::default();
    let value = Value::Number(24.0);
    let row = mitigate_fix_value(&ctx(f), "CreditDuration", &value, &crit).unwrap();
    for h in Hypothesis::ALL {
        let p = ctx(f).point("CreditDuration", &value, h, 0.10).unwrap();
        assert_eq!(row.p_values[&h].to_bits(), p.p_value.to_bits(), "{h}");
    }
}

#[test]
fn fpdp_point_equals_audit_on_modified_data() {
    let f = fixture();
    let value = Value::Level("A192".into());
    let modified = f.x.with_feature("Telephone", &value).unwrap();
    let yhat = classify(&f.tree_prime.predict_proba(&modified), 0.5).unwrap();
    let suite = audit_predictions(&yhat, &data(f), 0.10).unwrap();
    for h in Hypothesis::ALL {
        let p = ctx(f).point("Telephone", &value, h, 0.10).unwrap();
        assert_eq!(p.statistic.to_bits(), suite.get(h).statistic.to_bits());
        assert_eq!(p.p_value.to_bits(), suite.get(h).p_value.to_bits());
    }
}

#[test]
fn saved_model_reproduces_predictions() {
    let f = fixture();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    let doc = ModelDocument::new(f.tree_prime.clone(), Some(Preset::TreePrime));
    doc.save(&path).unwrap();
    let loaded = ModelDocument::load(&path).unwrap();
    assert_eq!(loaded.model, f.tree_prime);
    assert_eq!(loaded.to_json().unwrap(), doc.to_json().unwrap());
    let a = f.tree_prime.predict_proba(&f.x);
    let b = loaded.model.predict_proba(&f.x);
    assert!(a.iter().zip(&b).all(|(p, q)| p.to_bits() == q.to_bits()));
}
