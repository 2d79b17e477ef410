//! Command implementations. Each command builds a [`Session`] from the
//! resolved configuration and writes its artifacts through [`Outputs`].

use anyhow::{Context, Result};
use fairaudit::clustering::{kprototypes, KPrototypesConfig, RiskClassAssignment};
use fairaudit::dataset::{load_csv_with_schema, load_german_credit, one_hot_encode, Dataset, EncodedMatrix};
use fairaudit::fairness::{audit, p_value_table_csv, AuditData, AuditSuite, Hypothesis};
use fairaudit::fpdp::{curves_csv, fpdp, fpdp_continuous, uniform_grid, FpdpCurve, SweepContext};
use fairaudit::mitigation::{
    baseline, fix_value_rows, reestimate_rows, tradeoff_table, FairnessCriterion, MitigationRow, TradeoffTable,
};
use fairaudit::models::{auc, classify, pcc, train, Classifier, Model, ModelDocument, ModelParams, Preset};
use fairaudit::seed;
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::Outputs;
use crate::summary::{associations, associations_csv, summarize};

pub struct Session {
    pub cfg: RunConfig,
    pub dataset: Dataset,
    pub x: EncodedMatrix,
    pub y: Vec<u8>,
    pub d: Vec<u8>,
}

pub struct Fitted {
    pub model: Model,
    pub preset: Option<Preset>,
}

impl Session {
    pub fn load(cfg: RunConfig) -> Result<Self> {
        let dataset = match &cfg.schema {
            Some(schema) => load_csv_with_schema(&cfg.data, schema),
            None => load_german_credit(&cfg.data),
        }
        .with_context(|| format!("loading {}", cfg.data.display()))?;
        let x = one_hot_encode(&dataset, cfg.with_protected);
        let y = dataset.target();
        let d = dataset.protected();
        Ok(Self { cfg, dataset, x, y, d })
    }

    pub fn params(&self) -> ModelParams {
        match (self.cfg.preset.params(), self.cfg.lambda) {
            (ModelParams::Logistic(mut p), Some(l)) => {
                p.lambda = l;
                ModelParams::Logistic(p)
            }
            (p, _) => p,
        }
    }

    pub fn tree_seed(&self) -> u64 {
        seed::substream(self.cfg.seed, seed::TREE)
    }

    /// The saved model when `--model` is given, otherwise the preset trained on the full sample.
    pub fn fit(&self) -> Result<Fitted> {
        if let Some(path) = &self.cfg.model {
            let doc = ModelDocument::load(path).with_context(|| format!("loading model {}", path.display()))?;
            doc.model.check_columns(&self.x).context("saved model does not match the encoded data")?;
            return Ok(Fitted { model: doc.model, preset: doc.preset });
        }
        let model = train(&self.x, &self.y, &self.params(), self.tree_seed())?;
        Ok(Fitted { model, preset: Some(self.cfg.preset) })
    }

    pub fn risk_classes(&self) -> Result<RiskClassAssignment> {
        let cfg = KPrototypesConfig {
            n_classes: self.cfg.classes,
            gamma: self.cfg.gamma,
            seed: seed::substream(self.cfg.seed, seed::CLUSTERING),
            n_init: self.cfg.n_init,
            ..KPrototypesConfig::default()
        };
        Ok(kprototypes(&self.dataset, &cfg)?)
    }

    fn model_name(&self, f: &Fitted) -> String {
        f.preset.map_or_else(|| "model".to_string(), |p| p.name().to_string())
    }
}

#[derive(Serialize)]
struct TrainMetrics<'a> {
    model: String,
    with_protected: bool,
    n_columns: usize,
    auc: f64,
    pcc: f64,
    delta: f64,
    converged: bool,
    selected_features: Vec<String>,
    params: &'a ModelParams,
}

#[derive(Serialize)]
struct ClassSummary<'a> {
    n_classes: usize,
    sizes: Vec<usize>,
    gamma: f64,
    cost: f64,
    iterations: usize,
    converged: bool,
    labels: &'a [usize],
}

#[derive(Serialize)]
struct CandidateEntry {
    feature: String,
    is_candidate: bool,
    baseline_p_value: f64,
    witness_values: Vec<fairaudit::dataset::Value>,
}

#[derive(Serialize)]
struct FpdpIndexEntry {
    hypothesis: Hypothesis,
    file: String,
    alpha: f64,
    baseline_rejected: bool,
    features: Vec<CandidateEntry>,
}

pub fn ingest(s: &Session, out: &mut Outputs) -> Result<()> {
    out.write_json("summary.json", &summarize(&s.dataset))?;
    out.write("association.csv", associations_csv(&associations(&s.dataset)?)?)?;
    Ok(())
}

pub fn train_cmd(s: &Session, out: &mut Outputs) -> Result<Fitted> {
    let fitted = s.fit()?;
    let scores = fitted.model.predict_proba(&s.x);
    let yhat = classify(&scores, s.cfg.delta)?;
    let (params, _) = fitted.model.params();
    let metrics = TrainMetrics {
        model: s.model_name(&fitted),
        with_protected: s.cfg.with_protected,
        n_columns: s.x.n_cols(),
        auc: auc(&s.y, &scores)?,
        pcc: pcc(&s.y, &yhat)?,
        delta: s.cfg.delta,
        converged: fitted.model.converged(),
        selected_features: fitted.model.selected_features(&s.x),
        params: &params,
    };
    if !metrics.converged {
        eprintln!("warning: optimizer stopped before reaching the gradient tolerance");
    }
    out.write("model.json", ModelDocument::new(fitted.model.clone(), fitted.preset).to_json()? + "\n")?;
    out.write_json("metrics.json", &metrics)?;
    Ok(fitted)
}

pub fn audit_cmd(s: &Session, fitted: &Fitted, classes: &RiskClassAssignment, out: &mut Outputs) -> Result<AuditSuite> {
    let data = AuditData { y: &s.y, d: &s.d, classes: &classes.labels };
    let suite = audit(&fitted.model, &s.x, &data, s.cfg.delta, s.cfg.alpha)?;
    out.write_json(
        "classes.json",
        &ClassSummary {
            n_classes: classes.n_classes,
            sizes: classes.sizes(),
            gamma: classes.gamma,
            cost: classes.cost,
            iterations: classes.iterations,
            converged: classes.converged,
            labels: &classes.labels,
        },
    )?;
    out.write("audit.json", suite.to_json()? + "\n")?;
    out.write("audit_table.csv", p_value_table_csv(&[(&s.model_name(fitted), &suite)])?)?;
    Ok(suite)
}

pub struct FpdpOptions {
    pub features: Option<Vec<String>>,
    pub hypotheses: Vec<Hypothesis>,
    /// Uniform grid size for numeric features with more distinct values.
    pub grid_points: Option<usize>,
}

fn sweep(ctx: &SweepContext<'_>, feature: &str, h: Hypothesis, alpha: f64, grid_points: Option<usize>) -> Result<FpdpCurve> {
    if let Some(points) = grid_points {
        if let Ok(distinct) = ctx.x.distinct_values(feature) {
            if distinct.len() > points {
                let grid = uniform_grid(ctx.x, feature, points)?;
                return Ok(fpdp_continuous(ctx, feature, h, alpha, Some(&grid))?);
            }
        }
    }
    Ok(fpdp(ctx, feature, h, alpha)?)
}

fn sweep_features(s: &Session, fitted: &Fitted, classes: &RiskClassAssignment, opts: &FpdpOptions) -> Result<Vec<Vec<FpdpCurve>>> {
    let features = match &opts.features {
        Some(f) => f.clone(),
        None => fitted.model.selected_features(&s.x),
    };
    let ctx = SweepContext {
        model: &fitted.model,
        x: &s.x,
        data: AuditData { y: &s.y, d: &s.d, classes: &classes.labels },
        delta: s.cfg.delta,
    };
    opts.hypotheses
        .iter()
        .map(|&h| features.iter().map(|f| sweep(&ctx, f, h, s.cfg.fpdp_alpha, opts.grid_points)).collect())
        .collect()
}

pub fn fpdp_cmd(
    s: &Session,
    fitted: &Fitted,
    classes: &RiskClassAssignment,
    opts: &FpdpOptions,
    out: &mut Outputs,
) -> Result<Vec<Vec<FpdpCurve>>> {
    let all = sweep_features(s, fitted, classes, opts)?;
    let mut index = Vec::new();
    for (h, curves) in opts.hypotheses.iter().zip(&all) {
        let file = format!("fpdp/{}.csv", h.tag());
        out.write(&file, curves_csv(curves)?)?;
        index.push(FpdpIndexEntry {
            hypothesis: *h,
            file,
            alpha: s.cfg.fpdp_alpha,
            baseline_rejected: curves.first().is_some_and(FpdpCurve::baseline_rejected),
            features: curves
                .iter()
                .map(|c| {
                    let v = c.verdict();
                    CandidateEntry {
                        feature: v.feature,
                        is_candidate: v.is_candidate,
                        baseline_p_value: c.baseline_p_value,
                        witness_values: v.witness_values,
                    }
                })
                .collect(),
        });
    }
    out.write_json("fpdp/index.json", &index)?;
    Ok(all)
}

pub struct MitigateOptions {
    /// Hypothesis whose FPDP witnesses define the candidates and fix-value rows.
    pub hypothesis: Hypothesis,
    pub features: Option<Vec<String>>,
}

#[derive(Serialize)]
struct MitigationReport<'a> {
    hypothesis: Hypothesis,
    criterion: &'a FairnessCriterion,
    candidates: &'a [String],
    baseline: &'a MitigationRow,
    reestimate: &'a TradeoffTable,
    fix_value: &'a TradeoffTable,
    fix_value_equivalence_groups: Vec<Vec<String>>,
    best_fair_fix_value: Option<&'a str>,
}

pub fn mitigate_cmd(
    s: &Session,
    fitted: &Fitted,
    classes: &RiskClassAssignment,
    opts: &MitigateOptions,
    out: &mut Outputs,
) -> Result<()> {
    let fopts = FpdpOptions { features: opts.features.clone(), hypotheses: vec![opts.hypothesis], grid_points: None };
    let curves = sweep_features(s, fitted, classes, &fopts)?.remove(0);
    let candidates: Vec<String> =
        curves.iter().filter(|c| c.verdict().is_candidate).map(|c| c.feature.clone()).collect();
    let candidate_curves: Vec<FpdpCurve> = curves.into_iter().filter(|c| candidates.contains(&c.feature)).collect();

    let data = AuditData { y: &s.y, d: &s.d, classes: &classes.labels };
    let ctx = SweepContext { model: &fitted.model, x: &s.x, data, delta: s.cfg.delta };
    let criterion = FairnessCriterion { alpha: s.cfg.fpdp_alpha, ..FairnessCriterion::default() };
    let (base, _) = baseline(&ctx, &criterion)?;
    let (params, seed) = fitted.model.params();
    let table = |rows: Vec<MitigationRow>| -> Result<TradeoffTable> {
        if rows.is_empty() {
            Ok(TradeoffTable { rows, equivalence_class: Vec::new() })
        } else {
            Ok(tradeoff_table(rows)?)
        }
    };
    let panel_a = table(reestimate_rows(&params, &s.x, &data, &candidates, s.cfg.delta, &criterion, seed)?)?;
    let panel_b = table(fix_value_rows(&ctx, &candidate_curves, &criterion)?)?;

    out.write("mitigation_reestimate.csv", panel_a.to_csv()?)?;
    out.write("mitigation_fix_value.csv", panel_b.to_csv()?)?;
    let mut all_rows = panel_a.rows.clone();
    all_rows.extend(panel_b.rows.iter().cloned());
    all_rows.push(base.clone());
    out.write("tradeoff.csv", tradeoff_table(all_rows)?.to_csv()?)?;
    out.write_json(
        "mitigation.json",
        &MitigationReport {
            hypothesis: opts.hypothesis,
            criterion: &criterion,
            candidates: &candidates,
            baseline: &base,
            reestimate: &panel_a,
            fix_value: &panel_b,
            fix_value_equivalence_groups: panel_b.equivalence_groups(),
            best_fair_fix_value: panel_b.best_fair().map(|r| r.label.as_str()),
        },
    )?;
    Ok(())
}
