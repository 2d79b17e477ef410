//! Fairness partial dependence: fix one feature to a single value for every
//! row, re-score with the unchanged model and re-run a fairness test. A
//! feature is a candidate when some value lifts the p-value above the level.
//!
//! Risk classes used by the conditional parity test stay at their baseline
//! assignment throughout a sweep.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{EncodedMatrix, GroupEncoding, Value};
use crate::error::{Error, Result};
use crate::fairness::{run_test, AuditData, Hypothesis};
use crate::models::{classify, Classifier};

/// Everything needed to score and audit a (possibly modified) matrix.
#[derive(Clone, Copy)]
pub struct SweepContext<'a> {
    pub model: &'a dyn Classifier,
    pub x: &'a EncodedMatrix,
    pub data: AuditData<'a>,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub value: Value,
    pub statistic: f64,
    pub dof: u32,
    pub p_value: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FpdpCurve {
    pub feature: String,
    pub hypothesis: Hypothesis,
    pub alpha: f64,
    pub baseline_statistic: f64,
    pub baseline_p_value: f64,
    pub grid: Vec<GridPoint>,
}

impl FpdpCurve {
    /// Whether the unmodified model is rejected; curves are still computed otherwise.
    pub fn baseline_rejected(&self) -> bool {
        self.baseline_p_value < self.alpha
    }

    pub fn witness_values(&self) -> Vec<Value> {
        self.grid.iter().filter(|g| g.p_value > self.alpha).map(|g| g.value.clone()).collect()
    }

    pub fn verdict(&self) -> CandidateVerdict {
        let witness_values = self.witness_values();
        CandidateVerdict { feature: self.feature.clone(), is_candidate: !witness_values.is_empty(), witness_values }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateVerdict {
    pub feature: String,
    pub is_candidate: bool,
    pub witness_values: Vec<Value>,
}

impl SweepContext<'_> {
    fn test(&self, x: &EncodedMatrix, h: Hypothesis, alpha: f64) -> Result<(f64, u32, f64)> {
        let yhat = classify(&self.model.predict_proba(x), self.delta)?;
        let r = run_test(h, &yhat, &self.data, alpha)?;
        Ok((r.statistic, r.dof, r.p_value))
    }

    /// Test result with `feature` set to `value` for every row.
    pub fn point(&self, feature: &str, value: &Value, h: Hypothesis, alpha: f64) -> Result<GridPoint> {
        let modified = self.x.with_feature(feature, value)?;
        let (statistic, dof, p_value) = self.test(&modified, h, alpha)?;
        Ok(GridPoint { value: value.clone(), statistic, dof, p_value, degenerate: dof == 0 })
    }

    fn sweep(&self, feature: &str, values: Vec<Value>, h: Hypothesis, alpha: f64) -> Result<FpdpCurve> {
        if values.is_empty() {
            return Err(Error::InvalidArgument(format!("empty grid for `{feature}`")));
        }
        let (baseline_statistic, _, baseline_p_value) = self.test(self.x, h, alpha)?;
        let grid = values.par_iter().map(|v| self.point(feature, v, h, alpha)).collect::<Result<Vec<_>>>()?;
        Ok(FpdpCurve { feature: feature.to_string(), hypothesis: h, alpha, baseline_statistic, baseline_p_value, grid })
    }
}

fn group_encoding<'a>(x: &'a EncodedMatrix, feature: &str) -> Result<&'a GroupEncoding> {
    Ok(&x.group(feature).ok_or_else(|| Error::UnknownFeature(feature.to_string()))?.encoding)
}

/// Sweeps every level of a categorical feature.
pub fn fpdp_categorical(ctx: &SweepContext<'_>, feature: &str, h: Hypothesis, alpha: f64) -> Result<FpdpCurve> {
    match group_encoding(ctx.x, feature)? {
        GroupEncoding::OneHot { levels } => {
            ctx.sweep(feature, levels.iter().cloned().map(Value::Level).collect(), h, alpha)
        }
        GroupEncoding::Numeric => Err(Error::InvalidArgument(format!("`{feature}` is not categorical"))),
    }
}

/// Sweeps a numeric feature over `grid`, or over its sorted distinct observed
/// values when `grid` is `None`.
pub fn fpdp_continuous(
    ctx: &SweepContext<'_>,
    feature: &str,
    h: Hypothesis,
    alpha: f64,
    grid: Option<&[f64]>,
) -> Result<FpdpCurve> {
    match group_encoding(ctx.x, feature)? {
        GroupEncoding::Numeric => {
            let values = match grid {
                Some(g) => g.to_vec(),
                None => ctx.x.distinct_values(feature)?,
            };
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument("grid values must be finite".into()));
            }
            ctx.sweep(feature, values.into_iter().map(Value::Number).collect(), h, alpha)
        }
        GroupEncoding::OneHot { .. } => Err(Error::InvalidArgument(format!("`{feature}` is not numeric"))),
    }
}

/// Categorical or continuous sweep with the default grid.
pub fn fpdp(ctx: &SweepContext<'_>, feature: &str, h: Hypothesis, alpha: f64) -> Result<FpdpCurve> {
    match group_encoding(ctx.x, feature)? {
        GroupEncoding::OneHot { .. } => fpdp_categorical(ctx, feature, h, alpha),
        GroupEncoding::Numeric => fpdp_continuous(ctx, feature, h, alpha, None),
    }
}

/// `points` evenly spaced values spanning the observed range of a numeric feature.
pub fn uniform_grid(x: &EncodedMatrix, feature: &str, points: usize) -> Result<Vec<f64>> {
    let observed = x.distinct_values(feature)?;
    let (lo, hi) = (observed[0], observed[observed.len() - 1]);
    match points {
        0 => Err(Error::InvalidArgument("grid needs at least one point".into())),
        1 => Ok(vec![lo]),
        _ => Ok((0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect()),
    }
}

/// One FPDP curve per feature, in the order given.
pub fn sweep_features(ctx: &SweepContext<'_>, h: Hypothesis, alpha: f64, features: &[String]) -> Result<Vec<FpdpCurve>> {
    features.iter().map(|f| fpdp(ctx, f, h, alpha)).collect()
}

pub fn candidate_variables(
    ctx: &SweepContext<'_>,
    h: Hypothesis,
    alpha: f64,
    features: &[String],
) -> Result<Vec<CandidateVerdict>> {
    Ok(sweep_features(ctx, h, alpha, features)?.iter().map(FpdpCurve::verdict).collect())
}

/// Plot data: one row per grid point.
pub fn curves_csv(curves: &[FpdpCurve]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["feature", "value", "statistic", "dof", "p_value", "degenerate"])?;
    for c in curves {
        for g in &c.grid {
            w.write_record([
                c.feature.clone(),
                g.value.to_string(),
                g.statistic.to_string(),
                g.dof.to_string(),
                g.p_value.to_string(),
                g.degenerate.to_string(),
            ])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{one_hot_encode, Dataset};
    use crate::fairness::audit;
    use crate::models::{train, Preset};
    use crate::seed;
    use rand::Rng;

    fn synthetic(s: u64, n: usize) -> Dataset {
        use crate::dataset::{ColumnData, FeatureSpec, Role};
        let mut rng = seed::rng(s);
        let colour: Vec<u32> = (0..n).map(|_| rng.random_range(0..3)).collect();
        let amount: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(1..8u8))).collect();
        let d: Vec<f64> = (0..n).map(|_| f64::from(u8::from(rng.random_bool(0.4)))).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| {
                let z = 0.3 * amount[i] - f64::from(colour[i]) + 1.2 * d[i] + rng.random_range(-1.5..1.5);
                f64::from(u8::from(z > 0.5))
            })
            .collect();
        Dataset::new(
            vec![
                FeatureSpec::numeric("amount", Role::Feature),
                FeatureSpec::categorical("colour", ["red", "green", "blue"], Role::Feature),
                FeatureSpec::numeric("noise", Role::Feature),
                FeatureSpec::numeric("d", Role::Protected),
                FeatureSpec::numeric("y", Role::Target),
            ],
            vec![
                ColumnData::Numeric(amount),
                ColumnData::Categorical(colour),
                ColumnData::Numeric((0..n).map(|i| (i % 5) as f64).collect()),
                ColumnData::Numeric(d),
                ColumnData::Numeric(y),
            ],
        )
        .unwrap()
    }

    #[test]
    fn grid_points_equal_audits_on_rebuilt_data() {
        for s in 0..6 {
            let ds = synthetic(s, 120);
            let x = one_hot_encode(&ds, true);
            let y = ds.target();
            let d = ds.protected();
            let classes: Vec<usize> = (0..ds.n_rows()).map(|i| i % 2).collect();
            let model = train(&x, &y, &Preset::TreePrime.params(), 0).unwrap();
            let data = AuditData { y: &y, d: &d, classes: &classes };
            let ctx = SweepContext { model: &model, x: &x, data, delta: 0.5 };
            for h in Hypothesis::ALL {
                for feature in ["amount", "colour"] {
                    let curve = fpdp(&ctx, feature, h, 0.1).unwrap();
                    for g in &curve.grid {
                        let rebuilt = one_hot_encode(&ds.with_constant(feature, &g.value).unwrap(), true);
                        let suite = audit(&model, &rebuilt, &data, 0.5, 0.1).unwrap();
                        let r = suite.get(h);
                        assert_eq!(r.statistic.to_bits(), g.statistic.to_bits());
                        assert_eq!(r.p_value.to_bits(), g.p_value.to_bits());
                        assert_eq!(r.dof, g.dof);
                    }
                }
            }
        }
    }

    #[test]
    fn unused_feature_gives_flat_curve_and_sweeps_repeat() {
        let ds = synthetic(3, 150);
        let x = one_hot_encode(&ds, false);
        let y = ds.target();
        let d = ds.protected();
        let classes = vec![0; y.len()];
        let model = train(&x, &y, &Preset::TreePrime.params(), 0).unwrap();
        let ctx = SweepContext { model: &model, x: &x, data: AuditData { y: &y, d: &d, classes: &classes }, delta: 0.5 };
        let used = model.selected_features(&x);
        for f in ["amount", "colour", "noise"] {
            let curve = fpdp(&ctx, f, Hypothesis::SP, 0.1).unwrap();
            assert_eq!(curve, fpdp(&ctx, f, Hypothesis::SP, 0.1).unwrap());
            if !used.iter().any(|u| u == f) {
                assert!(curve.grid.iter().all(|g| g.statistic == curve.baseline_statistic));
            }
        }
        let noise = fpdp(&ctx, "noise", Hypothesis::SP, 0.1).unwrap();
        assert_eq!(noise.grid.len(), 5);
    }

    #[test]
    fn constant_prediction_gives_degenerate_curve() {
        struct Always;
        impl Classifier for Always {
            fn predict_proba_row(&self, _: ndarray::ArrayView1<'_, f64>) -> f64 {
                0.9
            }
            fn feature_names(&self) -> &[String] {
                &[]
            }
        }
        let ds = synthetic(1, 60);
        let x = one_hot_encode(&ds, false);
        let y = ds.target();
        let d = ds.protected();
        let classes = vec![0; y.len()];
        let ctx = SweepContext { model: &Always, x: &x, data: AuditData { y: &y, d: &d, classes: &classes }, delta: 0.5 };
        let curve = fpdp(&ctx, "amount", Hypothesis::EO, 0.1).unwrap();
        assert!(curve.grid.iter().all(|g| g.degenerate && g.p_value == 1.0));
        assert!(curve.verdict().is_candidate);
    }

    #[test]
    fn errors_and_grids() {
        let ds = synthetic(2, 40);
        let x = one_hot_encode(&ds, false);
        let y = ds.target();
        let d = ds.protected();
        let classes = vec![0; y.len()];
        let model = train(&x, &y, &Preset::Lr.params(), 0).unwrap();
        let ctx = SweepContext { model: &model, x: &x, data: AuditData { y: &y, d: &d, classes: &classes }, delta: 0.5 };
        assert!(matches!(fpdp(&ctx, "nope", Hypothesis::SP, 0.1), Err(Error::UnknownFeature(_))));
        assert!(fpdp_categorical(&ctx, "amount", Hypothesis::SP, 0.1).is_err());
        assert!(fpdp_continuous(&ctx, "colour", Hypothesis::SP, 0.1, None).is_err());
        assert!(fpdp_continuous(&ctx, "amount", Hypothesis::SP, 0.1, Some(&[])).is_err());
        let g = uniform_grid(&x, "noise", 3).unwrap();
        assert_eq!(g, vec![0.0, 2.0, 4.0]);
        let curve = fpdp_continuous(&ctx, "amount", Hypothesis::SP, 0.1, Some(&[2.0, 5.0])).unwrap();
        let csv = curves_csv(&[curve]).unwrap();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.starts_with("feature,value,statistic,dof,p_value,degenerate"));
    }
}
