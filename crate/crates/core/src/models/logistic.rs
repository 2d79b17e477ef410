//! Logistic regression with an optional L2 (ridge) penalty, fitted by damped
//! Newton iterations with a backtracking line search.
//!
//! The objective is the mean negative log-likelihood plus `lambda/2 * |w|^2`;
//! the intercept is not penalized. Numeric columns are standardized with
//! parameters learned on the training matrix and stored in the model.

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::dataset::{EncodedMatrix, Standardization};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    pub lambda: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self { lambda: 0.0, tol: 1e-8, max_iter: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub feature_names: Vec<String>,
    /// Coefficients on the standardized columns.
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub lambda: f64,
    pub standardization: Standardization,
    pub converged: bool,
    pub iterations: usize,
    pub gradient_norm: f64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Objective value and gradient; `theta[0]` is the intercept.
pub(crate) fn objective(x: &Array2<f64>, y: &[f64], theta: &Array1<f64>, lambda: f64) -> (f64, Array1<f64>) {
    let n = x.nrows() as f64;
    let p = x.ncols();
    let mut value = 0.0;
    let mut grad = Array1::<f64>::zeros(p + 1);
    let w = theta.slice(ndarray::s![1..]);
    for (row, &yi) in x.rows().into_iter().zip(y) {
        let z = theta[0] + row.dot(&w);
        value += softplus(z) - yi * z;
        let r = sigmoid(z) - yi;
        grad[0] += r;
        grad.slice_mut(ndarray::s![1..]).scaled_add(r, &row);
    }
    value /= n;
    grad /= n;
    value += 0.5 * lambda * w.dot(&w);
    grad.slice_mut(ndarray::s![1..]).scaled_add(lambda, &w);
    (value, grad)
}

fn hessian(x: &Array2<f64>, theta: &Array1<f64>, lambda: f64) -> Array2<f64> {
    let n = x.nrows() as f64;
    let p = x.ncols() + 1;
    let mut h = Array2::<f64>::zeros((p, p));
    let w = theta.slice(ndarray::s![1..]);
    let mut aug = vec![1.0; p];
    for row in x.rows() {
        let s = sigmoid(theta[0] + row.dot(&w));
        let s = s * (1.0 - s);
        aug[1..].iter_mut().zip(row).for_each(|(a, &v)| *a = v);
        for i in 0..p {
            let si = s * aug[i];
            for j in i..p {
                h[[i, j]] += si * aug[j];
            }
        }
    }
    for i in 0..p {
        for j in i..p {
            h[[i, j]] /= n;
            h[[j, i]] = h[[i, j]];
        }
        if i > 0 {
            h[[i, i]] += lambda;
        }
    }
    h
}

/// Solves `a x = b` for symmetric positive definite `a`; `None` if not SPD.
fn cholesky_solve(a: &Array2<f64>, b: &Array1<f64>) -> Option<Array1<f64>> {
    let n = a.nrows();
    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut d = a[[j, j]];
        for k in 0..j {
            d -= l[[j, k]] * l[[j, k]];
        }
        if !(d > 0.0) {
            return None;
        }
        let d = d.sqrt();
        l[[j, j]] = d;
        for i in j + 1..n {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / d;
        }
    }
    let mut z = b.clone();
    for i in 0..n {
        for k in 0..i {
            z[i] -= l[[i, k]] * z[k];
        }
        z[i] /= l[[i, i]];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            z[i] -= l[[k, i]] * z[k];
        }
        z[i] /= l[[i, i]];
    }
    Some(z)
}

pub fn train_logistic(x: &EncodedMatrix, y: &[u8], params: &LogisticParams) -> Result<LogisticModel> {
    if x.n_rows() != y.len() {
        return Err(Error::LengthMismatch { left: x.n_rows(), right: y.len() });
    }
    if y.iter().any(|&v| v > 1) {
        return Err(Error::InvalidArgument("outcome must be 0/1".into()));
    }
    if !(params.lambda >= 0.0) || !(params.tol > 0.0) {
        return Err(Error::InvalidArgument("lambda must be >= 0 and tol > 0".into()));
    }
    let n = x.n_rows();
    let columns: Vec<usize> = x
        .numeric_columns()
        .into_iter()
        .filter(|&c| {
            let col = x.values().column(c);
            col.iter().any(|&v| v != col[0])
        })
        .collect();
    let standardization = if n >= 2 {
        Standardization::fit(x, &columns)?
    } else {
        Standardization { columns: vec![], means: vec![], stds: vec![] }
    };
    let z = standardization.apply(x);
    let z = z.values();
    let yf: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();

    let p = x.n_cols();
    let mut theta = Array1::<f64>::zeros(p + 1);
    let (mut value, mut grad) = objective(z, &yf, &theta, params.lambda);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < params.max_iter {
        if norm(&grad) <= params.tol {
            converged = true;
            break;
        }
        iterations += 1;
        let h = hessian(z, &theta, params.lambda);
        let scale = (0..=p).map(|i| h[[i, i]]).sum::<f64>() / (p + 1) as f64;
        let mut mu = 1e-10 * scale.max(1e-12);
        let direction = loop {
            let mut damped = h.clone();
            for i in 0..=p {
                damped[[i, i]] += mu;
            }
            if let Some(d) = cholesky_solve(&damped, &grad) {
                break -d;
            }
            mu *= 10.0;
        };
        let slope = grad.dot(&direction);
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let candidate = &theta + &(step * &direction);
            let (v, g) = objective(z, &yf, &candidate, params.lambda);
            // near the optimum the decrease falls below rounding; accept a
            // step that still shrinks the gradient
            let flat = v <= value + 1e-13 * value.abs().max(1.0) && norm(&g) < norm(&grad);
            if v <= value + 1e-4 * step * slope || flat {
                theta = candidate;
                value = v;
                grad = g;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if !converged && norm(&grad) <= params.tol {
        converged = true;
    }
    Ok(LogisticModel {
        feature_names: x.column_names().to_vec(),
        weights: theta.slice(ndarray::s![1..]).to_vec(),
        intercept: theta[0],
        lambda: params.lambda,
        standardization,
        converged,
        iterations,
        gradient_norm: norm(&grad),
    })
}

fn norm(v: &Array1<f64>) -> f64 {
    v.dot(v).sqrt()
}

impl LogisticModel {
    pub fn predict_proba_row(&self, row: ArrayView1<'_, f64>) -> f64 {
        let mut buf = row.to_vec();
        self.standardization.apply_row(&mut buf);
        let z = self.intercept + buf.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>();
        sigmoid(z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::Rng;

    fn matrix(cols: &[&str], values: Array2<f64>) -> EncodedMatrix {
        EncodedMatrix::from_numeric(cols.iter().map(|s| s.to_string()).collect(), values).unwrap()
    }

    #[test]
    fn separable_with_ridge_keeps_direction() {
        let x = matrix(&["x"], array![[-3.0], [-2.0], [-1.0], [1.0], [2.0], [3.0]]);
        let y = [0, 0, 0, 1, 1, 1];
        let m = train_logistic(&x, &y, &LogisticParams { lambda: 0.2, ..Default::default() }).unwrap();
        assert!(m.converged);
        assert!(m.weights[0] > 0.0);
        assert!(m.predict_proba_row(x.row(5)) > 0.5);
        let flipped = [1, 1, 1, 0, 0, 0];
        let m = train_logistic(&x, &flipped, &LogisticParams { lambda: 0.2, ..Default::default() }).unwrap();
        assert!(m.weights[0] < 0.0);
    }

    #[test]
    fn huge_penalty_shrinks_to_base_rate() {
        let x = matrix(&["a", "b"], array![[1.0, 0.0], [2.0, 1.0], [3.0, 0.0], [4.0, 1.0], [5.0, 1.0]]);
        let y = [0, 1, 1, 1, 0];
        let m = train_logistic(&x, &y, &LogisticParams { lambda: 1e9, ..Default::default() }).unwrap();
        assert!(m.weights.iter().all(|w| w.abs() < 1e-8));
        let pbar: f64 = 0.6;
        assert!((m.intercept - (pbar / (1.0 - pbar)).ln()).abs() < 1e-6);
    }

    #[test]
    fn separable_without_penalty_reports_non_convergence() {
        let x = matrix(&["x"], array![[-1.0], [1.0]]);
        let m = train_logistic(&x, &[0, 1], &LogisticParams { lambda: 0.0, tol: 1e-12, max_iter: 15 }).unwrap();
        assert!(!m.converged);
        assert!(m.weights[0] > 0.0);
    }

    #[test]
    fn bad_inputs() {
        let x = matrix(&["x"], array![[1.0], [2.0]]);
        assert!(train_logistic(&x, &[0], &LogisticParams::default()).is_err());
        assert!(train_logistic(&x, &[0, 2], &LogisticParams::default()).is_err());
    }

    fn random_problem(s: u64, n: usize, p: usize) -> (Array2<f64>, Vec<f64>, Array1<f64>) {
        let mut rng = seed::rng(s);
        let x = Array2::from_shape_fn((n, p), |_| rng.random_range(-2.0..2.0));
        let y = (0..n).map(|_| f64::from(u8::from(rng.random_bool(0.4)))).collect();
        let theta = Array1::from_shape_fn(p + 1, |_| rng.random_range(-1.0..1.0));
        (x, y, theta)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn gradient_matches_central_differences(s in any::<u64>(), lambda in 0.0f64..2.0) {
            let (x, y, theta) = random_problem(s, 12, 3);
            let (_, g) = objective(&x, &y, &theta, lambda);
            let h = 1e-6;
            for i in 0..theta.len() {
                let mut up = theta.clone();
                let mut down = theta.clone();
                up[i] += h;
                down[i] -= h;
                let fd = (objective(&x, &y, &up, lambda).0 - objective(&x, &y, &down, lambda).0) / (2.0 * h);
                prop_assert!((fd - g[i]).abs() <= 1e-5 * g[i].abs().max(1e-3), "i={} fd={} g={}", i, fd, g[i]);
            }
        }

        #[test]
        fn optimum_has_small_gradient(s in any::<u64>(), lambda in 0.01f64..1.0) {
            let (x, y, _) = random_problem(s, 40, 3);
            let yb: Vec<u8> = y.iter().map(|&v| v as u8).collect();
            let m = matrix(&["a", "b", "c"], x);
            let params = LogisticParams { lambda, tol: 1e-9, max_iter: 100 };
            let model = train_logistic(&m, &yb, &params).unwrap();
            prop_assert!(model.converged);
            prop_assert!(model.gradient_norm <= 1e-9);
        }
    }
}
