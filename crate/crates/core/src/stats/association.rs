use std::collections::BTreeMap;

use crate::error::{Error, Result};

fn index<T: Ord>(xs: &[T]) -> (Vec<usize>, usize) {
    let mut levels: BTreeMap<&T, usize> = BTreeMap::new();
    for x in xs {
        let next = levels.len();
        levels.entry(x).or_insert(next);
    }
    (xs.iter().map(|x| levels[x]).collect(), levels.len())
}

/// Cramer's V of two categorical sequences: sqrt(χ² / (n · min(r-1, c-1)))
/// from the r x c Pearson statistic. Numeric variables must be binned first.
pub fn cramers_v<A: Ord, B: Ord>(x: &[A], y: &[B]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
    }
    let (xi, r) = index(x);
    let (yi, c) = index(y);
    if r < 2 || c < 2 {
        return Err(Error::SingleLevel);
    }
    let mut table = vec![vec![0u64; c]; r];
    for (&i, &j) in xi.iter().zip(&yi) {
        table[i][j] += 1;
    }
    let n = x.len() as f64;
    let rows: Vec<f64> = table.iter().map(|row| row.iter().sum::<u64>() as f64).collect();
    let cols: Vec<f64> = (0..c).map(|j| table.iter().map(|row| row[j]).sum::<u64>() as f64).collect();
    let mut chi2 = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, &obs) in row.iter().enumerate() {
            let e = rows[i] * cols[j] / n;
            chi2 += (obs as f64 - e).powi(2) / e;
        }
    }
    let k = (r.min(c) - 1) as f64;
    Ok((chi2 / (n * k)).sqrt().min(1.0))
}
