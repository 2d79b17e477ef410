use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::distribution::chi2_sf;
use crate::error::{Error, Result};

/// One 2x2 table. `counts[u][v]` with u = 0 for A = 1, u = 1 for A = 0, and
/// v = 0 for B = 1, v = 1 for B = 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stratum {
    pub label: String,
    pub counts: [[u64; 2]; 2],
}

impl Stratum {
    pub fn new(label: impl Into<String>, counts: [[u64; 2]; 2]) -> Self {
        Self { label: label.into(), counts }
    }

    /// n_{u+}: totals for A = 1 and A = 0.
    pub fn row_totals(&self) -> [u64; 2] {
        [self.counts[0][0] + self.counts[0][1], self.counts[1][0] + self.counts[1][1]]
    }

    /// n_{+v}: totals for B = 1 and B = 0.
    pub fn col_totals(&self) -> [u64; 2] {
        [self.counts[0][0] + self.counts[1][0], self.counts[0][1] + self.counts[1][1]]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// A zero margin makes the independence statistic undefined.
    pub fn is_degenerate(&self) -> bool {
        self.row_totals().contains(&0) || self.col_totals().contains(&0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub strata: Vec<Stratum>,
}

impl ContingencyTable {
    pub fn total(&self) -> u64 {
        self.strata.iter().map(Stratum::total).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: u32,
    pub p_value: f64,
    pub degenerate: bool,
}

impl ChiSquareResult {
    pub fn degenerate() -> Self {
        Self { statistic: 0.0, dof: 0, p_value: 1.0, degenerate: true }
    }
}

/// Cross-tabulates binary `a` against binary `b`, one stratum per distinct
/// label (strata ordered by label).
pub fn build_table<L: Ord + ToString>(a: &[u8], b: &[u8], strata: &[L]) -> Result<ContingencyTable> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
    }
    if a.len() != strata.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: strata.len() });
    }
    let mut cells: BTreeMap<&L, [[u64; 2]; 2]> = BTreeMap::new();
    for ((&x, &y), label) in a.iter().zip(b).zip(strata) {
        if x > 1 || y > 1 {
            return Err(Error::InvalidArgument("contingency inputs must be 0/1".into()));
        }
        let t = cells.entry(label).or_default();
        t[usize::from(1 - x)][usize::from(1 - y)] += 1;
    }
    Ok(ContingencyTable {
        strata: cells.into_iter().map(|(l, counts)| Stratum { label: l.to_string(), counts }).collect(),
    })
}

/// Pearson statistic of one stratum, without continuity correction.
pub fn pearson_chi2_stratum(t: &Stratum) -> Result<ChiSquareResult> {
    let n = t.total();
    if n == 0 {
        return Err(Error::EmptyStratum(t.label.clone()));
    }
    if t.is_degenerate() {
        return Ok(ChiSquareResult::degenerate());
    }
    let rows = t.row_totals();
    let cols = t.col_totals();
    let nf = n as f64;
    let mut statistic = 0.0;
    for u in 0..2 {
        for v in 0..2 {
            let expected = rows[u] as f64 * cols[v] as f64 / nf;
            if expected > 0.0 {
                let diff = t.counts[u][v] as f64 - expected;
                statistic += diff * diff / expected;
            }
        }
    }
    Ok(ChiSquareResult { statistic, dof: 1, p_value: chi2_sf(statistic, 1)?, degenerate: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Class C1 of the worked example: ŷ=1/D=1 178, ŷ=1/D=0 433, ŷ=0/D=1 92, ŷ=0/D=0 124.
    fn worked_example() -> Stratum {
        Stratum::new("C1", [[178, 433], [92, 124]])
    }

    fn closed_form(c: [[u64; 2]; 2]) -> f64 {
        let [[a, b], [cc, d]] = c.map(|r| r.map(|x| x as f64));
        let n = a + b + cc + d;
        n * (a * d - b * cc).powi(2) / ((a + b) * (cc + d) * (a + cc) * (b + d))
    }

    #[test]
    fn worked_example_margins_and_statistic() {
        let t = worked_example();
        assert_eq!(t.row_totals(), [611, 216]);
        assert_eq!(t.col_totals(), [270, 557]);
        assert_eq!(t.total(), 827);
        let r = pearson_chi2_stratum(&t).unwrap();
        assert!((r.statistic - 13.15).abs() < 0.01, "{}", r.statistic);
        assert!(r.p_value < 0.05);
        assert_eq!(r.dof, 1);
    }

    #[test]
    fn build_table_from_sequences() {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (x, y, n) in [(1u8, 1u8, 178), (1, 0, 433), (0, 1, 92), (0, 0, 124)] {
            a.extend(std::iter::repeat_n(x, n));
            b.extend(std::iter::repeat_n(y, n));
        }
        let labels = vec![0u8; a.len()];
        let t = build_table(&a, &b, &labels).unwrap();
        assert_eq!(t.strata, vec![Stratum::new("0", [[178, 433], [92, 124]])]);
    }

    #[test]
    fn identical_sequences_have_empty_off_diagonal() {
        let a = [1u8, 0, 1, 1, 0];
        let t = build_table(&a, &a, &[0; 5]).unwrap();
        assert_eq!(t.strata[0].counts[0][1], 0);
        assert_eq!(t.strata[0].counts[1][0], 0);
    }

    #[test]
    fn two_strata_sum_to_input_length() {
        let a = [1u8, 0, 1, 1, 0, 0];
        let b = [0u8, 0, 1, 1, 1, 0];
        let t = build_table(&a, &b, &["x", "y", "x", "y", "x", "x"]).unwrap();
        assert_eq!(t.strata.len(), 2);
        assert_eq!(t.total(), 6);
        assert!(build_table(&a, &b[..5], &[0; 6]).is_err());
        assert!(build_table(&a, &b, &[0; 5]).is_err());
        assert!(build_table(&[2u8], &[0u8], &[0]).is_err());
    }

    #[test]
    fn independent_counts_give_zero() {
        let r = pearson_chi2_stratum(&Stratum::new("k", [[100, 100], [100, 100]])).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn all_predicted_good_is_degenerate() {
        let r = pearson_chi2_stratum(&Stratum::new("k", [[30, 70], [0, 0]])).unwrap();
        assert!(r.degenerate);
        assert_eq!((r.statistic, r.dof, r.p_value), (0.0, 0, 1.0));
        assert!(pearson_chi2_stratum(&Stratum::new("e", [[0, 0], [0, 0]])).is_err());
    }

    proptest! {
        #[test]
        fn matches_closed_form(c in proptest::array::uniform4(0u64..500)) {
            let counts = [[c[0], c[1]], [c[2], c[3]]];
            let t = Stratum::new("s", counts);
            prop_assume!(t.total() > 0);
            let r = pearson_chi2_stratum(&t).unwrap();
            if t.is_degenerate() {
                prop_assert!(r.degenerate);
            } else {
                let oracle = closed_form(counts);
                prop_assert!((r.statistic - oracle).abs() <= 1e-9 * oracle.max(1.0));
            }
        }
    }
}
