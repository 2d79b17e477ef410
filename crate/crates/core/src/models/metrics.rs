use crate::error::{Error, Result};

/// ŷ_j = 1 iff score_j > delta.
pub fn classify(scores: &[f64], delta: f64) -> Result<Vec<u8>> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("threshold must lie in (0, 1), got {delta}")));
    }
    Ok(scores.iter().map(|&p| u8::from(p > delta)).collect())
}

/// Percentage of correct classification.
pub fn pcc(y: &[u8], yhat: &[u8]) -> Result<f64> {
    if y.len() != yhat.len() {
        return Err(Error::LengthMismatch { left: y.len(), right: yhat.len() });
    }
    if y.is_empty() {
        return Err(Error::EmptyInput);
    }
    let hits = y.iter().zip(yhat).filter(|(a, b)| a == b).count();
    Ok(100.0 * hits as f64 / y.len() as f64)
}

/// Area under the ROC curve from the Mann-Whitney rank sum; tied scores count one half.
pub fn auc(y: &[u8], scores: &[f64]) -> Result<f64> {
    if y.len() != scores.len() {
        return Err(Error::LengthMismatch { left: y.len(), right: scores.len() });
    }
    let n1 = y.iter().filter(|&&v| v == 1).count();
    let n0 = y.len() - n1;
    if n1 == 0 || n0 == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // sum of mid-ranks of the positives (doubled to stay integral)
    let mut twice_rank_sum: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1..=j+1, mid-rank (i+j+2)/2
        let twice_mid = (i + j + 2) as u64;
        let positives = order[i..=j].iter().filter(|&&k| y[k] == 1).count() as u64;
        twice_rank_sum += twice_mid * positives;
        i = j + 1;
    }
    let n1u = n1 as u64;
    let twice_u = twice_rank_sum - n1u * (n1u + 1);
    Ok(twice_u as f64 / (2.0 * n1 as f64 * n0 as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force_auc(y: &[u8], s: &[f64]) -> f64 {
        let mut twice = 0u64;
        let mut pairs = 0u64;
        for i in 0..y.len() {
            for j in 0..y.len() {
                if y[i] == 1 && y[j] == 0 {
                    pairs += 1;
                    if s[i] > s[j] {
                        twice += 2;
                    } else if s[i] == s[j] {
                        twice += 1;
                    }
                }
            }
        }
        twice as f64 / (2.0 * pairs as f64)
    }

    #[test]
    fn threshold_is_strict() {
        assert_eq!(classify(&[0.6, 0.5, 0.4], 0.5).unwrap(), vec![1, 0, 0]);
        assert_eq!(classify(&[1.0; 3], 0.5).unwrap(), vec![1; 3]);
        assert!(classify(&[0.2], 1.0).is_err());
    }

    #[test]
    fn pcc_bounds() {
        assert_eq!(pcc(&[1, 0, 1], &[1, 0, 1]).unwrap(), 100.0);
        assert_eq!(pcc(&[1, 0, 1], &[0, 1, 0]).unwrap(), 0.0);
        assert!(pcc(&[1], &[1, 0]).is_err());
    }

    #[test]
    fn auc_cases() {
        assert_eq!(auc(&[0, 0, 1, 1], &[0.1, 0.2, 0.3, 0.9]).unwrap(), 1.0);
        assert_eq!(auc(&[0, 0, 1, 1], &[0.9, 0.8, 0.3, 0.1]).unwrap(), 0.0);
        assert_eq!(auc(&[0, 1], &[0.5, 0.5]).unwrap(), 0.5);
        assert!(matches!(auc(&[1, 1], &[0.1, 0.2]), Err(Error::SingleClass)));
    }

    #[test]
    fn uninformative_scores_exhaustive() {
        // every labelling of 4 positives / 4 negatives over two score values, each
        // score value carrying the same class mix -> 0.5 exactly
        let s = [0.1, 0.1, 0.1, 0.1, 0.7, 0.7, 0.7, 0.7];
        let y = [1, 1, 0, 0, 1, 1, 0, 0];
        assert_eq!(auc(&y, &s).unwrap(), 0.5);
        assert_eq!(brute_force_auc(&y, &s), 0.5);
    }

    proptest! {
        #[test]
        fn matches_pair_counting(data in proptest::collection::vec((0u8..2, 0u8..12), 2..200)) {
            let y: Vec<u8> = data.iter().map(|d| d.0).collect();
            let s: Vec<f64> = data.iter().map(|d| f64::from(d.1) / 11.0).collect();
            prop_assume!(y.contains(&0) && y.contains(&1));
            prop_assert_eq!(auc(&y, &s).unwrap(), brute_force_auc(&y, &s));
        }

        #[test]
        fn classify_monotone_in_threshold(p in proptest::collection::vec(0.0f64..=1.0, 1..50), a in 0.01f64..0.99, b in 0.01f64..0.99) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let low = classify(&p, lo).unwrap();
            let high = classify(&p, hi).unwrap();
            prop_assert!(low.iter().zip(&high).all(|(l, h)| h <= l));
        }
    }
}
