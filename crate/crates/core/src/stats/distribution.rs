use super::gamma::{regularized_gamma_p, regularized_gamma_q};
use crate::error::{Error, Result};

fn check_dof(dof: u32) -> Result<()> {
    if dof == 0 {
        return Err(Error::InvalidArgument("chi-squared degrees of freedom must be >= 1".into()));
    }
    Ok(())
}

fn check_x(x: f64) -> Result<()> {
    if !(x >= 0.0) {
        return Err(Error::InvalidArgument(format!("chi-squared argument must be >= 0, got {x}")));
    }
    Ok(())
}

/// Upper tail Pr[χ²(dof) > x] = Q(dof/2, x/2).
pub fn chi2_sf(x: f64, dof: u32) -> Result<f64> {
    check_dof(dof)?;
    check_x(x)?;
    regularized_gamma_q(f64::from(dof) / 2.0, x / 2.0)
}

pub fn chi2_cdf(x: f64, dof: u32) -> Result<f64> {
    check_dof(dof)?;
    check_x(x)?;
    regularized_gamma_p(f64::from(dof) / 2.0, x / 2.0)
}

/// The `p` quantile of χ²(dof), found by bracketing then bisecting on the
/// survival function until the bracket collapses to adjacent floats.
pub fn chi2_quantile(p: f64, dof: u32) -> Result<f64> {
    check_dof(dof)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!("quantile level must lie in (0, 1), got {p}")));
    }
    let target = 1.0 - p;
    let mut lo = 0.0f64;
    let mut hi = f64::from(dof).max(1.0);
    while chi2_sf(hi, dof)? > target {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if chi2_sf(mid, dof)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // pick the closer endpoint
    let (slo, shi) = (chi2_sf(lo, dof)?, chi2_sf(hi, dof)?);
    Ok(if (slo - target).abs() <= (shi - target).abs() { lo } else { hi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn critical_values() {
        assert!((chi2_sf(3.84, 1).unwrap() - 0.05).abs() < 5e-4);
        assert!((chi2_sf(5.99, 2).unwrap() - 0.05).abs() < 5e-4);
        assert!((chi2_quantile(0.95, 1).unwrap() - 3.84).abs() < 0.01);
        assert!((chi2_quantile(0.95, 2).unwrap() - 5.99).abs() < 0.01);
        for k in 1..12 {
            assert_eq!(chi2_sf(0.0, k).unwrap(), 1.0);
        }
    }

    #[test]
    fn closed_form_two_dof() {
        // χ²(2) survival is e^{-x/2}
        for &x in &[0.01, 0.5, 3.0, 17.0, 60.0] {
            assert!((chi2_sf(x, 2).unwrap() - (-x / 2.0f64).exp()).abs() < 1e-14);
        }
    }

    #[test]
    fn invalid_inputs() {
        assert!(chi2_sf(1.0, 0).is_err());
        assert!(chi2_sf(-1.0, 1).is_err());
        assert!(chi2_quantile(0.0, 1).is_err());
        assert!(chi2_quantile(1.0, 1).is_err());
        assert!(chi2_quantile(0.5, 0).is_err());
    }

    proptest! {
        #[test]
        fn quantile_inverts_sf(alpha in 1e-6f64..0.999_999, dof in 1u32..60) {
            let q = chi2_quantile(1.0 - alpha, dof).unwrap();
            prop_assert!((chi2_sf(q, dof).unwrap() - alpha).abs() < 1e-8);
        }

        #[test]
        fn sf_is_monotone(a in 0.0f64..80.0, b in 0.0f64..80.0, dof in 1u32..30) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(chi2_sf(lo, dof).unwrap() >= chi2_sf(hi, dof).unwrap());
        }
    }
}
