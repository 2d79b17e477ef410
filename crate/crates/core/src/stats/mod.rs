//! Contingency tables, Pearson chi-squared statistics, the chi-squared
//! distribution and Cramer's V.

mod association;
mod contingency;
mod distribution;
mod gamma;

pub use association::cramers_v;
pub use contingency::{build_table, pearson_chi2_stratum, ChiSquareResult, ContingencyTable, Stratum};
pub use distribution::{chi2_cdf, chi2_quantile, chi2_sf};
pub use gamma::{ln_gamma, regularized_gamma_p, regularized_gamma_q};
