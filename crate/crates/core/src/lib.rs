//! Statistical fairness auditing for binary credit scoring models.
//!
//! The crate is organised bottom-up:
//!
//! * [`dataset`] loads and encodes tabular lending data (German credit format
//!   or CSV with a JSON schema) and derives the protected attribute.
//! * [`stats`] holds stratified 2x2 contingency tables, Pearson chi-squared
//!   statistics, the chi-squared distribution and Cramer's V.
//! * [`clustering`] partitions applicants into risk classes with k-prototypes.
//! * [`models`] trains logistic, ridge logistic and CART scorers and measures
//!   their PCC / AUC.
//! * [`fairness`] runs the five independence tests (SP, CSP, EO, EOP, PE).
//! * [`fpdp`] sweeps one feature at a time to find candidate variables.
//! * [`mitigation`] compares re-estimation against value fixing.

pub mod clustering;
pub mod dataset;
pub mod error;
pub mod fairness;
pub mod fpdp;
pub mod mitigation;
pub mod models;
pub mod seed;
pub mod stats;

pub use error::{Error, Result};
