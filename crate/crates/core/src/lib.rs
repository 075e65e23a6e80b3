//! Off-policy evaluation workbench on synthetic finite-horizon MDPs.
//!
//! The exact dynamic-programming [`oracle`] supplies ground-truth policy
//! values; [`estimators`] implements DM, (SN)PDIS, (SN)DR, (SN)MIS and
//! (SN)MDR over [`dataset::LoggedDataset`]s; [`metrics`] scores estimators by
//! SharpeRatio@k next to nMSE, rank correlation and nRegret@k.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod dataset;
pub mod error;
pub mod estimators;
pub mod mdp;
pub mod metrics;
pub mod numeric;
pub mod oracle;
pub mod rng;

pub use error::{OpeError, Result};
