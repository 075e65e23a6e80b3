//! Off-policy estimators: DM, (SN)PDIS, (SN)DR, (SN)MIS, (SN)MDR, and the
//! kernel-smoothed weight for continuous actions.

mod fqe;
mod importance;
mod kernel;
mod marginal;

pub use fqe::{estimate_dm, fit_fqe, FitDiagnostics, FittedQ};
pub use importance::{dr_per_trajectory, estimate_dr, estimate_pdis, estimate_pdis_smoothed, ImportanceWeights};
pub use kernel::smoothed_importance_weight;
pub use marginal::{estimate_mdr, estimate_mis, fit_marginal_weights, MarginalWeights};

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::LoggedDataset;
use crate::error::{OpeError, Result};
use crate::mdp::{NamedPolicy, Policy, TabularMdp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Empirical,
    Oracle,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMode {
    #[default]
    Empirical,
    Oracle,
}

/// How marginal visitation is collapsed over a finite horizon.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeMode {
    /// `ρ(s,a)` from time-averaged occupancies `(1/T) Σ_t d_t(s,a)`.
    #[default]
    Averaged,
    /// `ρ_t(s,a) = d_t^π(s,a) / d_t^{π_b}(s,a)`.
    PerStep,
}

/// Ground-truth model used by oracle-mode fits.
#[derive(Debug, Clone, Copy)]
pub struct OracleModel<'a> {
    pub mdp: &'a TabularMdp,
    pub behavior: &'a Policy,
}

#[derive(Debug, Clone, Copy)]
pub enum FitSource<'a> {
    Empirical,
    Oracle(OracleModel<'a>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EstimatorKind {
    #[serde(rename = "DM")]
    Dm,
    #[serde(rename = "PDIS")]
    Pdis,
    #[serde(rename = "DR")]
    Dr,
    #[serde(rename = "MIS")]
    Mis,
    #[serde(rename = "MDR")]
    Mdr,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 5] = [
        EstimatorKind::Dm,
        EstimatorKind::Pdis,
        EstimatorKind::Dr,
        EstimatorKind::Mis,
        EstimatorKind::Mdr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Dm => "DM",
            EstimatorKind::Pdis => "PDIS",
            EstimatorKind::Dr => "DR",
            EstimatorKind::Mis => "MIS",
            EstimatorKind::Mdr => "MDR",
        }
    }

    /// Display label, prefixed with `SN` for self-normalized variants.
    pub fn label(self, self_normalize: bool) -> String {
        match self {
            EstimatorKind::Dm => "DM".to_string(),
            k if self_normalize => format!("SN{}", k.name()),
            k => k.name().to_string(),
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn default_bandwidth() -> f64 {
    1.0
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    #[serde(default)]
    pub q_mode: FitMode,
    #[serde(default)]
    pub weight_mode: FitMode,
    #[serde(default)]
    pub time_mode: TimeMode,
    /// Kernel bandwidth `h` for continuous-action weights.
    #[serde(default = "default_bandwidth")]
    pub bandwidth: f64,
    #[serde(default = "default_true")]
    pub self_normalize: bool,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            q_mode: FitMode::Empirical,
            weight_mode: FitMode::Empirical,
            time_mode: TimeMode::Averaged,
            bandwidth: default_bandwidth(),
            self_normalize: true,
        }
    }
}

impl EstimatorConfig {
    pub fn oracle() -> Self {
        Self {
            q_mode: FitMode::Oracle,
            weight_mode: FitMode::Oracle,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateEntry {
    pub estimator: String,
    pub policy_id: String,
    pub estimate: f64,
}

/// Point estimates for every (estimator, candidate) pair on one dataset.
/// Estimators are identified by label (`DM`, `SNPDIS`, ...), so synthetic
/// estimators can share the same table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateTable {
    pub dataset_id: String,
    pub seed: u64,
    pub entries: Vec<EstimateEntry>,
}

impl EstimateTable {
    pub fn new(dataset_id: impl Into<String>, seed: u64) -> Self {
        Self {
            dataset_id: dataset_id.into(),
            seed,
            entries: Vec::new(),
        }
    }

    /// Adds an entry, rejecting non-finite values.
    pub fn insert(&mut self, estimator: impl Into<String>, policy_id: impl Into<String>, estimate: f64) -> Result<()> {
        let (estimator, policy_id) = (estimator.into(), policy_id.into());
        if !estimate.is_finite() {
            return Err(OpeError::NonFiniteEstimate {
                estimator,
                policy: policy_id,
            });
        }
        self.entries.push(EstimateEntry {
            estimator,
            policy_id,
            estimate,
        });
        Ok(())
    }

    pub fn get(&self, estimator: &str, policy_id: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.estimator == estimator && e.policy_id == policy_id)
            .map(|e| e.estimate)
    }

    /// Estimator labels present, in first-seen order.
    pub fn estimators(&self) -> Vec<String> {
        let mut seen: Vec<String> = Vec::new();
        for e in &self.entries {
            if !seen.contains(&e.estimator) {
                seen.push(e.estimator.clone());
            }
        }
        seen
    }

    pub fn estimates_for(&self, estimator: &str) -> BTreeMap<String, f64> {
        self.entries
            .iter()
            .filter(|e| e.estimator == estimator)
            .map(|e| (e.policy_id.clone(), e.estimate))
            .collect()
    }

    pub fn write_csv_header<W: Write>(out: W) -> Result<csv::Writer<W>> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["estimator", "policy_id", "estimate", "seed", "dataset_id"])
            .map_err(csv_err)?;
        Ok(w)
    }

    pub fn write_csv_rows<W: Write>(&self, w: &mut csv::Writer<W>) -> Result<()> {
        for e in &self.entries {
            w.write_record([
                e.estimator.as_str(),
                e.policy_id.as_str(),
                &e.estimate.to_string(),
                &self.seed.to_string(),
                self.dataset_id.as_str(),
            ])
            .map_err(csv_err)?;
        }
        Ok(())
    }

    /// CSV with columns `estimator,policy_id,estimate,seed,dataset_id`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = Self::write_csv_header(out)?;
        self.write_csv_rows(&mut w)?;
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> OpeError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => OpeError::Io(io),
        other => OpeError::param(format!("csv: {other:?}")),
    }
}

fn source<'a>(mode: FitMode, oracle: Option<OracleModel<'a>>, what: &str) -> Result<FitSource<'a>> {
    match mode {
        FitMode::Empirical => Ok(FitSource::Empirical),
        FitMode::Oracle => oracle
            .map(FitSource::Oracle)
            .ok_or_else(|| OpeError::param(format!("oracle {what} requested but no oracle model was supplied"))),
    }
}

/// Runs all five estimators for every candidate. FQE and marginal weights are
/// fit once per candidate and shared between DM/DR/MDR and MIS/MDR.
pub fn run_all_estimators(
    ds: &LoggedDataset,
    candidates: &[NamedPolicy],
    config: &EstimatorConfig,
    oracle: Option<OracleModel<'_>>,
) -> Result<EstimateTable> {
    if candidates.is_empty() {
        return Err(OpeError::param("candidate list is empty"));
    }
    let q_source = source(config.q_mode, oracle, "Q-function")?;
    let w_source = source(config.weight_mode, oracle, "marginal weights")?;
    let sn = config.self_normalize;

    let rows = candidates
        .par_iter()
        .map(|c| -> Result<[f64; 5]> {
            let q = fit_fqe(ds, &c.policy, q_source)?;
            let w = fit_marginal_weights(ds, &c.policy, w_source, config.time_mode)?;
            Ok([
                estimate_dm(ds, &c.policy, &q)?,
                estimate_pdis(ds, &c.policy, sn)?,
                estimate_dr(ds, &c.policy, &q, sn)?,
                estimate_mis(ds, &c.policy, &w, sn)?,
                estimate_mdr(ds, &c.policy, &w, &q, sn)?,
            ])
        })
        .collect::<Vec<_>>();

    let mut table = EstimateTable::new(ds.id(), ds.seed);
    for (c, row) in candidates.iter().zip(rows) {
        let row = row?;
        for (kind, value) in EstimatorKind::ALL.into_iter().zip(row) {
            table.insert(kind.label(sn), c.id.clone(), value)?;
        }
    }
    Ok(table)
}
