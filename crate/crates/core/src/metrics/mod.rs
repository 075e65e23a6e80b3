//! SharpeRatio@k, portfolio statistics, and the conventional OPE metrics.

mod accuracy;
mod portfolio;
pub mod scenarios;
mod value;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{OpeError, Result};
use crate::estimators::EstimateTable;

pub use accuracy::{n_mse, n_regret_at_k, rank_corr};
pub use portfolio::{
    portfolio_reference_stats, rank_policies, select_top_k, select_top_k_with_baseline, sharpe_ratio_at_k,
    sharpe_ratio_of_portfolio, PolicyPortfolio, PortfolioRow, PortfolioStats, SharpeRatio,
};
pub use value::{MetricValue, Outcome};

/// Direction in which a metric is better, used when ranking estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    HigherIsBetter,
    LowerIsBetter,
}

/// One scalar metric of an estimator on one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MetricId {
    SharpeRatio(usize),
    RankCorr,
    NMse,
    NRegret(usize),
}

impl MetricId {
    pub fn direction(self) -> Direction {
        match self {
            MetricId::SharpeRatio(_) | MetricId::RankCorr => Direction::HigherIsBetter,
            MetricId::NMse | MetricId::NRegret(_) => Direction::LowerIsBetter,
        }
    }

    pub fn k(self) -> Option<usize> {
        match self {
            MetricId::SharpeRatio(k) | MetricId::NRegret(k) => Some(k),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MetricId::SharpeRatio(_) => "SharpeRatio",
            MetricId::RankCorr => "RankCorr",
            MetricId::NMse => "nMSE",
            MetricId::NRegret(_) => "nRegret",
        }
    }

    /// Value with the sign flipped for lower-is-better metrics, so larger is
    /// always better.
    pub fn oriented(self, v: MetricValue) -> f64 {
        match self.direction() {
            Direction::HigherIsBetter => v.as_f64(),
            Direction::LowerIsBetter => -v.as_f64(),
        }
    }
}

impl std::fmt::Display for MetricId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.k() {
            Some(k) => write!(f, "{}@{k}", self.name()),
            None => f.write_str(self.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricConfig {
    /// k values for nRegret@k.
    pub ks: Vec<usize>,
    /// Upper end of the SharpeRatio@k curve; defaults to the candidate count.
    pub k_max: Option<usize>,
    /// k used for SharpeRatio in cross-metric comparisons.
    pub reference_k: usize,
    /// Replace the last portfolio slot with the behavior policy when it was not selected.
    pub force_baseline_in_portfolio: bool,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            ks: vec![1],
            k_max: None,
            reference_k: 5,
            force_baseline_in_portfolio: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorMetrics {
    /// SharpeRatio@k for k = 1..=k_max.
    pub sharpe: Vec<SharpeRatio>,
    pub portfolio: PortfolioStats,
    pub n_mse: Outcome,
    pub rank_corr: Outcome,
    pub n_regret: BTreeMap<usize, Outcome>,
}

impl EstimatorMetrics {
    pub fn sharpe_at(&self, k: usize) -> Option<&SharpeRatio> {
        self.sharpe.iter().find(|s| s.k == k)
    }

    /// `None` when the metric was skipped or not computed at that k.
    pub fn value(&self, id: MetricId) -> Option<MetricValue> {
        match id {
            MetricId::SharpeRatio(k) => self.sharpe_at(k).map(|s| s.value),
            MetricId::RankCorr => self.rank_corr.value(),
            MetricId::NMse => self.n_mse.value(),
            MetricId::NRegret(k) => self.n_regret.get(&k).and_then(Outcome::value),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub baseline: f64,
    pub k_max: usize,
    pub estimators: BTreeMap<String, EstimatorMetrics>,
}

/// Metrics of a single estimator's estimates against the true values.
pub fn compute_estimator_metrics(
    truths: &BTreeMap<String, f64>,
    estimates: &BTreeMap<String, f64>,
    baseline: f64,
    config: &MetricConfig,
    baseline_id: Option<&str>,
) -> Result<EstimatorMetrics> {
    let n = estimates.len();
    if n == 0 {
        return Err(OpeError::param("no estimates"));
    }
    let k_max = config.k_max.unwrap_or(n).min(n);
    if k_max == 0 {
        return Err(OpeError::param("k_max must be positive"));
    }
    let sharpe = (1..=k_max)
        .map(|k| {
            let p = match (config.force_baseline_in_portfolio, baseline_id) {
                (true, Some(id)) => select_top_k_with_baseline(estimates, k, id)?,
                _ => select_top_k(estimates, k)?,
            };
            sharpe_ratio_of_portfolio(truths, &p, baseline)
        })
        .collect::<Result<Vec<_>>>()?;
    let portfolio = portfolio_reference_stats(truths, estimates, k_max, baseline)?;
    let n_regret = config
        .ks
        .iter()
        .map(|&k| (k, Outcome::from_result(n_regret_at_k(truths, estimates, k))))
        .collect();
    Ok(EstimatorMetrics {
        sharpe,
        portfolio,
        n_mse: Outcome::from_result(n_mse(truths, estimates)),
        rank_corr: Outcome::from_result(rank_corr(truths, estimates)),
        n_regret,
    })
}

/// Metrics for every estimator in `table`.
pub fn compute_metric_report(
    truths: &BTreeMap<String, f64>,
    table: &EstimateTable,
    baseline: f64,
    config: &MetricConfig,
    baseline_id: Option<&str>,
) -> Result<MetricReport> {
    let mut estimators = BTreeMap::new();
    let mut k_max = 0;
    for label in table.estimators() {
        let est = table.estimates_for(&label);
        let m = compute_estimator_metrics(truths, &est, baseline, config, baseline_id)?;
        k_max = k_max.max(m.sharpe.len());
        estimators.insert(label, m);
    }
    Ok(MetricReport {
        baseline,
        k_max,
        estimators,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_on_true_ranking_is_best_achievable() {
        let truths: BTreeMap<String, f64> = (1..=6).map(|i| (format!("p{i}"), i as f64)).collect();
        let mut table = EstimateTable::new("d", 0);
        for (id, v) in &truths {
            table.insert("oracle", id, *v).unwrap();
        }
        let config = MetricConfig {
            ks: vec![1, 3, 6],
            ..MetricConfig::default()
        };
        let r = compute_metric_report(&truths, &table, 1.0, &config, Some("p1")).unwrap();
        let m = &r.estimators["oracle"];
        assert_eq!(m.rank_corr, Outcome::Value(MetricValue::Finite(1.0)));
        for o in m.n_regret.values() {
            assert_eq!(*o, Outcome::Value(MetricValue::Finite(0.0)));
        }
        assert_eq!(m.n_mse, Outcome::Value(MetricValue::Finite(0.0)));
        assert_eq!(m.sharpe.len(), 6);
        assert_eq!(m.sharpe[0].value, MetricValue::PosInf);
        assert!(m.sharpe[5].value.as_f64() >= 0.0);
    }

    #[test]
    fn singleton_suite_records_skips() {
        let truths: BTreeMap<String, f64> = [("behavior".to_string(), 2.0)].into();
        let mut table = EstimateTable::new("d", 0);
        table.insert("PDIS", "behavior", 1.9).unwrap();
        let r = compute_metric_report(&truths, &table, 2.0, &MetricConfig::default(), Some("behavior")).unwrap();
        let m = &r.estimators["PDIS"];
        assert!(m.sharpe[0].degenerate);
        assert_eq!(m.sharpe[0].value, MetricValue::Finite(0.0));
        assert!(matches!(m.rank_corr, Outcome::Skipped { .. }));
    }
}
