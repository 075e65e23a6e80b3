//! Top-k policy portfolios and SharpeRatio@k.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{OpeError, Result};
use crate::metrics::value::MetricValue;
use crate::numeric::population_std;

/// Top-k candidates by estimated value, best first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyPortfolio {
    pub ids: Vec<String>,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimator: Option<String>,
}

impl PolicyPortfolio {
    pub fn with_estimator(mut self, label: impl Into<String>) -> Self {
        self.estimator = Some(label.into());
        self
    }
}

/// Full ranking by estimate, descending; ties go to the smaller policy id.
pub fn rank_policies(estimates: &BTreeMap<String, f64>) -> Vec<String> {
    let mut ids: Vec<&String> = estimates.keys().collect();
    // BTreeMap keys are already ascending, and the sort is stable.
    ids.sort_by(|a, b| estimates[*b].total_cmp(&estimates[*a]));
    ids.into_iter().cloned().collect()
}

pub fn select_top_k(estimates: &BTreeMap<String, f64>, k: usize) -> Result<PolicyPortfolio> {
    if k == 0 || k > estimates.len() {
        return Err(OpeError::param(format!("k={k} outside 1..={}", estimates.len())));
    }
    let mut ids = rank_policies(estimates);
    ids.truncate(k);
    Ok(PolicyPortfolio {
        ids,
        k,
        estimator: None,
    })
}

/// Like [`select_top_k`], but the last slot goes to `baseline_id` whenever the
/// baseline would otherwise be left out.
pub fn select_top_k_with_baseline(
    estimates: &BTreeMap<String, f64>,
    k: usize,
    baseline_id: &str,
) -> Result<PolicyPortfolio> {
    let mut p = select_top_k(estimates, k)?;
    if estimates.contains_key(baseline_id) && !p.ids.iter().any(|id| id == baseline_id) {
        p.ids[k - 1] = baseline_id.to_string();
    }
    Ok(p)
}

fn true_values(truths: &BTreeMap<String, f64>, ids: &[String]) -> Result<Vec<f64>> {
    ids.iter()
        .map(|id| {
            truths
                .get(id)
                .copied()
                .ok_or_else(|| OpeError::param(format!("no true value for policy `{id}`")))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpeRatio {
    pub k: usize,
    pub value: MetricValue,
    /// `best@k - J(π_b)`.
    pub numerator: f64,
    /// `std@k`, the population standard deviation of the portfolio's true values.
    pub denominator: f64,
    /// Set when the denominator was zero and the degeneracy convention applied.
    pub degenerate: bool,
}

pub fn sharpe_ratio_of_portfolio(
    truths: &BTreeMap<String, f64>,
    portfolio: &PolicyPortfolio,
    baseline: f64,
) -> Result<SharpeRatio> {
    let values = true_values(truths, &portfolio.ids)?;
    let best = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let numerator = best - baseline;
    let denominator = population_std(&values);
    Ok(SharpeRatio {
        k: portfolio.k,
        value: MetricValue::from_ratio(numerator, denominator),
        numerator,
        denominator,
        degenerate: denominator == 0.0,
    })
}

/// `SharpeRatio@k = (best@k - J(π_b)) / std@k` over the estimator's top-k portfolio.
pub fn sharpe_ratio_at_k(
    truths: &BTreeMap<String, f64>,
    estimates: &BTreeMap<String, f64>,
    k: usize,
    baseline: f64,
) -> Result<SharpeRatio> {
    sharpe_ratio_of_portfolio(truths, &select_top_k(estimates, k)?, baseline)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioRow {
    pub k: usize,
    pub best: f64,
    pub worst: f64,
    pub mean: f64,
    pub std: f64,
    /// True value of the policy the estimator ranked k-th.
    pub kth_best: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioStats {
    pub baseline: f64,
    pub rows: Vec<PortfolioRow>,
}

/// Reference statistics of the top-k portfolio for `k = 1..=k_max`.
pub fn portfolio_reference_stats(
    truths: &BTreeMap<String, f64>,
    estimates: &BTreeMap<String, f64>,
    k_max: usize,
    baseline: f64,
) -> Result<PortfolioStats> {
    if k_max == 0 || k_max > estimates.len() {
        return Err(OpeError::param(format!(
            "k_max={k_max} outside 1..={}",
            estimates.len()
        )));
    }
    let ranking = rank_policies(estimates);
    let values = true_values(truths, &ranking[..k_max])?;
    let rows = (1..=k_max)
        .map(|k| {
            let prefix = &values[..k];
            PortfolioRow {
                k,
                best: prefix.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                worst: prefix.iter().cloned().fold(f64::INFINITY, f64::min),
                mean: prefix.iter().sum::<f64>() / k as f64,
                std: population_std(prefix),
                kth_best: values[k - 1],
            }
        })
        .collect();
    Ok(PortfolioStats { baseline, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn top_k_examples() {
        let est = map(&[("A", 3.0), ("B", 2.0), ("C", 1.0)]);
        assert_eq!(select_top_k(&est, 2).unwrap().ids, vec!["A", "B"]);
        assert_eq!(select_top_k(&est, 3).unwrap().ids, vec!["A", "B", "C"]);
        let tied = map(&[("B", 1.0), ("A", 1.0)]);
        assert_eq!(select_top_k(&tied, 1).unwrap().ids, vec!["A"]);
        assert!(select_top_k(&est, 0).is_err());
        assert!(select_top_k(&est, 4).is_err());
    }

    #[test]
    fn sharpe_worked_example() {
        let truths = map(&[("p1", 10.0), ("p2", 6.0), ("p3", 2.0)]);
        let est = map(&[("p1", 9.0), ("p2", 1.0), ("p3", 5.0)]);
        let sr = sharpe_ratio_at_k(&truths, &est, 2, 4.0).unwrap();
        assert_eq!(sr.numerator, 6.0);
        assert_eq!(sr.denominator, 4.0);
        assert_eq!(sr.value, MetricValue::Finite(1.5));
        assert!(!sr.degenerate);
    }

    #[test]
    fn sharpe_degenerate_portfolio() {
        let truths = map(&[("a", 4.0), ("b", 4.0)]);
        let sr = sharpe_ratio_at_k(&truths, &truths, 2, 4.0).unwrap();
        assert_eq!((sr.numerator, sr.denominator), (0.0, 0.0));
        assert_eq!(sr.value, MetricValue::Finite(0.0));
        assert!(sr.degenerate);
        let sr = sharpe_ratio_at_k(&truths, &truths, 1, 1.0).unwrap();
        assert_eq!(sr.value, MetricValue::PosInf);
    }

    #[test]
    fn baseline_forcing() {
        let est = map(&[("a", 3.0), ("b", 2.0), ("behavior", 1.0)]);
        let p = select_top_k_with_baseline(&est, 2, "behavior").unwrap();
        assert_eq!(p.ids, vec!["a", "behavior"]);
        let p = select_top_k_with_baseline(&est, 3, "behavior").unwrap();
        assert_eq!(p.ids, vec!["a", "b", "behavior"]);
    }

    #[test]
    fn reference_stats_by_hand() {
        let truths = map(&[("a", 10.0), ("b", 6.0), ("c", 2.0)]);
        let stats = portfolio_reference_stats(&truths, &truths, 3, 0.0).unwrap();
        let r1 = &stats.rows[0];
        assert_eq!(
            (r1.best, r1.worst, r1.mean, r1.std, r1.kth_best),
            (10.0, 10.0, 10.0, 0.0, 10.0)
        );
        let r2 = &stats.rows[1];
        assert_eq!((r2.mean, r2.std), (8.0, 2.0));
        assert_eq!(stats.rows[2].kth_best, 2.0);
    }
}
