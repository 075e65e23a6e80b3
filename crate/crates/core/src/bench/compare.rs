//! Agreement between SharpeRatio@k and the conventional metrics when ranking
//! estimators.

use serde::{Deserialize, Serialize};

use crate::bench::run::AggregateReport;
use crate::error::{OpeError, Result};
use crate::metrics::{MetricId, MetricValue};
use crate::numeric::{mean, sample_std, spearman};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricAgreement {
    pub metric: String,
    /// Spearman ρ between the two estimator rankings on each seed; `None`
    /// where undefined or a value was missing.
    pub spearman_per_seed: Vec<Option<f64>>,
    pub spearman_mean: Option<f64>,
    pub spearman_std: Option<f64>,
    /// Seeds left out of the mean.
    pub excluded: usize,
    /// Seeds on which the best estimator differs.
    pub disagreements: usize,
    /// Seeds on which both best estimators were defined.
    pub compared: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossMetricComparison {
    pub reference: String,
    pub estimators: Vec<String>,
    pub seeds: Vec<u64>,
    pub rows: Vec<MetricAgreement>,
}

/// Index of the best oriented value; the lowest index wins ties.
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

fn oriented(
    id: MetricId,
    n_est: usize,
    seed: usize,
    value: &impl Fn(usize, usize, MetricId) -> Option<MetricValue>,
) -> Option<Vec<f64>> {
    (0..n_est).map(|e| value(seed, e, id).map(|v| id.oriented(v))).collect()
}

/// Compares the estimator ranking under `reference` with the ranking under
/// each of `others`, seed by seed. `value(seed_index, estimator_index, metric)`
/// supplies the scores; `None` marks a skipped metric.
pub fn compare_scores(
    estimators: &[String],
    seeds: &[u64],
    reference: MetricId,
    others: &[MetricId],
    value: impl Fn(usize, usize, MetricId) -> Option<MetricValue>,
) -> Result<CrossMetricComparison> {
    if estimators.len() < 2 {
        return Err(OpeError::param("cross-metric comparison needs at least two estimators"));
    }
    let n_est = estimators.len();
    let rows = others
        .iter()
        .map(|&other| {
            let mut per_seed = Vec::with_capacity(seeds.len());
            let mut disagreements = 0;
            let mut compared = 0;
            for s in 0..seeds.len() {
                let r = oriented(reference, n_est, s, &value);
                let o = oriented(other, n_est, s, &value);
                match (r, o) {
                    (Some(r), Some(o)) => {
                        compared += 1;
                        if argmax(&r) != argmax(&o) {
                            disagreements += 1;
                        }
                        per_seed.push(spearman(&r, &o));
                    }
                    _ => per_seed.push(None),
                }
            }
            let defined: Vec<f64> = per_seed.iter().flatten().copied().collect();
            MetricAgreement {
                metric: other.to_string(),
                excluded: per_seed.len() - defined.len(),
                spearman_mean: (!defined.is_empty()).then(|| mean(&defined)),
                spearman_std: (!defined.is_empty()).then(|| sample_std(&defined)),
                spearman_per_seed: per_seed,
                disagreements,
                compared,
            }
        })
        .collect();
    Ok(CrossMetricComparison {
        reference: reference.to_string(),
        estimators: estimators.to_vec(),
        seeds: seeds.to_vec(),
        rows,
    })
}

/// SharpeRatio@`reference_k` against RankCorr, nMSE and nRegret@k for each
/// k in `regret_ks`, over the report's successful seeds.
pub fn cross_metric_comparison(
    agg: &AggregateReport,
    reference_k: usize,
    regret_ks: &[usize],
) -> Result<CrossMetricComparison> {
    let estimators = agg.estimator_labels();
    let seeds: Vec<_> = agg.seeds.iter().filter(|s| s.succeeded()).collect();
    let seed_ids: Vec<u64> = seeds.iter().map(|s| s.seed).collect();
    let mut others = vec![MetricId::RankCorr, MetricId::NMse];
    others.extend(regret_ks.iter().map(|&k| MetricId::NRegret(k)));
    compare_scores(
        &estimators,
        &seed_ids,
        MetricId::SharpeRatio(reference_k),
        &others,
        |s, e, id| {
            seeds[s]
                .metrics
                .as_ref()
                .and_then(|m| m.estimators.get(&estimators[e]))
                .and_then(|m| m.value(id))
        },
    )
}
