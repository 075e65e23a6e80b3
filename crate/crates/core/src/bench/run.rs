use std::collections::BTreeMap;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bench::compare::{cross_metric_comparison, CrossMetricComparison};
use crate::bench::config::ExperimentConfig;
use crate::bench::suite::{build_candidate_suite, suite_stream, BEHAVIOR_ID};
use crate::dataset::generate_logged_dataset;
use crate::error::{OpeError, Result};
use crate::estimators::{run_all_estimators, EstimateTable, OracleModel};
use crate::mdp::{Environment, NamedPolicy, TabularMdp};
use crate::metrics::{compute_metric_report, MetricId, MetricReport, MetricValue};
use crate::numeric::{mean, sample_std};
use crate::oracle::exact_policy_value;
use crate::rng::RngStream;

/// A config with its MDP, policies and ground truth resolved.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub mdp: TabularMdp,
    pub env: Environment,
    pub behavior: NamedPolicy,
    /// Candidates in suite order, behavior policy last.
    pub candidates: Vec<NamedPolicy>,
    pub truths: BTreeMap<String, f64>,
    pub baseline: f64,
}

impl Experiment {
    pub fn prepare(config: &ExperimentConfig, opts: &RunOptions) -> Result<Self> {
        config.validate()?;
        let mdp = config.mdp.resolve(opts.base_dir.as_deref())?;
        let behavior = NamedPolicy::new(BEHAVIOR_ID, config.behavior.build(&mdp)?);
        let candidates = build_candidate_suite(config, &mdp, &behavior.policy, &suite_stream(config))?;
        let mut truths = BTreeMap::new();
        for c in &candidates {
            if truths
                .insert(c.id.clone(), exact_policy_value(&mdp, &c.policy)?)
                .is_some()
            {
                return Err(OpeError::param(format!("duplicate candidate id `{}`", c.id)));
            }
        }
        let baseline = truths[BEHAVIOR_ID];
        Ok(Self {
            config: config.clone(),
            env: Environment::from(mdp.clone()),
            mdp,
            behavior,
            candidates,
            truths,
            baseline,
        })
    }

    pub fn dataset_stream(&self, seed: u64) -> RngStream {
        RngStream::new(seed, "dataset")
    }
}

/// Produces the estimate table for one seed. The default simulates a logged
/// dataset and runs every estimator; tests substitute synthetic tables.
pub trait EstimateSource: Sync {
    fn estimate(&self, exp: &Experiment, seed: u64) -> Result<EstimateTable>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SimulatedEstimates;

impl EstimateSource for SimulatedEstimates {
    fn estimate(&self, exp: &Experiment, seed: u64) -> Result<EstimateTable> {
        let ds = generate_logged_dataset(
            &exp.env,
            &exp.behavior,
            exp.config.n_trajectories,
            &exp.dataset_stream(seed),
        )?;
        let oracle = OracleModel {
            mdp: &exp.mdp,
            behavior: &exp.behavior.policy,
        };
        run_all_estimators(&ds, &exp.candidates, &exp.config.estimators, Some(oracle))
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Run seeds on the global rayon pool; otherwise on a single thread.
    pub parallel: bool,
    /// Directory for resolving relative paths in the config.
    pub base_dir: Option<PathBuf>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            parallel: true,
            base_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimates: Option<EstimateTable>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl SeedResult {
    pub fn succeeded(&self) -> bool {
        self.failure.is_none()
    }
}

/// Mean and sample standard deviation of one metric across seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggStat {
    /// `None` when no seed produced a value, or infinities of both signs occurred.
    pub mean: Option<MetricValue>,
    /// `None` unless at least one value was seen and all values were finite.
    pub std: Option<f64>,
    /// Number of seeds that contributed a value.
    pub n: usize,
    /// Seeds on which the metric was skipped or the seed failed.
    pub skipped: usize,
}

impl AggStat {
    pub fn from_values(values: &[Option<MetricValue>]) -> Self {
        let seen: Vec<f64> = values.iter().flatten().map(|v| v.as_f64()).collect();
        let skipped = values.len() - seen.len();
        if seen.is_empty() {
            return Self {
                mean: None,
                std: None,
                n: 0,
                skipped,
            };
        }
        let all_finite = seen.iter().all(|v| v.is_finite());
        let m = if all_finite {
            Some(MetricValue::Finite(mean(&seen)))
        } else {
            let pos = seen.contains(&f64::INFINITY);
            let neg = seen.contains(&f64::NEG_INFINITY);
            match (pos, neg) {
                (true, false) => Some(MetricValue::PosInf),
                (false, true) => Some(MetricValue::NegInf),
                _ => None,
            }
        };
        Self {
            mean: m,
            std: all_finite.then(|| sample_std(&seen)),
            n: seen.len(),
            skipped,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorAggregate {
    /// SharpeRatio@k keyed by k.
    pub sharpe: BTreeMap<usize, AggStat>,
    pub n_mse: AggStat,
    pub rank_corr: AggStat,
    pub n_regret: BTreeMap<usize, AggStat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportProvenance {
    pub config_name: String,
    pub config_hash: String,
    pub software_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub provenance: ReportProvenance,
    pub candidates: Vec<String>,
    pub baseline_id: String,
    pub baseline: f64,
    pub truths: BTreeMap<String, f64>,
    pub seeds: Vec<SeedResult>,
    /// Seeds whose estimators or metrics failed; their metrics are absent.
    pub failed_seeds: Vec<u64>,
    pub estimators: BTreeMap<String, EstimatorAggregate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparison: Option<CrossMetricComparison>,
}

impl AggregateReport {
    pub fn is_complete(&self) -> bool {
        self.failed_seeds.is_empty()
    }

    /// Estimator labels seen on any successful seed.
    pub fn estimator_labels(&self) -> Vec<String> {
        self.estimators.keys().cloned().collect()
    }

    /// Per-seed values of `metric` for `estimator`, one entry per seed.
    pub fn per_seed(&self, estimator: &str, metric: MetricId) -> Vec<Option<MetricValue>> {
        self.seeds
            .iter()
            .map(|s| {
                s.metrics
                    .as_ref()
                    .and_then(|m| m.estimators.get(estimator))
                    .and_then(|m| m.value(metric))
            })
            .collect()
    }
}

fn run_seed(exp: &Experiment, source: &dyn EstimateSource, seed: u64) -> SeedResult {
    let outcome = source.estimate(exp, seed).and_then(|table| {
        let metrics = compute_metric_report(
            &exp.truths,
            &table,
            exp.baseline,
            &exp.config.metrics,
            Some(BEHAVIOR_ID),
        )?;
        Ok((table, metrics))
    });
    match outcome {
        Ok((table, metrics)) => SeedResult {
            seed,
            estimates: Some(table),
            metrics: Some(metrics),
            failure: None,
        },
        Err(e) => {
            log::error!("seed {seed} failed: {e}");
            SeedResult {
                seed,
                estimates: None,
                metrics: None,
                failure: Some(e.to_string()),
            }
        }
    }
}

/// Runs `config` with simulated datasets and all estimators.
pub fn run_experiment(config: &ExperimentConfig) -> Result<AggregateReport> {
    run_experiment_with(config, &SimulatedEstimates, &RunOptions::default())
}

/// Runs every seed through `source`, then aggregates in seed order. Seed
/// failures are recorded in the report, not returned as errors.
pub fn run_experiment_with(
    config: &ExperimentConfig,
    source: &dyn EstimateSource,
    opts: &RunOptions,
) -> Result<AggregateReport> {
    let exp = Experiment::prepare(config, opts)?;
    let run = || -> Vec<SeedResult> {
        config
            .seeds
            .par_iter()
            .map(|&seed| run_seed(&exp, source, seed))
            .collect()
    };
    let seeds = if opts.parallel {
        run()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .map_err(|e| OpeError::param(format!("thread pool: {e}")))?
            .install(run)
    };
    aggregate(&exp, seeds)
}

fn aggregate(exp: &Experiment, seeds: Vec<SeedResult>) -> Result<AggregateReport> {
    let failed_seeds: Vec<u64> = seeds.iter().filter(|s| !s.succeeded()).map(|s| s.seed).collect();
    let mut report = AggregateReport {
        provenance: ReportProvenance {
            config_name: exp.config.name.clone(),
            config_hash: exp.config.hash()?,
            software_version: env!("CARGO_PKG_VERSION").to_string(),
        },
        candidates: exp.candidates.iter().map(|c| c.id.clone()).collect(),
        baseline_id: BEHAVIOR_ID.to_string(),
        baseline: exp.baseline,
        truths: exp.truths.clone(),
        seeds,
        failed_seeds,
        estimators: BTreeMap::new(),
        comparison: None,
    };

    let mut labels: Vec<String> = Vec::new();
    let mut k_max = 0;
    for m in report.seeds.iter().filter_map(|s| s.metrics.as_ref()) {
        k_max = k_max.max(m.k_max);
        for label in m.estimators.keys() {
            if !labels.contains(label) {
                labels.push(label.clone());
            }
        }
    }
    for label in labels {
        let agg = |id: MetricId| AggStat::from_values(&report.per_seed(&label, id));
        let entry = EstimatorAggregate {
            sharpe: (1..=k_max).map(|k| (k, agg(MetricId::SharpeRatio(k)))).collect(),
            n_mse: agg(MetricId::NMse),
            rank_corr: agg(MetricId::RankCorr),
            n_regret: exp
                .config
                .metrics
                .ks
                .iter()
                .map(|&k| (k, agg(MetricId::NRegret(k))))
                .collect(),
        };
        report.estimators.insert(label, entry);
    }

    if report.estimators.len() >= 2 && report.seeds.iter().any(SeedResult::succeeded) {
        let reference_k = exp.config.metrics.reference_k.min(k_max.max(1));
        report.comparison = Some(cross_metric_comparison(&report, reference_k, &exp.config.metrics.ks)?);
    }
    Ok(report)
}
