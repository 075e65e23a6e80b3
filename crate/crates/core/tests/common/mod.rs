#![allow(dead_code)]

use ope_bench::bench::{
    BehaviorSpec, CandidateSuiteSpec, EstimateSource, Experiment, ExperimentConfig, MdpSource, BEHAVIOR_ID,
};
use ope_bench::estimators::{EstimateTable, EstimatorConfig};
use ope_bench::mdp::{NamedPolicy, Policy, TabularMdp};
use ope_bench::metrics::scenarios::ScenarioInstance;
use ope_bench::metrics::MetricConfig;
use ope_bench::Result;

/// One-state, one-step MDP whose action `a` pays `rewards[a]`.
pub fn bandit(rewards: &[f64]) -> TabularMdp {
    let n = rewards.len();
    TabularMdp::new(
        "bandit",
        1,
        1.0,
        vec![1.0],
        vec![vec![vec![1.0]; n]],
        vec![rewards.to_vec()],
        None,
    )
    .unwrap()
}

/// Bandit config: behavior plays `behavior_action`, candidate `ids[i]` plays `actions[i]`.
pub fn bandit_config(
    rewards: &[f64],
    behavior_action: usize,
    candidates: &[(&str, usize)],
    seeds: Vec<u64>,
    metrics: MetricConfig,
) -> ExperimentConfig {
    let n = rewards.len();
    ExperimentConfig {
        name: "bandit".into(),
        mdp: MdpSource::Inline(bandit(rewards)),
        behavior: BehaviorSpec::Policy {
            policy: Policy::deterministic(&[behavior_action], n).unwrap(),
        },
        candidates: CandidateSuiteSpec::Explicit {
            policies: candidates
                .iter()
                .map(|(id, a)| NamedPolicy::new(*id, Policy::deterministic(&[*a], n).unwrap()))
                .collect(),
        },
        n_trajectories: 1,
        seeds,
        estimators: EstimatorConfig::default(),
        metrics,
    }
}

/// Serves a scenario fixture's estimates in place of real estimators. The
/// fixture's `baseline_id` is mapped onto the harness's behavior id.
pub struct ScenarioSource<F: Fn(u64) -> ScenarioInstance + Sync>(pub F);

impl<F: Fn(u64) -> ScenarioInstance + Sync> EstimateSource for ScenarioSource<F> {
    fn estimate(&self, exp: &Experiment, seed: u64) -> Result<EstimateTable> {
        let inst = (self.0)(seed);
        let mut table = EstimateTable::new("synthetic", seed);
        for (label, est) in &inst.estimates {
            for c in &exp.candidates {
                let key = if c.id == BEHAVIOR_ID {
                    inst.baseline_id.as_str()
                } else {
                    c.id.as_str()
                };
                table.insert(label.as_str(), c.id.as_str(), est[key])?;
            }
        }
        Ok(table)
    }
}
