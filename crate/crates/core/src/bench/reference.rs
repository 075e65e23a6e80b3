//! Built-in MDPs and experiment configs used by the examples, the acceptance
//! suite and `configs/`.

use crate::bench::config::{BehaviorSpec, CandidateSuiteSpec, ExperimentConfig, MdpSource, QSource};
use crate::error::{OpeError, Result};
use crate::estimators::EstimatorConfig;
use crate::mdp::{NamedPolicy, Policy, TabularMdp};
use crate::metrics::MetricConfig;

pub const THREE_STATE: &str = "three-state";
pub const FIVE_STATE: &str = "five-state";

pub fn reference_mdp(name: &str) -> Result<TabularMdp> {
    match name {
        THREE_STATE => Ok(three_state_mdp()),
        FIVE_STATE => Ok(five_state_mdp()),
        other => Err(OpeError::param(format!("unknown reference MDP `{other}`"))),
    }
}

/// 3 states, 2 actions, T = 5, γ = 0.95. Action 0 mostly stays, action 1
/// mostly advances around the ring; state 2 pays best. Gaussian reward noise.
pub fn three_state_mdp() -> TabularMdp {
    let transition = vec![
        vec![vec![0.9, 0.1, 0.0], vec![0.3, 0.7, 0.0]],
        vec![vec![0.1, 0.9, 0.0], vec![0.0, 0.3, 0.7]],
        vec![vec![0.0, 0.1, 0.9], vec![0.6, 0.0, 0.4]],
    ];
    let reward = vec![vec![0.1, 0.0], vec![0.4, 0.2], vec![1.0, 0.5]];
    TabularMdp::new(
        THREE_STATE,
        5,
        0.95,
        vec![1.0, 0.0, 0.0],
        transition,
        reward,
        Some(vec![vec![0.2; 2]; 3]),
    )
    .expect("valid reference MDP")
}

/// 5 states on a line, 3 actions (left, stay, right), T = 6, γ = 0.9.
/// Moves succeed with probability 0.8; the right move otherwise resets to
/// state 0. Reward grows with the state index, staying earns a small bonus
/// on even states and moving right costs a little.
pub fn five_state_mdp() -> TabularMdp {
    let n = 5;
    let mut transition = vec![vec![vec![0.0; n]; 3]; n];
    let mut reward = vec![vec![0.0; 3]; n];
    for s in 0..n {
        let left = s.saturating_sub(1);
        let right = (s + 1).min(n - 1);
        transition[s][0][left] += 0.8;
        transition[s][0][s] += 0.2;
        transition[s][1][s] += 0.7;
        for p in transition[s][1].iter_mut() {
            *p += 0.3 / n as f64;
        }
        transition[s][2][right] += 0.8;
        transition[s][2][0] += 0.2;
        let base = s as f64 / 4.0;
        reward[s][0] = base + 0.1;
        reward[s][1] = base + if s % 2 == 0 { 0.3 } else { 0.0 };
        reward[s][2] = base - 0.1;
    }
    TabularMdp::new(
        FIVE_STATE,
        6,
        0.9,
        vec![0.5, 0.5, 0.0, 0.0, 0.0],
        transition,
        reward,
        Some(vec![vec![0.1; 3]; n]),
    )
    .expect("valid reference MDP")
}

/// Five fixed candidates for [`three_state_mdp`].
pub fn three_state_candidates() -> Vec<NamedPolicy> {
    let t = |probs: Vec<Vec<f64>>| Policy::tabular(probs).expect("valid candidate");
    vec![
        NamedPolicy::new("stay", t(vec![vec![0.9, 0.1]; 3])),
        NamedPolicy::new("advance", t(vec![vec![0.1, 0.9]; 3])),
        NamedPolicy::new("uniform", t(vec![vec![0.5, 0.5]; 3])),
        NamedPolicy::new("seek-2", t(vec![vec![0.2, 0.8], vec![0.2, 0.8], vec![0.95, 0.05]])),
        NamedPolicy::new("wander", t(vec![vec![0.7, 0.3], vec![0.3, 0.7], vec![0.4, 0.6]])),
    ]
}

/// Softmax behavior over the exact Q of the uniform policy.
pub fn reference_behavior(mdp: &TabularMdp, temperature: f64) -> BehaviorSpec {
    BehaviorSpec::Softmax {
        q: QSource::OracleQ(Policy::uniform(mdp.num_states(), mdp.num_actions()).expect("valid uniform")),
        temperature,
    }
}

pub fn three_state_config(n_trajectories: usize, seeds: Vec<u64>) -> ExperimentConfig {
    ExperimentConfig {
        name: "three-state-reference".into(),
        mdp: MdpSource::Reference(THREE_STATE.into()),
        behavior: reference_behavior(&three_state_mdp(), 0.5),
        candidates: CandidateSuiteSpec::Explicit {
            policies: three_state_candidates(),
        },
        n_trajectories,
        seeds,
        estimators: EstimatorConfig::default(),
        metrics: MetricConfig::default(),
    }
}

/// Six base policies whose exact Q-functions seed the five-state grid.
pub fn five_state_bases() -> Vec<QSource> {
    let n = 5;
    let det = |f: &dyn Fn(usize) -> usize| Policy::deterministic(&(0..n).map(f).collect::<Vec<_>>(), 3).expect("valid");
    vec![
        QSource::OracleQ(det(&|_| 0)),
        QSource::OracleQ(det(&|_| 1)),
        QSource::OracleQ(det(&|_| 2)),
        QSource::OracleQ(det(&|s| s % 3)),
        QSource::OracleQ(det(&|s| if s < 2 { 2 } else { 1 })),
        QSource::OracleQ(Policy::uniform(n, 3).expect("valid")),
    ]
}

/// Six bases × ε ∈ {0.1, 0.3, 0.5, 0.7} = 24 policies, subsampled to 10.
pub fn five_state_config(n_trajectories: usize, seeds: Vec<u64>) -> ExperimentConfig {
    ExperimentConfig {
        name: "five-state-reference".into(),
        mdp: MdpSource::Reference(FIVE_STATE.into()),
        behavior: reference_behavior(&five_state_mdp(), 1.0),
        candidates: CandidateSuiteSpec::Grid {
            bases: five_state_bases(),
            noise_levels: vec![0.1, 0.3, 0.5, 0.7],
            subsample: Some(10),
            suite_seed: 7,
        },
        n_trajectories,
        seeds,
        estimators: EstimatorConfig::default(),
        metrics: MetricConfig {
            ks: vec![1, 3],
            ..MetricConfig::default()
        },
    }
}
