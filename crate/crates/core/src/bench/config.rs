use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bench::reference;
use crate::error::{OpeError, Result};
use crate::estimators::EstimatorConfig;
use crate::mdp::{make_epsilon_greedy_policy, make_softmax_policy, NamedPolicy, Policy, TabularMdp};
use crate::metrics::MetricConfig;
use crate::oracle::exact_q_function;

/// Where the experiment's MDP comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MdpSource {
    Inline(TabularMdp),
    /// JSON file, relative paths resolved against the config's directory.
    File(PathBuf),
    /// One of the built-in fixtures, see [`reference::reference_mdp`].
    Reference(String),
}

impl MdpSource {
    pub fn resolve(&self, base_dir: Option<&Path>) -> Result<TabularMdp> {
        match self {
            MdpSource::Inline(m) => Ok(m.clone()),
            MdpSource::File(path) => {
                let path = match base_dir {
                    Some(dir) if path.is_relative() => dir.join(path),
                    _ => path.clone(),
                };
                let text = std::fs::read_to_string(&path)?;
                Ok(serde_json::from_str(&text)?)
            }
            MdpSource::Reference(name) => reference::reference_mdp(name),
        }
    }
}

/// An action-value table, given directly or as the exact `Q^π` (at t = 0)
/// of a reference policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QSource {
    Table(Vec<Vec<f64>>),
    OracleQ(Policy),
}

impl QSource {
    pub fn resolve(&self, mdp: &TabularMdp) -> Result<Vec<Vec<f64>>> {
        match self {
            QSource::Table(q) => Ok(q.clone()),
            QSource::OracleQ(policy) => {
                let q = exact_q_function(mdp, policy)?;
                Ok((0..mdp.num_states())
                    .map(|s| (0..mdp.num_actions()).map(|a| q.get(0, s, a)).collect())
                    .collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BehaviorSpec {
    Softmax { q: QSource, temperature: f64 },
    EpsilonGreedy { q: QSource, epsilon: f64 },
    Policy { policy: Policy },
}

impl BehaviorSpec {
    pub fn build(&self, mdp: &TabularMdp) -> Result<Policy> {
        let policy = match self {
            BehaviorSpec::Softmax { q, temperature } => make_softmax_policy(q.resolve(mdp)?, *temperature)?,
            BehaviorSpec::EpsilonGreedy { q, epsilon } => make_epsilon_greedy_policy(q.resolve(mdp)?, *epsilon)?,
            BehaviorSpec::Policy { policy } => policy.clone(),
        };
        mdp.check_policy(&policy)?;
        Ok(policy)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CandidateSuiteSpec {
    /// Epsilon-greedy policy for every (base q-table, ε) pair, optionally
    /// subsampled without replacement.
    Grid {
        bases: Vec<QSource>,
        noise_levels: Vec<f64>,
        #[serde(default)]
        subsample: Option<usize>,
        #[serde(default)]
        suite_seed: u64,
    },
    Explicit {
        policies: Vec<NamedPolicy>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub mdp: MdpSource,
    pub behavior: BehaviorSpec,
    pub candidates: CandidateSuiteSpec,
    pub n_trajectories: usize,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub estimators: EstimatorConfig,
    #[serde(default)]
    pub metrics: MetricConfig,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(OpeError::param("seeds must be nonempty"));
        }
        let distinct: BTreeSet<u64> = self.seeds.iter().copied().collect();
        if distinct.len() != self.seeds.len() {
            return Err(OpeError::param("seeds must be distinct"));
        }
        if self.n_trajectories == 0 {
            return Err(OpeError::param("n_trajectories must be positive"));
        }
        if self.metrics.reference_k == 0 || self.metrics.ks.contains(&0) {
            return Err(OpeError::param("metric k values must be positive"));
        }
        Ok(())
    }

    /// SHA-256 of the config's canonical JSON (object keys sorted, compact).
    pub fn hash(&self) -> Result<String> {
        let canonical = serde_json::to_string(&serde_json::to_value(self)?)?;
        Ok(hex::encode(Sha256::digest(canonical.as_bytes())))
    }
}
