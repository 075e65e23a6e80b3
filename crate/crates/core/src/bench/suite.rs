use rand::seq::index::sample;

use crate::bench::config::{CandidateSuiteSpec, ExperimentConfig};
use crate::error::{OpeError, Result};
use crate::mdp::{make_epsilon_greedy_policy, NamedPolicy, Policy, TabularMdp};
use crate::rng::RngStream;

/// Id under which the behavior policy joins every candidate set.
pub const BEHAVIOR_ID: &str = "behavior";

fn grid_id(base: usize, noise: f64) -> String {
    format!("b{base}-eps{noise}")
}

/// Candidate policies for `config`, with the behavior policy appended last.
///
/// Grid suites are subsampled with `stream`; the kept policies stay in grid
/// order (bases outer, noise levels inner).
pub fn build_candidate_suite(
    config: &ExperimentConfig,
    mdp: &TabularMdp,
    behavior: &Policy,
    stream: &RngStream,
) -> Result<Vec<NamedPolicy>> {
    let mut suite = match &config.candidates {
        CandidateSuiteSpec::Explicit { policies } => {
            if policies.iter().any(|p| p.id == BEHAVIOR_ID) {
                return Err(OpeError::param(format!("candidate id `{BEHAVIOR_ID}` is reserved")));
            }
            policies.clone()
        }
        CandidateSuiteSpec::Grid {
            bases,
            noise_levels,
            subsample,
            ..
        } => {
            if bases.is_empty() || noise_levels.is_empty() {
                return Err(OpeError::param("perturbation grid is empty"));
            }
            let mut grid = Vec::with_capacity(bases.len() * noise_levels.len());
            for (b, base) in bases.iter().enumerate() {
                let q = base.resolve(mdp)?;
                for &eps in noise_levels {
                    grid.push(NamedPolicy::new(
                        grid_id(b, eps),
                        make_epsilon_greedy_policy(q.clone(), eps)?,
                    ));
                }
            }
            match *subsample {
                None => grid,
                Some(m) if m > grid.len() => {
                    return Err(OpeError::param(format!(
                        "subsample size {m} exceeds grid size {}",
                        grid.len()
                    )))
                }
                Some(m) => {
                    let mut keep = sample(&mut stream.rng(), grid.len(), m).into_vec();
                    keep.sort_unstable();
                    keep.into_iter().map(|i| grid[i].clone()).collect()
                }
            }
        }
    };
    if suite.is_empty() && !matches!(config.candidates, CandidateSuiteSpec::Explicit { .. }) {
        return Err(OpeError::param("candidate suite is empty after subsampling"));
    }
    for c in &suite {
        mdp.check_policy(&c.policy)?;
    }
    suite.push(NamedPolicy::new(BEHAVIOR_ID, behavior.clone()));
    Ok(suite)
}

/// Stream used to subsample a grid suite.
pub fn suite_stream(config: &ExperimentConfig) -> RngStream {
    let seed = match &config.candidates {
        CandidateSuiteSpec::Grid { suite_seed, .. } => *suite_seed,
        CandidateSuiteSpec::Explicit { .. } => 0,
    };
    RngStream::new(seed, "candidate-suite")
}
