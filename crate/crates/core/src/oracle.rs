//! Exact finite-horizon dynamic programming: policy values, time-indexed
//! Q-functions, and per-step occupancy measures.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{OpeError, Result};
use crate::mdp::{sample_trajectory, Environment, Policy, TabularMdp};
use crate::numeric::{mean, sample_std};
use crate::rng::RngStream;

/// Time-indexed action values `Q(t, s, a)`, stored flat `[T×S×A]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QFunction {
    pub horizon: usize,
    pub num_states: usize,
    pub num_actions: usize,
    pub values: Vec<f64>,
}

impl QFunction {
    pub fn zeros(horizon: usize, num_states: usize, num_actions: usize) -> Self {
        Self {
            horizon,
            num_states,
            num_actions,
            values: vec![0.0; horizon * num_states * num_actions],
        }
    }

    pub fn constant(horizon: usize, num_states: usize, num_actions: usize, c: f64) -> Self {
        Self {
            values: vec![c; horizon * num_states * num_actions],
            ..Self::zeros(horizon, num_states, num_actions)
        }
    }

    fn idx(&self, t: usize, s: usize, a: usize) -> usize {
        (t * self.num_states + s) * self.num_actions + a
    }

    pub fn get(&self, t: usize, s: usize, a: usize) -> f64 {
        self.values[self.idx(t, s, a)]
    }

    pub fn set(&mut self, t: usize, s: usize, a: usize, v: f64) {
        let i = self.idx(t, s, a);
        self.values[i] = v;
    }

    /// `V(t, s) = Σ_a π(a|s) Q(t, s, a)`; zero past the horizon.
    pub fn state_value(&self, policy: &Policy, t: usize, s: usize) -> f64 {
        if t >= self.horizon {
            return 0.0;
        }
        policy
            .action_probs(s)
            .iter()
            .enumerate()
            .map(|(a, p)| p * self.get(t, s, a))
            .sum()
    }

    /// Largest absolute Bellman residual of this table against `mdp` under `policy`.
    pub fn bellman_residual(&self, mdp: &TabularMdp, policy: &Policy) -> f64 {
        let mut worst: f64 = 0.0;
        for t in 0..self.horizon {
            for s in 0..self.num_states {
                for a in 0..self.num_actions {
                    let target = bellman_backup(mdp, policy, self, t, s, a);
                    worst = worst.max((self.get(t, s, a) - target).abs());
                }
            }
        }
        worst
    }
}

fn bellman_backup(mdp: &TabularMdp, policy: &Policy, q: &QFunction, t: usize, s: usize, a: usize) -> f64 {
    let mut v = mdp.reward(s, a);
    if t + 1 < q.horizon {
        let cont: f64 = mdp
            .transition_row(s, a)
            .iter()
            .enumerate()
            .filter(|(_, p)| **p != 0.0)
            .map(|(next, p)| p * q.state_value(policy, t + 1, next))
            .sum();
        v += mdp.discount() * cont;
    }
    v
}

/// Per-step visitation `d_t(s, a)`, stored flat `[T×S×A]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyMeasure {
    pub horizon: usize,
    pub num_states: usize,
    pub num_actions: usize,
    pub per_step: Vec<f64>,
}

impl OccupancyMeasure {
    pub fn get(&self, t: usize, s: usize, a: usize) -> f64 {
        self.per_step[(t * self.num_states + s) * self.num_actions + a]
    }

    /// Time-averaged visitation `(1/T) Σ_t d_t(s, a)`.
    pub fn averaged(&self, s: usize, a: usize) -> f64 {
        (0..self.horizon).map(|t| self.get(t, s, a)).sum::<f64>() / self.horizon as f64
    }

    pub fn state_marginal(&self, t: usize, s: usize) -> f64 {
        (0..self.num_actions).map(|a| self.get(t, s, a)).sum()
    }
}

pub fn exact_q_function(mdp: &TabularMdp, policy: &Policy) -> Result<QFunction> {
    mdp.check_policy(policy)?;
    let (horizon, n_s, n_a) = (mdp.horizon(), mdp.num_states(), mdp.num_actions());
    let mut q = QFunction::zeros(horizon, n_s, n_a);
    for t in (0..horizon).rev() {
        for s in 0..n_s {
            for a in 0..n_a {
                let v = bellman_backup(mdp, policy, &q, t, s, a);
                q.set(t, s, a, v);
            }
        }
    }
    Ok(q)
}

/// `J(π) = Σ_s p(s0=s) Σ_a π(a|s) Q(0, s, a)`.
pub fn exact_policy_value(mdp: &TabularMdp, policy: &Policy) -> Result<f64> {
    let q = exact_q_function(mdp, policy)?;
    Ok(mdp
        .initial_dist()
        .iter()
        .enumerate()
        .map(|(s, p)| p * q.state_value(policy, 0, s))
        .sum())
}

pub fn exact_occupancy(mdp: &TabularMdp, policy: &Policy) -> Result<OccupancyMeasure> {
    mdp.check_policy(policy)?;
    Ok(occupancy_from(mdp, policy, mdp.initial_dist()))
}

/// Forward recursion from an arbitrary initial state distribution.
pub(crate) fn occupancy_from(mdp: &TabularMdp, policy: &Policy, initial: &[f64]) -> OccupancyMeasure {
    let (horizon, n_s, n_a) = (mdp.horizon(), mdp.num_states(), mdp.num_actions());
    let mut per_step = vec![0.0; horizon * n_s * n_a];
    let mut state_dist = initial.to_vec();
    for t in 0..horizon {
        let base = t * n_s * n_a;
        for s in 0..n_s {
            for (a, p) in policy.action_probs(s).iter().enumerate() {
                per_step[base + s * n_a + a] = state_dist[s] * p;
            }
        }
        let mut next = vec![0.0; n_s];
        for s in 0..n_s {
            for a in 0..n_a {
                let mass = per_step[base + s * n_a + a];
                if mass == 0.0 {
                    continue;
                }
                for (s2, p) in mdp.transition_row(s, a).iter().enumerate() {
                    next[s2] += mass * p;
                }
            }
        }
        state_dist = next;
    }
    OccupancyMeasure {
        horizon,
        num_states: n_s,
        num_actions: n_a,
        per_step,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
}

/// Sample mean and standard error of discounted returns over `n` rollouts,
/// rollout `i` drawing from `stream.at(i)`.
pub fn monte_carlo_policy_value(
    env: &Environment,
    policy: &Policy,
    n: usize,
    stream: &RngStream,
) -> Result<McEstimate> {
    if n == 0 {
        return Err(OpeError::param("monte carlo needs at least one trajectory"));
    }
    env.check_policy(policy)?;
    let discount = env.discount();
    let returns = (0..n)
        .into_par_iter()
        .map(|i| sample_trajectory(env, policy, &stream.at(i as u64)).map(|t| t.discounted_return(discount)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(McEstimate {
        mean: mean(&returns),
        std_error: sample_std(&returns) / (n as f64).sqrt(),
        n,
    })
}
