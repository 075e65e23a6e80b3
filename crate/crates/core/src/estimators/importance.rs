//! Per-decision importance sampling and doubly robust estimators.

use crate::dataset::LoggedDataset;
use crate::error::{OpeError, Result};
use crate::estimators::fqe::{check_q_shape, discrete_actions, FittedQ};
use crate::estimators::kernel::smoothed_importance_weight;
use crate::mdp::{Action, Policy};
use crate::numeric::pairwise_sum;

/// Cumulative per-decision weights `w_{0:t} = Π_{t' ≤ t} π(a_t'|s_t') / π_b(a_t'|s_t')`,
/// one row per trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceWeights {
    horizon: usize,
    cumulative: Vec<f64>,
}

impl ImportanceWeights {
    /// Exact weights for a discrete-action dataset.
    pub fn discrete(ds: &LoggedDataset, policy: &Policy) -> Result<Self> {
        discrete_actions(ds)?;
        ds.check_policy(policy)?;
        Self::build(ds, |t_idx, step_idx| {
            let step = &ds.trajectories[t_idx].steps[step_idx];
            let a = step.action.index().expect("discrete dataset");
            Ok(policy.prob(step.state, a) / ds.behavior_probs[t_idx][step_idx])
        })
    }

    /// Kernel-smoothed weights for a continuous-action dataset.
    pub fn smoothed(ds: &LoggedDataset, policy: &Policy, bandwidth: f64) -> Result<Self> {
        if ds.num_actions().is_some() {
            return Err(OpeError::shape(
                "kernel smoothing applies to continuous-action datasets",
            ));
        }
        ds.check_policy(policy)?;
        Self::build(ds, |i, t| {
            let step = &ds.trajectories[i].steps[t];
            let Action::Continuous(a) = step.action else {
                return Err(OpeError::shape("discrete action in a continuous dataset"));
            };
            smoothed_importance_weight(policy, step.state, a, ds.behavior_probs[i][t], bandwidth)
        })
    }

    fn build(ds: &LoggedDataset, ratio: impl Fn(usize, usize) -> Result<f64>) -> Result<Self> {
        let horizon = ds.horizon;
        let mut cumulative = Vec::with_capacity(ds.len() * horizon);
        for i in 0..ds.len() {
            let mut w = 1.0;
            for t in 0..horizon {
                w *= ratio(i, t)?;
                cumulative.push(w);
            }
        }
        Ok(Self { horizon, cumulative })
    }

    pub fn num_trajectories(&self) -> usize {
        self.cumulative.len() / self.horizon
    }

    /// `w_{0:t}` of trajectory `i`; `t = -1` (passed as `None`) is the empty product.
    pub fn get(&self, i: usize, t: Option<usize>) -> f64 {
        match t {
            Some(t) => self.cumulative[i * self.horizon + t],
            None => 1.0,
        }
    }

    fn prev(t: usize) -> Option<usize> {
        t.checked_sub(1)
    }

    /// Across-trajectory sum of `w_{0:t}`; errors when it is zero.
    pub fn normalizer(&self, t: Option<usize>) -> Result<f64> {
        let col: Vec<f64> = (0..self.num_trajectories()).map(|i| self.get(i, t)).collect();
        let total = pairwise_sum(&col);
        if total == 0.0 {
            return Err(OpeError::DegenerateNormalization { t: t.unwrap_or(0) });
        }
        Ok(total)
    }

    /// Self-normalized weights `w_{0:t}^{(i)} / Σ_{i'} w_{0:t}^{(i')}` at step `t`.
    pub fn normalized_column(&self, t: usize) -> Result<Vec<f64>> {
        let z = self.normalizer(Some(t))?;
        Ok((0..self.num_trajectories()).map(|i| self.get(i, Some(t)) / z).collect())
    }
}

pub(crate) fn column(n: usize, f: impl Fn(usize) -> f64) -> f64 {
    let v: Vec<f64> = (0..n).map(f).collect();
    pairwise_sum(&v)
}

pub(crate) fn discounted_total(
    discount: f64,
    horizon: usize,
    mut per_step: impl FnMut(usize) -> Result<f64>,
) -> Result<f64> {
    let mut total = 0.0;
    let mut g = 1.0;
    for t in 0..horizon {
        total += g * per_step(t)?;
        g *= discount;
    }
    Ok(total)
}

fn pdis_from_weights(ds: &LoggedDataset, w: &ImportanceWeights, self_normalize: bool) -> Result<f64> {
    let n = ds.len();
    let reward = |i: usize, t: usize| ds.trajectories[i].steps[t].reward;
    discounted_total(ds.discount, ds.horizon, |t| {
        let num = column(n, |i| w.get(i, Some(t)) * reward(i, t));
        if self_normalize {
            Ok(num / w.normalizer(Some(t))?)
        } else {
            Ok(num / n as f64)
        }
    })
}

/// (SN)PDIS on a discrete-action dataset.
pub fn estimate_pdis(ds: &LoggedDataset, policy: &Policy, self_normalize: bool) -> Result<f64> {
    let w = ImportanceWeights::discrete(ds, policy)?;
    pdis_from_weights(ds, &w, self_normalize)
}

/// (SN)PDIS on a continuous-action dataset with kernel-smoothed weights.
pub fn estimate_pdis_smoothed(
    ds: &LoggedDataset,
    policy: &Policy,
    bandwidth: f64,
    self_normalize: bool,
) -> Result<f64> {
    let w = ImportanceWeights::smoothed(ds, policy, bandwidth)?;
    pdis_from_weights(ds, &w, self_normalize)
}

/// (SN)DR: importance weighting applied to the residual around `Q̂`, with
/// `w_{0:-1} = 1`. The SN variant normalizes `w_{0:t}` and `w_{0:t-1}`
/// separately at every step.
pub fn estimate_dr(ds: &LoggedDataset, policy: &Policy, q: &FittedQ, self_normalize: bool) -> Result<f64> {
    let w = ImportanceWeights::discrete(ds, policy)?;
    check_q_shape(ds, &q.q)?;
    let n = ds.len();
    let step = |i: usize, t: usize| &ds.trajectories[i].steps[t];
    let residual = |i: usize, t: usize| {
        let s = step(i, t);
        s.reward - q.q.get(t, s.state, s.action.index().expect("discrete"))
    };
    let baseline = |i: usize, t: usize| q.q.state_value(policy, t, step(i, t).state);

    discounted_total(ds.discount, ds.horizon, |t| {
        let prev = ImportanceWeights::prev(t);
        if self_normalize {
            let a = column(n, |i| w.get(i, Some(t)) * residual(i, t)) / w.normalizer(Some(t))?;
            let b = column(n, |i| w.get(i, prev) * baseline(i, t)) / w.normalizer(prev)?;
            Ok(a + b)
        } else {
            let terms = column(n, |i| {
                w.get(i, Some(t)) * residual(i, t) + w.get(i, prev) * baseline(i, t)
            });
            Ok(terms / n as f64)
        }
    })
}

/// Per-trajectory contributions of plain DR; their mean is the DR estimate.
pub fn dr_per_trajectory(ds: &LoggedDataset, policy: &Policy, q: &FittedQ) -> Result<Vec<f64>> {
    let w = ImportanceWeights::discrete(ds, policy)?;
    check_q_shape(ds, &q.q)?;
    Ok((0..ds.len())
        .map(|i| {
            let mut total = 0.0;
            let mut g = 1.0;
            for (t, s) in ds.trajectories[i].steps.iter().enumerate() {
                let a = s.action.index().expect("discrete");
                let prev = ImportanceWeights::prev(t);
                total += g
                    * (w.get(i, Some(t)) * (s.reward - q.q.get(t, s.state, a))
                        + w.get(i, prev) * q.q.state_value(policy, t, s.state));
                g *= ds.discount;
            }
            total
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::ActionSpace;
    use crate::estimators::fqe::FitDiagnostics;
    use crate::estimators::Provenance;
    use crate::mdp::{Step, Trajectory};
    use crate::oracle::QFunction;

    /// One trajectory, T=2, γ=0.5, rewards (1, 1), behavior prob 0.25 on an
    /// action the evaluation policy takes with prob 0.5.
    fn hand_dataset() -> (LoggedDataset, Policy) {
        let step = |s, next| Step {
            state: s,
            action: Action::Discrete(0),
            reward: 1.0,
            next_state: next,
        };
        let ds = LoggedDataset {
            mdp_id: "hand".into(),
            behavior_policy_id: "b".into(),
            seed: 0,
            horizon: 2,
            discount: 0.5,
            num_states: 1,
            action_space: ActionSpace::Discrete { num_actions: 2 },
            trajectories: vec![Trajectory {
                steps: vec![step(0, 0), step(0, 0)],
                seed_tag: "hand".into(),
            }],
            behavior_probs: vec![vec![0.25, 0.25]],
        };
        (ds, Policy::uniform(1, 2).unwrap())
    }

    #[test]
    fn pdis_hand_example() {
        let (ds, pi) = hand_dataset();
        let w = ImportanceWeights::discrete(&ds, &pi).unwrap();
        assert_eq!(w.get(0, Some(0)), 2.0);
        assert_eq!(w.get(0, Some(1)), 4.0);
        assert_eq!(estimate_pdis(&ds, &pi, false).unwrap(), 4.0);
        // Single trajectory: normalized weights are 1 at every step.
        assert_eq!(estimate_pdis(&ds, &pi, true).unwrap(), 1.5);
    }

    #[test]
    fn zero_q_dr_is_pdis_bitwise() {
        let (ds, pi) = hand_dataset();
        let zero = FittedQ {
            q: QFunction::zeros(2, 1, 2),
            diagnostics: FitDiagnostics {
                iterations: 0,
                bellman_residual: 0.0,
                unvisited: vec![],
            },
            provenance: Provenance::Empirical,
        };
        for sn in [false, true] {
            assert_eq!(
                estimate_dr(&ds, &pi, &zero, sn).unwrap().to_bits(),
                estimate_pdis(&ds, &pi, sn).unwrap().to_bits()
            );
        }
    }

    #[test]
    fn all_zero_weights_is_degenerate() {
        let (ds, _) = hand_dataset();
        let never = Policy::deterministic(&[1], 2).unwrap();
        assert!(matches!(
            estimate_pdis(&ds, &never, true),
            Err(OpeError::DegenerateNormalization { t: 0 })
        ));
        assert_eq!(estimate_pdis(&ds, &never, false).unwrap(), 0.0);
    }
}
