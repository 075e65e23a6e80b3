//! Tabular fitted-Q evaluation and the direct method.

use serde::{Deserialize, Serialize};

use crate::dataset::LoggedDataset;
use crate::error::{OpeError, Result};
use crate::estimators::{FitSource, Provenance};
use crate::mdp::{Policy, TabularMdp};
use crate::numeric::pairwise_sum;
use crate::oracle::{exact_q_function, QFunction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub iterations: usize,
    pub bellman_residual: f64,
    /// `(s, a)` pairs never observed in the data; modeled as zero-reward self loops.
    pub unvisited: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedQ {
    pub q: QFunction,
    pub diagnostics: FitDiagnostics,
    pub provenance: Provenance,
}

/// Maximum-likelihood tabular model of a logged dataset.
#[derive(Debug, Clone)]
pub(crate) struct EmpiricalModel {
    pub mdp: TabularMdp,
    pub unvisited: Vec<(usize, usize)>,
    /// Visit counts per step, flat `[T×S×A]`.
    pub step_counts: Vec<f64>,
}

pub(crate) fn discrete_actions(ds: &LoggedDataset) -> Result<usize> {
    ds.num_actions()
        .ok_or_else(|| OpeError::shape("this estimator requires a discrete action space"))
}

pub(crate) fn empirical_model(ds: &LoggedDataset) -> Result<EmpiricalModel> {
    if ds.is_empty() {
        return Err(OpeError::param("dataset is empty"));
    }
    let n_a = discrete_actions(ds)?;
    let n_s = ds.num_states;
    let horizon = ds.horizon;
    let mut trans_counts = vec![0.0; n_s * n_a * n_s];
    let mut reward_sums = vec![0.0; n_s * n_a];
    let mut sa_counts = vec![0.0; n_s * n_a];
    let mut step_counts = vec![0.0; horizon * n_s * n_a];
    let mut initial = vec![0.0; n_s];

    for traj in &ds.trajectories {
        initial[traj.initial_state()] += 1.0;
        for (t, step) in traj.steps.iter().enumerate() {
            let a = step.action.index().expect("discrete dataset");
            let sa = step.state * n_a + a;
            trans_counts[sa * n_s + step.next_state] += 1.0;
            reward_sums[sa] += step.reward;
            sa_counts[sa] += 1.0;
            step_counts[(t * n_s + step.state) * n_a + a] += 1.0;
        }
    }

    let n = ds.len() as f64;
    let mut unvisited = Vec::new();
    let mut transition = vec![vec![vec![0.0; n_s]; n_a]; n_s];
    let mut reward = vec![vec![0.0; n_a]; n_s];
    for s in 0..n_s {
        for a in 0..n_a {
            let sa = s * n_a + a;
            if sa_counts[sa] == 0.0 {
                unvisited.push((s, a));
                transition[s][a][s] = 1.0;
                continue;
            }
            reward[s][a] = reward_sums[sa] / sa_counts[sa];
            for s2 in 0..n_s {
                transition[s][a][s2] = trans_counts[sa * n_s + s2] / sa_counts[sa];
            }
        }
    }
    let initial: Vec<f64> = initial.into_iter().map(|c| c / n).collect();
    let mdp = TabularMdp::new(
        format!("empirical:{}", ds.id()),
        horizon,
        ds.discount,
        initial,
        transition,
        reward,
        None,
    )?;
    Ok(EmpiricalModel {
        mdp,
        unvisited,
        step_counts,
    })
}

/// Fits `Q̂(t, s, a)` for `policy`.
///
/// Empirical mode builds maximum-likelihood transition and reward tables from
/// counts and runs `T` steps of backward induction on that model. Oracle mode
/// returns the exact Q-function of the true MDP.
pub fn fit_fqe(ds: &LoggedDataset, policy: &Policy, source: FitSource<'_>) -> Result<FittedQ> {
    if ds.is_empty() {
        return Err(OpeError::param("dataset is empty"));
    }
    ds.check_policy(policy)?;
    match source {
        FitSource::Oracle(model) => {
            let q = exact_q_function(model.mdp, policy)?;
            Ok(FittedQ {
                diagnostics: FitDiagnostics {
                    iterations: q.horizon,
                    bellman_residual: 0.0,
                    unvisited: Vec::new(),
                },
                q,
                provenance: Provenance::Oracle,
            })
        }
        FitSource::Empirical => {
            let model = empirical_model(ds)?;
            let q = exact_q_function(&model.mdp, policy)?;
            Ok(FittedQ {
                diagnostics: FitDiagnostics {
                    iterations: q.horizon,
                    bellman_residual: q.bellman_residual(&model.mdp, policy),
                    unvisited: model.unvisited,
                },
                q,
                provenance: Provenance::Empirical,
            })
        }
    }
}

pub(crate) fn check_q_shape(ds: &LoggedDataset, q: &QFunction) -> Result<()> {
    let n_a = discrete_actions(ds)?;
    if q.horizon != ds.horizon || q.num_states != ds.num_states || q.num_actions != n_a {
        return Err(OpeError::shape(format!(
            "Q-function shape {}x{}x{} does not match dataset {}x{}x{}",
            q.horizon, q.num_states, q.num_actions, ds.horizon, ds.num_states, n_a
        )));
    }
    Ok(())
}

/// `(1/n) Σ_i Σ_a π(a|s0⁽ⁱ⁾) Q̂(0, s0⁽ⁱ⁾, a)`.
pub fn estimate_dm(ds: &LoggedDataset, policy: &Policy, q: &FittedQ) -> Result<f64> {
    ds.check_policy(policy)?;
    check_q_shape(ds, &q.q)?;
    let values: Vec<f64> = ds
        .trajectories
        .iter()
        .map(|t| q.q.state_value(policy, 0, t.initial_state()))
        .collect();
    Ok(pairwise_sum(&values) / ds.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::generate_logged_dataset;
    use crate::estimators::OracleModel;
    use crate::mdp::{Environment, NamedPolicy};
    use crate::rng::RngStream;

    fn det_mdp() -> TabularMdp {
        // 2 states, 2 actions, deterministic dynamics and rewards.
        TabularMdp::new(
            "det",
            4,
            0.9,
            vec![1.0, 0.0],
            vec![
                vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            ],
            vec![vec![1.0, 0.0], vec![0.5, 2.0]],
            None,
        )
        .unwrap()
    }

    fn data(mdp: &TabularMdp, behavior: Policy, n: usize) -> LoggedDataset {
        let env = Environment::from(mdp.clone());
        generate_logged_dataset(&env, &NamedPolicy::new("b", behavior), n, &RngStream::new(9, "fqe")).unwrap()
    }

    #[test]
    fn oracle_mode_delegates() {
        let m = det_mdp();
        let b = Policy::uniform(2, 2).unwrap();
        let ds = data(&m, b.clone(), 10);
        let pi = Policy::deterministic(&[1, 1], 2).unwrap();
        let fit = fit_fqe(&ds, &pi, FitSource::Oracle(OracleModel { mdp: &m, behavior: &b })).unwrap();
        assert_eq!(fit.q, exact_q_function(&m, &pi).unwrap());
        assert_eq!(fit.provenance, Provenance::Oracle);
    }

    #[test]
    fn empirical_model_is_exact_under_determinism_and_coverage() {
        let m = det_mdp();
        let b = Policy::uniform(2, 2).unwrap();
        let ds = data(&m, b, 500);
        let pi = Policy::tabular(vec![vec![0.3, 0.7], vec![0.9, 0.1]]).unwrap();
        let fit = fit_fqe(&ds, &pi, FitSource::Empirical).unwrap();
        assert!(fit.diagnostics.unvisited.is_empty());
        let exact = exact_q_function(&m, &pi).unwrap();
        for (a, b) in fit.q.values.iter().zip(&exact.values) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn unvisited_pairs_are_flagged() {
        let m = det_mdp();
        let b = Policy::deterministic(&[0, 0], 2).unwrap();
        let ds = data(&m, b, 5);
        let fit = fit_fqe(&ds, &Policy::uniform(2, 2).unwrap(), FitSource::Empirical).unwrap();
        // Action 0 keeps the chain in state 0, so state 1 is never reached.
        assert_eq!(fit.diagnostics.unvisited, vec![(0, 1), (1, 0), (1, 1)]);
    }

    #[test]
    fn dm_with_constant_q_is_that_constant() {
        let m = det_mdp();
        let ds = data(&m, Policy::uniform(2, 2).unwrap(), 7);
        let pi = Policy::tabular(vec![vec![0.2, 0.8], vec![0.5, 0.5]]).unwrap();
        let fit = FittedQ {
            q: QFunction::constant(4, 2, 2, 3.25),
            diagnostics: FitDiagnostics {
                iterations: 0,
                bellman_residual: 0.0,
                unvisited: vec![],
            },
            provenance: Provenance::Empirical,
        };
        assert!((estimate_dm(&ds, &pi, &fit).unwrap() - 3.25).abs() < 1e-15);
    }
}
