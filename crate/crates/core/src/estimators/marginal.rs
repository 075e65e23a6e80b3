//! State-action marginal importance weights and the MIS / MDR estimators.

use serde::{Deserialize, Serialize};

use crate::dataset::LoggedDataset;
use crate::error::Result;
use crate::estimators::fqe::{check_q_shape, discrete_actions, empirical_model, FittedQ};
use crate::estimators::importance::{column, discounted_total};
use crate::estimators::{FitSource, Provenance, TimeMode};
use crate::mdp::Policy;
use crate::numeric::pairwise_sum;
use crate::oracle::{exact_occupancy, OccupancyMeasure};

/// `ρ(s, a) = d^π(s, a) / d^{π_b}(s, a)` as a table, either time-averaged
/// `[S×A]` or per step `[T×S×A]`. Pairs off the behavior support get `0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalWeights {
    pub mode: TimeMode,
    pub provenance: Provenance,
    pub horizon: usize,
    pub num_states: usize,
    pub num_actions: usize,
    pub values: Vec<f64>,
    /// `(t, s, a)` with `d^π > 0` but `d^{π_b} = 0`; `t` is `None` in averaged mode.
    pub off_support: Vec<(Option<usize>, usize, usize)>,
}

impl MarginalWeights {
    pub fn get(&self, t: usize, s: usize, a: usize) -> f64 {
        match self.mode {
            TimeMode::Averaged => self.values[s * self.num_actions + a],
            TimeMode::PerStep => self.values[(t * self.num_states + s) * self.num_actions + a],
        }
    }
}

/// Source of the two visitation tables the ratio is taken over.
struct Visitation {
    horizon: usize,
    num_states: usize,
    num_actions: usize,
    target: Vec<f64>,
    behavior: Vec<f64>,
}

impl Visitation {
    fn at(&self, table: &[f64], t: usize, s: usize, a: usize) -> f64 {
        table[(t * self.num_states + s) * self.num_actions + a]
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

fn flat(o: OccupancyMeasure) -> Vec<f64> {
    o.per_step
}

pub fn fit_marginal_weights(
    ds: &LoggedDataset,
    policy: &Policy,
    source: FitSource<'_>,
    mode: TimeMode,
) -> Result<MarginalWeights> {
    let n_a = discrete_actions(ds)?;
    ds.check_policy(policy)?;
    let (vis, provenance) = match source {
        FitSource::Oracle(model) => (
            Visitation {
                horizon: model.mdp.horizon(),
                num_states: model.mdp.num_states(),
                num_actions: n_a,
                target: flat(exact_occupancy(model.mdp, policy)?),
                behavior: flat(exact_occupancy(model.mdp, model.behavior)?),
            },
            Provenance::Oracle,
        ),
        FitSource::Empirical => {
            let model = empirical_model(ds)?;
            let n = ds.len() as f64;
            (
                Visitation {
                    horizon: ds.horizon,
                    num_states: ds.num_states,
                    num_actions: n_a,
                    target: flat(exact_occupancy(&model.mdp, policy)?),
                    behavior: model.step_counts.iter().map(|c| c / n).collect(),
                },
                Provenance::Empirical,
            )
        }
    };

    let (horizon, n_s) = (vis.horizon, vis.num_states);
    let mut off_support = Vec::new();
    let values = match mode {
        TimeMode::PerStep => {
            let mut v = Vec::with_capacity(horizon * n_s * n_a);
            for t in 0..horizon {
                for s in 0..n_s {
                    for a in 0..n_a {
                        let (num, den) = (vis.at(&vis.target, t, s, a), vis.at(&vis.behavior, t, s, a));
                        if den == 0.0 && num > 0.0 {
                            off_support.push((Some(t), s, a));
                        }
                        v.push(ratio(num, den));
                    }
                }
            }
            v
        }
        TimeMode::Averaged => {
            let mut v = Vec::with_capacity(n_s * n_a);
            for s in 0..n_s {
                for a in 0..n_a {
                    let num: f64 = (0..horizon).map(|t| vis.at(&vis.target, t, s, a)).sum::<f64>() / horizon as f64;
                    let den: f64 = (0..horizon).map(|t| vis.at(&vis.behavior, t, s, a)).sum::<f64>() / horizon as f64;
                    if den == 0.0 && num > 0.0 {
                        off_support.push((None, s, a));
                    }
                    v.push(ratio(num, den));
                }
            }
            v
        }
    };
    if !off_support.is_empty() {
        log::debug!(
            "{} state-action entries outside the behavior support",
            off_support.len()
        );
    }
    Ok(MarginalWeights {
        mode,
        provenance,
        horizon,
        num_states: n_s,
        num_actions: n_a,
        values,
        off_support,
    })
}

fn rho_column(ds: &LoggedDataset, w: &MarginalWeights, t: usize) -> Vec<f64> {
    ds.trajectories
        .iter()
        .map(|traj| {
            let s = &traj.steps[t];
            w.get(t, s.state, s.action.index().expect("discrete"))
        })
        .collect()
}

fn normalizer(col: &[f64], t: usize) -> Result<f64> {
    let z = pairwise_sum(col);
    if z == 0.0 {
        return Err(crate::error::OpeError::DegenerateNormalization { t });
    }
    Ok(z)
}

/// (SN)MIS: rewards reweighted by `ρ(s_t, a_t)`, self-normalized per step in
/// the SN variant.
pub fn estimate_mis(ds: &LoggedDataset, policy: &Policy, w: &MarginalWeights, self_normalize: bool) -> Result<f64> {
    discrete_actions(ds)?;
    ds.check_policy(policy)?;
    let n = ds.len();
    discounted_total(ds.discount, ds.horizon, |t| {
        let rho = rho_column(ds, w, t);
        let num = column(n, |i| rho[i] * ds.trajectories[i].steps[t].reward);
        if self_normalize {
            Ok(num / normalizer(&rho, t)?)
        } else {
            Ok(num / n as f64)
        }
    })
}

/// (SN)MDR: the direct-method initial-state term plus a `ρ`-weighted
/// TD-residual correction `r_t + γ Σ_a π(a|s_{t+1}) Q̂(t+1, s_{t+1}, a) - Q̂(t, s_t, a_t)`,
/// with the bootstrap term taken as zero at the final step.
pub fn estimate_mdr(
    ds: &LoggedDataset,
    policy: &Policy,
    w: &MarginalWeights,
    q: &FittedQ,
    self_normalize: bool,
) -> Result<f64> {
    ds.check_policy(policy)?;
    check_q_shape(ds, &q.q)?;
    let n = ds.len();
    let gamma = ds.discount;
    let dm = column(n, |i| q.q.state_value(policy, 0, ds.trajectories[i].initial_state())) / n as f64;
    let residual = |i: usize, t: usize| {
        let s = &ds.trajectories[i].steps[t];
        let a = s.action.index().expect("discrete");
        s.reward + gamma * q.q.state_value(policy, t + 1, s.next_state) - q.q.get(t, s.state, a)
    };
    let correction = discounted_total(gamma, ds.horizon, |t| {
        let rho = rho_column(ds, w, t);
        let num = column(n, |i| rho[i] * residual(i, t));
        if self_normalize {
            Ok(num / normalizer(&rho, t)?)
        } else {
            Ok(num / n as f64)
        }
    })?;
    Ok(dm + correction)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::generate_logged_dataset;
    use crate::estimators::OracleModel;
    use crate::mdp::{Environment, NamedPolicy, TabularMdp};
    use crate::rng::RngStream;

    /// s0 -> s1 under action 1, s1 -> s0 under any action; s0 stays under action 0.
    fn chain() -> TabularMdp {
        TabularMdp::new(
            "chain",
            2,
            1.0,
            vec![1.0, 0.0],
            vec![
                vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                vec![vec![1.0, 0.0], vec![1.0, 0.0]],
            ],
            vec![vec![0.0, 0.0], vec![1.0, 1.0]],
            None,
        )
        .unwrap()
    }

    #[test]
    fn on_policy_oracle_weights_are_one_on_support() {
        let m = chain();
        let b = Policy::tabular(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let ds = generate_logged_dataset(
            &Environment::from(m.clone()),
            &NamedPolicy::new("b", b.clone()),
            20,
            &RngStream::new(0, "mis"),
        )
        .unwrap();
        let oracle = FitSource::Oracle(OracleModel { mdp: &m, behavior: &b });
        for mode in [TimeMode::Averaged, TimeMode::PerStep] {
            let w = fit_marginal_weights(&ds, &b, oracle, mode).unwrap();
            let d = exact_occupancy(&m, &b).unwrap();
            for t in 0..2 {
                for s in 0..2 {
                    for a in 0..2 {
                        let on_support = match mode {
                            TimeMode::Averaged => d.averaged(s, a) > 0.0,
                            TimeMode::PerStep => d.get(t, s, a) > 0.0,
                        };
                        let expected = if on_support { 1.0 } else { 0.0 };
                        assert_eq!(w.get(t, s, a), expected);
                    }
                }
            }
        }
    }

    #[test]
    fn twice_as_many_visits_gives_ratio_two() {
        // Averaged over T=2: π_b reaches s1 at t=1 with prob 0.25, π with prob 0.5.
        let m = chain();
        let b = Policy::tabular(vec![vec![0.75, 0.25], vec![0.5, 0.5]]).unwrap();
        let pi = Policy::tabular(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let ds = generate_logged_dataset(
            &Environment::from(m.clone()),
            &NamedPolicy::new("b", b.clone()),
            10,
            &RngStream::new(0, "mis"),
        )
        .unwrap();
        let w = fit_marginal_weights(
            &ds,
            &pi,
            FitSource::Oracle(OracleModel { mdp: &m, behavior: &b }),
            TimeMode::Averaged,
        )
        .unwrap();
        assert!((w.get(0, 1, 0) - 2.0).abs() < 1e-12);
        assert!((w.get(0, 1, 1) - 2.0).abs() < 1e-12);
        // Invariant: Σ d^{π_b} ρ = 1.
        let db = exact_occupancy(&m, &b).unwrap();
        let total: f64 = (0..2)
            .flat_map(|s| (0..2).map(move |a| (s, a)))
            .map(|(s, a)| db.averaged(s, a) * w.get(0, s, a))
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unreachable_under_behavior_is_flagged() {
        let m = chain();
        let b = Policy::deterministic(&[0, 0], 2).unwrap();
        let pi = Policy::uniform(2, 2).unwrap();
        let ds = generate_logged_dataset(
            &Environment::from(m.clone()),
            &NamedPolicy::new("b", b.clone()),
            5,
            &RngStream::new(0, "mis"),
        )
        .unwrap();
        for source in [
            FitSource::Empirical,
            FitSource::Oracle(OracleModel { mdp: &m, behavior: &b }),
        ] {
            let w = fit_marginal_weights(&ds, &pi, source, TimeMode::Averaged).unwrap();
            assert!(w.off_support.contains(&(None, 0, 1)));
            assert_eq!(w.get(0, 0, 1), 0.0);
        }
    }
}
