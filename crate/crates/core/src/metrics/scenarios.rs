//! Synthetic estimate fixtures where SharpeRatio@k and the conventional
//! metrics disagree.

use std::collections::BTreeMap;

use rand::Rng;

use crate::rng::RngStream;

pub const SCENARIO_BEHAVIOR_ID: &str = "behavior";

/// Truths, a baseline, and one estimate map per synthetic estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioInstance {
    pub truths: BTreeMap<String, f64>,
    pub baseline: f64,
    pub baseline_id: String,
    pub estimates: BTreeMap<String, BTreeMap<String, f64>>,
}

fn pid(i: usize) -> String {
    format!("p{i:02}")
}

/// Under- versus over-estimation. Ten policies with values 1..=10; `p01` is
/// the behavior policy. `under` misplaces the value-8 policy at 1.5, `over`
/// misplaces the value-3 policy at 9.5 (the mirror image around 5.5), so the
/// two share MSE, rank correlation and Regret@1 while their top-3 portfolios
/// differ in spread.
pub fn under_vs_over() -> ScenarioInstance {
    let truths: BTreeMap<String, f64> = (1..=10).map(|i| (pid(i), i as f64)).collect();
    let mut under = truths.clone();
    under.insert(pid(8), 1.5);
    let mut over = truths.clone();
    over.insert(pid(3), 9.5);
    ScenarioInstance {
        baseline: 1.0,
        baseline_id: pid(1),
        estimates: [("under".to_string(), under), ("over".to_string(), over)].into(),
        truths,
    }
}

pub const CONSERVATIVE_VS_RANDOM_BASELINES: [f64; 3] = [5.0, 10.0, 15.0];
pub const CONSERVATIVE_VS_RANDOM_K: usize = 3;

/// Conservative versus random-like estimation. Ten policies with values
/// 1, 3, ..., 19 plus a behavior policy whose value is `baseline`. The
/// conservative estimator favors mid-valued policies (`J - (J - 10)^2 / 2`);
/// the random one scores every policy uniformly at random, drawn from `seed`.
pub fn conservative_vs_random(baseline: f64, seed: u64) -> ScenarioInstance {
    let mut truths: BTreeMap<String, f64> = (1..=10).map(|i| (pid(i), (2 * i - 1) as f64)).collect();
    truths.insert(SCENARIO_BEHAVIOR_ID.to_string(), baseline);
    let conservative = truths
        .iter()
        .map(|(id, j)| (id.clone(), j - 0.5 * (j - 10.0) * (j - 10.0)))
        .collect();
    let mut rng = RngStream::new(seed, "scenario-random-estimator").rng();
    let random = truths.keys().map(|id| (id.clone(), rng.random::<f64>())).collect();
    ScenarioInstance {
        truths,
        baseline,
        baseline_id: SCENARIO_BEHAVIOR_ID.to_string(),
        estimates: [
            ("conservative".to_string(), conservative),
            ("random".to_string(), random),
        ]
        .into(),
    }
}
