//! Softmax and epsilon-greedy construction, perturbation, and a candidate grid.
//!
//!     cargo run --example policies

use ope_bench::bench::reference::five_state_config;
use ope_bench::bench::{build_candidate_suite, suite_stream};
use ope_bench::mdp::{make_epsilon_greedy_policy, make_softmax_policy};
use ope_bench::oracle::exact_policy_value;

fn main() -> ope_bench::Result<()> {
    let q = vec![vec![2f64.ln(), 0.0], vec![1.0, 3.0]];
    let soft = make_softmax_policy(q.clone(), 1.0)?;
    let greedy = make_epsilon_greedy_policy(q, 0.5)?;
    for s in 0..2 {
        println!(
            "s={s}: softmax {:?}  eps-greedy {:?}",
            soft.action_probs(s),
            greedy.action_probs(s)
        );
    }
    let noisy = greedy.perturb(0.5)?;
    println!("eps-greedy(0.5) perturbed by 0.5: {:?}", noisy.kind());

    let config = five_state_config(500, vec![0]);
    let mdp = config.mdp.resolve(None)?;
    let behavior = config.behavior.build(&mdp)?;
    let suite = build_candidate_suite(&config, &mdp, &behavior, &suite_stream(&config))?;
    println!("\n{} candidates from the 6x4 grid (behavior appended):", suite.len());
    for c in &suite {
        println!("  {:<12} J = {:.4}", c.id, exact_policy_value(&mdp, &c.policy)?);
    }
    Ok(())
}
