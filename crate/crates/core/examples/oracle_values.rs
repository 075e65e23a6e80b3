//! Exact policy values, Q-functions and occupancies, cross-checked by Monte Carlo.
//!
//!     cargo run --example oracle_values

use ope_bench::bench::reference::{three_state_candidates, three_state_mdp};
use ope_bench::mdp::Environment;
use ope_bench::oracle::{exact_occupancy, exact_policy_value, exact_q_function, monte_carlo_policy_value};
use ope_bench::rng::RngStream;

fn main() -> ope_bench::Result<()> {
    let mdp = three_state_mdp();
    let env = Environment::from(mdp.clone());
    println!(
        "{}: {} states, {} actions, T={}, gamma={}",
        mdp.id(),
        mdp.num_states(),
        mdp.num_actions(),
        mdp.horizon(),
        mdp.discount()
    );
    println!("{:<10} {:>10} {:>10} {:>8}", "policy", "exact J", "MC mean", "MC se");
    for (i, c) in three_state_candidates().iter().enumerate() {
        let exact = exact_policy_value(&mdp, &c.policy)?;
        let mc = monte_carlo_policy_value(&env, &c.policy, 20_000, &RngStream::new(i as u64, "mc"))?;
        println!("{:<10} {exact:>10.5} {:>10.5} {:>8.5}", c.id, mc.mean, mc.std_error);
    }

    let pi = &three_state_candidates()[3].policy;
    let q = exact_q_function(&mdp, pi)?;
    println!("\nQ(t=0, s, a) for `seek-2`:");
    for s in 0..mdp.num_states() {
        println!("  s={s}: {:.4} {:.4}", q.get(0, s, 0), q.get(0, s, 1));
    }
    let d = exact_occupancy(&mdp, pi)?;
    println!("state marginals of `seek-2` by step:");
    for t in 0..mdp.horizon() {
        let row: Vec<String> = (0..mdp.num_states())
            .map(|s| format!("{:.3}", d.state_marginal(t, s)))
            .collect();
        println!("  t={t}: [{}]", row.join(", "));
    }
    Ok(())
}
