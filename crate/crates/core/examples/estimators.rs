//! Every estimator on one dataset, next to the exact values.
//!
//!     cargo run --example estimators

use ope_bench::bench::reference::{reference_behavior, three_state_candidates, three_state_mdp};
use ope_bench::dataset::generate_logged_dataset;
use ope_bench::estimators::{run_all_estimators, EstimatorConfig, OracleModel};
use ope_bench::mdp::{Environment, NamedPolicy};
use ope_bench::oracle::exact_policy_value;
use ope_bench::rng::RngStream;

fn main() -> ope_bench::Result<()> {
    let mdp = three_state_mdp();
    let behavior = NamedPolicy::new("behavior", reference_behavior(&mdp, 0.5).build(&mdp)?);
    let env = Environment::from(mdp.clone());
    let ds = generate_logged_dataset(&env, &behavior, 2_000, &RngStream::new(1, "dataset"))?;
    let candidates = three_state_candidates();
    let oracle = OracleModel {
        mdp: &mdp,
        behavior: &behavior.policy,
    };

    for (name, config) in [
        ("empirical Q and weights", EstimatorConfig::default()),
        ("oracle Q and weights", EstimatorConfig::oracle()),
    ] {
        let table = run_all_estimators(&ds, &candidates, &config, Some(oracle))?;
        let labels = table.estimators();
        println!("{name}:");
        print!("{:<10} {:>8}", "policy", "true J");
        for l in &labels {
            print!(" {l:>8}");
        }
        println!();
        for c in &candidates {
            print!("{:<10} {:>8.4}", c.id, exact_policy_value(&mdp, &c.policy)?);
            for l in &labels {
                print!(" {:>8.4}", table.get(l, &c.id).unwrap_or(f64::NAN));
            }
            println!();
        }
        println!();
    }
    Ok(())
}
