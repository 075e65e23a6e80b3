//! Sample a logged dataset, save it as JSONL and read it back.
//!
//!     cargo run --example logged_dataset

use ope_bench::bench::reference::{reference_behavior, three_state_mdp};
use ope_bench::dataset::{dataset_checksum, generate_logged_dataset, load_dataset, save_dataset};
use ope_bench::mdp::{Environment, NamedPolicy};
use ope_bench::rng::RngStream;

fn main() -> ope_bench::Result<()> {
    let mdp = three_state_mdp();
    let behavior = NamedPolicy::new("behavior", reference_behavior(&mdp, 0.5).build(&mdp)?);
    let env = Environment::from(mdp);
    let ds = generate_logged_dataset(&env, &behavior, 1_000, &RngStream::new(42, "dataset"))?;
    println!("dataset {}: {} trajectories", ds.id(), ds.len());
    println!("mean discounted return: {:.5}", ds.mean_discounted_return());
    let first = &ds.trajectories[0];
    println!("first trajectory ({}):", first.seed_tag);
    for (step, p) in first.steps.iter().zip(&ds.behavior_probs[0]) {
        println!(
            "  s={} a={:?} r={:+.3} s'={} p={:.3}",
            step.state, step.action, step.reward, step.next_state, p
        );
    }

    let path = std::env::temp_dir().join("ope-bench-example.jsonl");
    save_dataset(&ds, &path)?;
    let back = load_dataset(&path)?;
    assert_eq!(back, ds);
    println!(
        "round trip through {} ok, checksum {}",
        path.display(),
        dataset_checksum(&back)?
    );
    Ok(())
}
