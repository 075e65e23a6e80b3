//! Continuous actions: kernel-smoothed importance weights and PDIS.
//!
//!     cargo run --example kernel_smoothing

use ope_bench::dataset::generate_logged_dataset;
use ope_bench::estimators::{estimate_pdis_smoothed, smoothed_importance_weight};
use ope_bench::mdp::{ContinuousActionMdp, Environment, NamedPolicy, Policy, RawContinuousMdp};
use ope_bench::oracle::monte_carlo_policy_value;
use ope_bench::rng::RngStream;

fn main() -> ope_bench::Result<()> {
    let w = smoothed_importance_weight(&Policy::gaussian(vec![0.0], vec![1.0])?, 0, 0.0, 0.5, 1.0)?;
    println!("w(mu=0, sigma=1, a=0, h=1, p=0.5) = {w:.5}");

    let mdp = ContinuousActionMdp::new(RawContinuousMdp {
        id: "two-state-continuous".into(),
        horizon: 4,
        discount: 0.9,
        initial_dist: vec![1.0, 0.0],
        action_bins: vec![-1.0, 1.0],
        transition: vec![
            vec![vec![0.9, 0.1], vec![0.2, 0.8]],
            vec![vec![0.7, 0.3], vec![0.1, 0.9]],
        ],
        reward_intercept: vec![0.0, 1.0],
        reward_slope: vec![0.5, -0.2],
        reward_noise_std: vec![0.1, 0.1],
    })?;
    let env = Environment::from(mdp);
    let behavior = NamedPolicy::new("behavior", Policy::gaussian(vec![0.0, 0.0], vec![1.0, 1.0])?);
    let target = Policy::gaussian(vec![0.5, -0.3], vec![0.5, 0.5])?;
    let truth = monte_carlo_policy_value(&env, &target, 200_000, &RngStream::new(0, "truth"))?;
    let ds = generate_logged_dataset(&env, &behavior, 5_000, &RngStream::new(1, "dataset"))?;
    println!("Monte Carlo J = {:.4} (se {:.4})", truth.mean, truth.std_error);
    for h in [0.05, 0.2, 0.5, 1.0] {
        let plain = estimate_pdis_smoothed(&ds, &target, h, false)?;
        let sn = estimate_pdis_smoothed(&ds, &target, h, true)?;
        println!("h={h:<5} PDIS {plain:.4}  SNPDIS {sn:.4}");
    }
    Ok(())
}
