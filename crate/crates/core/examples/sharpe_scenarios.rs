//! Where SharpeRatio@k and the conventional metrics disagree.
//!
//!     cargo run --example sharpe_scenarios

use ope_bench::metrics::scenarios::{
    conservative_vs_random, under_vs_over, CONSERVATIVE_VS_RANDOM_BASELINES, CONSERVATIVE_VS_RANDOM_K,
};
use ope_bench::metrics::{n_mse, n_regret_at_k, portfolio_reference_stats, rank_corr, sharpe_ratio_at_k};
use ope_bench::numeric::{mean, sample_std};

fn main() -> ope_bench::Result<()> {
    let s = under_vs_over();
    println!("under- vs over-estimation (baseline {}):", s.baseline);
    for (name, est) in &s.estimates {
        let sr = sharpe_ratio_at_k(&s.truths, est, 3, s.baseline)?;
        println!(
            "  {name:<6} nMSE {:.4}  RankCorr {:.4}  nRegret@1 {:.3}  SharpeRatio@3 {} = {:.3}/{:.3}",
            n_mse(&s.truths, est)?,
            rank_corr(&s.truths, est)?,
            n_regret_at_k(&s.truths, est, 1)?,
            sr.value,
            sr.numerator,
            sr.denominator
        );
        let stats = portfolio_reference_stats(&s.truths, est, 5, s.baseline)?;
        let best: Vec<String> = stats.rows.iter().map(|r| format!("{:.1}", r.best)).collect();
        let std: Vec<String> = stats.rows.iter().map(|r| format!("{:.2}", r.std)).collect();
        println!(
            "         best@1..5 [{}]  std@1..5 [{}]",
            best.join(", "),
            std.join(", ")
        );
    }

    let k = CONSERVATIVE_VS_RANDOM_K;
    println!("\nconservative vs random, SharpeRatio@{k} over 10 seeds:");
    for baseline in CONSERVATIVE_VS_RANDOM_BASELINES {
        let mut diffs = Vec::new();
        for seed in 0..10 {
            let s = conservative_vs_random(baseline, seed);
            let c = sharpe_ratio_at_k(&s.truths, &s.estimates["conservative"], k, baseline)?;
            let r = sharpe_ratio_at_k(&s.truths, &s.estimates["random"], k, baseline)?;
            diffs.push(c.value.as_f64() - r.value.as_f64());
        }
        println!(
            "  J(pi_b) = {baseline:>4}: conservative - random = {:+.3} (std {:.3})",
            mean(&diffs),
            sample_std(&diffs)
        );
    }
    Ok(())
}
