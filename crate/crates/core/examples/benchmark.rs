//! A multi-seed experiment on the five-state reference MDP, with the
//! cross-metric comparison and a tidy CSV export.
//!
//!     cargo run --example benchmark

use ope_bench::bench::reference::five_state_config;
use ope_bench::bench::{emit_report, run_experiment};
use ope_bench::metrics::MetricValue;

fn fmt(v: Option<MetricValue>) -> String {
    v.map(|v| match v {
        MetricValue::Finite(x) => format!("{x:.3}"),
        other => other.to_string(),
    })
    .unwrap_or_else(|| "-".into())
}

fn main() -> ope_bench::Result<()> {
    let config = five_state_config(300, (0..10).collect());
    let report = run_experiment(&config)?;
    println!(
        "config {} ({})",
        report.provenance.config_name,
        &report.provenance.config_hash[..12]
    );
    println!(
        "baseline J(pi_b) = {:.4}, {} candidates",
        report.baseline,
        report.candidates.len()
    );
    println!(
        "{:<8} {:>10} {:>10} {:>10} {:>10}",
        "", "SR@5", "nMSE", "RankCorr", "nRegret@1"
    );
    for (label, a) in &report.estimators {
        println!(
            "{label:<8} {:>10} {:>10} {:>10} {:>10}",
            fmt(a.sharpe.get(&5).and_then(|s| s.mean)),
            fmt(a.n_mse.mean),
            fmt(a.rank_corr.mean),
            fmt(a.n_regret.get(&1).and_then(|s| s.mean))
        );
    }
    if let Some(cmp) = &report.comparison {
        println!("\nestimator ranking vs {}:", cmp.reference);
        for row in &cmp.rows {
            let rho = row
                .spearman_mean
                .map(|m| format!("{m:+.3}"))
                .unwrap_or_else(|| "-".into());
            println!(
                "  {:<10} rho {rho} ({} seeds excluded), best estimator differs on {}/{} seeds",
                row.metric, row.excluded, row.disagreements, row.compared
            );
        }
    }
    let csv = std::env::temp_dir().join("ope-bench-example.csv");
    emit_report(&report, "csv", &csv)?;
    println!("\ntidy CSV written to {}", csv.display());
    Ok(())
}
