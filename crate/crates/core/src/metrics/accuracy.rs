//! Conventional OPE metrics: nMSE, RankCorr, nRegret@k.

use std::collections::BTreeMap;

use crate::error::{OpeError, Result};
use crate::metrics::portfolio::select_top_k;
use crate::numeric::{pairwise_sum, spearman};

/// Truths and estimates aligned on the estimate map's key order.
fn aligned(truths: &BTreeMap<String, f64>, estimates: &BTreeMap<String, f64>) -> Result<(Vec<f64>, Vec<f64>)> {
    if estimates.is_empty() {
        return Err(OpeError::param("empty candidate set"));
    }
    let mut t = Vec::with_capacity(estimates.len());
    let mut e = Vec::with_capacity(estimates.len());
    for (id, est) in estimates {
        let truth = truths
            .get(id)
            .ok_or_else(|| OpeError::param(format!("no true value for policy `{id}`")))?;
        t.push(*truth);
        e.push(*est);
    }
    Ok((t, e))
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

fn min_of(v: &[f64]) -> f64 {
    v.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// `Σ(Ĵ−J)² / (|Π| · max{(max J)², (max J − min J)²})`.
pub fn n_mse(truths: &BTreeMap<String, f64>, estimates: &BTreeMap<String, f64>) -> Result<f64> {
    let (t, e) = aligned(truths, estimates)?;
    let (hi, lo) = (max_of(&t), min_of(&t));
    let denom = t.len() as f64 * (hi * hi).max((hi - lo) * (hi - lo));
    if denom == 0.0 {
        return Err(OpeError::DegenerateInstance(
            "nMSE scale is zero (all true values are 0)".into(),
        ));
    }
    let sq: Vec<f64> = t.iter().zip(&e).map(|(a, b)| (b - a) * (b - a)).collect();
    Ok(pairwise_sum(&sq) / denom)
}

/// Spearman correlation between true and estimated values.
pub fn rank_corr(truths: &BTreeMap<String, f64>, estimates: &BTreeMap<String, f64>) -> Result<f64> {
    let (t, e) = aligned(truths, estimates)?;
    if t.len() < 2 {
        return Err(OpeError::UndefinedCorrelation("fewer than two candidates".into()));
    }
    spearman(&t, &e).ok_or_else(|| OpeError::UndefinedCorrelation("constant input".into()))
}

/// `(max J − max_{Π_k} J) / max{max J, max J − min J}`.
pub fn n_regret_at_k(truths: &BTreeMap<String, f64>, estimates: &BTreeMap<String, f64>, k: usize) -> Result<f64> {
    let (t, _) = aligned(truths, estimates)?;
    let portfolio = select_top_k(estimates, k)?;
    let (hi, lo) = (max_of(&t), min_of(&t));
    let denom = hi.max(hi - lo);
    if denom == 0.0 {
        return Err(OpeError::DegenerateInstance("nRegret scale is zero".into()));
    }
    let best_in = portfolio
        .ids
        .iter()
        .map(|id| truths[id])
        .fold(f64::NEG_INFINITY, f64::max);
    Ok((hi - best_in) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn n_mse_examples() {
        let truths = map(&[("a", 2.0), ("b", 2.0)]);
        assert_eq!(n_mse(&truths, &truths).unwrap(), 0.0);
        assert_eq!(n_mse(&truths, &map(&[("a", 3.0), ("b", 1.0)])).unwrap(), 0.25);
        let zeros = map(&[("a", 0.0), ("b", 0.0)]);
        assert!(matches!(n_mse(&zeros, &truths), Err(OpeError::DegenerateInstance(_))));
    }

    #[test]
    fn n_mse_scale_invariant() {
        let t = map(&[("a", 1.0), ("b", -3.0), ("c", 2.5)]);
        let e = map(&[("a", 0.5), ("b", -1.0), ("c", 4.0)]);
        let c = 7.25;
        let scale = |m: &BTreeMap<String, f64>| m.iter().map(|(k, v)| (k.clone(), v * c)).collect::<BTreeMap<_, _>>();
        let a = n_mse(&t, &e).unwrap();
        let b = n_mse(&scale(&t), &scale(&e)).unwrap();
        assert!((a - b).abs() < 1e-14 * a.abs().max(1.0));
    }

    #[test]
    fn rank_corr_examples() {
        let t = map(&[("a", 1.0), ("b", 2.0), ("c", 3.0), ("d", 4.0)]);
        assert_eq!(rank_corr(&t, &t).unwrap(), 1.0);
        let rev = map(&[("a", 4.0), ("b", 3.0), ("c", 2.0), ("d", 1.0)]);
        assert_eq!(rank_corr(&t, &rev).unwrap(), -1.0);
        let swapped = map(&[("a", 2.0), ("b", 1.0), ("c", 4.0), ("d", 3.0)]);
        assert!((rank_corr(&t, &swapped).unwrap() - 0.6).abs() < 1e-12);
        let flat = map(&[("a", 1.0), ("b", 1.0), ("c", 1.0), ("d", 1.0)]);
        assert!(matches!(rank_corr(&t, &flat), Err(OpeError::UndefinedCorrelation(_))));
        let one = map(&[("a", 1.0)]);
        assert!(rank_corr(&one, &one).is_err());
    }

    #[test]
    fn n_regret_examples() {
        let t = map(&[("a", 5.0), ("b", 3.0)]);
        let wrong = map(&[("a", 0.0), ("b", 1.0)]);
        assert!((n_regret_at_k(&t, &wrong, 1).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(n_regret_at_k(&t, &wrong, 2).unwrap(), 0.0);
        assert_eq!(n_regret_at_k(&t, &t, 1).unwrap(), 0.0);
        assert!(n_regret_at_k(&t, &t, 3).is_err());
    }
}
