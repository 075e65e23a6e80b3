use std::collections::{BTreeMap, BTreeSet};

use ope_bench::metrics::{
    n_mse, n_regret_at_k, portfolio_reference_stats, rank_corr, select_top_k, sharpe_ratio_at_k, MetricValue,
};
use proptest::prelude::*;

fn ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("p{i}")).collect()
}

fn to_map(ids: &[String], values: &[f64]) -> BTreeMap<String, f64> {
    ids.iter().cloned().zip(values.iter().copied()).collect()
}

/// `a` precedes `b` in the top-k order: larger estimate, then smaller id.
fn precedes(est: &BTreeMap<String, f64>, a: &str, b: &str) -> bool {
    est[a] > est[b] || (est[a] == est[b] && a < b)
}

/// Every k-subset that no outside policy should displace, found by scanning
/// all C(n, k) subsets.
fn brute_force_top_k(est: &BTreeMap<String, f64>, k: usize) -> Vec<BTreeSet<String>> {
    let names: Vec<&String> = est.keys().collect();
    let n = names.len();
    let mut found = Vec::new();
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let inside: Vec<&String> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| names[i]).collect();
        let outside: Vec<&String> = (0..n).filter(|i| mask & (1 << i) == 0).map(|i| names[i]).collect();
        if inside.iter().all(|a| outside.iter().all(|b| precedes(est, a, b))) {
            found.push(inside.into_iter().cloned().collect());
        }
    }
    found
}

fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..=8).prop_flat_map(|n| {
        (
            prop::collection::vec((-20i32..20).prop_map(|v| v as f64 / 2.0), n),
            // Few distinct estimate values so ties are common.
            prop::collection::vec((0i32..5).prop_map(f64::from), n),
        )
    })
}

proptest! {
    #[test]
    fn top_k_matches_brute_force((_, est) in instance()) {
        let ids = ids(est.len());
        let est = to_map(&ids, &est);
        for k in 1..=est.len() {
            let p = select_top_k(&est, k).unwrap();
            let subsets = brute_force_top_k(&est, k);
            prop_assert_eq!(subsets.len(), 1);
            let chosen: BTreeSet<String> = p.ids.iter().cloned().collect();
            prop_assert_eq!(&chosen, &subsets[0]);
            for w in p.ids.windows(2) {
                prop_assert!(precedes(&est, &w[0], &w[1]));
            }
        }
    }

    #[test]
    fn monotone_transform_invariance((truth, est) in instance()) {
        let ids = ids(truth.len());
        let t = to_map(&ids, &truth);
        let e = to_map(&ids, &est);
        let f = |x: f64| x * x * x + 3.0 * x + (x / 4.0).exp();
        let fe: BTreeMap<String, f64> = e.iter().map(|(k, v)| (k.clone(), f(*v))).collect();
        for k in 1..=ids.len() {
            prop_assert_eq!(select_top_k(&e, k).unwrap().ids, select_top_k(&fe, k).unwrap().ids);
            let a = sharpe_ratio_at_k(&t, &e, k, 0.0).unwrap();
            let b = sharpe_ratio_at_k(&t, &fe, k, 0.0).unwrap();
            prop_assert_eq!(a, b);
            match (n_regret_at_k(&t, &e, k), n_regret_at_k(&t, &fe, k)) {
                (Ok(x), Ok(y)) => prop_assert_eq!(x, y),
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "nRegret defined for only one side"),
            }
        }
        match (rank_corr(&t, &e), rank_corr(&t, &fe)) {
            (Ok(x), Ok(y)) => prop_assert!((x - y).abs() < 1e-12),
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "RankCorr defined for only one side"),
        }
    }

    #[test]
    fn portfolio_stats_are_nested((truth, est) in instance()) {
        let ids = ids(truth.len());
        let t = to_map(&ids, &truth);
        let e = to_map(&ids, &est);
        let stats = portfolio_reference_stats(&t, &e, ids.len(), 0.0).unwrap();
        let r1 = &stats.rows[0];
        prop_assert_eq!(r1.std, 0.0);
        prop_assert!(r1.best == r1.worst && r1.worst == r1.mean && r1.mean == r1.kth_best);
        for w in stats.rows.windows(2) {
            prop_assert!(w[1].best >= w[0].best);
            prop_assert!(w[1].worst <= w[0].worst);
        }
    }

    #[test]
    fn full_portfolio_sharpe_is_nonnegative((truth, est) in instance(), b in 0usize..8) {
        let ids = ids(truth.len());
        let t = to_map(&ids, &truth);
        let e = to_map(&ids, &est);
        // The baseline is the value of one of the candidates.
        let baseline = truth[b % truth.len()];
        let sr = sharpe_ratio_at_k(&t, &e, ids.len(), baseline).unwrap();
        prop_assert!(sr.value.as_f64() >= 0.0);
        prop_assert!(sr.value != MetricValue::NegInf);
    }

    #[test]
    fn true_ranking_is_best_achievable(truth in prop::collection::vec(-50i32..50, 2..8)) {
        let truth: Vec<f64> = truth.into_iter().map(f64::from).collect();
        let ids = ids(truth.len());
        let t = to_map(&ids, &truth);
        for k in 1..=ids.len() {
            if let Ok(r) = n_regret_at_k(&t, &t, k) {
                prop_assert_eq!(r, 0.0);
            }
        }
        if let Ok(rho) = rank_corr(&t, &t) {
            prop_assert!((rho - 1.0).abs() < 1e-12);
        }
        if let Ok(v) = n_mse(&t, &t) {
            prop_assert_eq!(v, 0.0);
        }
    }
}

#[test]
fn sharpe_of_true_prefix() {
    let ids = ids(3);
    let t = to_map(&ids, &[10.0, 6.0, 2.0]);
    let sr = sharpe_ratio_at_k(&t, &t, 2, 4.0).unwrap();
    // best@2 = 10, std@2 = 2.
    assert_eq!(sr.value, MetricValue::Finite(3.0));
}
