use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use regnet::inference::{bayesian_fdr, select_edges};
use regnet::likelihood::marginal::{log_marginal_td, log_marginal_ti};
use regnet::likelihood::normal::norm_cdf;
use regnet::likelihood::orthant::{log_mvn_orthant, OrthantOptions};
use regnet::model::prior::edge_logit;
use regnet::model::{
    center_columns, edge_prior_prob, log_prior_network, normalize_scores, Hyperparams, Indicator, Matrix, NetworkState,
    ScoreSet,
};

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-3.0..3.0f64, rows * cols).prop_map(move |v| DMatrix::from_vec(rows, cols, v))
}

fn probs(rows: usize, cols: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(prop_oneof![Just(1.0), Just(0.0), 0.0..=1.0f64], rows * cols)
        .prop_map(move |v| DMatrix::from_vec(rows, cols, v))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn edge_prior_is_monotone_in_each_score(
        s in prop::collection::vec(0.0..1.0f64, 3),
        tau in prop::collection::vec(0.0..20.0f64, 3),
        eta in -6.0..2.0f64,
        j in 0usize..3,
        bump in 0.0..1.0f64,
    ) {
        let lo = edge_prior_prob(&s, eta, &tau).unwrap();
        let mut t = s.clone();
        t[j] += bump;
        let hi = edge_prior_prob(&t, eta, &tau).unwrap();
        prop_assert!(hi >= lo);
        prop_assert!((0.0..=1.0).contains(&lo));
    }

    #[test]
    fn flipping_an_edge_moves_the_prior_by_its_logit(
        scores in matrix(3, 4).prop_map(|m| m.abs() / 3.0),
        tau in 0.0..10.0f64,
        g in 0usize..3,
        m in 0usize..4,
        mask in prop::collection::vec(any::<bool>(), 12),
    ) {
        let set = ScoreSet::new(vec![scores.clone()], vec!["s".into()]).unwrap();
        let hp = Hyperparams::default();
        let r = Indicator::from_fn(3, 4, |i, j| mask[i * 4 + j]);
        let mut net = NetworkState::from_indicators(r, None, None).unwrap();
        let before = log_prior_network(&net, &set, &hp, &[tau]).unwrap();
        let was_on = net.r.get(g, m);
        net.flip(Matrix::R, g, m);
        let after = log_prior_network(&net, &set, &hp, &[tau]).unwrap();
        let logit = edge_logit(&[scores[(g, m)]], hp.eta, &[tau]);
        let expected = if was_on { -logit } else { logit };
        prop_assert!((after - before - expected).abs() < 1e-9 * (1.0 + logit.abs()));
    }

    #[test]
    fn normalization_keeps_order_zeros_and_range(raw in prop::collection::vec(prop_oneof![Just(0.0), 0.0..50.0f64], 12)) {
        let set = ScoreSet::new(vec![DMatrix::from_vec(3, 4, raw.clone())], vec!["s".into()]).unwrap();
        let n = normalize_scores(&set).unwrap();
        let out = &n.scores[0];
        for i in 0..12 {
            prop_assert!((0.0..=1.0).contains(&out[i]));
            if raw[i] == 0.0 {
                prop_assert_eq!(out[i], 0.0);
            }
            for j in 0..12 {
                if raw[i] != 0.0 && raw[j] != 0.0 && raw[i] < raw[j] {
                    prop_assert!(out[i] <= out[j]);
                }
            }
        }
    }

    #[test]
    fn fdr_and_selection_are_monotone_in_the_cutoff(p in probs(4, 5), a in 0.01..=1.0f64, b in 0.01..=1.0f64) {
        let (k1, k2) = if a <= b { (a, b) } else { (b, a) };
        let loose = select_edges(&p, k1).unwrap();
        let tight = select_edges(&p, k2).unwrap();
        prop_assert!(tight.iter().all(|e| loose.iter().any(|f| (f.g, f.m) == (e.g, e.m))));
        let f1 = bayesian_fdr(&p, k1).unwrap();
        let f2 = bayesian_fdr(&p, k2).unwrap();
        prop_assert!(f2.fdr <= f1.fdr + 1e-15 || f2.selected == 0);
        prop_assert_eq!(f1.selected, loose.len());
        if let Some(min_p) = loose.iter().map(|e| e.p).reduce(f64::min) {
            prop_assert!(f1.fdr <= 1.0 - min_p + 1e-15);
        }
    }

    #[test]
    fn orthant_probability_is_bounded_by_its_marginals(
        mean in prop::collection::vec(-2.0..2.0f64, 3),
        l in prop::collection::vec(-1.0..1.0f64, 6),
    ) {
        let lm = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, l[0], 1.0, 0.0, l[1], l[2], 1.0]);
        let cov = &lm * lm.transpose() + DMatrix::identity(3, 3) * 0.1;
        let mu = DVector::from_vec(mean);
        let est = log_mvn_orthant(&mu, &cov, &OrthantOptions::default()).unwrap();
        let p = est.prob();
        let min_marginal = (0..3).map(|i| norm_cdf(-mu[i] / cov[(i, i)].sqrt())).fold(1.0, f64::min);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!(p <= min_marginal * (1.0 + 1e-3) + 1e-5);
    }

    #[test]
    fn centering_is_idempotent(m in matrix(6, 3)) {
        let mut once = m.clone();
        center_columns(&mut once);
        let mut twice = once.clone();
        center_columns(&mut twice);
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn td_marginal_with_no_offsets_is_the_ti_marginal(
        x in matrix(7, 2),
        y in prop::collection::vec(-3.0..3.0f64, 7),
        sigma in 0.1..3.0f64,
    ) {
        let y = DVector::from_vec(y);
        let hp = Hyperparams::default();
        let empty = DMatrix::zeros(7, 0);
        if let Ok(a) = log_marginal_ti(&y, &x, sigma, &hp) {
            let b = log_marginal_td(&y, &x, &empty, &empty, sigma, &hp).unwrap();
            prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
        }
    }
}
