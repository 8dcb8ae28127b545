use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use regnet::inference::ols_estimates;
use regnet::model::NetworkState;
use regnet::simulate::{generate_synthetic, true_residuals, SyntheticSpec};

#[test]
fn noiseless_single_edges_are_recovered_by_least_squares() {
    let spec = SyntheticSpec { noise_sd: 0.0, g: 20, seed: 3, ..SyntheticSpec::default() };
    let (data, _, truth) = generate_synthetic(&spec).unwrap();
    let net = NetworkState::from_indicators(truth.r.clone(), None, None).unwrap();
    let ols = ols_estimates(&data, &net).unwrap();
    assert!((ols.beta + &truth.beta).amax() < 1e-10);
}

#[test]
fn same_seed_same_everything() {
    let spec = SyntheticSpec { seed: 99, time_mode: true, ..SyntheticSpec::default() };
    let a = generate_synthetic(&spec).unwrap();
    let b = generate_synthetic(&spec).unwrap();
    assert_eq!(a.0, b.0);
    assert_eq!(a.1, b.1);
    assert_eq!(a.2, b.2);
    let c = generate_synthetic(&SyntheticSpec { seed: 100, ..spec }).unwrap();
    assert_ne!(a.0, c.0);
}

#[test]
fn truth_is_positive_exactly_on_planted_edges_and_targets_are_centered() {
    let (data, _, truth) = generate_synthetic(&SyntheticSpec { edges_per_gene: 2.5, seed: 4, ..SyntheticSpec::default() }).unwrap();
    for g in 0..data.g() {
        for m in 0..data.m() {
            assert_eq!(truth.r.get(g, m), truth.beta[(g, m)] > 0.0);
        }
        assert!(data.y.column(g).mean().abs() < 1e-12);
    }
}

#[test]
fn residual_variance_converges_to_the_noise_level() {
    let spec = SyntheticSpec { n: 10_000, g: 5, noise_sd: 0.7, seed: 5, ..SyntheticSpec::default() };
    let (data, _, truth) = generate_synthetic(&spec).unwrap();
    for g in 0..data.g() {
        let r = true_residuals(&data, &truth, g);
        let var = r.iter().map(|v| (v - r.mean()).powi(2)).sum::<f64>() / (r.len() - 1) as f64;
        assert!((var / 0.49 - 1.0).abs() < 0.05, "gene {g}: {var}");
    }
}

#[test]
fn uninformative_scores_carry_no_signal() {
    let spec = SyntheticSpec { g: 200, score_informativeness: 0.0, n_score_sources: 1, seed: 6, ..SyntheticSpec::default() };
    let (_, scores, truth) = generate_synthetic(&spec).unwrap();
    let s: Vec<f64> = scores.scores[0].transpose().iter().copied().collect();
    let labels: Vec<bool> = (0..spec.g).flat_map(|g| (0..spec.m).map(move |m| (g, m))).map(|(g, m)| truth.r.get(g, m)).collect();
    let stat = |lab: &[bool]| {
        let (mut on, mut non, mut off, mut noff) = (0.0, 0.0, 0.0, 0.0);
        for (v, &l) in s.iter().zip(lab) {
            if l {
                on += v;
                non += 1.0;
            } else {
                off += v;
                noff += 1.0;
            }
        }
        (on / non - off / noff).abs()
    };
    let observed = stat(&labels);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut perm = labels.clone();
    let extreme = (0..999)
        .filter(|_| {
            perm.shuffle(&mut rng);
            stat(&perm) >= observed
        })
        .count();
    let p = (extreme + 1) as f64 / 1000.0;
    assert!(p > 0.01, "permutation p = {p}");
}

#[test]
fn informative_scores_favour_true_edges() {
    let (_, scores, truth) = generate_synthetic(&SyntheticSpec { seed: 7, ..SyntheticSpec::default() }).unwrap();
    let auc = regnet::inference::auc(&scores.scores[0], &truth.r).unwrap();
    assert!(auc > 0.8, "{auc}");
}

#[test]
fn time_mode_plants_nested_offsets_in_ordered_blocks() {
    let spec = SyntheticSpec { time_mode: true, time_fraction: 0.5, edges_per_gene: 2.0, seed: 8, ..SyntheticSpec::default() };
    let (data, _, truth) = generate_synthetic(&spec).unwrap();
    let (b2, b3) = data.time_blocks().unwrap();
    assert!(!b2.is_empty() && !b3.is_empty());
    let net = NetworkState::from_indicators(truth.r.clone(), truth.r_prime.clone(), truth.r_dprime.clone()).unwrap();
    net.check(true).unwrap();
    assert!(truth.r_prime.unwrap().count() > 0);
}

#[test]
fn infeasible_sparsity_is_rejected() {
    assert!(generate_synthetic(&SyntheticSpec { edges_per_gene: 9.0, ..SyntheticSpec::default() }).is_err());
    assert!(generate_synthetic(&SyntheticSpec { score_informativeness: 1.5, ..SyntheticSpec::default() }).is_err());
}
