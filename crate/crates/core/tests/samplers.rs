mod common;

use common::{phi, tiny_spec};
use lcop_core::inference::effective_sample_size;
use lcop_core::model::{cutpoints_from_delta, log_likelihood, Dataset, PriorSpec};
use lcop_core::samplers::{
    draw_beta_delta_joint, draw_class_indicators, relabel, run_collapsed_gibbs, run_full_gibbs, PosteriorSample, RunConfig,
};
use lcop_core::sim::{builtin_setting, generate, SimSpec};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn mean_and_se(series: &[f64]) -> (f64, f64) {
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let var = series.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let ess = effective_sample_size(series).unwrap_or(n);
    (mean, (var / ess).sqrt())
}

fn setting(id: u32, seed: u64) -> SimSpec {
    SimSpec { seed, ..builtin_setting(id).unwrap() }
}

#[test]
fn collapsed_and_full_samplers_agree_on_setting_one() {
    let data = generate(&setting(1, 21)).unwrap().dataset;
    let prior = PriorSpec::default_for(2, 4, 3);
    let collapsed = relabel(run_collapsed_gibbs(&data, &prior, &RunConfig { seed: 1, n_iter: 3300, burn_in: 300, ..Default::default() }).unwrap());
    let full = relabel(run_full_gibbs(&data, &prior, &RunConfig { seed: 2, n_iter: 6300, burn_in: 300, ..Default::default() }).unwrap());

    assert!(collapsed.accept_rate_alpha > 0.5 && collapsed.accept_rate_alpha < 1.0, "alpha acceptance {}", collapsed.accept_rate_alpha);
    for k in 0..collapsed.draws[0].flatten().len() {
        let (mc, sc) = mean_and_se(&collapsed.column(k));
        let (mf, sf) = mean_and_se(&full.column(k));
        assert!((mc - mf).abs() < 3.0 * sc.hypot(sf), "parameter {k}: collapsed {mc:.4} ± {sc:.4}, full {mf:.4} ± {sf:.4}");
    }
    for sample in [&collapsed, &full] {
        assert!(sample.draws.iter().all(|d| log_likelihood(&data, d).unwrap().is_finite()));
        assert!(sample.draws.iter().all(|d| d.beta[0][0] >= d.beta[1][0]));
        let swap = sample.swap_fraction.unwrap();
        assert!((0.0..=1.0).contains(&swap));
    }
}

#[test]
fn relabeling_leaves_every_likelihood_unchanged() {
    let data = generate(&tiny_spec(4)).unwrap().dataset;
    let prior = PriorSpec::default_for(1, 1, 3);
    let raw = run_collapsed_gibbs(&data, &prior, &RunConfig { seed: 9, n_iter: 600, burn_in: 100, ..Default::default() }).unwrap();
    assert!(!raw.relabeled);
    let fixed = relabel(raw.clone());
    assert!(fixed.relabeled);
    let swapped = raw.draws.iter().zip(&fixed.draws).filter(|(a, b)| a.beta[0][0] != b.beta[0][0]).count();
    assert_eq!(fixed.swap_fraction, Some(swapped as f64 / raw.len() as f64));
    for (a, b) in raw.draws.iter().zip(&fixed.draws) {
        let (la, lb) = (log_likelihood(&data, a).unwrap(), log_likelihood(&data, b).unwrap());
        assert!((la - lb).abs() < 1e-9);
    }
}

#[test]
fn four_categories_recover_the_middle_cutpoint() {
    // γ₂ = 0.5 in both classes, i.e. δ = 0
    let spec = SimSpec { n: 1000, n_categories: 4, delta: [vec![0.0], vec![0.0]], ..setting(1, 8) };
    let data = generate(&spec).unwrap().dataset;
    let prior = PriorSpec::default_for(2, 4, 4);
    let sample = relabel(run_collapsed_gibbs(&data, &prior, &RunConfig { seed: 3, n_iter: 2200, burn_in: 200, ..Default::default() }).unwrap());
    let rates = sample.accept_rate_beta_delta.expect("joint block ran");
    assert!(rates.iter().all(|r| *r > 0.2 && *r <= 1.0), "joint acceptance {rates:?}");
    for s in 0..2 {
        let gamma2: Vec<f64> = sample.draws.iter().map(|d| d.cutpoints[s].gamma()[1]).collect();
        let n = gamma2.len() as f64;
        let mean = gamma2.iter().sum::<f64>() / n;
        let sd = (gamma2.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((mean - 0.5).abs() < 2.0 * sd, "class {}: gamma_2 {mean:.4} (sd {sd:.4})", s + 1);
    }
    assert!(sample.draws.iter().all(|d| log_likelihood(&data, d).unwrap().is_finite()));
}

/// Single-class ordinal probit log posterior of `(β, δ)` with `σ²` fixed,
/// written out independently of the library's likelihood code.
fn one_class_log_posterior(data: &Dataset, prior: &PriorSpec, sigma2: f64, theta: &[f64]) -> f64 {
    let q = data.q();
    let beta = DVector::from_column_slice(&theta[..q]);
    let gamma = cutpoints_from_delta(&theta[q..]);
    let j = data.n_categories();
    let sd = sigma2.sqrt();
    let mut total = prior.beta[0].ln_pdf(&beta) + prior.delta[0].ln_pdf(&DVector::from_column_slice(&theta[q..]));
    for i in 0..data.n() {
        let mu = data.x_row(i).dot(&beta);
        // category 1 is the top band
        let k = j - data.y()[i];
        let upper = if k + 1 < j { phi((gamma[k] - mu) / sd) } else { 1.0 };
        let lower = if k > 0 { phi((gamma[k - 1] - mu) / sd) } else { 0.0 };
        total += (upper - lower).ln();
    }
    total
}

#[test]
fn one_class_block_matches_a_random_walk_reference() {
    let spec = SimSpec {
        n: 300,
        alpha: vec![-8.0],
        beta: [vec![0.3, 0.8], vec![0.3, 0.8]],
        sigma2: [0.5, 0.5],
        w_laws: vec![],
        x_laws: vec![lcop_core::sim::NormalLaw { mean: 0.0, var: 1.0 }],
        n_categories: 4,
        delta: [vec![0.4], vec![0.4]],
        seed: 12,
    };
    let data = generate(&spec).unwrap().dataset;
    let prior = PriorSpec::default_for(1, 2, 4);
    let config = RunConfig::default();
    let u = vec![1u8; data.n()];
    let sigma2 = 0.5;

    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let (mut beta, mut delta) = (DVector::from_vec(vec![0.0, 0.0]), vec![0.0]);
    let mut block: Vec<Vec<f64>> = Vec::new();
    for it in 0..3200 {
        let (b, d, _) = draw_beta_delta_joint(1, &beta, &delta, sigma2, &u, &data, &prior, &config, &mut rng).unwrap();
        (beta, delta) = (b, d);
        if it >= 200 {
            block.push(beta.iter().copied().chain(delta.iter().copied()).collect());
        }
    }

    let mut current = block[0].clone();
    let mut lp = one_class_log_posterior(&data, &prior, sigma2, &current);
    let mut walk: Vec<Vec<f64>> = Vec::new();
    for it in 0..60_000 {
        let proposal: Vec<f64> = current.iter().map(|c| c + 0.06 * rng.sample::<f64, _>(StandardNormal)).collect();
        let lq = one_class_log_posterior(&data, &prior, sigma2, &proposal);
        if rng.random::<f64>().ln() < lq - lp {
            (current, lp) = (proposal, lq);
        }
        if it >= 2000 && it % 4 == 0 {
            walk.push(current.clone());
        }
    }
    for k in 0..3 {
        let a: Vec<f64> = block.iter().map(|r| r[k]).collect();
        let b: Vec<f64> = walk.iter().map(|r| r[k]).collect();
        let ((ma, sa), (mb, sb)) = (mean_and_se(&a), mean_and_se(&b));
        assert!((ma - mb).abs() < 4.0 * sa.hypot(sb), "coordinate {k}: block {ma:.4} ± {sa:.4}, walk {mb:.4} ± {sb:.4}");
    }
}

#[test]
fn identical_outcomes_shrink_the_variances() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 200;
    let x = DMatrix::from_fn(n, 2, |_, c| if c == 0 { 1.0 } else { rng.sample(StandardNormal) });
    let w = DMatrix::from_fn(n, 2, |_, c| if c == 0 { 1.0 } else { rng.sample(StandardNormal) });
    let data = Dataset::new(vec![2; n], x, w, 3).unwrap();
    let prior = PriorSpec::default_for(2, 2, 3);
    let config = RunConfig { seed: 6, n_iter: 1100, burn_in: 100, keep_u: true, ..Default::default() };
    let sample = run_collapsed_gibbs(&data, &prior, &config).unwrap();
    // an empty class simply returns its prior, so look at the occupied one
    let u_draws = sample.u_draws.as_ref().unwrap();
    let occupied: Vec<f64> = sample
        .draws
        .iter()
        .zip(u_draws)
        .map(|(d, u)| {
            let in_two = u.iter().filter(|&&s| s == 2).count();
            if 2 * in_two > u.len() { d.sigma2[1] } else { d.sigma2[0] }
        })
        .collect();
    let mean = occupied.iter().sum::<f64>() / occupied.len() as f64;
    assert!(mean < 0.5 * prior.sigma2_prior_mean(), "occupied-class sigma2 mean {mean}");
}

#[test]
fn true_parameters_classify_most_observations() {
    let out = generate(&setting(1, 3)).unwrap();
    let truth = setting(1, 3).truth();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let reps = 200;
    let mut correct = 0usize;
    for _ in 0..reps {
        let u = draw_class_indicators(&truth.alpha, &truth.beta, &truth.sigma2, &truth.cutpoints, &out.dataset, &mut rng).unwrap();
        correct += u.iter().zip(&out.s_true).filter(|(a, b)| a == b).count();
    }
    let accuracy = correct as f64 / (reps * out.dataset.n()) as f64;
    assert!(accuracy > 0.75, "accuracy {accuracy}");
}

fn same_draws(a: &PosteriorSample, b: &PosteriorSample) -> bool {
    a.matrix() == b.matrix() && a.accept_rate_alpha == b.accept_rate_alpha
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn a_seed_fixes_the_chain(seed in 0u64..1_000_000, data_seed in 0u64..1000) {
        let data = generate(&tiny_spec(data_seed)).unwrap().dataset;
        let prior = PriorSpec::default_for(1, 1, 3);
        let config = RunConfig { seed, n_iter: 60, burn_in: 10, ..Default::default() };
        let a = run_collapsed_gibbs(&data, &prior, &config).unwrap();
        let b = run_collapsed_gibbs(&data, &prior, &config).unwrap();
        prop_assert!(same_draws(&a, &b));
        let c = run_full_gibbs(&data, &prior, &config).unwrap();
        let d = run_full_gibbs(&data, &prior, &config).unwrap();
        prop_assert!(same_draws(&c, &d));
        let other = run_collapsed_gibbs(&data, &prior, &RunConfig { seed: seed + 1, ..config }).unwrap();
        prop_assert!(!same_draws(&a, &other));
    }

    #[test]
    fn every_draw_has_a_finite_likelihood(seed in 0u64..1_000_000, j in 3usize..6) {
        let spec = SimSpec { n: 60, n_categories: j, delta: [vec![0.3; j - 3], vec![-0.3; j - 3]], ..setting(1, seed) };
        let data = generate(&spec).unwrap().dataset;
        let prior = PriorSpec::default_for(2, 4, j);
        let config = RunConfig { seed, n_iter: 40, burn_in: 5, ..Default::default() };
        for sample in [run_collapsed_gibbs(&data, &prior, &config).unwrap(), run_full_gibbs(&data, &prior, &config).unwrap()] {
            prop_assert_eq!(sample.len(), 35);
            for d in &sample.draws {
                prop_assert!(log_likelihood(&data, d).unwrap().is_finite());
                prop_assert!(d.sigma2.iter().all(|s| *s > 0.0));
                for cut in &d.cutpoints {
                    prop_assert!(cut.gamma().windows(2).all(|g| g[0] < g[1]));
                }
            }
        }
    }
}
