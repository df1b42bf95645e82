//! Continuous-domain bound: mechanism density, candidate sets and the nested
//! Monte Carlo estimator, checked against a fine-grid reference value.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rad_core::continuous::{candidate_maximizers, failure_probability, nested_mc_bound, InnerSampling, NestedMcPlan};
use rad_core::domain::ContinuousPrior;
use rad_core::mechanisms::ExponentialMechanism1D;

const GRID: usize = 4000;

/// `∫₀¹ max_x ∫_{|z−x|≤η} (p(θ|z) − p(θ)) dz dθ` for the uniform prior, by
/// cumulative trapezoid sums on a 1/4000 grid in z and x and a 1/800 grid
/// in θ. η must be a multiple of 1/4000.
fn reference_bound(mech: &ExponentialMechanism1D, eta: f64) -> f64 {
    let h = 1.0 / GRID as f64;
    let half = (eta * GRID as f64).round() as usize;
    let zs: Vec<f64> = (0..=GRID).map(|i| i as f64 * h).collect();
    let best_at = |theta: f64| {
        let dens: Vec<f64> = zs.iter().map(|&z| mech.density(theta, z)).collect();
        let mut cum = vec![0.0; GRID + 1];
        for i in 1..=GRID {
            cum[i] = cum[i - 1] + 0.5 * h * (dens[i - 1] + dens[i]);
        }
        let marginal = cum[GRID];
        (0..=GRID)
            .map(|c| {
                let (lo, hi) = (c.saturating_sub(half), (c + half).min(GRID));
                cum[hi] - cum[lo] - marginal * (hi - lo) as f64 * h
            })
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let n = 800;
    let vals: Vec<f64> = (0..=n).map(|i| best_at(i as f64 / n as f64)).collect();
    (vals.iter().sum::<f64>() - 0.5 * (vals[0] + vals[n])) / n as f64
}

#[test]
fn density_cap_examples() {
    // s = 2/ε
    let cap = |eps: f64| ExponentialMechanism1D::new(eps).unwrap().density_cap();
    assert!((cap(2.0) - 1.0 / (1.0 - (-1.0f64).exp())).abs() < 1e-12);
    assert!((cap(4.0) - 2.0 / (1.0 - (-2.0f64).exp())).abs() < 1e-12);
    assert!((cap(1e-6) - 1.0).abs() < 1e-6);
}

#[test]
fn density_is_normalized_and_capped() {
    for eps in [0.1, 2.0, 8.0, 30.0] {
        let mech = ExponentialMechanism1D::new(eps).unwrap();
        let cap = mech.density_cap();
        for z in [0.0, 0.13, 0.5, 0.91, 1.0] {
            let n = 200_000;
            // midpoint rule; the kink at θ = z costs O(h²)
            let total: f64 = (0..n).map(|i| mech.density((i as f64 + 0.5) / n as f64, z)).sum::<f64>() / n as f64;
            assert!((total - 1.0).abs() < 1e-9, "ε={eps} z={z}: {total}");
            for i in 0..=100 {
                assert!(mech.density(i as f64 / 100.0, z) <= cap * (1.0 + 1e-12));
            }
        }
    }
}

#[test]
fn at_most_four_candidates() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let priors = [ContinuousPrior::uniform(0.0, 1.0).unwrap(), ContinuousPrior::beta(0.1, 0.1).unwrap()];
    for _ in 0..1000 {
        let mech = ExponentialMechanism1D::new(rng.gen_range(0.5..12.0)).unwrap();
        let prior = &priors[rng.gen_range(0..2)];
        let theta = rng.gen::<f64>();
        let eta = rng.gen_range(0.0..1.0);
        // ŷ is the Monte Carlo marginal the estimator would feed in
        let n_p = [10, 100, 1000][rng.gen_range(0..3)];
        let y = (0..n_p).map(|_| mech.density(theta, prior.sample(&mut rng))).sum::<f64>() / n_p as f64;
        let k = candidate_maximizers(&mech, prior, theta, eta, y).unwrap();
        assert!((1..=4).contains(&k.len()), "{} candidates at θ={theta} η={eta} ŷ={y}", k.len());
        assert!(k.iter().all(|x| (0.0..=1.0).contains(x)));
    }
}

#[test]
fn full_window_is_constant_in_the_guess() {
    let mech = ExponentialMechanism1D::new(3.0).unwrap();
    let prior = ContinuousPrior::uniform(0.0, 1.0).unwrap();
    assert_eq!(candidate_maximizers(&mech, &prior, 0.4, 1.0, 1.0).unwrap(), vec![0.0]);
    let mut plan = NestedMcPlan::new(10, 1.2, 0);
    plan.repetitions = 2;
    assert!(nested_mc_bound(&plan, &mech, &prior).is_err());
}

#[test]
fn flat_mechanism_gives_no_advantage() {
    let mech = ExponentialMechanism1D::new(1e-4).unwrap();
    let prior = ContinuousPrior::uniform(0.0, 1.0).unwrap();
    let mut plan = NestedMcPlan::new(200, 0.25, 3);
    plan.repetitions = 50;
    let est = nested_mc_bound(&plan, &mech, &prior).unwrap();
    assert!(est.estimate.abs() < 1e-4, "{}", est.estimate);
    assert!(est.ci_low <= est.estimate && est.estimate <= est.ci_high);
}

#[test]
fn outer_estimator_is_unbiased_with_exact_inner_integrals() {
    let prior = ContinuousPrior::uniform(0.0, 1.0).unwrap();
    for (eps, eta, seed) in [(2.0, 0.25, 1), (8.0, 0.1, 2), (4.0, 0.5, 3)] {
        let mech = ExponentialMechanism1D::new(eps).unwrap();
        let exact = reference_bound(&mech, eta);
        let mut plan = NestedMcPlan::new(400, eta, seed);
        plan.repetitions = 200;
        plan.sampling = InnerSampling::ExactInner;
        let est = nested_mc_bound(&plan, &mech, &prior).unwrap();
        let se = est.std_dev / (plan.repetitions as f64).sqrt();
        assert!(
            (est.estimate - exact).abs() <= 3.0 * se,
            "ε={eps} η={eta}: mean {} vs reference {exact} (SE {se})",
            est.estimate
        );
    }
}

#[test]
fn analytic_failure_bound_is_conservative() {
    let prior = ContinuousPrior::uniform(0.0, 1.0).unwrap();
    let mech = ExponentialMechanism1D::new(2.0).unwrap();
    let eta = 0.25;
    let exact = reference_bound(&mech, eta);
    for (n, seed) in [(250, 10), (1000, 11)] {
        let mut plan = NestedMcPlan::new(n, eta, seed);
        plan.repetitions = 200;
        let base = nested_mc_bound(&plan, &mech, &prior).unwrap();
        for t in [0.02, 0.05, 0.1, 0.3, 0.6] {
            let bound = failure_probability(t, n, n, n, base.density_cap, base.kappa_plus, base.max_candidates);
            let freq = base.replicates.iter().filter(|g| (*g - exact).abs() >= t).count() as f64
                / base.replicates.len() as f64;
            assert!(bound >= freq, "N={n} t={t}: bound {bound} < observed {freq}");
        }
    }
}

#[test]
fn confidence_intervals_shrink_with_more_samples() {
    for (prior, sampling) in [
        (ContinuousPrior::uniform(0.0, 1.0).unwrap(), InnerSampling::PerOutput),
        (ContinuousPrior::beta(0.1, 0.1).unwrap(), InnerSampling::SharedBatch),
    ] {
        let mech = ExponentialMechanism1D::new(4.0).unwrap();
        let width = |n: usize| {
            let mut plan = NestedMcPlan::new(n, 0.25, n as u64);
            plan.repetitions = 100;
            plan.sampling = sampling;
            let est = nested_mc_bound(&plan, &mech, &prior).unwrap();
            assert!(est.ci_low <= est.estimate && est.estimate <= est.ci_high);
            est.ci_width()
        };
        let (small, large) = (width(100), width(1000));
        assert!(large < small, "{prior:?}: width {large} at N=1000 vs {small} at N=100");
    }
}

#[test]
fn runs_are_reproducible_across_thread_counts() {
    let mech = ExponentialMechanism1D::new(3.0).unwrap();
    let prior = ContinuousPrior::beta(2.0, 5.0).unwrap();
    let mut plan = NestedMcPlan::new(100, 0.1, 42);
    plan.repetitions = 8;
    let a = nested_mc_bound(&NestedMcPlan { threads: 1, ..plan.clone() }, &mech, &prior).unwrap();
    let b = nested_mc_bound(&NestedMcPlan { threads: 3, ..plan }, &mech, &prior).unwrap();
    assert_eq!(a, b);
}
