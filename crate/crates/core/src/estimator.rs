//! Monte Carlo estimation of empirical RAD and ReRo, plus an exact evaluator
//! for small enumerable mechanisms.
//!
//! RAD is the success probability when the target's own record is released
//! (term 1) minus the success probability when an independent record from the
//! prior is released instead (term 2). Every trial draws from its own random
//! stream addressed by `(term, target, challenger, trial)`, and successes are
//! tallied as integers per cell, so results are bit-identical for any thread
//! count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attacks::Attack;
use crate::domain::{DiscretePrior, ThreatModel};
use crate::error::{config, contract, Error, Result};
use crate::mechanisms::{EnumerableMechanism, Mechanism};
use crate::stream::StreamFactory;

const TERM_TARGET: u64 = 1;
const TERM_CHALLENGER: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimand {
    Rad,
    Rero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationPlan {
    /// Trials per target for the first term (J).
    pub trials_per_target: u64,
    /// Trials per (target, challenger) pair for the second term; `None` uses J.
    pub trials_per_pair: Option<u64>,
    pub seed: u64,
    /// Worker threads; 0 picks the number of available cores.
    pub threads: usize,
    pub estimand: Estimand,
    /// Reuse one release per (record, trial) for every challenger in a fiber.
    /// Faster for large universes, but cells become correlated and the
    /// reported standard error is then optimistic.
    pub shared_challenger_draws: bool,
}

impl EstimationPlan {
    pub fn new(trials_per_target: u64, seed: u64) -> Self {
        Self {
            trials_per_target,
            trials_per_pair: None,
            seed,
            threads: 0,
            estimand: Estimand::Rad,
            shared_challenger_draws: false,
        }
    }

    /// Splits a total trial budget: `⌊B/m⌋` per target and `max(1, ⌊B/m²⌋)`
    /// per pair, so each term uses about `B` trials.
    pub fn from_budget(budget: u64, m: usize, seed: u64) -> Result<Self> {
        let m = m as u64;
        if budget < m {
            return config(format!("insufficient trials per target: budget {budget} < m = {m}"));
        }
        let mut plan = Self::new(budget / m, seed);
        plan.trials_per_pair = Some((budget / (m * m)).max(1));
        Ok(plan)
    }

    pub fn with_estimand(mut self, estimand: Estimand) -> Self {
        self.estimand = estimand;
        self
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = threads;
        self
    }

    pub fn pair_trials(&self) -> u64 {
        self.trials_per_pair.unwrap_or(self.trials_per_target)
    }
}

/// Integer tallies and the weighted value of one term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermTally {
    /// Weighted success probability.
    pub value: f64,
    /// Binomial variance of `value`.
    pub variance: f64,
    pub successes: u64,
    pub trials: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub estimand: Estimand,
    /// γ̃: term 1 minus term 2 for RAD, term 1 for ReRo.
    pub estimate: f64,
    pub standard_error: f64,
    pub term1: TermTally,
    /// Absent for ReRo.
    pub term2: Option<TermTally>,
    /// Successes per target in term 1.
    pub target_successes: Vec<u64>,
    pub total_trials: u64,
}

impl EstimateResult {
    /// The first term alone, i.e. ReRo.
    pub fn rero(&self) -> f64 {
        self.term1.value
    }
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker threads: {e}")))
}

/// Runs the two-term Monte Carlo protocol for one attack.
pub fn estimate<M, A>(
    plan: &EstimationPlan,
    mech: &M,
    prior: &DiscretePrior,
    threat: &ThreatModel,
    attack: &A,
) -> Result<EstimateResult>
where
    M: Mechanism,
    A: Attack<M::Output>,
{
    threat.check_prior(prior)?;
    if mech.universe_size() != prior.len() {
        return contract("mechanism and prior disagree on the universe size");
    }
    if plan.trials_per_target == 0 || plan.pair_trials() == 0 {
        return config("trials per target must be at least 1");
    }
    let m = prior.len();
    let pi = prior.weights();
    let aux = threat.aux();
    let factory = StreamFactory::new(plan.seed);
    let j1 = plan.trials_per_target;
    let j2 = plan.pair_trials();

    let target_row = |z: usize| -> u64 {
        if pi[z] == 0.0 {
            return 0;
        }
        let x = aux.fiber_of(z);
        (0..j1)
            .filter(|&t| {
                let mut rng = factory.stream(&[TERM_TARGET, z as u64, 0, t]);
                let theta = mech.sample(z, &mut rng);
                threat.success(z, attack.guess(&theta, x, &mut rng))
            })
            .count() as u64
    };

    // One row per released record z0: weighted success over challengers z1.
    let challenger_row = |z0: usize| -> (f64, f64, u64, u64) {
        let (mut value, mut var, mut hits, mut trials) = (0.0, 0.0, 0u64, 0u64);
        if pi[z0] == 0.0 {
            return (value, var, hits, trials);
        }
        let mut add = |z1: usize, c: u64| {
            let p = c as f64 / j2 as f64;
            value += pi[z1] * p;
            var += pi[z1] * pi[z1] * p * (1.0 - p) / j2 as f64;
            hits += c;
            trials += j2;
        };
        if plan.shared_challenger_draws {
            let mut counts = vec![0u64; m];
            for t in 0..j2 {
                let mut rng = factory.stream(&[TERM_CHALLENGER, z0 as u64, u64::MAX, t]);
                let theta = mech.sample(z0, &mut rng);
                for (x, fiber) in aux.fibers().iter().enumerate() {
                    let g = attack.guess(&theta, x, &mut rng);
                    for &z1 in fiber {
                        if threat.success(z1, g) {
                            counts[z1] += 1;
                        }
                    }
                }
            }
            for z1 in (0..m).filter(|&z| pi[z] > 0.0) {
                add(z1, counts[z1]);
            }
        } else {
            for z1 in (0..m).filter(|&z| pi[z] > 0.0) {
                let x = aux.fiber_of(z1);
                let c = (0..j2)
                    .filter(|&t| {
                        let mut rng = factory.stream(&[TERM_CHALLENGER, z0 as u64, z1 as u64, t]);
                        let theta = mech.sample(z0, &mut rng);
                        threat.success(z1, attack.guess(&theta, x, &mut rng))
                    })
                    .count() as u64;
                add(z1, c);
            }
        }
        (pi[z0] * value, pi[z0] * pi[z0] * var, hits, trials)
    };

    let workers = pool(plan.threads)?;
    let (target_successes, rows) = workers.install(|| {
        let t: Vec<u64> = (0..m).into_par_iter().map(target_row).collect();
        let r: Vec<(f64, f64, u64, u64)> = match plan.estimand {
            Estimand::Rad => (0..m).into_par_iter().map(challenger_row).collect(),
            Estimand::Rero => Vec::new(),
        };
        (t, r)
    });

    let mut term1 = TermTally { value: 0.0, variance: 0.0, successes: 0, trials: 0 };
    for (z, &c) in target_successes.iter().enumerate() {
        if pi[z] == 0.0 {
            continue;
        }
        let p = c as f64 / j1 as f64;
        term1.value += pi[z] * p;
        term1.variance += pi[z] * pi[z] * p * (1.0 - p) / j1 as f64;
        term1.successes += c;
        term1.trials += j1;
    }
    let term2 = (plan.estimand == Estimand::Rad).then(|| {
        let mut t = TermTally { value: 0.0, variance: 0.0, successes: 0, trials: 0 };
        for &(v, var, h, n) in &rows {
            t.value += v;
            t.variance += var;
            t.successes += h;
            t.trials += n;
        }
        t
    });
    let (estimate, variance, total) = match &term2 {
        Some(t2) => (term1.value - t2.value, term1.variance + t2.variance, term1.trials + t2.trials),
        None => (term1.value, term1.variance, term1.trials),
    };
    Ok(EstimateResult {
        estimand: plan.estimand,
        estimate,
        standard_error: variance.sqrt(),
        term1,
        term2,
        target_successes,
        total_trials: total,
    })
}

/// Exact success probabilities of an attack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactRisk {
    /// Success probability when the target's record is released (ReRo).
    pub term1: f64,
    /// Success probability when an independent prior draw is released.
    pub term2: f64,
    pub rad: f64,
}

/// Exact RAD of an attack given as a distribution over guesses per
/// `(output, aux value)`; each returned list holds `(guess, probability)`.
pub fn exact_rad<M, F>(mech: &M, prior: &DiscretePrior, threat: &ThreatModel, attack: F) -> Result<ExactRisk>
where
    M: EnumerableMechanism,
    F: Fn(&M::Output, usize) -> Vec<(usize, f64)>,
{
    threat.check_prior(prior)?;
    if mech.universe_size() != prior.len() {
        return contract("mechanism and prior disagree on the universe size");
    }
    let m = prior.len();
    let pi = prior.weights();
    let aux = threat.aux();
    let mut lik = vec![0.0; m];
    let mut hit = vec![0.0; m];
    let (mut t1, mut t2) = (0.0, 0.0);
    mech.for_each_output(&mut |theta| {
        let scale = mech.scaled_likelihoods(theta, &mut lik).exp();
        let marginal: f64 = lik.iter().zip(pi).map(|(l, p)| l * p).sum::<f64>() * scale;
        for (x, fiber) in aux.fibers().iter().enumerate() {
            let dist = attack(theta, x);
            for &z in fiber {
                hit[z] = dist.iter().filter(|(g, _)| threat.success(z, *g)).map(|(_, p)| p).sum();
            }
            for &z in fiber {
                t1 += pi[z] * lik[z] * scale * hit[z];
                t2 += marginal * pi[z] * hit[z];
            }
        }
    })?;
    Ok(ExactRisk { term1: t1, term2: t2, rad: t1 - t2 })
}

/// [`exact_rad`] for a deterministic attack table.
pub fn exact_rad_deterministic<M, F>(
    mech: &M,
    prior: &DiscretePrior,
    threat: &ThreatModel,
    attack: F,
) -> Result<ExactRisk>
where
    M: EnumerableMechanism,
    F: Fn(&M::Output, usize) -> usize,
{
    exact_rad(mech, prior, threat, |theta, x| vec![(attack(theta, x), 1.0)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attacks::{ObliviousPriorAttack, OptimalAttack};
    use crate::mechanisms::GrrMechanism;

    #[test]
    fn optimal_attack_exact_rad_on_grr() {
        let g = GrrMechanism::new(3, 2f64.ln()).unwrap();
        let prior = DiscretePrior::uniform(3).unwrap();
        let threat = ThreatModel::exact_no_aux(3).unwrap();
        let a = OptimalAttack::new(&g, &prior, &threat).unwrap();
        let r = exact_rad(&g, &prior, &threat, |t, x| {
            let s = a.argmax_set(t, x).unwrap();
            let p = 1.0 / s.len() as f64;
            s.into_iter().map(|z| (z, p)).collect()
        })
        .unwrap();
        assert!((r.rad - 1.0 / 6.0).abs() < 1e-15);
        let constant = exact_rad_deterministic(&g, &prior, &threat, |_, _| 0).unwrap();
        assert!(constant.rad.abs() < 1e-15);
    }

    #[test]
    fn budget_split() {
        let p = EstimationPlan::from_budget(1_000_000, 100, 1).unwrap();
        assert_eq!(p.trials_per_target, 10_000);
        assert_eq!(p.pair_trials(), 100);
        assert!(EstimationPlan::from_budget(5, 10, 1).is_err());
    }

    #[test]
    fn zero_weight_cells_are_skipped() {
        let g = GrrMechanism::new(4, 1.0).unwrap();
        let prior = DiscretePrior::from_weights(vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        let threat = ThreatModel::exact_no_aux(4).unwrap();
        let a = ObliviousPriorAttack::new(&prior, &threat).unwrap();
        let r = estimate(&EstimationPlan::new(50, 3), &g, &prior, &threat, &a).unwrap();
        assert_eq!(r.term1.trials, 100);
        assert_eq!(r.term2.unwrap().trials, 200);
        assert_eq!(r.target_successes[2], 0);
    }
}
