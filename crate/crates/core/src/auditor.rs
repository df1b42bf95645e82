//! LDP auditing: measure the optimal attack's advantage and invert a RAD bound
//! into an empirical privacy budget ε̃.

use serde::{Deserialize, Serialize};

use crate::attacks::OptimalAttack;
use crate::bounds::{oue_uniform, ss_calibrate};
use crate::domain::{DiscretePrior, ThreatModel};
use crate::error::{config, Result};
use crate::estimator::{estimate, EstimationPlan};
use crate::mechanisms::{GrrMechanism, LdpKind, Mechanism, OueMechanism, SsMechanism};
use crate::numeric::{bisect_increasing, mean_std};
use crate::stream::StreamFactory;

/// Largest budget the inversions search; anything beyond is saturated.
pub const EPSILON_CAP: f64 = 50.0;

/// Outcome of inverting a bound at a measured advantage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "value", rename_all = "lowercase")]
pub enum EpsEstimate {
    Defined(f64),
    /// The advantage is at (or statistically indistinguishable from) the
    /// bound's ceiling, or implies ε̃ above [`EPSILON_CAP`].
    Saturated,
    /// No budget is consistent with the advantage (γ̃ ≤ 0 or past the pole).
    Undefined,
}

impl EpsEstimate {
    pub fn value(self) -> Option<f64> {
        match self {
            Self::Defined(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_defined(self) -> bool {
        matches!(self, Self::Defined(_))
    }

    fn capped(v: f64) -> Self {
        if v > EPSILON_CAP {
            Self::Saturated
        } else {
            Self::Defined(v.max(0.0))
        }
    }
}

/// Inverts the uniform black-box bound at δ = 0:
/// `ε̃ = ln((γ̃m + 1)/(1 − γ̃m/(m − 1)))`.
pub fn invert_blackbox(gamma: f64, m: usize) -> EpsEstimate {
    let mf = m as f64;
    if !(gamma > 0.0) || gamma >= (mf - 1.0) / mf {
        return EpsEstimate::Undefined;
    }
    EpsEstimate::capped(((gamma * mf + 1.0) / (1.0 - gamma * mf / (mf - 1.0))).ln())
}

/// Ceiling of the mechanism's uniform-prior RAD bound over ε ∈ [0, ∞).
pub fn bound_supremum(kind: LdpKind, m: usize) -> f64 {
    let mf = m as f64;
    match kind {
        LdpKind::Grr | LdpKind::Ss => (mf - 1.0) / mf,
        LdpKind::Oue => (mf - 1.0) / (2.0 * mf),
    }
}

/// Inverts the mechanism's own uniform-prior RAD bound.
pub fn invert_mechanism_bound(kind: LdpKind, gamma: f64, m: usize) -> EpsEstimate {
    if !(gamma > 0.0) || gamma >= bound_supremum(kind, m) {
        return EpsEstimate::Undefined;
    }
    match kind {
        LdpKind::Grr => invert_blackbox(gamma, m),
        LdpKind::Oue => {
            let f = |e: f64| oue_uniform(m, e);
            if f(EPSILON_CAP) < gamma {
                return EpsEstimate::Saturated;
            }
            EpsEstimate::capped(bisect_increasing(f, gamma, 0.0, EPSILON_CAP, 1e-9, 1e-12))
        }
        LdpKind::Ss => match ss_calibrate(m, gamma) {
            Ok((eps, _)) => EpsEstimate::capped(eps),
            Err(_) => EpsEstimate::Saturated,
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    pub kind: LdpKind,
    /// The ε the mechanism is run with (the claim under audit).
    pub claimed_epsilon: f64,
    pub m: usize,
    pub repetitions: usize,
    pub budget: u64,
    pub seed: u64,
    pub threads: usize,
}

impl AuditConfig {
    /// Five repetitions over a budget of 10⁶ trials.
    pub fn new(kind: LdpKind, claimed_epsilon: f64, m: usize, seed: u64) -> Self {
        Self { kind, claimed_epsilon, m, repetitions: 5, budget: 1_000_000, seed, threads: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRepetition {
    pub repetition: usize,
    pub gamma_hat: f64,
    pub standard_error: f64,
    pub eps_hat: EpsEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub kind: LdpKind,
    pub claimed_epsilon: f64,
    pub m: usize,
    pub rows: Vec<AuditRepetition>,
    /// Mean and standard deviation over defined repetitions only.
    pub mean_eps: Option<f64>,
    pub std_eps: Option<f64>,
    pub undefined_count: usize,
    pub saturated_count: usize,
    pub trial_budget: u64,
    pub trials_per_target: u64,
    pub trials_per_pair: u64,
}

impl AuditReport {
    /// Whether the mean estimate lies within `tolerance` of the claim.
    pub fn agrees(&self, tolerance: f64) -> bool {
        self.mean_eps.is_some_and(|e| (e - self.claimed_epsilon).abs() <= tolerance)
    }
}

/// Turns a measured advantage into ε̃, accounting for its standard error.
///
/// An advantage within two standard errors of zero is undefined (no evidence
/// of leakage); one within two standard errors of the bound's ceiling is
/// saturated, since the bound is too flat there for the inversion to carry
/// information.
pub fn eps_from_advantage(kind: LdpKind, m: usize, gamma: f64, standard_error: f64) -> EpsEstimate {
    match invert_mechanism_bound(kind, gamma, m) {
        EpsEstimate::Defined(_) if gamma - 2.0 * standard_error <= 0.0 => EpsEstimate::Undefined,
        EpsEstimate::Defined(_) if gamma + 2.0 * standard_error >= bound_supremum(kind, m) => {
            EpsEstimate::Saturated
        }
        e => e,
    }
}

fn run_once<M: Mechanism>(mech: &M, plan: &EstimationPlan, prior: &DiscretePrior, threat: &ThreatModel) -> Result<(f64, f64)> {
    let attack = OptimalAttack::new(mech, prior, threat)?;
    let r = estimate(plan, mech, prior, threat, &attack)?;
    Ok((r.estimate, r.standard_error))
}

/// Runs the audit protocol: uniform prior, exact match, no side information,
/// optimal attack, one independent estimation per repetition.
pub fn audit(cfg: &AuditConfig) -> Result<AuditReport> {
    if cfg.repetitions == 0 {
        return config("at least one repetition is required");
    }
    let m = cfg.m;
    let base = EstimationPlan::from_budget(cfg.budget, m, cfg.seed)?.with_threads(cfg.threads);
    let prior = DiscretePrior::uniform(m)?;
    let threat = ThreatModel::exact_no_aux(m)?;
    let factory = StreamFactory::new(cfg.seed);
    let mut rows = Vec::with_capacity(cfg.repetitions);
    for rep in 0..cfg.repetitions {
        let plan = EstimationPlan { seed: factory.child_seed(&[rep as u64]), ..base.clone() };
        let (gamma, se) = match cfg.kind {
            LdpKind::Grr => run_once(&GrrMechanism::new(m, cfg.claimed_epsilon)?, &plan, &prior, &threat)?,
            LdpKind::Oue => run_once(&OueMechanism::new(m, cfg.claimed_epsilon)?, &plan, &prior, &threat)?,
            LdpKind::Ss => run_once(&SsMechanism::new(m, cfg.claimed_epsilon)?, &plan, &prior, &threat)?,
        };
        rows.push(AuditRepetition {
            repetition: rep,
            gamma_hat: gamma,
            standard_error: se,
            eps_hat: eps_from_advantage(cfg.kind, m, gamma, se),
        });
    }
    let defined: Vec<f64> = rows.iter().filter_map(|r| r.eps_hat.value()).collect();
    let (mean_eps, std_eps) = if defined.is_empty() {
        (None, None)
    } else {
        let (mu, sd) = mean_std(&defined);
        (Some(mu), Some(sd))
    };
    Ok(AuditReport {
        kind: cfg.kind,
        claimed_epsilon: cfg.claimed_epsilon,
        m,
        undefined_count: rows.iter().filter(|r| r.eps_hat == EpsEstimate::Undefined).count(),
        saturated_count: rows.iter().filter(|r| r.eps_hat == EpsEstimate::Saturated).count(),
        rows,
        mean_eps,
        std_eps,
        trial_budget: cfg.budget,
        trials_per_target: base.trials_per_target,
        trials_per_pair: base.pair_trials(),
    })
}
