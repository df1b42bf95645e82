//! Theoretical RAD and ReRo bounds and their inversion to noise parameters.
//!
//! Every bound is a pure function of the mechanism parameters, a summary of
//! the prior and the threat model. Sources are named by what they assume:
//!
//! | source          | assumes                                             |
//! |-----------------|-----------------------------------------------------|
//! | `worst-case`    | any mechanism, any side information                 |
//! | `optimal`       | exact enumeration of the output space               |
//! | `closed-form`   | GRR / OUE / SS / Laplace / Gaussian special cases   |
//! | `fdp`           | a trade-off curve, no side information              |
//! | `epsdelta`      | (ε, δ)-DP, no side information                      |
//! | `perfect-reco`  | (ε, δ)-DP, exact match, no side information         |
//! | `uniform-bb`    | (ε, δ)-DP, uniform prior, exact match, no side info |
//! | `gdp`           | composed Gaussian DP, uniform prior                 |
//! | `rero-eps`      | ReRo under ε-DP                                     |
//! | `rero-fdp`      | ReRo under f-DP                                     |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::accounting::{tv_eps_delta, TradeoffFunction};
use crate::domain::{kappa_minus, kappa_plus, AuxMode, ContinuousPrior, DiscretePrior, PriorStats, ThreatModel};
use crate::error::{config, contract, Error, Result};
use crate::mechanisms::{inclusion_probability, subset_size, EnumerableMechanism};
use crate::numeric::{bisect_increasing, norm_cdf, norm_quantile};

/// Where a bound value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundSource {
    WorstCase,
    Optimal,
    ClosedForm,
    Fdp,
    EpsDelta,
    PerfectReco,
    UniformBlackBox,
    Gdp,
    ReroEps,
    ReroFdp,
}

impl BoundSource {
    pub const ALL: [BoundSource; 10] = [
        Self::WorstCase,
        Self::Optimal,
        Self::ClosedForm,
        Self::Fdp,
        Self::EpsDelta,
        Self::PerfectReco,
        Self::UniformBlackBox,
        Self::Gdp,
        Self::ReroEps,
        Self::ReroFdp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::WorstCase => "worst-case",
            Self::Optimal => "optimal",
            Self::ClosedForm => "closed-form",
            Self::Fdp => "fdp",
            Self::EpsDelta => "epsdelta",
            Self::PerfectReco => "perfect-reco",
            Self::UniformBlackBox => "uniform-bb",
            Self::Gdp => "gdp",
            Self::ReroEps => "rero-eps",
            Self::ReroFdp => "rero-fdp",
        }
    }

    /// Whether the value bounds ReRo rather than RAD.
    pub fn is_rero(self) -> bool {
        matches!(self, Self::ReroEps | Self::ReroFdp)
    }
}

impl fmt::Display for BoundSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BoundSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Self::ALL.iter().map(|b| b.name()).collect();
                Error::Config(format!("unknown bound source '{s}' (expected one of {})", names.join(", ")))
            })
    }
}

/// Conditions under which a bound was computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assumptions {
    pub aux: String,
    pub eta: f64,
    pub prior: String,
}

/// A risk value with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadBound {
    pub value: f64,
    pub source: BoundSource,
    pub assumptions: Assumptions,
}

/// The prior statistics the black-box bounds consume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSummary {
    pub kappa_pi: f64,
    pub kappa_plus: f64,
    pub kappa_minus: f64,
    pub discrete: bool,
    pub aux_none: bool,
    pub assumptions: Assumptions,
}

fn aux_label(mode: &AuxMode) -> String {
    match mode {
        AuxMode::None => "none".into(),
        AuxMode::Full => "full".into(),
        AuxMode::Attribute(fields) => format!("attr:{}", fields.join(",")),
        AuxMode::Custom => "custom".into(),
    }
}

fn prior_label(prior: &DiscretePrior) -> String {
    if prior.is_uniform() {
        "uniform".into()
    } else {
        "discrete".into()
    }
}

fn continuous_label(prior: &ContinuousPrior) -> String {
    match prior {
        ContinuousPrior::Uniform { lo, hi } => format!("uniform[{lo},{hi}]"),
        ContinuousPrior::Beta { alpha, beta } => format!("beta({alpha},{beta})"),
    }
}

fn assumptions(prior: &DiscretePrior, threat: &ThreatModel) -> Assumptions {
    Assumptions { aux: aux_label(threat.aux().mode()), eta: threat.eta(), prior: prior_label(prior) }
}

impl PriorSummary {
    pub fn discrete(prior: &DiscretePrior, threat: &ThreatModel) -> Result<Self> {
        Ok(Self {
            kappa_pi: prior.kappa_pi(),
            kappa_plus: kappa_plus(prior, threat)?,
            kappa_minus: kappa_minus(prior, threat)?,
            discrete: true,
            aux_none: threat.aux().fiber_count() == 1,
            assumptions: assumptions(prior, threat),
        })
    }

    /// Continuous priors under absolute-difference error; no side information.
    pub fn continuous(prior: &ContinuousPrior, eta: f64) -> Result<Self> {
        Ok(Self {
            kappa_pi: 0.0,
            kappa_plus: prior.kappa_plus(eta)?,
            kappa_minus: prior.kappa_minus(eta)?,
            discrete: false,
            aux_none: true,
            assumptions: Assumptions { aux: "none".into(), eta, prior: continuous_label(prior) },
        })
    }

    /// Uniform prior over `m` records, exact match, no side information.
    pub fn uniform(m: usize) -> Self {
        let k = 1.0 / m as f64;
        Self {
            kappa_pi: k,
            kappa_plus: k,
            kappa_minus: k,
            discrete: true,
            aux_none: true,
            assumptions: Assumptions { aux: "none".into(), eta: 0.0, prior: "uniform".into() },
        }
    }

    fn require_no_aux(&self, what: &str) -> Result<()> {
        if !self.aux_none {
            return contract(format!("the {what} bound only holds without side information"));
        }
        Ok(())
    }
}

fn bound(value: f64, source: BoundSource, assumptions: Assumptions) -> RadBound {
    RadBound { value, source, assumptions }
}

/// `TV(M)·(1 − κ_π)` from a known total variation.
pub fn bound_worst_case<P: PriorStats + ?Sized>(total_variation: f64, prior: &P) -> RadBound {
    bound(
        total_variation * (1.0 - prior.kappa_pi()),
        BoundSource::WorstCase,
        Assumptions { aux: "any".into(), eta: f64::NAN, prior: "any".into() },
    )
}

/// Worst-case bound from (ε, δ) alone.
pub fn bound_worst_case_eps_delta<P: PriorStats + ?Sized>(epsilon: f64, delta: f64, prior: &P) -> RadBound {
    bound_worst_case(tv_eps_delta(epsilon, delta), prior)
}

/// Exact optimal RAD by enumerating every output.
///
/// For each output θ and aux value x the best guess maximizes the weighted
/// evidence `Σ_{z ∈ S(z'), a(z) = x} (p(θ|z) − p(θ))π_z` over `z'`.
pub fn bound_optimal_enumerated<M: EnumerableMechanism>(
    mech: &M,
    prior: &DiscretePrior,
    threat: &ThreatModel,
) -> Result<RadBound> {
    threat.check_prior(prior)?;
    if mech.universe_size() != prior.len() {
        return contract("mechanism and prior disagree on the universe size");
    }
    let m = prior.len();
    let pi = prior.weights();
    let aux = threat.aux();
    let mut lik = vec![0.0; m];
    let mut v = vec![0.0; m];
    let mut w = vec![0.0; m];
    let mut total = 0.0;
    let mut comp = 0.0;
    mech.for_each_output(&mut |theta| {
        let scale = mech.scaled_likelihoods(theta, &mut lik);
        let marginal: f64 = lik.iter().zip(pi).map(|(l, p)| l * p).sum();
        let mut sum = 0.0;
        for fiber in aux.fibers() {
            if threat.is_exact_match() {
                // W(z') is the fiber's own evidence on z' and 0 off the fiber.
                let mut best = if fiber.len() < m { 0.0 } else { f64::NEG_INFINITY };
                for &z in fiber {
                    best = f64::max(best, (lik[z] - marginal) * pi[z]);
                }
                sum += best;
            } else {
                v.iter_mut().for_each(|x| *x = 0.0);
                for &z in fiber {
                    v[z] = (lik[z] - marginal) * pi[z];
                }
                threat.ball_sums(&v, &mut w);
                sum += w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            }
        }
        // Kahan summation keeps the 1e-12 oracle comparisons meaningful.
        let y = sum * scale.exp() - comp;
        let t = total + y;
        comp = (t - total) - y;
        total = t;
    })?;
    Ok(bound(total, BoundSource::Optimal, assumptions(prior, threat)))
}

/// Mechanism parameters accepted by [`bound_closed_form`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ClosedFormMechanism {
    Grr { epsilon: f64 },
    Oue { epsilon: f64 },
    /// Subset selection with the standard ω(ε) and p(ε).
    Ss { epsilon: f64 },
    /// Subset selection with an explicit subset size and inclusion probability.
    SsParameters { omega: usize, p: f64 },
    /// Unit sensitivity, records evenly spaced on `[0, 1]`.
    Laplace { epsilon: f64 },
    /// Unit sensitivity, records evenly spaced on `[0, 1]`.
    Gaussian { sigma: f64 },
}

/// OUE bound, uniform prior, exact match, no side information.
pub fn oue_uniform(m: usize, epsilon: f64) -> f64 {
    if epsilon <= 0.0 {
        return 0.0;
    }
    let mf = m as f64;
    // (e^ε − 1)/(2m) · (1 − p^{m−1}) with p = e^ε/(1 + e^ε), written stably.
    let ln_p = -(-epsilon).exp().ln_1p();
    let tail = -((mf - 1.0) * ln_p).exp_m1();
    if epsilon > 700.0 {
        return (mf - 1.0) / (2.0 * mf);
    }
    epsilon.exp_m1() / (2.0 * mf) * tail
}

/// OUE bound for an arbitrary prior, exact match, no side information.
///
/// With weights sorted ascending, the most likely set bit decides the guess;
/// summing over outputs by their highest set position gives a closed form.
pub fn oue_general_prior(weights: &[f64], epsilon: f64) -> f64 {
    let mut pi = weights.to_vec();
    pi.sort_by(|a, b| a.total_cmp(b));
    let m = pi.len();
    let q = 1.0 / (epsilon.exp() + 1.0);
    let p = 1.0 - q;
    let mut first = 0.0;
    let mut second = 0.0;
    let mut below = 0.0;
    for (i, &w) in pi.iter().enumerate() {
        let pow = p.powi((m - 1 - i) as i32);
        first += pow * w * (1.0 - w);
        second += pow * w * below;
        below += w;
    }
    (p - q) / (2.0 * p) * (first - q * second)
}

/// SS bound, uniform prior, exact match, no side information.
pub fn ss_uniform(m: usize, omega: usize, p: f64) -> f64 {
    let (mf, w) = (m as f64, omega as f64);
    ((p * mf - w) / (mf * w)).max(0.0)
}

fn ss_uniform_at(m: usize, epsilon: f64) -> f64 {
    let omega = subset_size(m, epsilon).min(m - 1);
    ss_uniform(m, omega, inclusion_probability(m, omega, epsilon))
}

/// Laplace bound with Δq = 1 on a uniform grid of `m` records.
pub fn laplace_uniform(m: usize, epsilon: f64) -> f64 {
    let mf = m as f64;
    (mf - 1.0) / mf * -(-epsilon / (2.0 * (mf - 1.0))).exp_m1()
}

/// Gaussian bound with Δq = 1 on a uniform grid of `m` records.
pub fn gaussian_uniform(m: usize, sigma: f64) -> f64 {
    let mf = m as f64;
    (mf - 1.0) / mf * (2.0 * norm_cdf(1.0 / (2.0 * sigma * (mf - 1.0))) - 1.0)
}

fn grr_tv(m: usize, epsilon: f64) -> f64 {
    if epsilon > 700.0 {
        return 1.0;
    }
    epsilon.exp_m1() / (epsilon.exp() + m as f64 - 1.0)
}

fn oue_tv(epsilon: f64) -> f64 {
    0.5 * tv_eps_delta(epsilon, 0.0)
}

/// Closed-form RAD for the special cases that admit one.
pub fn bound_closed_form(
    mech: ClosedFormMechanism,
    prior: &DiscretePrior,
    threat: &ThreatModel,
) -> Result<RadBound> {
    threat.check_prior(prior)?;
    let m = prior.len();
    let mode = threat.aux().mode().clone();
    let full = threat.aux().fiber_count() == m;
    let none = threat.aux().fiber_count() == 1;
    let uniform_exact = prior.is_uniform() && threat.is_exact_match();
    let unsupported = |why: &str| -> Result<RadBound> {
        Err(Error::NoClosedForm(format!(
            "{why}; use the optimal (enumerated) or worst-case bound instead"
        )))
    };
    let kappa = prior.kappa_pi();
    let value = match mech {
        ClosedFormMechanism::Grr { epsilon } if full => {
            if threat.some_ball_covers_all() {
                return unsupported("a success set covers the whole universe");
            }
            grr_tv(m, epsilon) * (1.0 - kappa)
        }
        ClosedFormMechanism::Grr { epsilon } if none => {
            let pi = prior.weights();
            let mass: Vec<f64> = (0..m).map(|c| threat.ball_sum(pi, c)).collect();
            let mut covered = 0.0;
            for theta in 0..m {
                let mut least = f64::INFINITY;
                threat.for_each_success(theta, |c| least = least.min(mass[c]));
                covered += pi[theta] * least;
            }
            grr_tv(m, epsilon) * (1.0 - covered)
        }
        ClosedFormMechanism::Oue { epsilon } if full => {
            if threat.some_ball_covers_all() {
                return unsupported("a success set covers the whole universe");
            }
            oue_tv(epsilon) * (1.0 - kappa)
        }
        ClosedFormMechanism::Oue { epsilon } if none && threat.is_exact_match() => {
            if prior.is_uniform() {
                oue_uniform(m, epsilon)
            } else {
                oue_general_prior(prior.weights(), epsilon)
            }
        }
        ClosedFormMechanism::Ss { epsilon } if none && uniform_exact => ss_uniform_at(m, epsilon),
        ClosedFormMechanism::SsParameters { omega, p } if none && uniform_exact => ss_uniform(m, omega, p),
        ClosedFormMechanism::Laplace { epsilon } if none && uniform_exact => laplace_uniform(m, epsilon),
        ClosedFormMechanism::Gaussian { sigma } if none && uniform_exact => gaussian_uniform(m, sigma),
        _ => {
            return unsupported(&format!(
                "{mech:?} has no closed form with side information '{}', η = {} and a {} prior",
                aux_label(&mode),
                threat.eta(),
                prior_label(prior)
            ))
        }
    };
    Ok(bound(value, BoundSource::ClosedForm, assumptions(prior, threat)))
}

/// f-DP bound without side information.
///
/// The continuous form maximizes the gap over `[κ⁻, κ⁺]`; for discrete priors
/// the refinement `(1 − κ_π)·max over [0, κ⁺/(1 − κ_π)]` is also evaluated and
/// the smaller value returned.
pub fn bound_fdp(tf: &TradeoffFunction, summary: &PriorSummary) -> Result<RadBound> {
    summary.require_no_aux("f-DP")?;
    let continuous = tf.max_gap(summary.kappa_minus, summary.kappa_plus);
    let mut value = continuous;
    if summary.discrete && summary.kappa_pi < 1.0 {
        let hi = (summary.kappa_plus / (1.0 - summary.kappa_pi)).min(1.0);
        value = value.min((1.0 - summary.kappa_pi) * tf.max_gap(0.0, hi));
    }
    Ok(bound(value.max(0.0), BoundSource::Fdp, summary.assumptions.clone()))
}

/// The three (ε, δ) branches, in order.
pub fn epsdelta_branches(epsilon: f64, delta: f64, summary: &PriorSummary) -> [f64; 3] {
    let em1 = epsilon.exp_m1();
    [
        summary.kappa_plus * em1 + delta,
        ((1.0 - summary.kappa_minus) * em1 + delta) / epsilon.exp(),
        tv_eps_delta(epsilon, delta) * (1.0 - summary.kappa_pi),
    ]
}

/// (ε, δ) bound without side information: the least of three branches.
pub fn bound_epsdelta(epsilon: f64, delta: f64, summary: &PriorSummary) -> Result<RadBound> {
    summary.require_no_aux("(ε, δ)")?;
    let value = epsdelta_branches(epsilon, delta, summary).into_iter().fold(f64::INFINITY, f64::min);
    Ok(bound(value, BoundSource::EpsDelta, summary.assumptions.clone()))
}

/// Black-box perfect-reconstruction bound for an arbitrary discrete prior.
pub fn bound_perfect_reco_bb(
    epsilon: f64,
    delta: f64,
    prior: &DiscretePrior,
    threat: &ThreatModel,
) -> Result<RadBound> {
    threat.check_prior(prior)?;
    if threat.aux().fiber_count() != 1 || !threat.is_exact_match() {
        return contract("the perfect-reconstruction bound needs exact match and no side information");
    }
    let mut pi = prior.weights().to_vec();
    pi.sort_by(|a, b| (b * (1.0 - b)).total_cmp(&(a * (1.0 - a))));
    let m = pi.len();
    let mf = m as f64;
    let tv = tv_eps_delta(epsilon, delta);
    let cap = (mf - 1.0) * (epsilon.exp_m1() + mf * delta) / (epsilon.exp() + mf - 1.0);
    // Largest K whose residual budget stays nonnegative; the residual shrinks in K.
    let mut k = 0;
    let mut head = 0.0;
    let mut spent = 0.0;
    while k < m {
        let next = spent + (1.0 - pi[k]) * tv;
        if cap - next < 0.0 {
            break;
        }
        spent = next;
        head += pi[k] * (1.0 - pi[k]);
        k += 1;
    }
    let residual = cap - spent;
    let tail_max = pi[k..].iter().copied().fold(0.0, f64::max);
    let value = (tv * head + residual * tail_max).max(0.0);
    Ok(bound(value, BoundSource::PerfectReco, assumptions(prior, threat)))
}

/// Black-box bound for a uniform prior over `m` records.
pub fn bound_uniform_bb(epsilon: f64, delta: f64, m: usize) -> RadBound {
    let mf = m as f64;
    let value = if epsilon > 700.0 {
        (mf - 1.0) / mf
    } else {
        (epsilon.exp_m1() + delta * mf) / (epsilon.exp() + mf - 1.0) * (mf - 1.0) / mf
    };
    bound(
        value,
        BoundSource::UniformBlackBox,
        Assumptions { aux: "none".into(), eta: 0.0, prior: "uniform".into() },
    )
}

/// RAD of `steps`-fold composed Gaussian noise of scale σ (unit sensitivity)
/// for a uniform prior over `m` records.
pub fn bound_gdp_composition(sigma: f64, steps: u32, m: usize) -> Result<RadBound> {
    let tf = TradeoffFunction::gaussian((steps as f64).sqrt() / sigma)?;
    let b = bound_fdp(&tf, &PriorSummary::uniform(m))?;
    Ok(RadBound { source: BoundSource::Gdp, ..b })
}

/// ReRo bound `κ⁺·e^ε` under ε-DP, capped at 1.
pub fn bound_rero_eps(epsilon: f64, summary: &PriorSummary) -> f64 {
    (summary.kappa_plus * epsilon.exp()).min(1.0)
}

/// ReRo bound `1 − f(κ⁺)` under f-DP.
pub fn bound_rero_fdp(tf: &TradeoffFunction, summary: &PriorSummary) -> f64 {
    1.0 - tf.eval_unchecked(summary.kappa_plus.clamp(0.0, 1.0))
}

/// Which mechanism parameter a calibration solves for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveFor {
    Epsilon,
    Sigma,
    InclusionProbability,
}

/// A monotone bound family to invert.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CalibrationSpec {
    /// GRR with full side information (or uniform exact match without it).
    Grr { m: usize, kappa_pi: f64 },
    Oue { m: usize },
    /// Subset selection, solving for ε; ω(ε) makes the bound a step-wise curve.
    Ss { m: usize },
    /// Subset selection with a fixed subset size, solving for p.
    SsInclusion { m: usize, omega: usize },
    Laplace { m: usize },
    Gaussian { m: usize },
    UniformBlackBox { m: usize, delta: f64 },
    /// Composed Gaussian DP (e.g. DP-SGD) with `steps` rounds, solving for σ.
    GdpComposition { m: usize, steps: u32 },
    /// ReRo `1 − f(κ⁺)` under ε-DP, solving for ε.
    ReroEps { kappa_plus: f64 },
}

pub const EPSILON_RANGE: (f64, f64) = (1e-6, 50.0);
pub const SIGMA_RANGE: (f64, f64) = (1e-3, 1e6);
/// Calibration tolerance on the bound value.
pub const CALIBRATION_TOLERANCE: f64 = 1e-6;

/// Result of inverting a bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub spec: CalibrationSpec,
    pub solve_for: SolveFor,
    pub parameter: f64,
    /// Bound value at `parameter`.
    pub achieved: f64,
    pub closed_form: bool,
}

impl CalibrationSpec {
    pub fn solve_for(&self) -> SolveFor {
        match self {
            Self::Gaussian { .. } | Self::GdpComposition { .. } => SolveFor::Sigma,
            Self::SsInclusion { .. } => SolveFor::InclusionProbability,
            _ => SolveFor::Epsilon,
        }
    }

    fn m(&self) -> Option<usize> {
        match *self {
            Self::Grr { m, .. }
            | Self::Oue { m }
            | Self::Ss { m }
            | Self::SsInclusion { m, .. }
            | Self::Laplace { m }
            | Self::Gaussian { m }
            | Self::UniformBlackBox { m, .. }
            | Self::GdpComposition { m, .. } => Some(m),
            Self::ReroEps { .. } => None,
        }
    }

    /// Least upper bound of the risk over the parameter range.
    pub fn supremum(&self) -> f64 {
        let edge = |m: usize| (m as f64 - 1.0) / m as f64;
        match *self {
            Self::Grr { kappa_pi, .. } => 1.0 - kappa_pi,
            Self::Oue { m } => (m as f64 - 1.0) / (2.0 * m as f64),
            Self::SsInclusion { m, omega } => (m - omega) as f64 / (m as f64 * omega as f64),
            Self::Ss { m } | Self::Laplace { m } | Self::Gaussian { m } => edge(m),
            Self::UniformBlackBox { m, .. } | Self::GdpComposition { m, .. } => edge(m),
            Self::ReroEps { .. } => 1.0,
        }
    }

    /// Bound value at a parameter value.
    pub fn bound_at(&self, x: f64) -> f64 {
        match *self {
            Self::Grr { m, kappa_pi } => grr_tv(m, x) * (1.0 - kappa_pi),
            Self::Oue { m } => oue_uniform(m, x),
            Self::Ss { m } => ss_uniform_at(m, x),
            Self::SsInclusion { m, omega } => ss_uniform(m, omega, x),
            Self::Laplace { m } => laplace_uniform(m, x),
            Self::Gaussian { m } => gaussian_uniform(m, x),
            Self::UniformBlackBox { m, delta } => bound_uniform_bb(x, delta, m).value,
            Self::GdpComposition { m, steps } => {
                bound_gdp_composition(x, steps, m).map(|b| b.value).unwrap_or(f64::NAN)
            }
            Self::ReroEps { kappa_plus } => {
                let tf = TradeoffFunction::EpsDelta { epsilon: x, delta: 0.0 };
                1.0 - tf.eval_unchecked(kappa_plus)
            }
        }
    }
}

/// Inverts a bound: finds the parameter at which it equals `risk`.
///
/// Closed-form inverses are used for GRR, Laplace, Gaussian, subset selection
/// and the uniform black-box and composed-GDP bounds; OUE and ReRo fall back
/// to bisection. Risk levels at or above the supremum are rejected.
pub fn calibrate(spec: &CalibrationSpec, risk: f64) -> Result<Calibration> {
    if !(risk > 0.0) || !risk.is_finite() {
        return config(format!("target risk {risk} must be a positive number"));
    }
    if let Some(m) = spec.m() {
        if m < 2 {
            return config(format!("universe size m = {m} must be at least 2"));
        }
    }
    let sup = spec.supremum();
    if risk >= sup {
        return Err(Error::Unreachable { target: risk, supremum: sup });
    }
    let done = |parameter: f64, closed_form: bool| Calibration {
        spec: *spec,
        solve_for: spec.solve_for(),
        parameter,
        achieved: spec.bound_at(parameter),
        closed_form,
    };
    match *spec {
        Spec::Grr { m, kappa_pi } => {
            let x = risk / (1.0 - kappa_pi);
            Ok(done(((1.0 + x * (m as f64 - 1.0)) / (1.0 - x)).ln(), true))
        }
        Spec::Laplace { m } => {
            let c = risk * m as f64 / (m as f64 - 1.0);
            Ok(done(-2.0 * (m as f64 - 1.0) * (-c).ln_1p(), true))
        }
        Spec::Gaussian { m } => {
            let c = risk * m as f64 / (m as f64 - 1.0);
            Ok(done(1.0 / (2.0 * (m as f64 - 1.0) * norm_quantile((1.0 + c) / 2.0)), true))
        }
        Spec::SsInclusion { m, omega } => Ok(done(omega as f64 * (risk * m as f64 + 1.0) / m as f64, true)),
        Spec::UniformBlackBox { m, delta } => {
            let mf = m as f64;
            let c = risk * mf / (mf - 1.0);
            let e = (1.0 - delta * mf + c * (mf - 1.0)) / (1.0 - c);
            if e < 1.0 {
                return config(format!(
                    "risk {risk} lies below the bound at ε = 0 ({})",
                    spec.bound_at(0.0)
                ));
            }
            Ok(done(e.ln(), true))
        }
        Spec::Ss { m } => ss_calibrate(m, risk).map(|(eps, _)| done(eps, true)),
        Spec::GdpComposition { m, steps } => gdp_calibrate(spec, m, steps, risk).map(|(s, cf)| done(s, cf)),
        Spec::Oue { .. } | Spec::ReroEps { .. } => bisect_epsilon(spec, risk).map(|e| done(e, false)),
    }
}

use CalibrationSpec as Spec;

fn bisect_epsilon(spec: &CalibrationSpec, risk: f64) -> Result<f64> {
    let (lo, hi) = EPSILON_RANGE;
    let f = |e: f64| spec.bound_at(e);
    if f(hi) < risk {
        return Err(Error::Unreachable { target: risk, supremum: spec.supremum() });
    }
    if f(lo) > risk {
        return config(format!("risk {risk} lies below the bound at ε = {lo}"));
    }
    Ok(bisect_increasing(f, risk, lo, hi, 1e-12, CALIBRATION_TOLERANCE * 1e-3))
}

/// Plateau edges of ω(ε): ω = k exactly on `(ln(m/(k+1) − 1), ln(m/k − 1)]`.
fn ss_plateaus(m: usize) -> Vec<(usize, f64, f64)> {
    let (lo, hi) = (0.0, EPSILON_RANGE.1);
    let top = subset_size(m, lo).min(m - 1);
    let mut out = Vec::new();
    let mut start = lo;
    for k in (1..=top).rev() {
        let end = if k == 1 { hi } else { (m as f64 / k as f64 - 1.0).ln().min(hi) };
        if end > start {
            out.push((k, start, end));
            start = end;
        }
    }
    out
}

/// SS ε for a target risk: the plateau-wise closed-form inverse, or the left
/// edge of the first plateau that starts above the target when the target
/// falls into a jump. Returns `(ε, exact)`.
pub(crate) fn ss_calibrate(m: usize, risk: f64) -> Result<(f64, bool)> {
    let mf = m as f64;
    for (omega, start, end) in ss_plateaus(m) {
        let w = omega as f64;
        let p = w * (risk * mf + 1.0) / mf;
        if p >= 1.0 {
            continue;
        }
        let eps = (p * (mf - w) / (w * (1.0 - p))).ln();
        if eps <= end + 1e-12 && eps >= start - 1e-12 {
            // At a plateau edge rounding can flip the subset size; step inward.
            for cand in [eps, eps - 1e-12 * eps.abs().max(1.0), eps + 1e-12 * eps.abs().max(1.0)] {
                let cand = cand.max(0.0);
                if subset_size(m, cand).min(m - 1) == omega {
                    return Ok((cand, true));
                }
            }
        }
        if eps < start {
            // The plateau already starts above the target.
            return Ok((start, false));
        }
    }
    Err(Error::Unreachable { target: risk, supremum: (mf - 1.0) / mf })
}

fn gdp_calibrate(spec: &CalibrationSpec, m: usize, steps: u32, risk: f64) -> Result<(f64, bool)> {
    let mf = m as f64;
    let root_t = (steps as f64).sqrt();
    let c = mf / (mf - 1.0) * risk;
    let alpha = 1.0 / (mf - 1.0);
    let mut candidates = Vec::new();
    if 1.0 - alpha - c > 0.0 {
        let mu = norm_quantile(1.0 - alpha) - norm_quantile(1.0 - alpha - c);
        if mu > 0.0 && 1.0 - norm_cdf(mu / 2.0) >= alpha {
            candidates.push(root_t / mu);
        }
    }
    let mu = 2.0 * norm_quantile((1.0 + c) / 2.0);
    if mu > 0.0 {
        candidates.push(root_t / mu);
    }
    for sigma in candidates {
        if (spec.bound_at(sigma) - risk).abs() <= 1e-9 {
            return Ok((sigma, true));
        }
    }
    // Bisection on log σ; the bound decreases in σ.
    let (lo, hi) = (SIGMA_RANGE.0.ln(), SIGMA_RANGE.1.ln());
    let f = |ls: f64| -spec.bound_at(ls.exp());
    if -f(lo) < risk {
        return Err(Error::Unreachable { target: risk, supremum: spec.bound_at(SIGMA_RANGE.0) });
    }
    let ls = bisect_increasing(f, -risk, lo, hi, 1e-13, CALIBRATION_TOLERANCE * 1e-3);
    Ok((ls.exp(), false))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{AuxMap, DiscreteUniverse, ErrorModel};
    use crate::mechanisms::{GrrMechanism, OueMechanism, SsMechanism, Mechanism};

    fn exact(m: usize) -> ThreatModel {
        ThreatModel::exact_no_aux(m).unwrap()
    }

    #[test]
    fn grr_examples() {
        let prior = DiscretePrior::uniform(3).unwrap();
        let g = GrrMechanism::new(3, 2f64.ln()).unwrap();
        let b = bound_optimal_enumerated(&g, &prior, &exact(3)).unwrap();
        assert!((b.value - 1.0 / 6.0).abs() < 1e-12);
        let cf = bound_closed_form(ClosedFormMechanism::Grr { epsilon: 2f64.ln() }, &prior, &exact(3)).unwrap();
        assert!((cf.value - 1.0 / 6.0).abs() < 1e-12);
        assert!((bound_worst_case(g.total_variation(), &prior).value - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn ss_example() {
        let prior = DiscretePrior::uniform(10).unwrap();
        let v = bound_closed_form(ClosedFormMechanism::Ss { epsilon: 4f64.ln() }, &prior, &exact(10)).unwrap();
        assert!((v.value - 0.15).abs() < 1e-12);
        let s = SsMechanism::new(10, 4f64.ln()).unwrap();
        let e = bound_optimal_enumerated(&s, &prior, &exact(10)).unwrap();
        assert!((e.value - 0.15).abs() < 1e-12);
    }

    #[test]
    fn oue_uniform_matches_enumeration() {
        for m in 2..=9 {
            let prior = DiscretePrior::uniform(m).unwrap();
            for eps in [0.3, 1.0, 2.5] {
                let o = OueMechanism::new(m, eps).unwrap();
                let e = bound_optimal_enumerated(&o, &prior, &exact(m)).unwrap().value;
                assert!((e - oue_uniform(m, eps)).abs() < 1e-12, "m={m} eps={eps}");
            }
        }
        assert!((oue_uniform(2, 3f64.ln()) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn fdp_gaussian_example() {
        let tf = TradeoffFunction::gaussian(1.0).unwrap();
        let b = bound_fdp(&tf, &PriorSummary::uniform(10)).unwrap();
        let expected = 0.9 * (1.0 - norm_cdf(norm_quantile(8.0 / 9.0) - 1.0) - 1.0 / 9.0);
        assert!((b.value - expected).abs() < 1e-12);
        assert!((b.value - 0.271).abs() < 1e-3);
    }

    #[test]
    fn fdp_rejects_side_information() {
        let prior = DiscretePrior::uniform(4).unwrap();
        let u = DiscreteUniverse::indexed(4).unwrap();
        let t = ThreatModel::new(&u, ErrorModel::exact(), AuxMap::full(4)).unwrap();
        let s = PriorSummary::discrete(&prior, &t).unwrap();
        let tf = TradeoffFunction::gaussian(1.0).unwrap();
        assert!(matches!(bound_fdp(&tf, &s), Err(Error::Contract(_))));
        assert!(matches!(bound_epsdelta(1.0, 0.0, &s), Err(Error::Contract(_))));
    }

    #[test]
    fn epsdelta_example() {
        let b = bound_epsdelta(1.0, 0.0, &PriorSummary::uniform(10)).unwrap();
        assert!((b.value - 0.1 * (1f64.exp() - 1.0)).abs() < 1e-12);
        assert!((b.value - 0.1718).abs() < 1e-4);
    }

    #[test]
    fn uniform_black_box_example() {
        assert!((bound_uniform_bb(2f64.ln(), 0.0, 3).value - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(bound_uniform_bb(0.0, 0.0, 7).value, 0.0);
    }

    #[test]
    fn rero_examples() {
        let s = PriorSummary::uniform(10);
        assert!((bound_rero_eps(1.0, &s) - 0.1 * 1f64.exp()).abs() < 1e-15);
        assert_eq!(bound_rero_eps(10.0, &s), 1.0);
        let tf = TradeoffFunction::eps_delta(1.0, 0.0).unwrap();
        let f = (1.0 - 0.1 * 1f64.exp()).max(0.9 / 1f64.exp());
        assert!((bound_rero_fdp(&tf, &s) - (1.0 - f)).abs() < 1e-15);
    }

    #[test]
    fn closed_form_rejects_unsupported() {
        let prior = DiscretePrior::from_weights(vec![0.5, 0.3, 0.2]).unwrap();
        let r = bound_closed_form(ClosedFormMechanism::Laplace { epsilon: 1.0 }, &prior, &exact(3));
        assert!(matches!(r, Err(Error::NoClosedForm(_))));
    }

    #[test]
    fn grr_calibration_examples() {
        let c = calibrate(&CalibrationSpec::Grr { m: 2, kappa_pi: 0.5 }, 0.1).unwrap();
        assert!((c.parameter - 1.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn gdp_calibration_example() {
        let c = calibrate(&CalibrationSpec::GdpComposition { m: 10, steps: 100 }, 0.1).unwrap();
        assert!((21.5..=22.5).contains(&c.parameter), "{}", c.parameter);
        assert!((c.achieved - 0.1).abs() < 1e-9);
    }

    #[test]
    fn oue_unreachable_names_supremum() {
        let e = calibrate(&CalibrationSpec::Oue { m: 10 }, 0.6).unwrap_err();
        assert_eq!(e, Error::Unreachable { target: 0.6, supremum: 0.45 });
        assert!(e.to_string().contains("supremum 0.45"));
    }

    #[test]
    fn ss_plateaus_tile_the_range() {
        for m in [3, 10, 100, 257] {
            let p = ss_plateaus(m);
            assert_eq!(p.first().unwrap().1, 0.0);
            assert_eq!(p.last().unwrap().2, EPSILON_RANGE.1);
            for w in p.windows(2) {
                assert_eq!(w[0].2, w[1].1);
            }
            for &(k, a, b) in &p {
                let mid = 0.5 * (a + b);
                assert_eq!(subset_size(m, mid).min(m - 1), k, "m={m} plateau {k} at {mid}");
            }
        }
    }

    #[test]
    fn ss_epsilon_calibration_round_trips_inside_plateaus() {
        let m = 100;
        for k in 1..40 {
            let risk = 0.02 * k as f64;
            let (eps, exact) = ss_calibrate(m, risk).unwrap();
            let got = ss_uniform_at(m, eps);
            if exact {
                assert!((got - risk).abs() < 1e-9, "risk {risk}: {got}");
            } else {
                assert!(got <= risk + 1e-12 || ss_uniform_at(m, eps + 1e-9) >= risk);
            }
        }
    }
}
