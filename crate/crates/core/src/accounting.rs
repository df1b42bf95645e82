//! Trade-off functions, total variation, and composition rules.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::numeric::{golden_section_max, norm_cdf, norm_quantile};

/// Hypothesis-testing trade-off curve of a mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TradeoffFunction {
    EpsDelta { epsilon: f64, delta: f64 },
    Gaussian { mu: f64 },
}

impl TradeoffFunction {
    pub fn eps_delta(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon >= 0.0) || !(0.0..=1.0).contains(&delta) {
            return domain(format!("invalid (ε, δ) = ({epsilon}, {delta})"));
        }
        Ok(Self::EpsDelta { epsilon, delta })
    }

    pub fn gaussian(mu: f64) -> Result<Self> {
        if !(mu >= 0.0) {
            return domain(format!("invalid GDP parameter μ = {mu}"));
        }
        Ok(Self::Gaussian { mu })
    }

    /// Evaluates `f(α)`.
    pub fn eval(&self, alpha: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&alpha) {
            return domain(format!("α = {alpha} outside [0, 1]"));
        }
        Ok(self.eval_unchecked(alpha))
    }

    pub(crate) fn eval_unchecked(&self, alpha: f64) -> f64 {
        match *self {
            Self::EpsDelta { epsilon, delta } => {
                let e = epsilon.exp();
                let a = 1.0 - delta - e * alpha;
                let b = (1.0 - delta - alpha) / e;
                a.max(b).max(0.0)
            }
            Self::Gaussian { mu } => {
                if alpha <= 0.0 {
                    1.0
                } else if alpha >= 1.0 {
                    0.0
                } else {
                    norm_cdf(norm_quantile(1.0 - alpha) - mu)
                }
            }
        }
    }

    /// `1 − f(α) − α`, the advantage of a test at level α.
    pub fn gap(&self, alpha: f64) -> f64 {
        1.0 - self.eval_unchecked(alpha) - alpha
    }

    /// Maximum of [`Self::gap`] over `[lo, hi] ⊆ [0, 1]`.
    ///
    /// The gap is concave. The Gaussian peak is known in closed form and is
    /// clamped to the interval; other curves use golden-section search, with
    /// the branch crossing of the (ε, δ) curve checked as an extra candidate.
    pub fn max_gap(&self, lo: f64, hi: f64) -> f64 {
        let (lo, hi) = (lo.clamp(0.0, 1.0), hi.clamp(0.0, 1.0));
        if hi <= lo {
            return self.gap(lo);
        }
        match *self {
            Self::Gaussian { mu } => {
                let peak = 1.0 - norm_cdf(mu / 2.0);
                self.gap(peak.clamp(lo, hi))
            }
            Self::EpsDelta { epsilon, delta } => {
                let (_, v) = golden_section_max(|a| self.gap(a), lo, hi, 1e-9);
                let cross = (1.0 - delta) / (epsilon.exp() + 1.0);
                if (lo..=hi).contains(&cross) {
                    v.max(self.gap(cross))
                } else {
                    v
                }
            }
        }
    }

    /// Total variation `max_α 1 − f(α) − α`.
    pub fn total_variation(&self) -> f64 {
        tv_from_tradeoff(self)
    }
}

/// Total variation of a trade-off function, analytically.
pub fn tv_from_tradeoff(tf: &TradeoffFunction) -> f64 {
    match *tf {
        TradeoffFunction::EpsDelta { epsilon, delta } => tv_eps_delta(epsilon, delta),
        TradeoffFunction::Gaussian { mu } => 2.0 * norm_cdf(mu / 2.0) - 1.0,
    }
}

/// `(e^ε − 1 + 2δ)/(e^ε + 1)`.
pub fn tv_eps_delta(epsilon: f64, delta: f64) -> f64 {
    if epsilon > 700.0 {
        return 1.0;
    }
    ((epsilon.exp_m1() + 2.0 * delta) / (epsilon.exp() + 1.0)).min(1.0)
}

/// TV after `steps` adaptive compositions of a `per_step`-TV mechanism.
pub fn compose_tv(per_step: f64, steps: u32) -> f64 {
    1.0 - (1.0 - per_step).powi(steps as i32)
}

/// μ-GDP composed `steps` times.
pub fn compose_gdp(mu: f64, steps: u32) -> Result<TradeoffFunction> {
    TradeoffFunction::gaussian(mu * (steps as f64).sqrt())
}

/// Basic (ε, δ) composition.
pub fn compose_basic(epsilon: f64, delta: f64, steps: u32) -> (f64, f64) {
    (steps as f64 * epsilon, steps as f64 * delta)
}
