use rand::Rng;
use rand_distr::{Beta as BetaDist, Distribution};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta as BetaLaw, Continuous, ContinuousCDF};

use crate::error::{config, domain, Result};

const SUM_TOLERANCE: f64 = 1e-12;

/// Anything that exposes the resampling probability Σπ².
pub trait PriorStats {
    fn kappa_pi(&self) -> f64;
}

/// Probability weights over the records of a discrete universe.
///
/// When built from counts the integer counts are kept alongside the weights,
/// each weight being a single correctly rounded division.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretePrior {
    weights: Vec<f64>,
    counts: Option<Vec<u64>>,
}

impl DiscretePrior {
    pub fn uniform(m: usize) -> Result<Self> {
        if m < 2 {
            return config("uniform prior needs m >= 2");
        }
        Self::from_counts(vec![1; m])
    }

    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.len() < 2 {
            return config("a prior needs at least 2 records");
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return config(format!("prior weight {w} is not a nonnegative number"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return config(format!("prior weights sum to {total}, expected 1"));
        }
        Ok(Self { weights, counts: None })
    }

    pub fn from_counts(counts: Vec<u64>) -> Result<Self> {
        if counts.len() < 2 {
            return config("a prior needs at least 2 records");
        }
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return config("counts are all zero");
        }
        let weights = counts.iter().map(|&c| c as f64 / total as f64).collect();
        Ok(Self { weights, counts: Some(counts) })
    }

    /// All mass on record `z`.
    pub fn point_mass(m: usize, z: usize) -> Result<Self> {
        if z >= m {
            return config(format!("record {z} outside universe of size {m}"));
        }
        let mut counts = vec![0; m];
        counts[z] = 1;
        Self::from_counts(counts)
    }

    /// Mass `p` on record 0 and `1 − p` on record 1.
    pub fn two_point(m: usize, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return config(format!("two-point mass {p} outside [0, 1]"));
        }
        let mut w = vec![0.0; m];
        w[0] = p;
        w[1] = 1.0 - p;
        Self::from_weights(w)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn counts(&self) -> Option<&[u64]> {
        self.counts.as_deref()
    }

    pub fn weight(&self, z: usize) -> f64 {
        self.weights[z]
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().cloned().fold(0.0, f64::max)
    }

    pub fn min_weight(&self) -> f64 {
        self.weights.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn is_uniform(&self) -> bool {
        match &self.counts {
            Some(c) => c.iter().all(|&x| x == c[0]),
            None => self.max_weight() - self.min_weight() <= 1e-15,
        }
    }
}

impl PriorStats for DiscretePrior {
    fn kappa_pi(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum()
    }
}

/// Prior over a real interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ContinuousPrior {
    Uniform { lo: f64, hi: f64 },
    Beta { alpha: f64, beta: f64 },
}

impl ContinuousPrior {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return config(format!("invalid uniform support [{lo}, {hi}]"));
        }
        Ok(Self::Uniform { lo, hi })
    }

    pub fn beta(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
            return config(format!("invalid beta parameters ({alpha}, {beta})"));
        }
        Ok(Self::Beta { alpha, beta })
    }

    pub fn support(&self) -> (f64, f64) {
        match *self {
            Self::Uniform { lo, hi } => (lo, hi),
            Self::Beta { .. } => (0.0, 1.0),
        }
    }

    fn beta_law(alpha: f64, beta: f64) -> BetaLaw {
        BetaLaw::new(alpha, beta).expect("validated beta parameters")
    }

    pub fn density(&self, z: f64) -> f64 {
        let (lo, hi) = self.support();
        if z < lo || z > hi {
            return 0.0;
        }
        match *self {
            Self::Uniform { lo, hi } => 1.0 / (hi - lo),
            Self::Beta { alpha, beta } => Self::beta_law(alpha, beta).pdf(z),
        }
    }

    pub fn cdf(&self, z: f64) -> f64 {
        let (lo, hi) = self.support();
        if z <= lo {
            return 0.0;
        }
        if z >= hi {
            return 1.0;
        }
        match *self {
            Self::Uniform { lo, hi } => (z - lo) / (hi - lo),
            Self::Beta { alpha, beta } => Self::beta_law(alpha, beta).cdf(z),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Uniform { lo, hi } => lo + (hi - lo) * rng.gen::<f64>(),
            Self::Beta { alpha, beta } => BetaDist::new(alpha, beta).expect("validated").sample(rng),
        }
    }

    /// Largest prior mass of an absolute-difference ball of radius `eta`
    /// centred inside the support.
    pub fn kappa_plus(&self, eta: f64) -> Result<f64> {
        self.ball_mass_extreme(eta, true)
    }

    /// Smallest prior mass of such a ball.
    pub fn kappa_minus(&self, eta: f64) -> Result<f64> {
        self.ball_mass_extreme(eta, false)
    }

    fn ball_mass_extreme(&self, eta: f64, max: bool) -> Result<f64> {
        if !(eta >= 0.0) {
            return domain(format!("threshold {eta} must be nonnegative"));
        }
        let (lo, hi) = self.support();
        let mass = |c: f64| self.cdf(c + eta) - self.cdf(c - eta);
        let n = 4000;
        let mut best = mass(lo);
        let mut best_c = lo;
        for k in 1..=n {
            let c = lo + (hi - lo) * k as f64 / n as f64;
            let v = mass(c);
            if (max && v > best) || (!max && v < best) {
                best = v;
                best_c = c;
            }
        }
        // polish on the neighbouring grid cell
        let step = (hi - lo) / n as f64;
        let (a, b) = ((best_c - step).max(lo), (best_c + step).min(hi));
        let sign = if max { 1.0 } else { -1.0 };
        let (_, v) = crate::numeric::golden_section_max(|c| sign * mass(c), a, b, 1e-12);
        Ok(if max { best.max(v) } else { best.min(-v) })
    }
}

impl PriorStats for ContinuousPrior {
    fn kappa_pi(&self) -> f64 {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_pi_values() {
        assert!((DiscretePrior::uniform(4).unwrap().kappa_pi() - 0.25).abs() < 1e-15);
        assert_eq!(DiscretePrior::point_mass(5, 2).unwrap().kappa_pi(), 1.0);
        let p = DiscretePrior::from_weights(vec![0.5, 0.25, 0.25]).unwrap();
        assert!((p.kappa_pi() - 0.375).abs() < 1e-15);
        assert_eq!(ContinuousPrior::uniform(0.0, 1.0).unwrap().kappa_pi(), 0.0);
    }

    #[test]
    fn weights_must_sum_to_one() {
        assert!(DiscretePrior::from_weights(vec![0.5, 0.4]).is_err());
        assert!(DiscretePrior::from_weights(vec![0.5, -0.1, 0.6]).is_err());
        assert!(DiscretePrior::from_counts(vec![0, 0]).is_err());
    }

    #[test]
    fn beta_density_integrates_to_one() {
        let rule = crate::numeric::gauss_legendre(32);
        for prior in [ContinuousPrior::beta(2.0, 3.0).unwrap(), ContinuousPrior::uniform(0.0, 1.0).unwrap()] {
            let total = crate::numeric::integrate(|z| prior.density(z), 0.0, 1.0, 64, &rule);
            assert!((total - 1.0).abs() < 1e-6, "{prior:?}: {total}");
        }
        // the U-shaped prior has integrable endpoint singularities; use the CDF
        let b = ContinuousPrior::beta(0.1, 0.1).unwrap();
        assert!((b.cdf(1.0 - 1e-200) - b.cdf(1e-200) - 1.0).abs() < 1e-9);
        assert!((b.cdf(0.5) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn continuous_kappa_plus() {
        let u = ContinuousPrior::uniform(0.0, 1.0).unwrap();
        assert!((u.kappa_plus(0.1).unwrap() - 0.2).abs() < 1e-9);
        assert!((u.kappa_minus(0.1).unwrap() - 0.1).abs() < 1e-9);
        assert!((u.kappa_plus(0.75).unwrap() - 1.0).abs() < 1e-12);
    }
}
