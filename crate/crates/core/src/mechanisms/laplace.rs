use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{scaled_from_logs, Mechanism};
use crate::accounting::tv_eps_delta;
use crate::error::{config, domain, Result};

/// Laplace noise of scale `Δq/ε` added to a record's query value, optionally
/// clamped to an interval afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaplaceMechanism {
    sensitivity: f64,
    epsilon: f64,
    scale: f64,
    truncation: Option<(f64, f64)>,
    locations: Vec<f64>,
}

impl LaplaceMechanism {
    pub fn new(sensitivity: f64, epsilon: f64) -> Result<Self> {
        if !(sensitivity > 0.0 && epsilon > 0.0 && sensitivity.is_finite() && epsilon.is_finite()) {
            return config(format!("Laplace needs Δq > 0 and ε > 0 (got {sensitivity}, {epsilon})"));
        }
        Ok(Self { sensitivity, epsilon, scale: sensitivity / epsilon, truncation: None, locations: Vec::new() })
    }

    /// Clamps outputs to `[lo, hi]`; endpoint mass becomes atoms.
    pub fn with_truncation(mut self, lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return config(format!("empty truncation interval [{lo}, {hi}]"));
        }
        self.truncation = Some((lo, hi));
        Ok(self)
    }

    /// Query value of each record.
    pub fn with_locations(mut self, locations: Vec<f64>) -> Result<Self> {
        if locations.len() < 2 {
            return config("need at least two record locations");
        }
        self.locations = locations;
        Ok(self)
    }

    /// `m` records evenly spaced on `[0, 1]`.
    pub fn with_unit_grid(self, m: usize) -> Result<Self> {
        self.with_locations(unit_grid(m))
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn sensitivity(&self) -> f64 {
        self.sensitivity
    }

    pub fn truncation(&self) -> Option<(f64, f64)> {
        self.truncation
    }

    fn cdf(&self, x: f64, center: f64) -> f64 {
        let d = (x - center) / self.scale;
        if d < 0.0 {
            0.5 * d.exp()
        } else {
            1.0 - 0.5 * (-d).exp()
        }
    }

    /// Probability that the released value falls in `[lo, hi]`.
    pub fn interval_probability(&self, lo: f64, hi: f64, center: f64) -> f64 {
        if hi < lo {
            return 0.0;
        }
        match self.truncation {
            None => self.cdf(hi, center) - self.cdf(lo, center),
            Some((a, b)) => {
                if hi < a || lo > b {
                    return 0.0;
                }
                let upper = if hi >= b { 1.0 } else { self.cdf(hi, center) };
                let lower = if lo <= a { 0.0 } else { self.cdf(lo, center) };
                upper - lower
            }
        }
    }

    /// One draw centred at `center`.
    pub fn sample_at<R: Rng + ?Sized>(&self, center: f64, rng: &mut R) -> f64 {
        let u: f64 = rng.gen::<f64>() - 0.5;
        let noise = -self.scale * u.signum() * (-2.0 * u.abs()).ln_1p();
        let x = center + noise;
        match self.truncation {
            Some((a, b)) => x.clamp(a, b),
            None => x,
        }
    }

    /// Log of the density (interior) or atom mass (truncation endpoints).
    pub fn log_likelihood_at(&self, theta: f64, center: f64) -> f64 {
        if let Some((a, b)) = self.truncation {
            if theta <= a {
                return self.cdf(a, center).ln();
            }
            if theta >= b {
                return (1.0 - self.cdf(b, center)).ln();
            }
        }
        -(theta - center).abs() / self.scale - (2.0 * self.scale).ln()
    }
}

pub(crate) fn unit_grid(m: usize) -> Vec<f64> {
    if m < 2 {
        return vec![0.0; m];
    }
    (0..m).map(|i| i as f64 / (m - 1) as f64).collect()
}

impl Mechanism for LaplaceMechanism {
    type Output = f64;

    fn universe_size(&self) -> usize {
        self.locations.len()
    }

    fn sample<R: Rng + ?Sized>(&self, z: usize, rng: &mut R) -> f64 {
        self.sample_at(self.locations[z], rng)
    }

    fn pmf(&self, theta: &f64, z: usize) -> Result<f64> {
        if z >= self.locations.len() {
            return domain(format!("record {z} has no location"));
        }
        if let Some((a, b)) = self.truncation {
            if *theta < a || *theta > b {
                return domain(format!("output {theta} outside [{a}, {b}]"));
            }
        }
        Ok(self.log_likelihood_at(*theta, self.locations[z]).exp())
    }

    fn scaled_likelihoods(&self, theta: &f64, out: &mut [f64]) -> f64 {
        scaled_from_logs(self.locations.iter().map(|&c| self.log_likelihood_at(*theta, c)), out)
    }

    fn total_variation(&self) -> f64 {
        tv_eps_delta(self.epsilon, 0.0)
    }
}
