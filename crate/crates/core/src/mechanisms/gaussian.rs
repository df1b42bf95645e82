use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::laplace::unit_grid;
use super::{scaled_from_logs, Mechanism};
use crate::accounting::{tv_from_tradeoff, TradeoffFunction};
use crate::error::{config, domain, Result};

/// Gaussian noise of standard deviation σ added to a record's query value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMechanism {
    sensitivity: f64,
    sigma: f64,
    locations: Vec<f64>,
}

impl GaussianMechanism {
    pub fn new(sensitivity: f64, sigma: f64) -> Result<Self> {
        if !(sensitivity > 0.0 && sigma > 0.0 && sensitivity.is_finite() && sigma.is_finite()) {
            return config(format!("Gaussian needs Δq > 0 and σ > 0 (got {sensitivity}, {sigma})"));
        }
        Ok(Self { sensitivity, sigma, locations: Vec::new() })
    }

    pub fn with_locations(mut self, locations: Vec<f64>) -> Result<Self> {
        if locations.len() < 2 {
            return config("need at least two record locations");
        }
        self.locations = locations;
        Ok(self)
    }

    pub fn with_unit_grid(self, m: usize) -> Result<Self> {
        self.with_locations(unit_grid(m))
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// GDP parameter `Δq/σ`.
    pub fn mu(&self) -> f64 {
        self.sensitivity / self.sigma
    }

    pub fn tradeoff(&self) -> TradeoffFunction {
        TradeoffFunction::Gaussian { mu: self.mu() }
    }

    pub fn sample_at<R: Rng + ?Sized>(&self, center: f64, rng: &mut R) -> f64 {
        let n: f64 = StandardNormal.sample(rng);
        center + self.sigma * n
    }

    fn log_density(&self, theta: f64, center: f64) -> f64 {
        let d = (theta - center) / self.sigma;
        -0.5 * d * d - (self.sigma * (2.0 * std::f64::consts::PI).sqrt()).ln()
    }
}

impl Mechanism for GaussianMechanism {
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
        Ok(self.log_density(*theta, self.locations[z]).exp())
    }

    fn scaled_likelihoods(&self, theta: &f64, out: &mut [f64]) -> f64 {
        scaled_from_logs(self.locations.iter().map(|&c| self.log_density(*theta, c)), out)
    }

    fn total_variation(&self) -> f64 {
        tv_from_tradeoff(&self.tradeoff())
    }
}
