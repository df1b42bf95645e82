use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use super::{check_enumerable, check_epsilon, check_m, EnumerableMechanism, Mechanism};
use crate::error::{config, domain, Result};

/// Subset selection: report a size-ω subset that contains the true record
/// with probability `p`, the rest drawn uniformly from the other records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SsMechanism {
    m: usize,
    omega: usize,
    p: f64,
    epsilon: f64,
}

/// Subset size `max(1, ⌊m/(e^ε + 1)⌋)`.
pub fn subset_size(m: usize, epsilon: f64) -> usize {
    ((m as f64 / (epsilon.exp() + 1.0)).floor() as usize).max(1)
}

/// Inclusion probability of the true record for subset size `omega`.
pub fn inclusion_probability(m: usize, omega: usize, epsilon: f64) -> f64 {
    let w = omega as f64;
    if epsilon > 700.0 {
        return 1.0;
    }
    let e = epsilon.exp();
    w * e / (w * e + m as f64 - w)
}

impl SsMechanism {
    pub fn new(m: usize, epsilon: f64) -> Result<Self> {
        check_m(m)?;
        check_epsilon(epsilon)?;
        let omega = subset_size(m, epsilon).min(m - 1);
        Ok(Self { m, omega, p: inclusion_probability(m, omega, epsilon), epsilon })
    }

    /// Explicit subset size and inclusion probability; `p ≥ ω/m` keeps ε ≥ 0.
    pub fn with_parameters(m: usize, omega: usize, p: f64) -> Result<Self> {
        check_m(m)?;
        if omega == 0 || omega >= m {
            return config(format!("subset size {omega} must be in 1..{m}"));
        }
        let floor = omega as f64 / m as f64;
        if !(p >= floor - 1e-15 && p <= 1.0) {
            return config(format!("inclusion probability {p} must lie in [{floor}, 1]"));
        }
        let epsilon = if p >= 1.0 {
            f64::INFINITY
        } else {
            (p * (m - omega) as f64 / (omega as f64 * (1.0 - p))).ln().max(0.0)
        };
        Ok(Self { m, omega, p, epsilon })
    }

    pub fn omega(&self) -> usize {
        self.omega
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    fn ln_containing(&self) -> f64 {
        self.p.ln() - ln_binomial((self.m - 1) as u64, (self.omega - 1) as u64)
    }

    fn ln_missing(&self) -> f64 {
        (1.0 - self.p).ln() - ln_binomial((self.m - 1) as u64, self.omega as u64)
    }

    fn validate(&self, theta: &[usize]) -> Result<()> {
        if theta.len() != self.omega {
            return domain(format!("subset has {} elements, expected {}", theta.len(), self.omega));
        }
        if theta.windows(2).any(|w| w[0] >= w[1]) || theta.iter().any(|&z| z >= self.m) {
            return domain("subset must be a strictly increasing list of records");
        }
        Ok(())
    }
}

impl Mechanism for SsMechanism {
    type Output = Vec<usize>;

    fn universe_size(&self) -> usize {
        self.m
    }

    fn sample<R: Rng + ?Sized>(&self, z: usize, rng: &mut R) -> Vec<usize> {
        let include = rng.gen::<f64>() < self.p;
        let k = if include { self.omega - 1 } else { self.omega };
        let mut out: Vec<usize> = index::sample(rng, self.m - 1, k)
            .into_iter()
            .map(|i| if i >= z { i + 1 } else { i })
            .collect();
        if include {
            out.push(z);
        }
        out.sort_unstable();
        out
    }

    fn pmf(&self, theta: &Vec<usize>, z: usize) -> Result<f64> {
        self.validate(theta)?;
        if z >= self.m {
            return domain(format!("record {z} outside 0..{}", self.m));
        }
        let contains = theta.binary_search(&z).is_ok();
        Ok(if contains { self.ln_containing() } else { self.ln_missing() }.exp())
    }

    fn scaled_likelihoods(&self, theta: &Vec<usize>, out: &mut [f64]) -> f64 {
        // missing/containing = (1 − p)ω / (p(m − ω))
        let ratio = if self.p >= 1.0 {
            0.0
        } else {
            (1.0 - self.p) * self.omega as f64 / (self.p * (self.m - self.omega) as f64)
        };
        out.iter_mut().for_each(|o| *o = ratio);
        for &t in theta {
            out[t] = 1.0;
        }
        self.ln_containing()
    }

    fn total_variation(&self) -> f64 {
        ((self.m as f64 * self.p - self.omega as f64) / (self.m - 1) as f64).max(0.0)
    }
}

impl EnumerableMechanism for SsMechanism {
    fn output_count(&self) -> f64 {
        ln_binomial(self.m as u64, self.omega as u64).exp().round()
    }

    fn for_each_output(&self, f: &mut dyn FnMut(&Vec<usize>)) -> Result<()> {
        check_enumerable(self.output_count(), "subset selection")?;
        let k = self.omega;
        let mut c: Vec<usize> = (0..k).collect();
        loop {
            f(&c);
            let mut i = k;
            while i > 0 && c[i - 1] == self.m - k + i - 1 {
                i -= 1;
            }
            if i == 0 {
                return Ok(());
            }
            c[i - 1] += 1;
            for j in i..k {
                c[j] = c[j - 1] + 1;
            }
        }
    }
}
