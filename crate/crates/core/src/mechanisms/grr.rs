use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_epsilon, check_m, check_enumerable, EnumerableMechanism, Mechanism};
use crate::error::{domain, Result};

/// Generalized randomized response over `m` categories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrrMechanism {
    m: usize,
    epsilon: f64,
    p: f64,
    q: f64,
}

impl GrrMechanism {
    pub fn new(m: usize, epsilon: f64) -> Result<Self> {
        check_m(m)?;
        check_epsilon(epsilon)?;
        // q = 1/(e^ε + m − 1), written to stay finite for large ε
        let (p, q) = if epsilon > 700.0 {
            (1.0, 0.0)
        } else {
            let e = epsilon.exp();
            let denom = e + (m - 1) as f64;
            (e / denom, 1.0 / denom)
        };
        Ok(Self { m, epsilon, p, q })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Probability of reporting the true category.
    pub fn p(&self) -> f64 {
        self.p
    }

    /// Probability of each specific wrong category.
    pub fn q(&self) -> f64 {
        self.q
    }
}

impl Mechanism for GrrMechanism {
    type Output = usize;

    fn universe_size(&self) -> usize {
        self.m
    }

    fn sample<R: Rng + ?Sized>(&self, z: usize, rng: &mut R) -> usize {
        if rng.gen::<f64>() < self.p {
            z
        } else {
            let other = rng.gen_range(0..self.m - 1);
            if other >= z {
                other + 1
            } else {
                other
            }
        }
    }

    fn pmf(&self, theta: &usize, z: usize) -> Result<f64> {
        if *theta >= self.m || z >= self.m {
            return domain(format!("category out of range 0..{}", self.m));
        }
        Ok(if *theta == z { self.p } else { self.q })
    }

    fn scaled_likelihoods(&self, theta: &usize, out: &mut [f64]) -> f64 {
        if self.q == 0.0 {
            out.iter_mut().for_each(|o| *o = 0.0);
            out[*theta] = 1.0;
            return 0.0;
        }
        out.iter_mut().for_each(|o| *o = 1.0);
        out[*theta] = self.p / self.q;
        self.q.ln()
    }

    fn total_variation(&self) -> f64 {
        self.p - self.q
    }
}

impl EnumerableMechanism for GrrMechanism {
    fn output_count(&self) -> f64 {
        self.m as f64
    }

    fn for_each_output(&self, f: &mut dyn FnMut(&usize)) -> Result<()> {
        check_enumerable(self.output_count(), "GRR")?;
        (0..self.m).for_each(|t| f(&t));
        Ok(())
    }
}
