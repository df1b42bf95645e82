use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_enumerable, check_epsilon, check_m, EnumerableMechanism, Mechanism};
use crate::error::{domain, Result};

/// Fixed-length bit vector used as the OUE report.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BitVector {
    len: usize,
    words: Vec<u64>,
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        Self { len, words: vec![0; len.div_ceil(64)] }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            v.set(i, b);
        }
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, bit: bool) {
        let mask = 1u64 << (i % 64);
        if bit {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }
}

/// Optimal unary encoding: the true bit is kept with probability 1/2, every
/// other bit is set with probability `q = 1/(e^ε + 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OueMechanism {
    m: usize,
    epsilon: f64,
    q: f64,
    ln_p: f64,
    ln_q: f64,
}

impl OueMechanism {
    pub fn new(m: usize, epsilon: f64) -> Result<Self> {
        check_m(m)?;
        check_epsilon(epsilon)?;
        let q = 1.0 / (epsilon.exp() + 1.0);
        // ln p = ln(1 − q) = −ln(1 + e^{−ε})
        let ln_p = -(-epsilon).exp().ln_1p();
        let ln_q = -epsilon.exp().ln_1p();
        Ok(Self { m, epsilon, q, ln_p, ln_q })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn p(&self) -> f64 {
        1.0 - self.q
    }

    /// ln P(θ|z) for a report with `ones` set bits, split by whether bit z is set.
    fn log_pmf(&self, ones: usize, bit_z: bool) -> f64 {
        let m = self.m as f64;
        let k = ones as f64;
        let half = -std::f64::consts::LN_2;
        if bit_z {
            half + (k - 1.0) * self.ln_q + (m - k) * self.ln_p
        } else {
            half + k * self.ln_q + (m - k - 1.0) * self.ln_p
        }
    }
}

impl Mechanism for OueMechanism {
    type Output = BitVector;

    fn universe_size(&self) -> usize {
        self.m
    }

    fn sample<R: Rng + ?Sized>(&self, z: usize, rng: &mut R) -> BitVector {
        let mut v = BitVector::zeros(self.m);
        // Bernoulli(q) via a 64-bit threshold compare
        let threshold = (self.q * 18_446_744_073_709_551_616.0) as u64;
        for i in 0..self.m {
            let bit = if i == z { rng.gen::<bool>() } else { rng.next_u64() < threshold };
            if bit {
                v.set(i, true);
            }
        }
        v
    }

    fn pmf(&self, theta: &BitVector, z: usize) -> Result<f64> {
        if theta.len() != self.m || z >= self.m {
            return domain(format!("report must have {} bits", self.m));
        }
        Ok(self.log_pmf(theta.count_ones(), theta.get(z)).exp())
    }

    fn scaled_likelihoods(&self, theta: &BitVector, out: &mut [f64]) -> f64 {
        // P/Q = p/q = e^ε
        let ratio = (self.ln_p - self.ln_q).exp();
        for (z, o) in out.iter_mut().enumerate() {
            *o = if theta.get(z) { ratio } else { 1.0 };
        }
        self.log_pmf(theta.count_ones(), false)
    }

    fn total_variation(&self) -> f64 {
        0.5 * self.epsilon.exp_m1() / (self.epsilon.exp() + 1.0)
    }
}

impl EnumerableMechanism for OueMechanism {
    fn output_count(&self) -> f64 {
        2f64.powi(self.m as i32)
    }

    fn for_each_output(&self, f: &mut dyn FnMut(&BitVector)) -> Result<()> {
        if self.m > 20 {
            check_enumerable(f64::INFINITY, "OUE with m > 20")?;
        }
        check_enumerable(self.output_count(), "OUE")?;
        let mut v = BitVector::zeros(self.m);
        for mask in 0u64..(1u64 << self.m) {
            v.words[0] = mask;
            f(&v);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unperturbed_one_hot_probability() {
        for m in [2usize, 5, 9] {
            let o = OueMechanism::new(m, 1.1).unwrap();
            let mut v = BitVector::zeros(m);
            v.set(1, true);
            let expect = 0.5 * o.p().powi(m as i32 - 1);
            assert!((o.pmf(&v, 1).unwrap() - expect).abs() < 1e-15);
            let zero = BitVector::zeros(m);
            assert!((o.pmf(&zero, 1).unwrap() - 0.5 * o.p().powi(m as i32 - 1)).abs() < 1e-15);
        }
    }

    #[test]
    fn total_variation_example() {
        let o = OueMechanism::new(4, 3f64.ln()).unwrap();
        assert!((o.total_variation() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn log_space_handles_large_universes() {
        let o = OueMechanism::new(5000, 2.0).unwrap();
        let v = BitVector::zeros(5000);
        let mut out = vec![0.0; 5000];
        let s = o.scaled_likelihoods(&v, &mut out);
        assert!(s.is_finite() && s < -100.0);
        assert!(out.iter().all(|&x| x == 1.0));
    }
}
