use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config, Result};

/// Exponential mechanism on `[0, 1]` with utility `−|z − θ|`:
/// `p(θ|z) ∝ exp(−|z − θ|/s)`, `s = 2Δ/ε`, normalized on the unit interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialMechanism1D {
    epsilon: f64,
    sensitivity: f64,
    s: f64,
}

impl ExponentialMechanism1D {
    pub fn new(epsilon: f64) -> Result<Self> {
        Self::with_sensitivity(epsilon, 1.0)
    }

    pub fn with_sensitivity(epsilon: f64, sensitivity: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite() && sensitivity > 0.0) {
            return config(format!("exponential mechanism needs ε > 0 (got {epsilon})"));
        }
        Ok(Self { epsilon, sensitivity, s: 2.0 * sensitivity / epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Temperature `s = 2Δ/ε`.
    pub fn temperature(&self) -> f64 {
        self.s
    }

    /// `∫₀¹ exp(−|z − θ|/s) dθ`.
    pub fn normalizer(&self, z: f64) -> f64 {
        let s = self.s;
        s * (-(-z / s).exp_m1() - (-(1.0 - z) / s).exp_m1())
    }

    pub fn density(&self, theta: f64, z: f64) -> f64 {
        if !(0.0..=1.0).contains(&theta) {
            return 0.0;
        }
        (-(z - theta).abs() / self.s).exp() / self.normalizer(z)
    }

    /// Upper bound `M = 1/(s(1 − e^{−1/s}))` on the density.
    pub fn density_cap(&self) -> f64 {
        1.0 / (self.s * -(-1.0 / self.s).exp_m1())
    }

    /// Inverse-CDF draw of θ given record `z ∈ [0, 1]`.
    pub fn sample<R: Rng + ?Sized>(&self, z: f64, rng: &mut R) -> f64 {
        let s = self.s;
        let left = -(-z / s).exp_m1();
        let right = -(-(1.0 - z) / s).exp_m1();
        let u: f64 = rng.gen::<f64>() * (left + right);
        if u < left {
            let v = u / left;
            (z + s * (-v * left).ln_1p()).clamp(0.0, 1.0)
        } else {
            let v = (u - left) / right;
            (z - s * (-v * right).ln_1p()).clamp(0.0, 1.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{gauss_legendre, integrate};
    use rand::SeedableRng;

    #[test]
    fn density_cap_examples() {
        let m1 = ExponentialMechanism1D::new(2.0).unwrap();
        assert!((m1.density_cap() - 1.0 / (1.0 - (-1f64).exp())).abs() < 1e-12);
        assert!((m1.density_cap() - 1.582).abs() < 1e-3);
        let half = ExponentialMechanism1D::new(4.0).unwrap();
        assert!((half.density_cap() - 2.313).abs() < 1e-3);
        let flat = ExponentialMechanism1D::new(1e-9).unwrap();
        assert!((flat.density_cap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn density_integrates_to_one_and_respects_cap() {
        let rule = gauss_legendre(32);
        for eps in [0.1, 1.0, 5.0, 20.0] {
            let mech = ExponentialMechanism1D::new(eps).unwrap();
            for z in [0.0, 0.1, 0.5, 0.93, 1.0] {
                let total = integrate(|t| mech.density(t, z), 0.0, z, 16, &rule)
                    + integrate(|t| mech.density(t, z), z, 1.0, 16, &rule);
                assert!((total - 1.0).abs() < 1e-9, "eps={eps} z={z}: {total}");
                assert!(mech.density(z, z) <= mech.density_cap() * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn sampler_matches_density_mean() {
        let mech = ExponentialMechanism1D::new(3.0).unwrap();
        let rule = gauss_legendre(32);
        let z = 0.2;
        let mean = integrate(|t| t * mech.density(t, z), 0.0, z, 16, &rule)
            + integrate(|t| t * mech.density(t, z), z, 1.0, 16, &rule);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 200_000;
        let emp = (0..n).map(|_| mech.sample(z, &mut rng)).sum::<f64>() / n as f64;
        assert!((emp - mean).abs() < 4.0 * 0.3 / (n as f64).sqrt(), "{emp} vs {mean}");
    }
}
