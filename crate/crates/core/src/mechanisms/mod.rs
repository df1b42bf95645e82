//! Randomizers with exact likelihoods and samplers.

mod exponential;
mod gaussian;
mod grr;
mod laplace;
mod oue;
mod ss;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use exponential::ExponentialMechanism1D;
pub use gaussian::GaussianMechanism;
pub use grr::GrrMechanism;
pub use laplace::LaplaceMechanism;
pub use oue::{BitVector, OueMechanism};
pub use ss::{inclusion_probability, subset_size, SsMechanism};

use crate::error::{Error, Result};

/// Largest output space walked by exhaustive enumeration.
pub const ENUMERATION_LIMIT: f64 = 4_194_304.0;

/// A local randomizer over records `0..m`.
pub trait Mechanism: Send + Sync {
    type Output: Clone + Send + Sync + fmt::Debug;

    fn universe_size(&self) -> usize;

    /// One draw from `p(·|z)`.
    fn sample<R: Rng + ?Sized>(&self, z: usize, rng: &mut R) -> Self::Output;

    /// `p(θ|z)`; a density for continuous outputs.
    fn pmf(&self, theta: &Self::Output, z: usize) -> Result<f64>;

    /// Writes `p(θ|z)·e^{−s}` into `out[z]` for every record and returns `s`.
    /// `θ` must be a valid output.
    fn scaled_likelihoods(&self, theta: &Self::Output, out: &mut [f64]) -> f64;

    /// Worst-case total variation between the output laws of two records.
    fn total_variation(&self) -> f64;
}

/// Mechanisms whose output space can be walked exhaustively.
pub trait EnumerableMechanism: Mechanism {
    /// Size of the output space (as a float, it can be astronomically large).
    fn output_count(&self) -> f64;

    /// Calls `f` once per output. Fails when the space exceeds [`ENUMERATION_LIMIT`].
    fn for_each_output(&self, f: &mut dyn FnMut(&Self::Output)) -> Result<()>;
}

pub(crate) fn check_enumerable(count: f64, what: &str) -> Result<()> {
    if count > ENUMERATION_LIMIT {
        return Err(Error::Capacity(format!(
            "{what} has {count:.3e} outputs; use the closed-form bound instead"
        )));
    }
    Ok(())
}

pub(crate) fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::Config(format!("privacy budget ε = {epsilon} must be finite and nonnegative")));
    }
    Ok(())
}

pub(crate) fn check_m(m: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::Config(format!("universe size m = {m} must be at least 2")));
    }
    Ok(())
}

/// Fills `out` from log-likelihoods, shifting by their maximum.
pub(crate) fn scaled_from_logs(logs: impl Iterator<Item = f64>, out: &mut [f64]) -> f64 {
    let mut max = f64::NEG_INFINITY;
    for (o, l) in out.iter_mut().zip(logs) {
        *o = l;
        max = max.max(l);
    }
    if !max.is_finite() {
        out.iter_mut().for_each(|o| *o = 0.0);
        return 0.0;
    }
    out.iter_mut().for_each(|o| *o = (*o - max).exp());
    max
}

/// The three audited frequency oracles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LdpKind {
    Grr,
    Oue,
    Ss,
}

impl fmt::Display for LdpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Grr => "grr",
            Self::Oue => "oue",
            Self::Ss => "ss",
        })
    }
}

impl FromStr for LdpKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "grr" => Ok(Self::Grr),
            "oue" => Ok(Self::Oue),
            "ss" => Ok(Self::Ss),
            other => Err(Error::Config(format!("unknown mechanism kind '{other}' (expected grr, oue or ss)"))),
        }
    }
}
