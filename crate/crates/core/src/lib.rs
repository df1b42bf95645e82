//! Reconstruction-advantage (RAD) risk analysis for differentially private
//! mechanisms: closed-form and enumerated bounds, noise calibration to a target
//! risk, simulation of the optimal reconstruction attack, Monte Carlo
//! estimation, LDP auditing and nested Monte Carlo for continuous domains.

pub mod accounting;
pub mod attacks;
pub mod auditor;
pub mod bounds;
pub mod continuous;
pub mod domain;
mod error;
pub mod estimator;
pub mod mechanisms;
pub mod numeric;
pub mod stream;

pub use error::{Error, Result};
