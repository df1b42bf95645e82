//! Record universes, priors, error functions and side-information maps.

mod ingest;
mod prior;
mod threat;
mod universe;

pub use ingest::{empirical_prior, read_column, ColumnSelector};
pub use prior::{ContinuousPrior, DiscretePrior, PriorStats};
pub use threat::{kappa_minus, kappa_plus, AuxMap, AuxMode, ErrorKind, ErrorModel, ThreatModel};
pub use universe::{DiscreteUniverse, RecordSchema};

/// Σ_z π_z² for any prior kind (0 for continuous priors).
pub fn kappa_pi<P: PriorStats + ?Sized>(prior: &P) -> f64 {
    prior.kappa_pi()
}
