//! Trajectory ensembles that stand in for a compatible stochastic process,
//! the compatibility test and the majority statistic `Y`.

mod coupling;
mod ensemble;
mod stats;

pub use coupling::minimal_flux_coupling;
pub use ensemble::{
    build_compatible_ensemble, build_compatible_ensemble_with, EnsembleMethod, EnsembleOptions,
    TrajectoryEnsemble,
};
pub use stats::{
    compatibility_check, majority_bound, majority_statistic, sup_expectation, CompatibilityReport,
    MajorityReport, PairCheck,
};
pub(crate) use stats::summarize;
