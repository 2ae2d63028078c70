//! Run metrics, traces and spectral certification.

mod metrics;
mod spectral;
mod trace;

pub use metrics::{convergence_time, disagreement, disagreement_of, drift, drift_of};
pub use spectral::{
    check_consensus_conditions, eigenvalue_moduli, expected_weight_matrix, second_eigenvalue_modulus,
    spectral_radius, SpectralReport, STOCHASTIC_TOL,
};
pub use trace::Trace;
