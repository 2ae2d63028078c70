//! Simulation and analysis of energy-efficient asynchronous average
//! consensus on duty-cycled wireless sensor networks.
//!
//! Nodes sleep most of the time. An anchor (gateway) node beacons
//! periodically; nodes one hop from the anchor wake, poll their neighbors,
//! average, and wake the next layer outward. The same dynamics are available
//! as a switched linear system for spectral analysis.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases at the
//! crate root fix it to `f64`.

// `!(x > 0)` style checks also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod duty_cycle;
pub mod engine;
pub mod error;
pub mod graph;
pub mod protocol;
pub mod rule;
pub mod scalar;
pub mod weights;

pub use analysis::{
    check_consensus_conditions, convergence_time, disagreement, drift, expected_weight_matrix, spectral_radius,
    SpectralReport, Trace,
};
pub use duty_cycle::{ActivationMode, ActivationState, DutyCycleParams};
pub use engine::{
    closed_form_state, run_agent_sim, run_agent_sim_scripted, run_matrix_sim, run_pairwise_baseline, seeded_activations,
    InitialStates,
    RunConfig, SwitchedSystem,
};
pub use error::{Error, Result};
pub use graph::{assign_layers, build_topology, neighborhood, Graph, LayerAssignment, TopologyKind, TopologyParams};
pub use rule::{RuleKind, UpdateRule};
pub use scalar::Real;
pub use weights::{consensus_weight_matrix, StepSemantics};

pub type Trace64 = Trace<f64>;
pub type Trace32 = Trace<f32>;
pub type RunConfig64 = RunConfig<f64>;
pub type RunConfig32 = RunConfig<f32>;
pub type DutyCycleParams64 = DutyCycleParams<f64>;
pub type UpdateRule64 = UpdateRule<f64>;
pub type SpectralReport64 = SpectralReport<f64>;
pub type Matrix64 = nalgebra::DMatrix<f64>;
