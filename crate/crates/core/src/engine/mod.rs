//! Simulation backends: the message-passing agent loop, the switched-matrix
//! recursion and the pairwise gossip baseline. All three produce a
//! [`Trace`](crate::analysis::Trace) with the same schema.

mod agent;
mod matrix;
mod pairwise;

pub use agent::{run_agent_sim, run_agent_sim_scripted, IDLE_PERIODS};
pub use matrix::{closed_form_state, run_matrix_sim, seeded_activations, SwitchedSystem};
pub use pairwise::run_pairwise_baseline;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::duty_cycle::DutyCycleParams;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rule::UpdateRule;
use crate::scalar::Real;
use crate::weights::StepSemantics;

/// Independent random streams derived from the run seed.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Stream {
    InitialStates = 1,
    Delays = 2,
    Gating = 3,
    Pairwise = 4,
}

pub(crate) fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialStates<T> {
    Explicit(Vec<T>),
    /// Independent uniform draws on `[low, high)` from the run seed.
    Uniform { low: T, high: T },
}

impl<T: Real> Default for InitialStates<T> {
    fn default() -> Self {
        InitialStates::Uniform { low: T::zero(), high: T::of(100.0) }
    }
}

/// Everything one simulation run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig<T> {
    pub graph: Graph,
    pub duty: DutyCycleParams<T>,
    pub rule: UpdateRule<T>,
    pub initial: InitialStates<T>,
    /// Iteration budget `K`.
    pub max_iterations: usize,
    pub seed: u64,
    pub tolerance: T,
    pub semantics: StepSemantics,
    /// Simulation clock resolution: integer ticks per time unit.
    pub ticks_per_unit: u64,
    /// End the run once disagreement stayed below `tolerance` for a full cycle.
    pub stop_on_convergence: bool,
    /// Keep a per-message log in the trace.
    pub record_messages: bool,
}

impl<T: Real> RunConfig<T> {
    pub fn new(graph: Graph) -> Self {
        RunConfig {
            graph,
            duty: DutyCycleParams::default(),
            rule: UpdateRule::default(),
            initial: InitialStates::default(),
            max_iterations: 1000,
            seed: 0,
            tolerance: T::of(1e-6),
            semantics: StepSemantics::Hold,
            ticks_per_unit: 1000,
            stop_on_convergence: true,
            record_messages: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be at least 1".into()));
        }
        if !(self.tolerance > T::zero()) {
            return Err(Error::InvalidParameter(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if self.ticks_per_unit == 0 {
            return Err(Error::InvalidParameter("ticks_per_unit must be positive".into()));
        }
        self.duty.validate()?;
        self.rule.validate()?;
        match &self.initial {
            InitialStates::Explicit(x) if x.len() != self.graph.node_count() => {
                Err(Error::DimensionMismatch { expected: self.graph.node_count(), actual: x.len() })
            }
            InitialStates::Uniform { low, high } if !(low < high) => {
                Err(Error::InvalidParameter(format!("empty initial range [{low}, {high})")))
            }
            _ => Ok(()),
        }
    }

    /// The initial estimates `x(0)`.
    pub fn initial_states(&self) -> Result<Vec<T>> {
        match &self.initial {
            InitialStates::Explicit(x) => {
                if x.len() != self.graph.node_count() {
                    return Err(Error::DimensionMismatch { expected: self.graph.node_count(), actual: x.len() });
                }
                Ok(x.clone())
            }
            InitialStates::Uniform { low, high } => {
                let mut rng = stream_rng(self.seed, Stream::InitialStates);
                let (lo, hi) = (low.as_f64(), high.as_f64());
                Ok((0..self.graph.node_count())
                    .map(|_| T::of(lo + (hi - lo) * rng.random::<f64>()))
                    .collect())
            }
        }
    }

    /// Converts a duration in time units to clock ticks.
    pub(crate) fn ticks(&self, v: T) -> u64 {
        (v.as_f64() * self.ticks_per_unit as f64).round().max(0.0) as u64
    }
}
