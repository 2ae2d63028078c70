//! Switched-system backend: `Y_k = W_k Y_{k-1} + D_k` with
//! `Y_k = [x_k; Φ_k 1]`, `W_k = [[M_k, 0], [0, I]]` and `D_k = [0; Z_k]`.

use nalgebra::{DMatrix, DVector};

use crate::analysis::Trace;
use crate::duty_cycle::activation_sequence;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rule::{RuleKind, UpdateRule};
use crate::scalar::Real;
use crate::weights::{consensus_weight_matrix, step_factors, step_matrix, StepSemantics};

use super::{stream_rng, RunConfig, Stream};

/// Stacked state/activation system over a fixed graph and rule.
///
/// The upper-left block `M_k` of `W_k` is the step matrix for activation
/// `Φ_k`: with [`StepSemantics::Hold`] inactive nodes keep their estimates
/// and active nodes update in ascending id order, which reduces to
/// `Φ_k A + (I - Φ_k)` when no two active nodes interact; with
/// [`StepSemantics::Literal`] it is the bare `Φ_k A`.
#[derive(Debug, Clone)]
pub struct SwitchedSystem<'g, T: Real> {
    graph: &'g Graph,
    rule: UpdateRule<T>,
    semantics: StepSemantics,
    /// Row-stochastic averaging matrix `A`.
    pub a: DMatrix<T>,
}

impl<'g, T: Real> SwitchedSystem<'g, T> {
    pub fn new(graph: &'g Graph, rule: UpdateRule<T>, semantics: StepSemantics) -> Result<Self> {
        if rule.kind == RuleKind::PairwiseBaseline {
            return Err(Error::InvalidParameter(
                "the switched system models neighborhood rules; use the pairwise baseline runner".into(),
            ));
        }
        Ok(SwitchedSystem { graph, rule, semantics, a: consensus_weight_matrix(graph, &rule) })
    }

    pub fn size(&self) -> usize {
        self.graph.node_count()
    }

    /// `W_k = [[M_k, 0], [0, I]]`.
    pub fn weight_matrix(&self, phi: &[bool]) -> Result<DMatrix<T>> {
        let n = self.size();
        let m = step_matrix(self.graph, &self.rule, phi, self.semantics)?;
        let mut w = DMatrix::zeros(2 * n, 2 * n);
        w.view_mut((0, 0), (n, n)).copy_from(&m);
        w.view_mut((n, n), (n, n)).fill_with_identity();
        Ok(w)
    }

    /// `D_k = [0; Z_k]` with `Z_k = Φ_k 1 - Φ_{k-1} 1`.
    pub fn drive(&self, prev: &[bool], phi: &[bool]) -> Result<DVector<T>> {
        let n = self.size();
        check_len(n, prev)?;
        check_len(n, phi)?;
        let mut d = DVector::zeros(2 * n);
        for i in 0..n {
            d[n + i] = bit::<T>(phi[i]) - bit::<T>(prev[i]);
        }
        Ok(d)
    }

    /// `Y = [x; Φ 1]`.
    pub fn stack(&self, x: &[T], phi: &[bool]) -> Result<DVector<T>> {
        let n = self.size();
        check_len(n, x)?;
        check_len(n, phi)?;
        Ok(DVector::from_iterator(2 * n, x.iter().copied().chain(phi.iter().map(|&b| bit(b)))))
    }

    /// `Y_k = W_k Y_{k-1} + D_k`, applying the factors of `W_k` one at a
    /// time; this keeps the rounding of each update local.
    pub fn step(&self, y_prev: &DVector<T>, prev: &[bool], phi: &[bool]) -> Result<DVector<T>> {
        let n = self.size();
        let mut y = y_prev.clone();
        for f in step_factors(self.graph, &self.rule, phi, self.semantics)? {
            let x = &f * y.rows(0, n);
            y.rows_mut(0, n).copy_from(&x);
        }
        Ok(y + self.drive(prev, phi)?)
    }

    /// Splits `Y` back into estimates and activation bits.
    pub fn unstack(&self, y: &DVector<T>) -> (Vec<T>, Vec<bool>) {
        let n = self.size();
        let x = y.rows(0, n).iter().copied().collect();
        let phi = y.rows(n, n).iter().map(|&v| v > T::of(0.5)).collect();
        (x, phi)
    }
}

fn bit<T: Real>(b: bool) -> T {
    if b {
        T::one()
    } else {
        T::zero()
    }
}

fn check_len<V>(n: usize, v: &[V]) -> Result<()> {
    if v.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: v.len() });
    }
    Ok(())
}

fn check_schedule(cfg_k: usize, n: usize, activations: &[Vec<bool>]) -> Result<()> {
    if activations.len() < cfg_k {
        return Err(Error::DimensionMismatch { expected: cfg_k, actual: activations.len() });
    }
    for a in activations {
        check_len(n, a)?;
    }
    Ok(())
}

/// The `K` activation vectors the run's duty-cycle model produces from its
/// seed, for driving [`run_matrix_sim`] without a script.
pub fn seeded_activations<T: Real>(cfg: &RunConfig<T>) -> Vec<Vec<bool>> {
    let mut rng = stream_rng(cfg.seed, Stream::Gating);
    activation_sequence(&cfg.duty, cfg.graph.node_count(), cfg.max_iterations, &mut rng)
}

/// Iterates the stacked recursion for `max_iterations` steps, taking `Φ_k`
/// from `activations[k-1]`.
pub fn run_matrix_sim<T: Real>(cfg: &RunConfig<T>, activations: &[Vec<bool>]) -> Result<Trace<T>> {
    cfg.validate()?;
    let g = &cfg.graph;
    let n = g.node_count();
    check_schedule(cfg.max_iterations, n, activations)?;
    let sys = SwitchedSystem::new(g, cfg.rule, cfg.semantics)?;
    let x0 = cfg.initial_states()?;

    let mut prev = vec![false; n];
    let mut y = sys.stack(&x0, &prev)?;
    let mut trace = Trace::start(g, x0, 1);
    for phi in &activations[..cfg.max_iterations] {
        y = sys.step(&y, &prev, phi)?;
        let (x, bits) = sys.unstack(&y);
        trace.record(g, x, bits);
        prev.clone_from(phi);
    }
    Ok(trace)
}

/// Evaluates `Y_k = (W_k⋯W_1) Y_0 + Σ_{j=1..k} (W_k⋯W_{j+1}) D_j` from
/// explicit matrix products.
pub fn closed_form_state<T: Real>(cfg: &RunConfig<T>, activations: &[Vec<bool>], k: usize) -> Result<DVector<T>> {
    cfg.validate()?;
    let g = &cfg.graph;
    let n = g.node_count();
    if k > cfg.max_iterations {
        return Err(Error::InvalidParameter(format!("k = {k} exceeds K = {}", cfg.max_iterations)));
    }
    check_schedule(k, n, activations)?;
    let sys = SwitchedSystem::new(g, cfg.rule, cfg.semantics)?;
    let y0 = sys.stack(&cfg.initial_states()?, &vec![false; n])?;

    let zeros = vec![false; n];
    let mut suffix = DMatrix::<T>::identity(2 * n, 2 * n);
    let mut forced = DVector::<T>::zeros(2 * n);
    for j in (1..=k).rev() {
        let prev = if j == 1 { &zeros } else { &activations[j - 2] };
        forced += &suffix * sys.drive(prev, &activations[j - 1])?;
        suffix *= sys.weight_matrix(&activations[j - 1])?;
    }
    Ok(suffix * y0 + forced)
}
