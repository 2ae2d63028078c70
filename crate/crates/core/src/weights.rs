//! Dense weight matrices for the update rules.
//!
//! Row `i` of a weight matrix holds the coefficients node `i` applies to
//! the previous estimates. Averaging is always over in-neighbors, which
//! coincide with neighbors on undirected graphs.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rule::{RuleKind, UpdateRule};
use crate::scalar::Real;

/// How inactive nodes are treated when building a step matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepSemantics {
    /// Inactive nodes keep their estimate; active nodes update one after
    /// another in ascending id order.
    #[default]
    Hold,
    /// `Φ_k A` as a bare product: inactive rows are zeroed. Debug only.
    Literal,
}

impl StepSemantics {
    pub fn name(self) -> &'static str {
        match self {
            StepSemantics::Hold => "hold",
            StepSemantics::Literal => "literal",
        }
    }
}

impl fmt::Display for StepSemantics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StepSemantics {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hold" => Ok(StepSemantics::Hold),
            "literal" => Ok(StepSemantics::Literal),
            _ => Err(Error::InvalidParameter(format!("unknown step semantics `{s}`"))),
        }
    }
}

/// Averaging set of node `i` under `kind`.
fn averaging_set(g: &Graph, kind: RuleKind, i: usize) -> Vec<usize> {
    let mut set = g.in_neighbors(i);
    if kind == RuleKind::NeighborhoodSet {
        set.push(i);
        set.sort_unstable();
    }
    set
}

/// Row-stochastic averaging matrix `A` of a rule.
///
/// `neighborhood_set` weights `{i} ∪ n_i` equally; `pure_neighbor` and
/// `accumulating` weight `n_i` equally with zero self-weight (the latter
/// adds the previous estimate on top, see [`single_update_matrix`]);
/// `pairwise_baseline` gives the expected pairwise matrix.
pub fn consensus_weight_matrix<T: Real>(g: &Graph, rule: &UpdateRule<T>) -> DMatrix<T> {
    if rule.kind == RuleKind::PairwiseBaseline {
        return expected_pairwise_matrix(g, rule.alpha);
    }
    let n = g.node_count();
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        let set = averaging_set(g, rule.kind, i);
        if set.is_empty() || set == [i] {
            a[(i, i)] = T::one();
            continue;
        }
        let w = T::one() / T::of_usize(set.len());
        for j in set {
            a[(i, j)] = w;
        }
    }
    a
}

/// Effective matrix when only node `i` updates, with every other node
/// holding its estimate.
pub fn single_update_matrix<T: Real>(g: &Graph, rule: &UpdateRule<T>, i: usize) -> Result<DMatrix<T>> {
    let n = g.node_count();
    if i >= n {
        return Err(Error::InvalidNode { index: i, count: n });
    }
    let mut m = DMatrix::identity(n, n);
    let set = averaging_set(g, rule.kind, i);
    if set.is_empty() || set == [i] {
        return Ok(m);
    }
    let w = T::one() / T::of_usize(set.len());
    match rule.kind {
        RuleKind::NeighborhoodSet => {
            for &r in &set {
                m.row_mut(r).fill(T::zero());
                for &c in &set {
                    m[(r, c)] = w;
                }
            }
        }
        RuleKind::PureNeighbor | RuleKind::Accumulating => {
            m.row_mut(i).fill(T::zero());
            for &c in &set {
                m[(i, c)] = w;
            }
            if rule.kind == RuleKind::Accumulating {
                m[(i, i)] += T::one();
            }
        }
        RuleKind::PairwiseBaseline => {
            return Err(Error::InvalidParameter(
                "pairwise updates need a partner; use pairwise_matrix".into(),
            ))
        }
    }
    Ok(m)
}

/// Factors of the step matrix in application order: one single-node update
/// per active node under [`StepSemantics::Hold`], the single `Φ_k A` under
/// [`StepSemantics::Literal`].
pub fn step_factors<T: Real>(
    g: &Graph,
    rule: &UpdateRule<T>,
    active: &[bool],
    semantics: StepSemantics,
) -> Result<Vec<DMatrix<T>>> {
    let n = g.node_count();
    if active.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: active.len() });
    }
    match semantics {
        StepSemantics::Hold => (0..n).filter(|&i| active[i]).map(|i| single_update_matrix(g, rule, i)).collect(),
        StepSemantics::Literal => {
            let mut m = consensus_weight_matrix(g, rule);
            for i in (0..n).filter(|&i| !active[i]) {
                m.row_mut(i).fill(T::zero());
            }
            Ok(vec![m])
        }
    }
}

/// Step matrix for one iteration with activation vector `active`: the
/// product of [`step_factors`], last factor leftmost.
pub fn step_matrix<T: Real>(
    g: &Graph,
    rule: &UpdateRule<T>,
    active: &[bool],
    semantics: StepSemantics,
) -> Result<DMatrix<T>> {
    let n = g.node_count();
    let factors = step_factors(g, rule, active, semantics)?;
    Ok(factors.into_iter().fold(DMatrix::identity(n, n), |m, f| f * m))
}

/// Pairwise gossip matrix for the exchange between `i` and `j`: both rows
/// mix with weight `alpha` on the partner, every other node holds.
pub fn pairwise_matrix<T: Real>(n: usize, i: usize, j: usize, alpha: T) -> DMatrix<T> {
    let mut w = DMatrix::identity(n, n);
    w[(i, i)] = T::one() - alpha;
    w[(j, j)] = T::one() - alpha;
    w[(i, j)] = alpha;
    w[(j, i)] = alpha;
    w
}

/// Expected pairwise matrix when a uniformly random node picks a uniformly
/// random neighbor.
pub fn expected_pairwise_matrix<T: Real>(g: &Graph, alpha: T) -> DMatrix<T> {
    let n = g.node_count();
    let mut e = DMatrix::zeros(n, n);
    let inv_n = T::one() / T::of_usize(n);
    for i in 0..n {
        let nbrs = g.out_neighbors(i);
        if nbrs.is_empty() {
            e += DMatrix::identity(n, n) * inv_n;
            continue;
        }
        let p = inv_n / T::of_usize(nbrs.len());
        for j in nbrs {
            e += pairwise_matrix(n, i, j, alpha) * p;
        }
    }
    e
}
