//! Estimate update rules.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::{mean, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RuleKind {
    /// Node and polled neighbors all adopt the mean of `{i} ∪ n_i`.
    NeighborhoodSet,
    /// Node adopts the mean of its neighbors, ignoring its own value.
    PureNeighbor,
    /// Node adds the neighbor mean to its previous value. Not convex and not
    /// mean-preserving; kept for studying the update exactly as tabulated.
    Accumulating,
    /// Randomized pairwise gossip: one node and one random neighbor mix.
    PairwiseBaseline,
}

impl RuleKind {
    pub const ALL: [RuleKind; 4] = [
        RuleKind::NeighborhoodSet,
        RuleKind::PureNeighbor,
        RuleKind::Accumulating,
        RuleKind::PairwiseBaseline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RuleKind::NeighborhoodSet => "neighborhood_set",
            RuleKind::PureNeighbor => "pure_neighbor",
            RuleKind::Accumulating => "accumulating",
            RuleKind::PairwiseBaseline => "pairwise_baseline",
        }
    }

    /// Rules whose updates are convex combinations of current estimates.
    pub fn is_convex(self) -> bool {
        !matches!(self, RuleKind::Accumulating)
    }

    /// Rules that leave the network-wide sum unchanged.
    pub fn conserves_sum(self) -> bool {
        matches!(self, RuleKind::NeighborhoodSet | RuleKind::PairwiseBaseline)
    }
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RuleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "neighborhood_set" => Ok(RuleKind::NeighborhoodSet),
            "pure_neighbor" => Ok(RuleKind::PureNeighbor),
            "accumulating" | "paper_literal" => Ok(RuleKind::Accumulating),
            "pairwise_baseline" | "pairwise" => Ok(RuleKind::PairwiseBaseline),
            _ => Err(Error::InvalidParameter(format!("unknown update rule `{s}`"))),
        }
    }
}

/// An update rule plus the pairwise mixing weight `alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateRule<T> {
    pub kind: RuleKind,
    pub alpha: T,
}

impl<T: Real> UpdateRule<T> {
    pub fn new(kind: RuleKind) -> Self {
        UpdateRule { kind, alpha: T::of(0.5) }
    }

    pub fn pairwise(alpha: T) -> Result<Self> {
        let rule = UpdateRule { kind: RuleKind::PairwiseBaseline, alpha };
        rule.validate()?;
        Ok(rule)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > T::zero() && self.alpha < T::one()) {
            return Err(Error::InvalidParameter(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        Ok(())
    }

    /// New estimate of an updating node from its own value and the values
    /// received from its neighborhood. An empty neighborhood leaves the
    /// estimate unchanged.
    ///
    /// For [`RuleKind::NeighborhoodSet`] the same value is also written back
    /// to every polled neighbor.
    pub fn combine(&self, own: T, received: &[T]) -> T {
        if received.is_empty() {
            return own;
        }
        match self.kind {
            RuleKind::NeighborhoodSet => {
                let mut all = Vec::with_capacity(received.len() + 1);
                all.push(own);
                all.extend_from_slice(received);
                mean(&all)
            }
            RuleKind::PureNeighbor => mean(received),
            RuleKind::Accumulating => mean(received) + own,
            // a single partner value: mix toward it
            RuleKind::PairwiseBaseline => {
                (T::one() - self.alpha) * own + self.alpha * mean(received)
            }
        }
    }

    /// Whether polled neighbors adopt the computed value as well.
    pub fn writes_back(&self) -> bool {
        self.kind == RuleKind::NeighborhoodSet
    }
}

impl<T: Real> Default for UpdateRule<T> {
    fn default() -> Self {
        UpdateRule::new(RuleKind::NeighborhoodSet)
    }
}
