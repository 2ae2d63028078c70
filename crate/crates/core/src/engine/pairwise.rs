//! Randomized pairwise gossip baseline.

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::analysis::Trace;
use crate::error::{Error, Result};
use crate::rule::RuleKind;
use crate::scalar::Real;

use super::{stream_rng, RunConfig, Stream};

/// Each iteration a uniformly random node wakes, picks a uniformly random
/// neighbor, and both mix with weight `alpha` (the midpoint for `1/2`).
/// Each exchange costs two messages.
pub fn run_pairwise_baseline<T: Real>(cfg: &RunConfig<T>) -> Result<Trace<T>> {
    cfg.validate()?;
    let g = &cfg.graph;
    if g.is_directed() {
        return Err(Error::InvalidParameter("pairwise gossip needs an undirected graph".into()));
    }
    let alpha = if cfg.rule.kind == RuleKind::PairwiseBaseline { cfg.rule.alpha } else { T::of(0.5) };
    let n = g.node_count();
    let neighbors: Vec<Vec<usize>> = (0..n).map(|i| g.out_neighbors(i)).collect();
    let mut rng = stream_rng(cfg.seed, Stream::Pairwise);
    let mut x = cfg.initial_states()?;
    let mut trace = Trace::start(g, x.clone(), 1);

    for _ in 0..cfg.max_iterations {
        let i = rng.random_range(0..n);
        let mut phi = vec![false; n];
        if let Some(&j) = neighbors[i].choose(&mut rng) {
            let (xi, xj) = (x[i], x[j]);
            x[i] = (T::one() - alpha) * xi + alpha * xj;
            x[j] = alpha * xi + (T::one() - alpha) * xj;
            phi[i] = true;
            phi[j] = true;
            trace.messages_sent += 2;
        }
        trace.record(g, x.clone(), phi);
        if cfg.stop_on_convergence && trace.final_disagreement() < cfg.tolerance {
            break;
        }
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::InitialStates;
    use crate::graph::{build_topology, TopologyKind, TopologyParams};

    #[test]
    fn two_nodes_meet_at_midpoint() {
        let g = build_topology(TopologyKind::Chain, 2, &TopologyParams::default(), 0).unwrap();
        let mut c = RunConfig::<f64>::new(g);
        c.initial = InitialStates::Explicit(vec![0.0, 10.0]);
        c.max_iterations = 1;
        let t = run_pairwise_baseline(&c).unwrap();
        assert_eq!(t.states[1], vec![5.0, 5.0]);
        assert_eq!(t.messages_sent, 2);
    }

    #[test]
    fn directed_graph_rejected() {
        let g = build_topology(TopologyKind::CircularDirected, 4, &TopologyParams::default(), 0).unwrap();
        assert!(run_pairwise_baseline(&RunConfig::<f64>::new(g)).is_err());
    }
}
