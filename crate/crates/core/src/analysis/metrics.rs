use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::scalar::{mean, Real};

use super::Trace;

/// `|mean(x) - x_avg|`.
pub fn drift_of<T: Real>(x: &[T], x_avg: T) -> T {
    (mean(x) - x_avg).abs()
}

/// `sqrt((1/N) Σ_{i,j} adj_ij (x_i - x_j)²)` over ordered adjacent pairs.
pub fn disagreement_of<T: Real>(g: &Graph, x: &[T]) -> T {
    let n = g.node_count();
    let mut acc = T::zero();
    for i in 0..n {
        for j in 0..n {
            if g.has_edge(i, j) {
                let d = x[i] - x[j];
                acc += d * d;
            }
        }
    }
    (acc / T::of_usize(n)).sqrt()
}

pub fn drift<T: Real>(trace: &Trace<T>, k: usize) -> Result<T> {
    let x = trace.state(k)?;
    Ok(drift_of(x, trace.x_avg))
}

pub fn disagreement<T: Real>(trace: &Trace<T>, k: usize, g: &Graph) -> Result<T> {
    let x = trace.state(k)?;
    if x.len() != g.node_count() {
        return Err(Error::DimensionMismatch { expected: g.node_count(), actual: x.len() });
    }
    Ok(disagreement_of(g, x))
}

/// First iteration `k` such that the recorded disagreement stays below
/// `tol` for one full beacon cycle starting at `k`. A window cut short by
/// the end of the trace counts if every remaining entry qualifies.
pub fn convergence_time<T: Real>(trace: &Trace<T>, tol: T) -> Option<usize> {
    let eps = &trace.disagreement;
    let window = trace.cycle_len.max(1);
    let mut run = 0usize;
    let mut start = 0usize;
    for (k, &e) in eps.iter().enumerate() {
        if e < tol {
            if run == 0 {
                start = k;
            }
            run += 1;
            if run >= window {
                return Some(start);
            }
        } else {
            run = 0;
        }
    }
    (run > 0).then_some(start)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_topology, TopologyKind, TopologyParams};

    fn chain3() -> Graph {
        build_topology(TopologyKind::Chain, 3, &TopologyParams::default(), 0).unwrap()
    }

    fn pair() -> Graph {
        build_topology(TopologyKind::Chain, 2, &TopologyParams::default(), 0).unwrap()
    }

    #[test]
    fn drift_examples() {
        let g = chain3();
        let mut t = Trace::start(&g, vec![0.0, 6.0, 0.0], 1);
        assert_eq!(drift(&t, 0).unwrap(), 0.0);
        t.record(&g, vec![2.0, 2.0, 2.0], vec![true; 3]);
        assert_eq!(drift(&t, 1).unwrap(), 0.0);
        t.record(&g, vec![0.0, 0.0, 6.0], vec![false, true, false]);
        assert_eq!(drift(&t, 2).unwrap(), 0.0);
        assert!(matches!(drift(&t, 3), Err(Error::IterationOutOfRange { index: 3, len: 3 })));
    }

    #[test]
    fn disagreement_examples() {
        assert_eq!(disagreement_of(&pair(), &[0.0, 1.0]), 1.0);
        let e = disagreement_of(&chain3(), &[0.0, 6.0, 0.0]);
        assert!((e - 48.0_f64.sqrt()).abs() < 1e-12);
        assert_eq!(disagreement_of(&chain3(), &[3.0, 3.0, 3.0]), 0.0);
        let t = Trace::start(&chain3(), vec![1.0, 1.0, 1.0], 1);
        assert_eq!(disagreement(&t, 0, &chain3()).unwrap(), 0.0);
        assert!(disagreement(&t, 1, &chain3()).is_err());
    }

    #[test]
    fn convergence_time_examples() {
        let g = chain3();
        let t = Trace::start(&g, vec![5.0, 5.0, 5.0], 3);
        assert_eq!(convergence_time(&t, 1e-6), Some(0));

        let mut t = Trace::start(&g, vec![0.0, 6.0, 0.0], 2);
        for _ in 0..5 {
            t.record(&g, vec![0.0, 6.0, 0.0], vec![false; 3]);
        }
        assert_eq!(convergence_time(&t, 1e-6), None);

        // dips below tol for one entry only, then for a full cycle
        let mut t = Trace::start(&g, vec![0.0, 6.0, 0.0], 2);
        t.record(&g, vec![1.0, 1.0, 1.0], vec![false; 3]);
        t.record(&g, vec![0.0, 6.0, 0.0], vec![false; 3]);
        t.record(&g, vec![2.0, 2.0, 2.0], vec![false; 3]);
        t.record(&g, vec![2.0, 2.0, 2.0], vec![false; 3]);
        assert_eq!(convergence_time(&t, 1e-6), Some(3));
    }

    #[test]
    fn shift_invariance() {
        let g = chain3();
        let x = [1.0, 4.0, -2.0];
        let shifted: Vec<f64> = x.iter().map(|v| v + 10.0).collect();
        assert!((disagreement_of(&g, &x) - disagreement_of(&g, &shifted)).abs() < 1e-12);
        assert!((drift_of(&shifted, mean(&x)) - 10.0).abs() < 1e-12);
    }
}
