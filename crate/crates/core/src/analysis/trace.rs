use std::io::Write;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::protocol::{Message, Payload};
use crate::scalar::{mean, Real};

use super::metrics::{disagreement_of, drift_of};

/// Time series of a run: entry 0 is the initial condition, entry `k` the
/// state after iteration `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace<T> {
    pub states: Vec<Vec<T>>,
    pub activations: Vec<Vec<bool>>,
    /// Mean of the initial estimates.
    pub x_avg: T,
    pub drift: Vec<T>,
    pub disagreement: Vec<T>,
    /// Iterations per beacon cycle; the convergence window.
    pub cycle_len: usize,
    /// Messages transmitted during the run.
    pub messages_sent: u64,
    /// Per-message log, filled only when the engine is asked to keep it.
    pub message_log: Vec<Message<T>>,
}

impl<T: Real> Trace<T> {
    pub fn start(g: &Graph, x0: Vec<T>, cycle_len: usize) -> Self {
        let x_avg = mean(&x0);
        let n = x0.len();
        let mut t = Trace {
            states: Vec::new(),
            activations: Vec::new(),
            x_avg,
            drift: Vec::new(),
            disagreement: Vec::new(),
            cycle_len,
            messages_sent: 0,
            message_log: Vec::new(),
        };
        t.record(g, x0, vec![false; n]);
        t
    }

    pub fn record(&mut self, g: &Graph, x: Vec<T>, phi: Vec<bool>) {
        self.drift.push(drift_of(&x, self.x_avg));
        self.disagreement.push(disagreement_of(g, &x));
        self.states.push(x);
        self.activations.push(phi);
    }

    /// Number of recorded entries (iterations plus the initial state).
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn iterations(&self) -> usize {
        self.states.len().saturating_sub(1)
    }

    pub fn state(&self, k: usize) -> Result<&[T]> {
        self.states
            .get(k)
            .map(Vec::as_slice)
            .ok_or(Error::IterationOutOfRange { index: k, len: self.states.len() })
    }

    pub fn final_state(&self) -> &[T] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn max_drift(&self) -> T {
        self.drift.iter().copied().fold(T::zero(), |a, b| if b > a { b } else { a })
    }

    pub fn final_disagreement(&self) -> T {
        self.disagreement.last().copied().unwrap_or_else(T::zero)
    }

    pub fn final_drift(&self) -> T {
        self.drift.last().copied().unwrap_or_else(T::zero)
    }

    /// `iteration,node_id,x,phi`, one row per node per entry.
    pub fn write_states_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "iteration,node_id,x,phi")?;
        for (k, (x, phi)) in self.states.iter().zip(&self.activations).enumerate() {
            for (i, (v, &a)) in x.iter().zip(phi).enumerate() {
                writeln!(w, "{k},{i},{v},{}", u8::from(a))?;
            }
        }
        Ok(())
    }

    /// `iteration,drift,disagreement`.
    pub fn write_metrics_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "iteration,drift,disagreement")?;
        for (k, (d, e)) in self.drift.iter().zip(&self.disagreement).enumerate() {
            writeln!(w, "{k},{d},{e}")?;
        }
        Ok(())
    }

    /// `time,kind,src,dst,payload` from the message log.
    pub fn write_messages_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "time,kind,src,dst,payload")?;
        for m in &self.message_log {
            let payload = match m.payload {
                Payload::None => String::new(),
                Payload::Value(v) => v.to_string(),
                Payload::Bit(b) => u8::from(b).to_string(),
            };
            writeln!(w, "{},{},{},{},{}", m.deliver_at, m.kind, m.src, m.dst, payload)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_topology, TopologyKind, TopologyParams};

    #[test]
    fn csv_layout() {
        let g = build_topology(TopologyKind::Chain, 2, &TopologyParams::default(), 0).unwrap();
        let mut t = Trace::start(&g, vec![0.0, 10.0], 1);
        t.record(&g, vec![5.0, 5.0], vec![true, true]);
        let mut buf = Vec::new();
        t.write_states_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "iteration,node_id,x,phi\n0,0,0,0\n0,1,10,0\n1,0,5,1\n1,1,5,1\n"
        );
        let mut buf = Vec::new();
        t.write_metrics_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "iteration,drift,disagreement\n0,0,10\n1,0,0\n");
        assert_eq!(t.len(), t.drift.len());
        assert_eq!(t.x_avg, 5.0);
    }
}
