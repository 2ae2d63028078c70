//! Discrete-event, message-passing backend.
//!
//! Time runs in integer ticks. Events at the same tick are ordered by the
//! node whose exchange they belong to, then by creation order, so that the
//! request/acknowledge/update exchanges of simultaneously active nodes run
//! one after another in ascending id order.
//!
//! Timing of one exchange: a trigger (beacon or wake-up, one-hop delay `d`)
//! sends state requests that resolve `t_C` later; acknowledgments, the
//! update and any write-backs happen at that tick. Wake-ups then travel one
//! hop to the next layer, so layer `m` of cycle `c` commits at
//! `c·T_s + m·(d + t_C)` with constant delays. An iteration is one
//! `d + t_C` slot.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use log::debug;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::analysis::Trace;
use crate::duty_cycle::{effective_beacon_period, ActivationMode};
use crate::error::{Error, Result};
use crate::graph::assign_layers;
use crate::protocol::{Message, MessageKind, NodeState, Phase};
use crate::scalar::Real;

use super::{stream_rng, RunConfig, Stream};

#[derive(Debug, Clone)]
enum EventKind<T> {
    Deliver(Message<T>),
    Sleep(usize),
    Beacon(u64),
    ScriptedWake { node: usize, cycle: u64 },
}

#[derive(Debug, Clone)]
struct Event<T> {
    time: u64,
    owner: usize,
    seq: u64,
    kind: EventKind<T>,
}

impl<T> Event<T> {
    fn key(&self) -> (u64, usize, u64) {
        (self.time, self.owner, self.seq)
    }
}

impl<T> PartialEq for Event<T> {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}
impl<T> Eq for Event<T> {}
impl<T> PartialOrd for Event<T> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Event<T> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key().cmp(&other.key())
    }
}

/// Beacon periods without any update before a run counts as deadlocked.
/// Delay jitter can make a node miss single cycles, so this leaves slack.
pub const IDLE_PERIODS: u64 = 4;

struct Simulator<'a, T: Real> {
    cfg: &'a RunConfig<T>,
    nodes: Vec<NodeState<T>>,
    queue: BinaryHeap<Reverse<Event<T>>>,
    seq: u64,
    t_c: u64,
    delay_rng: ChaCha8Rng,
    gating_rng: ChaCha8Rng,
    /// Draw hop delays from the configured distribution; otherwise use `d_mean`.
    random_delays: bool,
    gate_triggers: bool,
    updated_in_window: Vec<bool>,
    last_update: u64,
    messages_sent: u64,
    log: Vec<Message<T>>,
}

impl<'a, T: Real> Simulator<'a, T> {
    fn new(cfg: &'a RunConfig<T>, x0: &[T], layers: &[usize], flooding: bool) -> Self {
        let g = &cfg.graph;
        let nodes = (0..g.node_count())
            .map(|i| {
                let downstream = if flooding {
                    g.out_neighbors(i).into_iter().filter(|&j| layers[j] == layers[i] + 1).collect()
                } else {
                    Vec::new()
                };
                NodeState::new(i, x0[i], layers[i]).with_links(g.in_neighbors(i), g.out_neighbors(i), downstream)
            })
            .collect();
        Simulator {
            cfg,
            nodes,
            queue: BinaryHeap::new(),
            seq: 0,
            t_c: cfg.ticks(cfg.duty.t_c).max(1),
            delay_rng: stream_rng(cfg.seed, Stream::Delays),
            gating_rng: stream_rng(cfg.seed, Stream::Gating),
            random_delays: true,
            gate_triggers: cfg.duty.mode == ActivationMode::Stochastic,
            updated_in_window: vec![false; g.node_count()],
            last_update: 0,
            messages_sent: 0,
            log: Vec::new(),
        }
    }

    fn schedule(&mut self, time: u64, owner: usize, kind: EventKind<T>) {
        self.seq += 1;
        self.queue.push(Reverse(Event { time, owner, seq: self.seq, kind }));
    }

    fn hop_delay(&mut self) -> u64 {
        let d = if self.random_delays {
            self.cfg.duty.sample_hop_delay(&mut self.delay_rng)
        } else {
            self.cfg.duty.d_mean
        };
        self.cfg.ticks(d)
    }

    /// Stamps and enqueues messages emitted at `now`.
    fn send(&mut self, now: u64, messages: Vec<Message<T>>) {
        for mut m in messages {
            let (at, owner) = match m.kind {
                MessageKind::Beacon | MessageKind::WakeUp => (now + self.hop_delay(), m.dst),
                MessageKind::StateRequest => (now + self.t_c, m.src),
                MessageKind::StateAck => (now, m.dst),
                MessageKind::StateUpdate => (now, m.src),
            };
            m.deliver_at = at;
            self.messages_sent += 1;
            self.schedule(at, owner, EventKind::Deliver(m));
        }
    }

    fn on_update(&mut self, node: usize, now: u64) {
        self.updated_in_window[node] = true;
        self.last_update = now;
        // back to sleep once the exchange's write-backs have gone out
        self.schedule(now, node, EventKind::Sleep(node));
    }

    /// In stochastic mode a trigger only wakes its target with probability `p`.
    fn trigger_accepted(&mut self) -> bool {
        if !self.gate_triggers {
            return true;
        }
        let u: f64 = self.gating_rng.random();
        u < self.cfg.duty.p.as_f64()
    }

    fn deliver(&mut self, msg: Message<T>, now: u64) -> Result<()> {
        if self.cfg.record_messages {
            self.log.push(msg.clone());
        }
        let rule = self.cfg.rule;
        let dst = msg.dst;
        let before = self.nodes[dst].phase;
        let out = match msg.kind {
            MessageKind::Beacon | MessageKind::WakeUp => {
                if !self.trigger_accepted() {
                    debug!("node {dst} slept through {} of cycle {}", msg.kind, msg.cycle);
                    return Ok(());
                }
                let node = &mut self.nodes[dst];
                if msg.kind == MessageKind::Beacon {
                    node.on_beacon(&msg, &rule)
                } else {
                    node.on_wake_up(&msg, &rule)
                }
            }
            MessageKind::StateRequest => self.nodes[dst].on_state_request(&msg)?,
            MessageKind::StateAck => self.nodes[dst].on_state_ack(&msg, &rule),
            MessageKind::StateUpdate => {
                self.nodes[dst].on_state_update(&msg);
                Vec::new()
            }
        };
        if before != Phase::Computing && self.nodes[dst].phase == Phase::Computing {
            self.on_update(dst, now);
        }
        self.send(now, out);
        Ok(())
    }

    fn process(&mut self, event: Event<T>) -> Result<()> {
        let now = event.time;
        match event.kind {
            EventKind::Deliver(msg) => self.deliver(msg, now)?,
            EventKind::Sleep(node) => self.nodes[node].sleep(),
            EventKind::Beacon(cycle) => {
                let anchor = self.cfg.graph.anchor();
                let out = self.cfg.graph.out_neighbors(anchor).into_iter().map(|j| Message::beacon(anchor, j, cycle));
                let out: Vec<_> = out.collect();
                self.send(now, out);
            }
            EventKind::ScriptedWake { node, cycle } => {
                let rule = self.cfg.rule;
                let out = self.nodes[node].force_wake(cycle, &rule);
                if self.nodes[node].phase == Phase::Computing {
                    self.on_update(node, now);
                }
                self.send(now, out);
            }
        }
        Ok(())
    }

    /// Processes every event up to and including `until`.
    fn run_until(&mut self, until: u64) -> Result<()> {
        while self.queue.peek().is_some_and(|Reverse(e)| e.time <= until) {
            let Reverse(event) = self.queue.pop().expect("peeked");
            self.process(event)?;
        }
        Ok(())
    }

    fn snapshot(&mut self) -> (Vec<T>, Vec<bool>) {
        let x = self.nodes.iter().map(|n| n.x).collect();
        let phi = std::mem::replace(&mut self.updated_in_window, vec![false; self.nodes.len()]);
        (x, phi)
    }
}

fn converged<T: Real>(trace: &Trace<T>, tol: T) -> bool {
    let w = trace.cycle_len.max(1);
    trace.disagreement.len() >= w && trace.disagreement[trace.disagreement.len() - w..].iter().all(|&e| e < tol)
}

/// Runs the layered duty-cycled protocol: the anchor beacons every `T_s`,
/// layer-1 nodes update and wake the next layer, and so on outward.
///
/// Stops after `max_iterations` slots or, if enabled, once disagreement
/// stayed below the tolerance for a full beacon cycle. Fails with
/// [`Error::Liveness`] when no node updates for [`IDLE_PERIODS`] beacon periods.
pub fn run_agent_sim<T: Real>(cfg: &RunConfig<T>) -> Result<Trace<T>> {
    cfg.validate()?;
    let g = &cfg.graph;
    let layers = assign_layers(g, g.anchor())?;
    let x0 = cfg.initial_states()?;

    let mut sim = Simulator::new(cfg, &x0, &layers.layer_of, true);
    let slot = cfg.ticks(cfg.duty.d_mean) + sim.t_c;
    let period_units = effective_beacon_period(layers.layer_count, cfg.duty.d_mean, cfg.duty.t_c, cfg.duty.d_var);
    let period = cfg.ticks(period_units).max(slot * layers.layer_count as u64);
    let cycle_len = period.div_ceil(slot) as usize;
    let idle_limit = IDLE_PERIODS * period;

    let mut trace = Trace::start(g, x0, cycle_len);
    let mut next_beacon = 0u64;
    let mut cycle = 0u64;
    for k in 1..=cfg.max_iterations {
        let end = k as u64 * slot;
        while next_beacon <= end {
            sim.schedule(next_beacon, g.anchor(), EventKind::Beacon(cycle));
            cycle += 1;
            next_beacon += period;
        }
        sim.run_until(end)?;
        let (x, phi) = sim.snapshot();
        trace.record(g, x, phi);
        if end.saturating_sub(sim.last_update) > idle_limit {
            return Err(Error::Liveness { idle_ticks: end - sim.last_update, limit_ticks: idle_limit });
        }
        if cfg.stop_on_convergence && converged(&trace, cfg.tolerance) {
            break;
        }
    }
    trace.messages_sent = sim.messages_sent;
    trace.message_log = sim.log;
    Ok(trace)
}

/// Runs the message-passing protocol on an externally scripted activation
/// schedule: at step `k` exactly the nodes with `activations[k-1][i]` set
/// perform an exchange. Delays are fixed at `d_mean`, no wake-up flooding
/// takes place and the run always covers the full schedule.
pub fn run_agent_sim_scripted<T: Real>(cfg: &RunConfig<T>, activations: &[Vec<bool>]) -> Result<Trace<T>> {
    cfg.validate()?;
    let g = &cfg.graph;
    let n = g.node_count();
    if let Some(bad) = activations.iter().find(|a| a.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, actual: bad.len() });
    }
    let x0 = cfg.initial_states()?;
    let layers = vec![0; n];
    let mut sim = Simulator::new(cfg, &x0, &layers, false);
    sim.random_delays = false;
    sim.gate_triggers = false;
    // room for the trigger hop and the exchange, plus a spare t_C
    let spacing = cfg.ticks(cfg.duty.d_mean) + 2 * sim.t_c;

    let mut trace = Trace::start(g, x0, 1);
    for (k, phi) in activations.iter().enumerate() {
        let start = k as u64 * spacing;
        for (i, _) in phi.iter().enumerate().filter(|(_, &a)| a) {
            sim.schedule(start, i, EventKind::ScriptedWake { node: i, cycle: k as u64 + 1 });
        }
        sim.run_until(start + spacing)?;
        let (x, updated) = sim.snapshot();
        debug_assert_eq!(&updated, phi);
        trace.record(g, x, phi.clone());
    }
    trace.messages_sent = sim.messages_sent;
    trace.message_log = sim.log;
    Ok(trace)
}
