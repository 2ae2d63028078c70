//! Per-node protocol state machine: beacon handling, wake-up flooding,
//! state request/acknowledgment exchange and the estimate update.
//!
//! Handlers mutate one [`NodeState`] and return the messages it emits.
//! Delivery times are stamped by the engine.

use std::collections::BTreeSet;
use std::fmt;

use log::debug;

use crate::error::{Error, Result};
use crate::rule::UpdateRule;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MessageKind {
    Beacon,
    WakeUp,
    StateRequest,
    StateAck,
    /// Common average pushed back to polled neighbors by `neighborhood_set`.
    StateUpdate,
}

impl fmt::Display for MessageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MessageKind::Beacon => "beacon",
            MessageKind::WakeUp => "wake_up",
            MessageKind::StateRequest => "state_request",
            MessageKind::StateAck => "state_ack",
            MessageKind::StateUpdate => "state_update",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Payload<T> {
    None,
    Value(T),
    Bit(bool),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Message<T> {
    pub kind: MessageKind,
    pub src: usize,
    pub dst: usize,
    pub payload: Payload<T>,
    /// Beacon cycle the message belongs to.
    pub cycle: u64,
    /// Delivery tick, stamped by the engine.
    pub deliver_at: u64,
}

impl<T: Real> Message<T> {
    pub fn new(kind: MessageKind, src: usize, dst: usize, payload: Payload<T>, cycle: u64) -> Self {
        Message { kind, src, dst, payload, cycle, deliver_at: 0 }
    }

    pub fn beacon(anchor: usize, dst: usize, cycle: u64) -> Self {
        Message::new(MessageKind::Beacon, anchor, dst, Payload::None, cycle)
    }

    pub fn wake_up(src: usize, dst: usize, phi: bool, cycle: u64) -> Self {
        Message::new(MessageKind::WakeUp, src, dst, Payload::Bit(phi), cycle)
    }

    pub fn value(&self) -> Option<T> {
        match self.payload {
            Payload::Value(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Inactive,
    AwaitingStates,
    /// Estimate updated, `φ = 1`; returns to `Inactive` after `t_C`.
    Computing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeState<T> {
    pub id: usize,
    pub x: T,
    pub phi: bool,
    pub layer: usize,
    pub phase: Phase,
    pub pending_acks: BTreeSet<usize>,
    received: Vec<(usize, T)>,
    /// Nodes polled for their estimates (in-neighbors).
    pub sources: Vec<usize>,
    /// Nodes allowed to poll this node (out-neighbors).
    pub listeners: Vec<usize>,
    /// Out-neighbors one layer further from the anchor; wake-up targets.
    pub downstream: Vec<usize>,
    /// Last beacon cycle in which this node updated.
    pub last_cycle: Option<u64>,
    pub updates: u64,
}

impl<T: Real> NodeState<T> {
    pub fn new(id: usize, x: T, layer: usize) -> Self {
        NodeState {
            id,
            x,
            phi: false,
            layer,
            phase: Phase::Inactive,
            pending_acks: BTreeSet::new(),
            received: Vec::new(),
            sources: Vec::new(),
            listeners: Vec::new(),
            downstream: Vec::new(),
            last_cycle: None,
            updates: 0,
        }
    }

    pub fn with_links(mut self, sources: Vec<usize>, listeners: Vec<usize>, downstream: Vec<usize>) -> Self {
        self.sources = sources;
        self.listeners = listeners;
        self.downstream = downstream;
        self
    }

    fn can_wake(&self, cycle: u64) -> bool {
        self.phase == Phase::Inactive && self.last_cycle.is_none_or(|c| c < cycle)
    }

    /// Switches to `AwaitingStates` and polls every source. A node with no
    /// sources completes its (trivial) update immediately.
    fn wake(&mut self, cycle: u64, rule: &UpdateRule<T>) -> Vec<Message<T>> {
        self.phase = Phase::AwaitingStates;
        self.last_cycle = Some(cycle);
        self.received.clear();
        self.pending_acks = self.sources.iter().copied().collect();
        if self.pending_acks.is_empty() {
            return self.finish(rule, cycle);
        }
        self.sources
            .iter()
            .map(|&j| Message::new(MessageKind::StateRequest, self.id, j, Payload::None, cycle))
            .collect()
    }

    /// Wakes the node on external orders, bypassing the layer and
    /// complement checks. Used for scripted activation schedules.
    pub fn force_wake(&mut self, cycle: u64, rule: &UpdateRule<T>) -> Vec<Message<T>> {
        if self.phase != Phase::Inactive {
            debug!("node {} forced awake while {:?}; ignored", self.id, self.phase);
            return Vec::new();
        }
        self.wake(cycle, rule)
    }

    pub fn on_beacon(&mut self, msg: &Message<T>, rule: &UpdateRule<T>) -> Vec<Message<T>> {
        if self.layer != 1 || !self.can_wake(msg.cycle) {
            debug!("node {} ignored beacon of cycle {}", self.id, msg.cycle);
            return Vec::new();
        }
        self.wake(msg.cycle, rule)
    }

    /// Wakes only when the received bit complements our own (`1` vs `0`).
    pub fn on_wake_up(&mut self, msg: &Message<T>, rule: &UpdateRule<T>) -> Vec<Message<T>> {
        let bit = matches!(msg.payload, Payload::Bit(true));
        if !bit || self.phi || !self.can_wake(msg.cycle) {
            return Vec::new();
        }
        self.wake(msg.cycle, rule)
    }

    /// Answers with the current estimate whatever the phase.
    pub fn on_state_request(&mut self, msg: &Message<T>) -> Result<Vec<Message<T>>> {
        if !self.listeners.contains(&msg.src) {
            return Err(Error::NotNeighbor { src: msg.src, dst: self.id });
        }
        Ok(vec![Message::new(MessageKind::StateAck, self.id, msg.src, Payload::Value(self.x), msg.cycle)])
    }

    /// Records an acknowledgment; the last outstanding one triggers the update.
    pub fn on_state_ack(&mut self, msg: &Message<T>, rule: &UpdateRule<T>) -> Vec<Message<T>> {
        let Some(value) = msg.value() else {
            debug!("node {} dropped ack without payload from {}", self.id, msg.src);
            return Vec::new();
        };
        if self.phase != Phase::AwaitingStates || !self.pending_acks.remove(&msg.src) {
            debug!("node {} ignored unsolicited ack from {}", self.id, msg.src);
            return Vec::new();
        }
        self.received.push((msg.src, value));
        if !self.pending_acks.is_empty() {
            return Vec::new();
        }
        self.finish(rule, msg.cycle)
    }

    pub fn on_state_update(&mut self, msg: &Message<T>) {
        if let Some(v) = msg.value() {
            self.x = v;
        }
    }

    fn finish(&mut self, rule: &UpdateRule<T>, cycle: u64) -> Vec<Message<T>> {
        // acks arrive in event order; combine in id order for reproducible rounding
        self.received.sort_by_key(|&(j, _)| j);
        let values: Vec<T> = self.received.iter().map(|&(_, v)| v).collect();
        let value = rule.combine(self.x, &values);
        self.x = value;
        self.phi = true;
        self.phase = Phase::Computing;
        self.updates += 1;
        let mut out = Vec::new();
        if rule.writes_back() {
            out.extend(self.received.iter().map(|&(j, _)| {
                Message::new(MessageKind::StateUpdate, self.id, j, Payload::Value(value), cycle)
            }));
        }
        out.extend(self.downstream.iter().map(|&j| Message::wake_up(self.id, j, true, cycle)));
        self.received.clear();
        out
    }

    /// End of the compute window: back to sleep with `φ = 0`.
    pub fn sleep(&mut self) {
        if self.phase == Phase::Computing {
            self.phase = Phase::Inactive;
            self.phi = false;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rule::RuleKind;

    fn chain_middle(rule: RuleKind) -> (NodeState<f64>, UpdateRule<f64>) {
        let node = NodeState::new(1, 6.0, 1).with_links(vec![0, 2], vec![0, 2], vec![2]);
        (node, UpdateRule::new(rule))
    }

    fn ack(src: usize, dst: usize, v: f64) -> Message<f64> {
        Message::new(MessageKind::StateAck, src, dst, Payload::Value(v), 0)
    }

    #[test]
    fn beacon_wakes_layer_one_node() {
        let mut node = NodeState::new(4, 1.0, 1).with_links(vec![1, 2, 3], vec![1, 2, 3], vec![]);
        let rule = UpdateRule::default();
        let out = node.on_beacon(&Message::beacon(0, 4, 0), &rule);
        assert_eq!(out.len(), 3);
        assert!(out.iter().all(|m| m.kind == MessageKind::StateRequest && m.src == 4));
        assert_eq!(node.phase, Phase::AwaitingStates);
        assert_eq!(node.pending_acks.len(), 3);

        // duplicate beacon is a no-op
        let before = node.clone();
        assert!(node.on_beacon(&Message::beacon(0, 4, 0), &rule).is_empty());
        assert_eq!(node, before);
    }

    #[test]
    fn beacon_ignored_beyond_layer_one() {
        let mut node = NodeState::<f64>::new(2, 1.0, 2).with_links(vec![1], vec![1], vec![]);
        let before = node.clone();
        assert!(node.on_beacon(&Message::beacon(0, 2, 0), &UpdateRule::default()).is_empty());
        assert_eq!(node, before);
    }

    #[test]
    fn wake_up_requires_complement_bit() {
        let rule = UpdateRule::default();
        let mut node = NodeState::<f64>::new(2, 1.0, 2).with_links(vec![1, 3], vec![1, 3], vec![3]);
        assert!(node.on_wake_up(&Message::wake_up(1, 2, false, 0), &rule).is_empty());
        assert_eq!(node.phase, Phase::Inactive);

        let out = node.on_wake_up(&Message::wake_up(1, 2, true, 0), &rule);
        assert_eq!(out.len(), 2);
        assert_eq!(node.phase, Phase::AwaitingStates);

        let before = node.clone();
        assert!(node.on_wake_up(&Message::wake_up(3, 2, true, 0), &rule).is_empty());
        assert_eq!(node, before);
    }

    #[test]
    fn sleeping_node_answers_requests() {
        let mut node = NodeState::new(0, 4.2, 1).with_links(vec![1], vec![1], vec![]);
        let req = Message::new(MessageKind::StateRequest, 1, 0, Payload::None, 0);
        let out = node.on_state_request(&req).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].kind, MessageKind::StateAck);
        assert_eq!(out[0].dst, 1);
        assert_eq!(out[0].value(), Some(4.2));
        assert_eq!(node.phase, Phase::Inactive);

        node.phase = Phase::AwaitingStates;
        node.on_state_request(&req).unwrap();
        assert_eq!(node.phase, Phase::AwaitingStates);
    }

    #[test]
    fn request_from_stranger_is_an_error() {
        let mut node = NodeState::new(0, 4.2, 1).with_links(vec![1], vec![1], vec![]);
        let req = Message::new(MessageKind::StateRequest, 5, 0, Payload::None, 0);
        assert_eq!(node.on_state_request(&req), Err(Error::NotNeighbor { src: 5, dst: 0 }));
    }

    fn run_exchange(kind: RuleKind) -> (NodeState<f64>, Vec<Message<f64>>) {
        let (mut node, rule) = chain_middle(kind);
        node.on_beacon(&Message::beacon(0, 1, 0), &rule);
        assert!(node.on_state_ack(&ack(0, 1, 0.0), &rule).is_empty());
        let out = node.on_state_ack(&ack(2, 1, 0.0), &rule);
        (node, out)
    }

    #[test]
    fn final_ack_applies_rule() {
        let (node, out) = run_exchange(RuleKind::NeighborhoodSet);
        assert_eq!(node.x, 2.0);
        assert!(node.phi);
        assert_eq!(node.phase, Phase::Computing);
        let updates: Vec<_> = out.iter().filter(|m| m.kind == MessageKind::StateUpdate).collect();
        assert_eq!(updates.len(), 2);
        assert!(updates.iter().all(|m| m.value() == Some(2.0)));
        let wakes: Vec<_> = out.iter().filter(|m| m.kind == MessageKind::WakeUp).collect();
        assert_eq!(wakes.len(), 1);
        assert_eq!(wakes[0].dst, 2);

        let (node, out) = run_exchange(RuleKind::PureNeighbor);
        assert_eq!(node.x, 0.0);
        assert!(out.iter().all(|m| m.kind == MessageKind::WakeUp));

        let (mut node, _) = run_exchange(RuleKind::Accumulating);
        assert_eq!(node.x, 6.0);
        node.sleep();
        assert_eq!(node.phase, Phase::Inactive);
        assert!(!node.phi);
        assert!(node.pending_acks.is_empty());
    }

    #[test]
    fn unsolicited_ack_is_ignored() {
        let (mut node, rule) = chain_middle(RuleKind::NeighborhoodSet);
        let before = node.clone();
        assert!(node.on_state_ack(&ack(0, 1, 9.0), &rule).is_empty());
        assert_eq!(node, before);
    }

    #[test]
    fn one_update_per_cycle() {
        let (mut node, _) = run_exchange(RuleKind::NeighborhoodSet);
        let rule = UpdateRule::new(RuleKind::NeighborhoodSet);
        node.sleep();
        assert!(node.on_wake_up(&Message::wake_up(0, 1, true, 0), &rule).is_empty());
        assert!(!node.on_wake_up(&Message::wake_up(0, 1, true, 1), &rule).is_empty());
    }
}
