//! Deterministic discrete-event engine.
//!
//! Pulses are delivered in lexicographic `(time, wire name, insertion seq)`
//! order. Wire names, not creation order, break ties, so two netlists that
//! differ only in construction order produce identical traces; a reset wire
//! named to sort first is delivered before a simultaneous data pulse.

mod netlist;
mod trace;

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::sync::Arc;

use thiserror::Error;

pub use netlist::{CellId, CellInstance, Diagnostic, Netlist, WireId};
pub use trace::{Trace, TraceEvent};

use crate::cells::Cell;
use crate::time::SimTime;

/// Default cap on deliveries per simulator before aborting.
pub const DEFAULT_MAX_DELIVERIES: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("invalid netlist:\n{}", render(.0))]
    Invalid(Vec<Diagnostic>),
    #[error("pulse on `{wire}` scheduled at {at}, before current time {now}")]
    Causality { wire: String, at: SimTime, now: SimTime },
    #[error("event storm: more than {cap} deliveries (last on `{wire}` at {at})")]
    EventStorm { cap: u64, wire: String, at: SimTime },
    #[error("unknown wire `{0}`")]
    UnknownWire(String),
    #[error("`{0}` is not an external input")]
    NotAnInput(String),
}

fn render(diags: &[Diagnostic]) -> String {
    diags.iter().map(|d| format!("  {d}")).collect::<Vec<_>>().join("\n")
}

/// A pending pulse. Ordering is `(time, rank, seq)` where `rank` is the
/// wire's position in name order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct PulseEvent {
    pub time: SimTime,
    rank: u32,
    pub seq: u64,
    pub wire: WireId,
}

/// A validated netlist plus its event queue, cell state and trace.
#[derive(Debug, Clone)]
pub struct Simulator {
    netlist: Netlist,
    readers: Vec<Vec<(usize, usize)>>,
    rank: Vec<u32>,
    queue: BinaryHeap<Reverse<PulseEvent>>,
    now: SimTime,
    seq: u64,
    deliveries: u64,
    max_deliveries: u64,
    trace: Trace,
    scratch: Vec<(usize, SimTime)>,
}

impl Simulator {
    pub fn new(netlist: Netlist) -> Result<Self, SimError> {
        let diags = netlist.validate();
        if !diags.is_empty() {
            return Err(SimError::Invalid(diags));
        }
        let mut readers = vec![Vec::new(); netlist.wire_count()];
        for (ci, inst) in netlist.cells().iter().enumerate() {
            for (port, &w) in inst.inputs.iter().enumerate() {
                readers[w.index()].push((ci, port));
            }
        }
        let mut order: Vec<usize> = (0..netlist.wire_count()).collect();
        order.sort_by(|&a, &b| netlist.wire_names()[a].cmp(&netlist.wire_names()[b]));
        let mut rank = vec![0u32; netlist.wire_count()];
        for (r, &w) in order.iter().enumerate() {
            rank[w] = r as u32;
        }
        let names: Arc<[String]> = netlist.wire_names().to_vec().into();
        Ok(Simulator {
            netlist,
            readers,
            rank,
            queue: BinaryHeap::new(),
            now: SimTime::ZERO,
            seq: 0,
            deliveries: 0,
            max_deliveries: DEFAULT_MAX_DELIVERIES,
            trace: Trace::new(names),
            scratch: Vec::new(),
        })
    }

    pub fn with_max_deliveries(mut self, cap: u64) -> Self {
        self.max_deliveries = cap;
        self
    }

    pub fn netlist(&self) -> &Netlist {
        &self.netlist
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    /// Full record of every pulse delivered so far.
    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn cell(&self, id: CellId) -> &Cell {
        &self.netlist.cell(id).cell
    }

    /// Enqueues a pulse on `wire` at `time`.
    pub fn schedule(&mut self, wire: WireId, time: SimTime) -> Result<(), SimError> {
        if time < self.now {
            return Err(SimError::Causality {
                wire: self.netlist.wire_name(wire).to_string(),
                at: time,
                now: self.now,
            });
        }
        let ev = PulseEvent { time, rank: self.rank[wire.index()], seq: self.seq, wire };
        self.seq += 1;
        self.queue.push(Reverse(ev));
        Ok(())
    }

    /// Schedules a stimulus pulse on the external input called `port`.
    pub fn inject(&mut self, port: &str, time: SimTime) -> Result<(), SimError> {
        let wire = self.netlist.wire_id(port).ok_or_else(|| SimError::UnknownWire(port.to_string()))?;
        if !self.netlist.is_input(wire) {
            return Err(SimError::NotAnInput(port.to_string()));
        }
        self.schedule(wire, time)
    }

    /// Delivers every pending pulse with time `<= t_end` and returns the
    /// pulses delivered by this call. The simulator can be resumed later.
    pub fn run_until(&mut self, t_end: SimTime) -> Result<Trace, SimError> {
        let start = self.trace.len();
        while let Some(Reverse(ev)) = self.queue.peek().copied() {
            if ev.time > t_end {
                break;
            }
            self.queue.pop();
            self.deliver(ev)?;
        }
        self.now = self.now.max(t_end);
        let mut delta = Trace::new(self.trace_names());
        for ev in &self.trace.events()[start..] {
            delta.push(*ev);
        }
        Ok(delta)
    }

    /// Runs until the queue drains.
    pub fn run_to_completion(&mut self) -> Result<Trace, SimError> {
        let start = self.trace.len();
        while let Some(Reverse(ev)) = self.queue.pop() {
            self.deliver(ev)?;
        }
        let mut delta = Trace::new(self.trace_names());
        for ev in &self.trace.events()[start..] {
            delta.push(*ev);
        }
        Ok(delta)
    }

    fn trace_names(&self) -> Arc<[String]> {
        self.trace.wire_names().to_vec().into()
    }

    fn deliver(&mut self, ev: PulseEvent) -> Result<(), SimError> {
        self.deliveries += 1;
        if self.deliveries > self.max_deliveries {
            return Err(SimError::EventStorm {
                cap: self.max_deliveries,
                wire: self.netlist.wire_name(ev.wire).to_string(),
                at: ev.time,
            });
        }
        debug_assert!(ev.time >= self.now);
        self.now = ev.time;
        self.trace.push(TraceEvent { time: ev.time, wire: ev.wire });

        let Simulator { netlist, readers, scratch, rank, seq, queue, .. } = self;
        for &(ci, port) in &readers[ev.wire.index()] {
            scratch.clear();
            let inst = &mut netlist.cells_mut()[ci];
            inst.cell.on_pulse(port, ev.time, scratch);
            for &(out_port, at) in scratch.iter() {
                let w = inst.outputs[out_port];
                let pe = PulseEvent { time: at, rank: rank[w.index()], seq: *seq, wire: w };
                // Cell delays are unsigned, so emissions never precede the trigger.
                debug_assert!(at >= ev.time);
                *seq += 1;
                queue.push(Reverse(pe));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ps(v: u64) -> SimTime {
        SimTime::from_ps(v)
    }

    fn delay_netlist() -> Netlist {
        let mut n = Netlist::new();
        let i = n.add_input("in");
        let o = n.add_output("out");
        n.add_cell("d", Cell::delay(ps(5)), &[i], &[o]);
        n
    }

    #[test]
    fn schedule_on_empty_queue() {
        let mut n = Netlist::new();
        n.add_input("in");
        let mut sim = Simulator::new(n).unwrap();
        sim.inject("in", SimTime::ZERO).unwrap();
        assert_eq!(sim.pending(), 1);
    }

    #[test]
    fn simultaneous_pulses_follow_wire_names() {
        let mut n = Netlist::new();
        // Created in reverse name order on purpose.
        let b = n.add_input("b");
        let a = n.add_input("a");
        let mut sim = Simulator::new(n).unwrap();
        sim.schedule(b, ps(1)).unwrap();
        sim.schedule(a, ps(1)).unwrap();
        let tr = sim.run_until(ps(2)).unwrap();
        assert_eq!(tr.order_on(&[a, b]), vec!["a", "b"]);
    }

    #[test]
    fn earlier_pulse_scheduled_later_is_delivered_first() {
        let mut n = Netlist::new();
        let a = n.add_input("a");
        let mut sim = Simulator::new(n).unwrap();
        sim.schedule(a, ps(5)).unwrap();
        sim.schedule(a, ps(3)).unwrap();
        let tr = sim.run_until(ps(10)).unwrap();
        assert_eq!(tr.times_on("a"), vec![ps(3), ps(5)]);
    }

    #[test]
    fn past_events_rejected() {
        let mut sim = Simulator::new(delay_netlist()).unwrap();
        sim.run_until(ps(20)).unwrap();
        assert!(matches!(sim.inject("in", ps(10)), Err(SimError::Causality { .. })));
    }

    #[test]
    fn empty_netlist_runs_empty() {
        let mut sim = Simulator::new(Netlist::new()).unwrap();
        assert!(sim.run_until(ps(1000)).unwrap().is_empty());
    }

    #[test]
    fn delay_cell_output() {
        let mut sim = Simulator::new(delay_netlist()).unwrap();
        sim.inject("in", ps(10)).unwrap();
        let tr = sim.run_until(ps(20)).unwrap();
        assert_eq!(tr.times_on("out"), vec![ps(15)]);
    }

    #[test]
    fn resumable() {
        let mut sim = Simulator::new(delay_netlist()).unwrap();
        sim.inject("in", ps(10)).unwrap();
        let first = sim.run_until(ps(12)).unwrap();
        assert!(first.times_on("out").is_empty());
        let second = sim.run_until(ps(20)).unwrap();
        assert_eq!(second.times_on("out"), vec![ps(15)]);
        assert_eq!(sim.trace().len(), 2);
    }

    #[test]
    fn storm_guard_trips() {
        // A merger fed back through a delay re-emits forever.
        let mut n = Netlist::new();
        let a = n.add_input("a");
        let fb = n.wire("fb");
        let m = n.wire("m");
        n.add_cell("merge", Cell::merger(ps(1), SimTime::ZERO), &[a, fb], &[m]);
        n.add_cell("loop", Cell::delay(ps(1)), &[m], &[fb]);
        let mut sim = Simulator::new(n).unwrap().with_max_deliveries(1000);
        sim.inject("a", SimTime::ZERO).unwrap();
        assert!(matches!(sim.run_until(SimTime::MAX), Err(SimError::EventStorm { cap: 1000, .. })));
    }

    #[test]
    fn invalid_netlist_rejected() {
        let mut n = Netlist::new();
        n.wire("floating");
        assert!(matches!(Simulator::new(n), Err(SimError::Invalid(_))));
    }
}
