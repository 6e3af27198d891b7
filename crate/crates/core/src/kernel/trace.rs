use std::sync::Arc;

use crate::kernel::WireId;
use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TraceEvent {
    pub time: SimTime,
    pub wire: WireId,
}

/// Every pulse delivered by a simulation, in delivery order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    wire_names: Arc<[String]>,
    events: Vec<TraceEvent>,
}

impl Trace {
    pub fn new(wire_names: Arc<[String]>) -> Self {
        Trace { wire_names, events: Vec::new() }
    }

    pub(crate) fn push(&mut self, ev: TraceEvent) {
        self.events.push(ev);
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn wire_names(&self) -> &[String] {
        &self.wire_names
    }

    pub fn wire_name(&self, id: WireId) -> &str {
        &self.wire_names[id.index()]
    }

    /// Pulse times on the wire called `name`.
    pub fn times_on(&self, name: &str) -> Vec<SimTime> {
        self.events
            .iter()
            .filter(|e| self.wire_name(e.wire) == name)
            .map(|e| e.time)
            .collect()
    }

    pub fn count_on(&self, name: &str) -> usize {
        self.events.iter().filter(|e| self.wire_name(e.wire) == name).count()
    }

    /// Wire names of the events on the given wires, in delivery order.
    pub fn order_on(&self, wires: &[WireId]) -> Vec<&str> {
        self.events
            .iter()
            .filter(|e| wires.contains(&e.wire))
            .map(|e| self.wire_name(e.wire))
            .collect()
    }

    /// Appends the events of `other`, which must come from the same netlist.
    pub fn extend(&mut self, other: &Trace) {
        self.events.extend_from_slice(&other.events);
    }

    /// `(time_fs, wire)` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("time_fs,wire\n");
        for e in &self.events {
            s.push_str(&format!("{},{}\n", e.time.as_fs(), self.wire_name(e.wire)));
        }
        s
    }
}
