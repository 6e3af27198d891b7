use std::collections::HashMap;
use std::fmt;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::cells::Cell;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WireId(pub(crate) u32);

impl WireId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellId(pub(crate) u32);

impl CellId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A named cell with its port wiring. `inputs[i]` feeds input port `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellInstance {
    pub name: String,
    pub cell: Cell,
    pub inputs: Vec<WireId>,
    pub outputs: Vec<WireId>,
}

/// Structural problem found by [`Netlist::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagnostic {
    MultipleDrivers { wire: String, drivers: Vec<String> },
    Undriven { wire: String },
    ZeroDelayCycle { wires: Vec<String> },
    PortArity { cell: String, kind: &'static str, expected: (usize, usize), found: (usize, usize) },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::MultipleDrivers { wire, drivers } => {
                write!(f, "wire `{wire}` has {} drivers: {}", drivers.len(), drivers.join(", "))
            }
            Diagnostic::Undriven { wire } => write!(f, "wire `{wire}` has no driver"),
            Diagnostic::ZeroDelayCycle { wires } => {
                write!(f, "zero-delay cycle through wires: {}", wires.join(" -> "))
            }
            Diagnostic::PortArity { cell, kind, expected, found } => write!(
                f,
                "cell `{cell}` ({kind}) expects {} inputs/{} outputs, wired with {}/{}",
                expected.0, expected.1, found.0, found.1
            ),
        }
    }
}

/// Wires, cells and external ports of a circuit.
///
/// Wires may have any number of readers but must have exactly one driver:
/// either an external input port or one cell output port.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Netlist {
    wire_names: Vec<String>,
    by_name: HashMap<String, WireId>,
    cells: Vec<CellInstance>,
    inputs: Vec<WireId>,
    outputs: Vec<WireId>,
}

impl Netlist {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the wire called `name`, creating it on first use.
    pub fn wire(&mut self, name: &str) -> WireId {
        if let Some(&id) = self.by_name.get(name) {
            return id;
        }
        let id = WireId(self.wire_names.len() as u32);
        self.wire_names.push(name.to_string());
        self.by_name.insert(name.to_string(), id);
        id
    }

    pub fn add_input(&mut self, name: &str) -> WireId {
        let id = self.wire(name);
        if !self.inputs.contains(&id) {
            self.inputs.push(id);
        }
        id
    }

    pub fn add_output(&mut self, name: &str) -> WireId {
        let id = self.wire(name);
        if !self.outputs.contains(&id) {
            self.outputs.push(id);
        }
        id
    }

    pub fn add_cell(&mut self, name: &str, cell: Cell, inputs: &[WireId], outputs: &[WireId]) -> CellId {
        let id = CellId(self.cells.len() as u32);
        self.cells.push(CellInstance {
            name: name.to_string(),
            cell,
            inputs: inputs.to_vec(),
            outputs: outputs.to_vec(),
        });
        id
    }

    pub fn wire_id(&self, name: &str) -> Option<WireId> {
        self.by_name.get(name).copied()
    }

    pub fn wire_name(&self, id: WireId) -> &str {
        &self.wire_names[id.index()]
    }

    pub fn wire_names(&self) -> &[String] {
        &self.wire_names
    }

    pub fn wire_count(&self) -> usize {
        self.wire_names.len()
    }

    pub fn cells(&self) -> &[CellInstance] {
        &self.cells
    }

    pub fn cells_mut(&mut self) -> &mut [CellInstance] {
        &mut self.cells
    }

    pub fn cell(&self, id: CellId) -> &CellInstance {
        &self.cells[id.index()]
    }

    pub fn cell_id(&self, name: &str) -> Option<CellId> {
        self.cells.iter().position(|c| c.name == name).map(|i| CellId(i as u32))
    }

    pub fn inputs(&self) -> &[WireId] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[WireId] {
        &self.outputs
    }

    pub fn is_input(&self, id: WireId) -> bool {
        self.inputs.contains(&id)
    }

    /// Checks the single-driver rule, port arity and the absence of
    /// zero-delay feedback. An empty result means the netlist is simulable.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut diags = Vec::new();

        for inst in &self.cells {
            let expected = (inst.cell.input_ports().len(), inst.cell.output_ports().len());
            let found = (inst.inputs.len(), inst.outputs.len());
            if expected != found {
                diags.push(Diagnostic::PortArity {
                    cell: inst.name.clone(),
                    kind: inst.cell.kind(),
                    expected,
                    found,
                });
            }
        }

        let mut drivers: Vec<Vec<String>> = vec![Vec::new(); self.wire_names.len()];
        for &w in &self.inputs {
            drivers[w.index()].push(format!("input `{}`", self.wire_name(w)));
        }
        for inst in &self.cells {
            for (port, &w) in inst.outputs.iter().enumerate() {
                let pname = inst.cell.output_ports().get(port).copied().unwrap_or("?");
                drivers[w.index()].push(format!("{}.{pname}", inst.name));
            }
        }
        for (idx, d) in drivers.into_iter().enumerate() {
            let wire = self.wire_names[idx].clone();
            match d.len() {
                0 => diags.push(Diagnostic::Undriven { wire }),
                1 => {}
                _ => diags.push(Diagnostic::MultipleDrivers { wire, drivers: d }),
            }
        }

        diags.extend(self.zero_delay_cycles());
        diags
    }

    fn zero_delay_cycles(&self) -> Vec<Diagnostic> {
        // Nodes are zero-delay cells; an edge a -> b means an output wire of a
        // is read by b.
        let mut graph = DiGraph::<usize, WireId>::new();
        let mut node_of = HashMap::new();
        for (i, inst) in self.cells.iter().enumerate() {
            if inst.cell.min_delay().as_fs() == 0 {
                node_of.insert(i, graph.add_node(i));
            }
        }
        let mut readers: HashMap<WireId, Vec<usize>> = HashMap::new();
        for (i, inst) in self.cells.iter().enumerate() {
            for &w in &inst.inputs {
                readers.entry(w).or_default().push(i);
            }
        }
        for (&i, &from) in &node_of {
            for &w in &self.cells[i].outputs {
                for &j in readers.get(&w).map(Vec::as_slice).unwrap_or(&[]) {
                    if let Some(&to) = node_of.get(&j) {
                        graph.add_edge(from, to, w);
                    }
                }
            }
        }

        let mut diags = Vec::new();
        for scc in tarjan_scc(&graph) {
            let cyclic = scc.len() > 1 || graph.find_edge(scc[0], scc[0]).is_some();
            if !cyclic {
                continue;
            }
            let mut wires: Vec<String> = graph
                .edge_indices()
                .filter(|&e| {
                    let (a, b) = graph.edge_endpoints(e).unwrap();
                    scc.contains(&a) && scc.contains(&b)
                })
                .map(|e| self.wire_name(graph[e]).to_string())
                .collect();
            wires.sort();
            wires.dedup();
            diags.push(Diagnostic::ZeroDelayCycle { wires });
        }
        diags.sort_by(|a, b| format!("{a}").cmp(&format!("{b}")));
        diags
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::SimTime;

    #[test]
    fn two_drivers_reported_once() {
        let mut n = Netlist::new();
        let a = n.add_input("a");
        let x = n.wire("x");
        n.add_cell("d1", Cell::delay(SimTime::from_ps(5)), &[a], &[x]);
        n.add_cell("d2", Cell::delay(SimTime::from_ps(5)), &[a], &[x]);
        let diags = n.validate();
        assert_eq!(diags.len(), 1);
        match &diags[0] {
            Diagnostic::MultipleDrivers { wire, drivers } => {
                assert_eq!(wire, "x");
                assert_eq!(drivers.len(), 2);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn zero_delay_merger_loop() {
        let mut n = Netlist::new();
        let a = n.add_input("a");
        let fb = n.wire("fb");
        n.add_cell("m", Cell::merger(SimTime::ZERO, SimTime::ZERO), &[a, fb], &[fb]);
        let diags = n.validate();
        assert_eq!(diags, vec![Diagnostic::ZeroDelayCycle { wires: vec!["fb".into()] }]);
    }

    #[test]
    fn positive_delay_loop_is_fine() {
        let mut n = Netlist::new();
        let a = n.add_input("a");
        let fb = n.wire("fb");
        n.add_cell("m", Cell::merger(SimTime::from_ps(7), SimTime::from_ps(8)), &[a, fb], &[fb]);
        assert!(n.validate().is_empty());
    }

    #[test]
    fn undriven_and_arity() {
        let mut n = Netlist::new();
        let x = n.wire("x");
        let y = n.wire("y");
        n.add_cell("s", Cell::splitter(SimTime::from_ps(5)), &[x], &[y]);
        let diags = n.validate();
        assert!(diags.iter().any(|d| matches!(d, Diagnostic::Undriven { wire } if wire == "x")));
        assert!(diags.iter().any(|d| matches!(d, Diagnostic::PortArity { .. })));
    }
}
