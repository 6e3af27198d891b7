use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cells::{Cell, CellTiming, MndroCell};
use crate::kernel::{Netlist, Simulator, Trace, WireId};
use crate::neuron::{arbiter_netlist, build_neuron, cycle_stimulus, Control, CycleProtocol, NeuronConfig, PortNames};
use crate::time::SimTime;

use super::{parse_versioned, read_file, HarnessError};

/// A circuit, its stimulus and what it is expected to do.
///
/// Exactly one of `neuron`, `arbiter` or `netlist` describes the circuit.
/// A neuron may be driven cycle by cycle through `cycles`; any circuit
/// accepts explicit pulses through `stimulus`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Stop time; without it the run continues until no pulse is pending.
    #[serde(default, rename = "horizon_ps", with = "crate::time::ps_opt", skip_serializing_if = "Option::is_none")]
    pub horizon: Option<SimTime>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neuron: Option<NeuronConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arbiter: Option<ArbiterSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub netlist: Option<NetlistSpec>,
    #[serde(default)]
    pub cycles: Vec<CycleSpec>,
    #[serde(default)]
    pub stimulus: Vec<StimulusSpec>,
    #[serde(default)]
    pub expect: Expect,
}

/// Stand-alone arbiter with ports `load`, `in` and `out`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArbiterSpec {
    #[serde(default)]
    pub timing: CellTiming,
    #[serde(default, rename = "comp_delay_ps", with = "crate::time::ps_opt", skip_serializing_if = "Option::is_none")]
    pub comp_delay: Option<SimTime>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetlistSpec {
    #[serde(default)]
    pub inputs: Vec<String>,
    #[serde(default)]
    pub outputs: Vec<String>,
    #[serde(default)]
    pub cells: Vec<CellSpec>,
}

/// One cell instance. Timing fields left out take the library defaults.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSpec {
    pub name: String,
    pub kind: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    #[serde(default, rename = "delay_ps", with = "crate::time::ps_opt", skip_serializing_if = "Option::is_none")]
    pub delay: Option<SimTime>,
    #[serde(default, rename = "dead_time_ps", with = "crate::time::ps_opt", skip_serializing_if = "Option::is_none")]
    pub dead_time: Option<SimTime>,
    #[serde(default, rename = "window_ps", with = "crate::time::ps_opt", skip_serializing_if = "Option::is_none")]
    pub window: Option<SimTime>,
    #[serde(default, rename = "interval_ps", with = "crate::time::ps_opt", skip_serializing_if = "Option::is_none")]
    pub interval: Option<SimTime>,
    #[serde(default, rename = "write_ps", with = "crate::time::ps_opt", skip_serializing_if = "Option::is_none")]
    pub write: Option<SimTime>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stored: Option<u32>,
}

impl CellSpec {
    fn build(&self) -> Result<Cell, HarnessError> {
        let d = CellTiming::default();
        let allowed: &[&str] = match self.kind.as_str() {
            "delay" | "splitter" | "rtff" => &["delay_ps"],
            "merger" => &["delay_ps", "dead_time_ps"],
            "and" => &["delay_ps", "window_ps"],
            "mndro" => &["delay_ps", "interval_ps", "write_ps", "capacity", "stored"],
            k => return Err(HarnessError::Invalid(format!("cell `{}`: unknown kind `{k}`", self.name))),
        };
        let given = [
            ("delay_ps", self.delay.is_some()),
            ("dead_time_ps", self.dead_time.is_some()),
            ("window_ps", self.window.is_some()),
            ("interval_ps", self.interval.is_some()),
            ("write_ps", self.write.is_some()),
            ("capacity", self.capacity.is_some()),
            ("stored", self.stored.is_some()),
        ];
        if let Some((field, _)) = given.iter().find(|(f, set)| *set && !allowed.contains(f)) {
            return Err(HarnessError::Invalid(format!(
                "cell `{}`: `{field}` does not apply to a {} cell",
                self.name, self.kind
            )));
        }
        Ok(match self.kind.as_str() {
            "delay" => Cell::delay(self.delay.unwrap_or(d.delay)),
            "splitter" => Cell::splitter(self.delay.unwrap_or(d.splitter_delay)),
            "rtff" => Cell::rtff(self.delay.unwrap_or(d.rtff_delay)),
            "merger" => Cell::merger(self.delay.unwrap_or(d.merger_delay), self.dead_time.unwrap_or(d.merger_dead_time)),
            "and" => Cell::and(self.delay.unwrap_or(d.and_delay), self.window.unwrap_or(d.and_window)),
            _ => {
                let capacity = self.capacity.unwrap_or(1);
                if capacity == 0 {
                    return Err(HarnessError::Invalid(format!("cell `{}`: capacity must be at least 1", self.name)));
                }
                let cell = MndroCell::new(
                    capacity,
                    self.delay.unwrap_or(d.mndro_delay),
                    self.interval.unwrap_or(d.mndro_interval),
                    self.write.unwrap_or(d.mndro_write),
                );
                Cell::Mndro(cell.with_stored(self.stored.unwrap_or(0)))
            }
        })
    }
}

impl NetlistSpec {
    pub fn build(&self) -> Result<Netlist, HarnessError> {
        let mut n = Netlist::new();
        for name in &self.inputs {
            n.add_input(name);
        }
        for name in &self.outputs {
            n.add_output(name);
        }
        for c in &self.cells {
            if n.cell_id(&c.name).is_some() {
                return Err(HarnessError::Invalid(format!("duplicate cell name `{}`", c.name)));
            }
            let cell = c.build()?;
            let ins: Vec<WireId> = c.inputs.iter().map(|w| n.wire(w)).collect();
            let outs: Vec<WireId> = c.outputs.iter().map(|w| n.wire(w)).collect();
            n.add_cell(&c.name, cell, &ins, &outs);
        }
        Ok(n)
    }
}

/// One neuron clock cycle: increments, then decrements, then `inputs`
/// evenly spaced input pulses.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CycleSpec {
    #[serde(default)]
    pub inputs: u32,
    #[serde(default)]
    pub incr: usize,
    #[serde(default)]
    pub decr: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StimulusSpec {
    pub port: String,
    #[serde(rename = "times_ps", with = "crate::time::ps_vec")]
    pub times: Vec<SimTime>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expect {
    /// Output pulses per neuron cycle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fires: Option<Vec<u32>>,
    /// Total pulses per wire.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub counts: BTreeMap<String, usize>,
}

/// A scenario lowered to a netlist and a flat stimulus list.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub netlist: Netlist,
    pub stimulus: Vec<(String, SimTime)>,
    pub horizon: Option<SimTime>,
    /// Clock period and cycle count for neuron scenarios.
    pub cycles: Option<(SimTime, usize)>,
    pub expect: Expect,
}

#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub trace: Trace,
    pub fires: Option<Vec<u32>>,
    /// Unmet expectations, in a human-readable form.
    pub failures: Vec<String>,
}

impl ScenarioOutcome {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Scenario, HarnessError> {
        let text = read_file(path)?;
        parse_versioned(path, &text)
    }

    pub fn prepare(&self) -> Result<Prepared, HarnessError> {
        let circuits = [self.neuron.is_some(), self.arbiter.is_some(), self.netlist.is_some()];
        if circuits.iter().filter(|c| **c).count() != 1 {
            return Err(HarnessError::Invalid(
                "a scenario needs exactly one of [neuron], [arbiter] or [netlist]".into(),
            ));
        }
        let mut stimulus = Vec::new();
        let mut cycles = None;
        let netlist = if let Some(config) = &self.neuron {
            let circuit = build_neuron(config)?;
            if !self.cycles.is_empty() {
                let protocol = CycleProtocol::new(config)?;
                for (i, c) in self.cycles.iter().enumerate() {
                    let start = protocol.period.times(i as u64);
                    let mut controls = vec![Control::Increment; c.incr];
                    controls.extend(std::iter::repeat_n(Control::Decrement, c.decr));
                    stimulus.extend(cycle_stimulus(&protocol, &PortNames::single(), start, &controls)?);
                    let inputs = protocol.input_times(start, c.inputs).map_err(crate::neuron::NeuronError::from)?;
                    stimulus.extend(inputs.into_iter().map(|t| ("in".to_string(), t)));
                }
                cycles = Some((protocol.period, self.cycles.len()));
            }
            circuit.netlist
        } else if let Some(a) = &self.arbiter {
            let t = &a.timing;
            let comp = a.comp_delay.unwrap_or(t.and_window + t.merger_delay + SimTime::from_ps(1));
            arbiter_netlist(t, comp).0
        } else {
            let spec = self.netlist.as_ref().expect("checked above");
            spec.build()?
        };
        if cycles.is_none() && !self.cycles.is_empty() {
            return Err(HarnessError::Invalid("`cycles` needs a [neuron] circuit".into()));
        }
        if cycles.is_none() && self.expect.fires.is_some() {
            return Err(HarnessError::Invalid("`expect.fires` needs neuron `cycles`".into()));
        }
        for s in &self.stimulus {
            match netlist.wire_id(&s.port) {
                Some(w) if netlist.is_input(w) => {}
                Some(_) => return Err(HarnessError::Invalid(format!("stimulus port `{}` is not an input", s.port))),
                None => return Err(HarnessError::Invalid(format!("stimulus port `{}` does not exist", s.port))),
            }
            stimulus.extend(s.times.iter().map(|&t| (s.port.clone(), t)));
        }
        for wire in self.expect.counts.keys() {
            if netlist.wire_id(wire).is_none() {
                return Err(HarnessError::Invalid(format!("expected wire `{wire}` does not exist")));
            }
        }
        let diags = netlist.validate();
        if !diags.is_empty() {
            return Err(HarnessError::Netlist(diags));
        }
        Ok(Prepared { netlist, stimulus, horizon: self.horizon, cycles, expect: self.expect.clone() })
    }
}

impl Prepared {
    /// Runs the stimulus on `netlist`, which must have the same ports as
    /// the prepared one (typically a retimed copy).
    pub fn execute_on(&self, netlist: Netlist) -> Result<ScenarioOutcome, HarnessError> {
        let mut sim = Simulator::new(netlist)?;
        for (port, at) in &self.stimulus {
            sim.inject(port, *at)?;
        }
        let trace = match self.horizon {
            Some(h) => sim.run_until(h)?,
            None => sim.run_to_completion()?,
        };
        let fires = self.cycles.map(|(period, n)| {
            let mut fires = vec![0u32; n];
            for t in trace.times_on("out") {
                let i = (t.as_fs() / period.as_fs()) as usize;
                if i < n {
                    fires[i] += 1;
                }
            }
            fires
        });
        let mut failures = Vec::new();
        if let (Some(want), Some(got)) = (&self.expect.fires, &fires) {
            if want != got {
                failures.push(format!("fires per cycle: expected {want:?}, got {got:?}"));
            }
        }
        for (wire, &want) in &self.expect.counts {
            let got = trace.count_on(wire);
            if got != want {
                failures.push(format!("pulses on `{wire}`: expected {want}, got {got}"));
            }
        }
        Ok(ScenarioOutcome { trace, fires, failures })
    }

    pub fn execute(&self) -> Result<ScenarioOutcome, HarnessError> {
        self.execute_on(self.netlist.clone())
    }

    /// External port names of the trace events, in delivery order.
    pub fn port_order(&self, trace: &Trace) -> Vec<String> {
        let ports: Vec<WireId> = self.netlist.inputs().iter().chain(self.netlist.outputs()).copied().collect();
        trace.order_on(&ports).into_iter().map(str::to_string).collect()
    }
}

pub fn run_scenario(path: &Path) -> Result<(Scenario, ScenarioOutcome), HarnessError> {
    let scenario = Scenario::load(path)?;
    let outcome = scenario.prepare()?.execute()?;
    Ok((scenario, outcome))
}

/// First difference between a trace in CSV form and a golden file, as
/// `(line, expected, found)`. Line endings are normalized.
pub fn compare_golden(actual_csv: &str, golden: &str) -> Option<(usize, String, String)> {
    let golden = golden.replace("\r\n", "\n");
    let mut a = actual_csv.lines();
    let mut g = golden.lines();
    let mut line = 1;
    loop {
        match (g.next(), a.next()) {
            (None, None) => return None,
            (want, got) if want == got => line += 1,
            (want, got) => {
                let show = |s: Option<&str>| s.map_or("<end of file>".to_string(), str::to_string);
                return Some((line, show(want), show(got)));
            }
        }
    }
}
