use crate::cells::Cell;
use crate::kernel::Simulator;
use crate::time::SimTime;

use super::{
    adjusted_threshold, build_neuron, cycle_stimulus, CycleProtocol, CycleStep, NeuronConfig, NeuronError,
    NeuronPorts, PortNames, TauState,
};

/// A single neuron driven cycle by cycle.
#[derive(Debug, Clone)]
pub struct NeuronSim {
    config: NeuronConfig,
    protocol: CycleProtocol,
    ports: NeuronPorts,
    sim: Simulator,
    cycle: u64,
}

impl NeuronSim {
    pub fn new(config: NeuronConfig) -> Result<NeuronSim, NeuronError> {
        let protocol = CycleProtocol::new(&config)?;
        let circuit = build_neuron(&config)?;
        let sim = Simulator::new(circuit.netlist)?;
        Ok(NeuronSim { config, protocol, ports: circuit.ports, sim, cycle: 0 })
    }

    pub fn config(&self) -> &NeuronConfig {
        &self.config
    }

    pub fn protocol(&self) -> &CycleProtocol {
        &self.protocol
    }

    pub fn ports(&self) -> &NeuronPorts {
        &self.ports
    }

    pub fn simulator(&self) -> &Simulator {
        &self.sim
    }

    pub fn cycles_run(&self) -> u64 {
        self.cycle
    }

    fn cycle_start(&self) -> SimTime {
        self.protocol.period.times(self.cycle)
    }

    /// Runs one full clock cycle and returns the number of output pulses.
    pub fn run_cycle(&mut self, step: &CycleStep) -> Result<u32, NeuronError> {
        let start = self.cycle_start();
        let inputs = self.protocol.input_times(start, step.inputs)?;
        for (port, at) in cycle_stimulus(&self.protocol, &PortNames::single(), start, &step.controls)? {
            self.sim.inject(&port, at)?;
        }
        for at in inputs {
            self.sim.schedule(self.ports.input, at)?;
        }
        let end = start + self.protocol.period;
        let delta = self.sim.run_until(end - SimTime::from_fs(1))?;
        self.cycle += 1;
        Ok(delta.events().iter().filter(|e| e.wire == self.ports.out).count() as u32)
    }

    /// TAU contents once pending writes complete.
    pub fn tau_state(&self) -> TauState {
        match self.sim.cell(self.ports.tau) {
            Cell::Mndro(m) => TauState::with_load(m.stored_settled()),
            _ => unreachable!("TAU cell is an M-NDRO"),
        }
    }

    pub fn adjusted_threshold(&self) -> Result<u32, NeuronError> {
        adjusted_threshold(&self.config, self.tau_state())
    }
}

/// Time from an increment arriving at an idle TAU until the resulting load
/// pulse reaches the TU, with the reload clock issued as soon as the
/// M-NDRO write completes. Measured on the built netlist.
pub fn adjustment_latency(config: &NeuronConfig) -> Result<SimTime, NeuronError> {
    let circuit = build_neuron(config)?;
    let set = circuit.ports.tu_set;
    let mut sim = Simulator::new(circuit.netlist)?;
    let t0 = SimTime::ZERO;
    sim.inject("incr", t0)?;
    sim.inject("clk", t0 + config.timing.mndro_write)?;
    let trace = sim.run_to_completion()?;
    let first = trace
        .events()
        .iter()
        .find(|e| e.wire == set)
        .map(|e| e.time)
        .expect("an increment followed by a clock always produces a load pulse");
    Ok(first - t0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuron::Control;

    #[test]
    fn fires_at_four() {
        let mut n = NeuronSim::new(NeuronConfig::new(4)).unwrap();
        assert_eq!(n.run_cycle(&CycleStep::inputs(4)).unwrap(), 1);
        assert_eq!(n.run_cycle(&CycleStep::inputs(3)).unwrap(), 0);
    }

    #[test]
    fn load_two_lowers_threshold() {
        let mut n = NeuronSim::new(NeuronConfig::new(4)).unwrap();
        let step = CycleStep::inputs(2).with_controls(Control::Increment, 2);
        assert_eq!(n.run_cycle(&step).unwrap(), 1);
        assert_eq!(n.tau_state(), TauState::LOAD2);
        assert_eq!(n.adjusted_threshold().unwrap(), 2);
    }

    #[test]
    fn load_one_eight_inputs() {
        let mut n = NeuronSim::new(NeuronConfig::new(4)).unwrap();
        let step = CycleStep::inputs(8).with_controls(Control::Increment, 1);
        // floor((1 + 8) / 4)
        assert_eq!(n.run_cycle(&step).unwrap(), 2);
    }

    #[test]
    fn latency_default_is_forty_ps() {
        assert_eq!(adjustment_latency(&NeuronConfig::new(4)).unwrap(), SimTime::from_ps(40));
    }

    #[test]
    fn latency_scales_with_delays() {
        let mut c = NeuronConfig::new(4);
        c.timing = c.timing.scaled(2);
        assert_eq!(adjustment_latency(&c).unwrap(), SimTime::from_ps(80));
    }

    #[test]
    fn latency_independent_of_tu_depth() {
        let c2 = NeuronConfig::new(2);
        let c4 = NeuronConfig::new(4);
        assert_eq!(c2.timing, c4.timing);
        assert_eq!(adjustment_latency(&c2).unwrap(), adjustment_latency(&c4).unwrap());
    }

    #[test]
    fn feedback_reload_rebiases_after_each_fire() {
        let mut c = NeuronConfig::new(4).with_period(SimTime::from_ps(2000));
        c.feedback_reload = true;
        let mut n = NeuronSim::new(c).unwrap();
        n.run_cycle(&CycleStep::default().with_controls(Control::Increment, 1)).unwrap();
        // Every fire reloads one pulse, so each further fire needs three inputs.
        assert_eq!(n.run_cycle(&CycleStep::inputs(8)).unwrap(), 2);
    }
}
