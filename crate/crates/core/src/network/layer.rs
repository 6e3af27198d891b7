use serde::{Deserialize, Serialize};

use crate::cells::Cell;
use crate::kernel::{Netlist, SimError, Simulator, WireId};
use crate::neuron::{add_neuron, even_spacing, Control, ControlWires, CycleProtocol, NeuronConfig, NeuronPorts, CONTROL_SPACING};
use crate::time::SimTime;

use super::{NetworkError, SynapseMatrix};

fn default_group_wired() -> bool {
    true
}

fn default_max_rate() -> u32 {
    16
}

/// One layer: `weights.neurons()` identical neurons.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerConfig {
    pub neuron: NeuronConfig,
    pub weights: SynapseMatrix,
    /// Tie every member's increment and decrement pins together.
    #[serde(default = "default_group_wired")]
    pub group_wired: bool,
    /// Largest pulse count accepted on one presynaptic input per cycle.
    #[serde(default = "default_max_rate")]
    pub max_rate: u32,
}

impl LayerConfig {
    pub fn new(neuron: NeuronConfig, weights: SynapseMatrix) -> LayerConfig {
        LayerConfig { neuron, weights, group_wired: true, max_rate: default_max_rate() }
    }

    pub fn neuron_count(&self) -> usize {
        self.weights.neurons()
    }
}

/// Pulse-level simulation of a layer. All neurons live in one netlist with
/// a shared clock (`ctl.clk`) and reset (`ctl.reset`); group-wired layers
/// also share `ctl.incr` and `ctl.decr`, otherwise neuron `i` has
/// `n{i}.incr` and `n{i}.decr`. Inputs are `n{i}.in`, outputs `n{i}.out`.
#[derive(Debug, Clone)]
pub struct LayerSim {
    config: LayerConfig,
    protocol: CycleProtocol,
    neurons: Vec<NeuronPorts>,
    clk: WireId,
    reset: WireId,
    sim: Simulator,
    cycle: u64,
}

impl LayerSim {
    pub fn new(config: LayerConfig) -> Result<LayerSim, NetworkError> {
        let protocol = CycleProtocol::new(&config.neuron)?;
        let mut n = Netlist::new();
        let clk = n.add_input("ctl.clk");
        let reset = n.add_input("ctl.reset");
        let group = config.group_wired.then(|| (n.add_input("ctl.incr"), n.add_input("ctl.decr")));
        let mut neurons = Vec::with_capacity(config.neuron_count());
        for i in 0..config.neuron_count() {
            let prefix = format!("n{i}.");
            let (incr, decr) = match group {
                Some(pins) => pins,
                None => (n.add_input(&format!("{prefix}incr")), n.add_input(&format!("{prefix}decr"))),
            };
            n.add_input(&format!("{prefix}in"));
            n.add_output(&format!("{prefix}out"));
            neurons.push(add_neuron(&mut n, &prefix, ControlWires { incr, decr, clk, reset }, &config.neuron));
        }
        let diags = n.validate();
        if !diags.is_empty() {
            return Err(NetworkError::Neuron(SimError::Invalid(diags).into()));
        }
        let sim = Simulator::new(n).map_err(|e| NetworkError::Neuron(e.into()))?;
        Ok(LayerSim { config, protocol, neurons, clk, reset, sim, cycle: 0 })
    }

    pub fn config(&self) -> &LayerConfig {
        &self.config
    }

    pub fn protocol(&self) -> &CycleProtocol {
        &self.protocol
    }

    pub fn neuron_count(&self) -> usize {
        self.neurons.len()
    }

    pub fn cycles_run(&self) -> u64 {
        self.cycle
    }

    /// Settled TAU load of every neuron.
    pub fn loads(&self) -> Vec<u32> {
        self.neurons
            .iter()
            .map(|p| match self.sim.cell(p.tau) {
                Cell::Mndro(m) => m.stored_settled(),
                _ => unreachable!("TAU cell is an M-NDRO"),
            })
            .collect()
    }

    /// Adjusted threshold of every neuron.
    pub fn thresholds(&self) -> Vec<u32> {
        self.loads().into_iter().map(|l| self.config.neuron.max_threshold - l).collect()
    }

    fn check_shift(&self, neuron: usize, delta: i64) -> Result<(), NetworkError> {
        let current = self.thresholds()[neuron];
        let reachable = self.config.neuron.reachable_thresholds();
        let (min, max) = (reachable[0], *reachable.last().unwrap());
        let target = i64::from(current) - delta;
        if target < i64::from(min) || target > i64::from(max) {
            return Err(NetworkError::ThresholdOutOfRange { neuron, current, delta, min, max });
        }
        Ok(())
    }

    fn controls_for(delta: i64) -> Vec<Control> {
        let c = if delta > 0 { Control::Increment } else { Control::Decrement };
        vec![c; delta.unsigned_abs() as usize]
    }

    /// Lowers every member threshold by `delta` (raises it for negative
    /// `delta`) with `|delta|` increment or decrement pulses followed by a
    /// reload clock. Runs one cycle without inputs. Nothing is issued if any
    /// member would leave its reachable range.
    pub fn adjust_layer_threshold(&mut self, delta: i64) -> Result<(), NetworkError> {
        for i in 0..self.neurons.len() {
            self.check_shift(i, delta)?;
        }
        if delta == 0 {
            return Ok(());
        }
        let controls = Self::controls_for(delta);
        let per_neuron = vec![controls; self.neurons.len()];
        self.run_cycle(&per_neuron, &vec![0; self.neurons.len()])?;
        Ok(())
    }

    /// Shifts a single neuron's threshold. On a group-wired layer the pins
    /// are shared, so this moves every member.
    pub fn adjust_neuron_threshold(&mut self, neuron: usize, delta: i64) -> Result<(), NetworkError> {
        if neuron >= self.neurons.len() {
            return Err(NetworkError::NoSuchNeuron(neuron));
        }
        if self.config.group_wired {
            return self.adjust_layer_threshold(delta);
        }
        self.check_shift(neuron, delta)?;
        if delta == 0 {
            return Ok(());
        }
        let mut per_neuron = vec![Vec::new(); self.neurons.len()];
        per_neuron[neuron] = Self::controls_for(delta);
        self.run_cycle(&per_neuron, &vec![0; self.neurons.len()])?;
        Ok(())
    }

    /// Moves every member to `threshold`.
    pub fn set_layer_threshold(&mut self, threshold: u32) -> Result<(), NetworkError> {
        let current = self.thresholds();
        if self.config.group_wired {
            // Members of a group always agree.
            return self.adjust_layer_threshold(i64::from(current[0]) - i64::from(threshold));
        }
        for (i, &c) in current.iter().enumerate() {
            self.check_shift(i, i64::from(c) - i64::from(threshold))?;
        }
        for (i, c) in current.into_iter().enumerate() {
            self.adjust_neuron_threshold(i, i64::from(c) - i64::from(threshold))?;
        }
        Ok(())
    }

    /// Runs one cycle on presynaptic values `x` and returns each neuron's
    /// output pulse count.
    pub fn forward(&mut self, x: &[u32]) -> Result<Vec<u32>, NetworkError> {
        if let Some((k, &v)) = x.iter().enumerate().find(|(_, v)| **v > self.config.max_rate) {
            return Err(NetworkError::InputRate { input: k, value: v, max: self.config.max_rate });
        }
        let drive = self.config.weights.apply(x)?;
        self.run_cycle(&vec![Vec::new(); self.neurons.len()], &drive)
    }

    /// Runs one cycle with explicit per-neuron controls and postsynaptic
    /// pulse counts. On a group-wired layer the first neuron's controls
    /// drive the shared pins.
    pub fn run_cycle(&mut self, controls: &[Vec<Control>], drive: &[u32]) -> Result<Vec<u32>, NetworkError> {
        let start = self.protocol.period.times(self.cycle);
        let slots = self.protocol.control_slots;
        let mut schedule = Vec::new();
        for (i, port) in self.neurons.iter().enumerate() {
            if self.config.group_wired && i > 0 {
                break;
            }
            let cs = controls.get(i).map_or(&[][..], Vec::as_slice);
            if cs.len() > slots {
                return Err(crate::neuron::NeuronError::TooManyControls { controls: cs.len(), slots }.into());
            }
            for (j, c) in cs.iter().enumerate() {
                let wire = match c {
                    Control::Increment => port.controls.incr,
                    Control::Decrement => port.controls.decr,
                };
                schedule.push((wire, start + CONTROL_SPACING.times(j as u64)));
            }
        }
        let clock = start + self.protocol.clock_offset;
        schedule.push((self.reset, clock));
        schedule.push((self.clk, clock));
        for (port, &n) in self.neurons.iter().zip(drive) {
            let times = even_spacing(start + self.protocol.window_start, self.protocol.window(), n, self.protocol.min_spacing)?;
            schedule.extend(times.into_iter().map(|t| (port.input, t)));
        }
        for (wire, at) in schedule {
            self.sim.schedule(wire, at).map_err(|e| NetworkError::Neuron(e.into()))?;
        }
        let end = start + self.protocol.period - SimTime::from_fs(1);
        let delta = self.sim.run_until(end).map_err(|e| NetworkError::Neuron(e.into()))?;
        self.cycle += 1;
        let mut counts = vec![0u32; self.neurons.len()];
        for e in delta.events() {
            if let Some(i) = self.neurons.iter().position(|p| p.out == e.wire) {
                counts[i] += 1;
            }
        }
        Ok(counts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layer(weights: Vec<Vec<u32>>, group: bool) -> LayerSim {
        let mut c = LayerConfig::new(NeuronConfig::new(4), SynapseMatrix::new(weights).unwrap());
        c.group_wired = group;
        LayerSim::new(c).unwrap()
    }

    #[test]
    fn boundary_of_threshold() {
        let mut l = layer(vec![vec![1, 1, 1, 1]], true);
        assert_eq!(l.forward(&[1, 1, 1, 1]).unwrap(), vec![1]);
        assert_eq!(l.forward(&[1, 1, 1, 0]).unwrap(), vec![0]);
    }

    #[test]
    fn group_adjust_lowers_every_member() {
        let mut l = layer(vec![vec![1], vec![2], vec![3]], true);
        assert_eq!(l.thresholds(), vec![4, 4, 4]);
        l.adjust_layer_threshold(2).unwrap();
        assert_eq!(l.thresholds(), vec![2, 2, 2]);
        assert_eq!(l.forward(&[1]).unwrap(), vec![0, 1, 1]);
        l.adjust_layer_threshold(0).unwrap();
        assert_eq!(l.thresholds(), vec![2, 2, 2]);
    }

    #[test]
    fn floor_rejected_without_pulses() {
        let mut l = layer(vec![vec![1]], true);
        l.adjust_layer_threshold(3).unwrap();
        assert_eq!(l.thresholds(), vec![1]);
        let cycles = l.cycles_run();
        assert!(matches!(l.adjust_layer_threshold(1), Err(NetworkError::ThresholdOutOfRange { current: 1, .. })));
        assert!(matches!(l.adjust_layer_threshold(-4), Err(NetworkError::ThresholdOutOfRange { .. })));
        assert_eq!(l.cycles_run(), cycles);
        assert_eq!(l.thresholds(), vec![1]);
    }

    #[test]
    fn per_neuron_adjust() {
        let mut l = layer(vec![vec![1], vec![1]], false);
        l.adjust_neuron_threshold(1, 3).unwrap();
        assert_eq!(l.thresholds(), vec![4, 1]);
        assert_eq!(l.forward(&[1]).unwrap(), vec![0, 1]);
        l.set_layer_threshold(2).unwrap();
        assert_eq!(l.thresholds(), vec![2, 2]);
    }

    #[test]
    fn fan_in_checked() {
        let mut l = layer(vec![vec![1, 1]], true);
        assert!(matches!(l.forward(&[1]), Err(NetworkError::FanInMismatch { .. })));
        assert!(matches!(l.forward(&[17, 0]), Err(NetworkError::InputRate { .. })));
    }

    #[test]
    fn layer_config_from_toml() {
        let c: LayerConfig = toml::from_str("weights = [[1, 2]]\n[neuron]\nmax_threshold = 4\n").unwrap();
        assert!(c.group_wired);
        assert_eq!(c.weights.fan_in(), 2);
    }
}
