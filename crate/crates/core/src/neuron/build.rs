use crate::cells::{Cell, CellTiming, MndroCell};
use crate::kernel::{CellId, Netlist, SimError, WireId};
use crate::time::SimTime;

use super::{NeuronConfig, NeuronError};

/// How the RTFF stages of a threshold unit are interconnected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TuTopology {
    /// Plain ripple cascade; one stage divides by two, two stages by four.
    Series,
    /// Stages take turns: a one-bit M-NDRO gate in front of each stage
    /// passes set pulses only while that stage holds the token. A stage that
    /// has counted two pulses hands the token to the next one, so `k` stages
    /// count to `2k`.
    Gated,
}

impl TuTopology {
    pub fn for_stages(stages: u32) -> TuTopology {
        if stages <= 2 {
            TuTopology::Series
        } else {
            TuTopology::Gated
        }
    }
}

/// Closest two set pulses may follow each other into a gated TU: gate
/// readout, stage toggle, clear merger and gate write must all settle.
pub(crate) fn gated_min_spacing(t: &CellTiming) -> SimTime {
    t.mndro_delay + t.rtff_delay + t.merger_delay + t.mndro_write
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArbiterPorts {
    pub load: WireId,
    pub input: WireId,
    pub out: WireId,
    /// Output of the coincidence AND, before the recovery delay.
    pub recovered: WireId,
}

/// Lossless merge of the load and input streams.
///
/// Both streams are split into a confluence buffer and a coincidence AND.
/// When two pulses land inside the buffer's dead window the buffer passes
/// one and the AND reports the other, which is delayed by `comp_delay` and
/// merged back into the output.
pub fn add_arbiter(
    netlist: &mut Netlist,
    prefix: &str,
    load: WireId,
    input: WireId,
    out: WireId,
    timing: &CellTiming,
    comp_delay: SimTime,
) -> ArbiterPorts {
    let w = |n: &mut Netlist, s: &str| n.wire(&format!("{prefix}arb.{s}"));
    let load_m = w(netlist, "load_m");
    let load_a = w(netlist, "load_a");
    let in_m = w(netlist, "in_m");
    let in_a = w(netlist, "in_a");
    let cbu_out = w(netlist, "cbu");
    let and_out = w(netlist, "and");
    let recovered = w(netlist, "recovered");

    netlist.add_cell(&format!("{prefix}arb.split_load"), Cell::splitter(timing.splitter_delay), &[load], &[load_m, load_a]);
    netlist.add_cell(&format!("{prefix}arb.split_in"), Cell::splitter(timing.splitter_delay), &[input], &[in_m, in_a]);
    netlist.add_cell(
        &format!("{prefix}arb.cbu"),
        Cell::merger(timing.merger_delay, timing.merger_dead_time),
        &[load_m, in_m],
        &[cbu_out],
    );
    netlist.add_cell(&format!("{prefix}arb.and"), Cell::and(timing.and_delay, timing.and_window), &[load_a, in_a], &[and_out]);
    netlist.add_cell(&format!("{prefix}arb.comp"), Cell::delay(comp_delay), &[and_out], &[recovered]);
    netlist.add_cell(
        &format!("{prefix}arb.out"),
        Cell::merger(timing.merger_delay, timing.merger_dead_time),
        &[cbu_out, recovered],
        &[out],
    );
    ArbiterPorts { load, input, out, recovered: and_out }
}

/// Recovery delay that keeps every recovered pulse clear of the output
/// merger's dead window when load and input pulses all fall within `span`
/// of each other. Each stream on its own must be spaced wider than the
/// merger dead time.
pub fn comp_delay_for_span(timing: &CellTiming, span: SimTime) -> SimTime {
    span + timing.merger_dead_time + timing.merger_delay.saturating_sub(timing.and_delay) + SimTime::from_ps(1)
}

/// Stand-alone arbiter with external ports `load`, `in` and `out`.
pub fn arbiter_netlist(timing: &CellTiming, comp_delay: SimTime) -> (Netlist, ArbiterPorts) {
    let mut n = Netlist::new();
    let load = n.add_input("load");
    let input = n.add_input("in");
    let out = n.add_output("out");
    let ports = add_arbiter(&mut n, "", load, input, out, timing, comp_delay);
    (n, ports)
}

/// Adds a threshold unit with `stages` RTFFs between `set` and `out`.
/// `reset` returns every stage to S1. Returns the RTFF cell ids in order.
pub fn add_threshold_unit(
    netlist: &mut Netlist,
    prefix: &str,
    set: WireId,
    reset: WireId,
    out: WireId,
    stages: u32,
    timing: &CellTiming,
) -> Vec<CellId> {
    let stage_out = |n: &mut Netlist, i: u32| {
        if i == stages {
            out
        } else {
            n.wire(&format!("{prefix}tu.q{i}"))
        }
    };
    let mut rtffs = Vec::new();
    match TuTopology::for_stages(stages) {
        TuTopology::Series => {
            let mut input = set;
            for i in 1..=stages {
                let q = stage_out(netlist, i);
                rtffs.push(netlist.add_cell(&format!("{prefix}tu.s{i}"), Cell::rtff(timing.rtff_delay), &[input, reset], &[q]));
                input = q;
            }
        }
        TuTopology::Gated => {
            let q: Vec<WireId> = (1..=stages).map(|i| stage_out(netlist, i)).collect();
            for i in 1..=stages {
                let idx = (i - 1) as usize;
                let gated = netlist.wire(&format!("{prefix}tu.d{i}"));
                // Gate i opens on the previous stage's completion (or on
                // wrap-around / reset for the first gate) and closes on its
                // own stage's completion (or reset).
                let (inc, dec) = if i == 1 {
                    let inc = netlist.wire(&format!("{prefix}tu.g1_open"));
                    netlist.add_cell(
                        &format!("{prefix}tu.wrap"),
                        Cell::merger(timing.merger_delay, timing.merger_dead_time),
                        &[reset, q[stages as usize - 1]],
                        &[inc],
                    );
                    let dec = netlist.wire(&format!("{prefix}tu.g1_close"));
                    netlist.add_cell(&format!("{prefix}tu.hold1"), Cell::delay(timing.merger_delay), &[q[0]], &[dec]);
                    (inc, dec)
                } else {
                    let dec = netlist.wire(&format!("{prefix}tu.g{i}_close"));
                    netlist.add_cell(
                        &format!("{prefix}tu.clr{i}"),
                        Cell::merger(timing.merger_delay, timing.merger_dead_time),
                        &[reset, q[idx]],
                        &[dec],
                    );
                    (q[idx - 1], dec)
                };
                let gate = MndroCell::new(1, timing.mndro_delay, timing.mndro_interval, timing.mndro_write)
                    .with_stored(u32::from(i == 1));
                netlist.add_cell(&format!("{prefix}tu.g{i}"), Cell::Mndro(gate), &[inc, dec, set], &[gated]);
                rtffs.push(netlist.add_cell(
                    &format!("{prefix}tu.s{i}"),
                    Cell::rtff(timing.rtff_delay),
                    &[gated, reset],
                    &[q[idx]],
                ));
            }
        }
    }
    rtffs
}

/// Shared control inputs of one neuron (or of a group-wired layer).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ControlWires {
    pub incr: WireId,
    pub decr: WireId,
    pub clk: WireId,
    pub reset: WireId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeuronPorts {
    pub input: WireId,
    pub out: WireId,
    pub controls: ControlWires,
    /// Arbiter output feeding the TU set input.
    pub tu_set: WireId,
    pub tau_load: WireId,
    pub tau: CellId,
    pub stages: Vec<CellId>,
}

/// Adds one neuron whose wires are prefixed with `prefix`. The input and
/// output wires are `{prefix}in` and `{prefix}out`; the caller decides
/// whether they are external ports.
pub fn add_neuron(netlist: &mut Netlist, prefix: &str, controls: ControlWires, config: &NeuronConfig) -> NeuronPorts {
    let t = &config.timing;
    let input = netlist.wire(&format!("{prefix}in"));
    let out = netlist.wire(&format!("{prefix}out"));
    let tau_load = netlist.wire(&format!("{prefix}tau.load"));
    let tu_set = netlist.wire(&format!("{prefix}tu.set"));

    let clk = if config.feedback_reload {
        let merged = netlist.wire(&format!("{prefix}tau.clk"));
        netlist.add_cell(
            &format!("{prefix}tau.reload"),
            Cell::merger(t.merger_delay, t.merger_dead_time),
            &[controls.clk, out],
            &[merged],
        );
        merged
    } else {
        controls.clk
    };
    let tau = netlist.add_cell(
        &format!("{prefix}tau.mndro"),
        Cell::mndro(config.tau_capacity, t.mndro_delay, t.mndro_interval, t.mndro_write),
        &[controls.incr, controls.decr, clk],
        &[tau_load],
    );
    add_arbiter(netlist, prefix, tau_load, input, tu_set, t, config.comp_delay());
    let stages = add_threshold_unit(netlist, prefix, tu_set, controls.reset, out, config.stages(), t);
    NeuronPorts { input, out, controls, tu_set, tau_load, tau, stages }
}

/// A single neuron netlist and its port map.
#[derive(Debug, Clone)]
pub struct NeuronCircuit {
    pub netlist: Netlist,
    pub ports: NeuronPorts,
}

/// Builds a validated single-neuron netlist with external ports `in`,
/// `incr`, `decr`, `clk`, `reset` and output `out`.
pub fn build_neuron(config: &NeuronConfig) -> Result<NeuronCircuit, NeuronError> {
    config.validate()?;
    let mut n = Netlist::new();
    let controls = ControlWires {
        clk: n.add_input("clk"),
        decr: n.add_input("decr"),
        incr: n.add_input("incr"),
        reset: n.add_input("reset"),
    };
    n.add_input("in");
    n.add_output("out");
    let ports = add_neuron(&mut n, "", controls, config);
    let diags = n.validate();
    if !diags.is_empty() {
        return Err(SimError::Invalid(diags).into());
    }
    Ok(NeuronCircuit { netlist: n, ports })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Simulator;

    fn rtff_count(n: &Netlist) -> usize {
        n.cells().iter().filter(|c| c.cell.kind() == "rtff").count()
    }

    #[test]
    fn stage_counts() {
        for (t, k) in [(2, 1), (4, 2), (6, 3), (8, 4)] {
            let c = build_neuron(&NeuronConfig::new(t)).unwrap();
            assert_eq!(rtff_count(&c.netlist), k);
            assert_eq!(c.ports.stages.len(), k);
        }
    }

    #[test]
    fn odd_threshold_is_a_config_error() {
        assert!(matches!(build_neuron(&NeuronConfig::new(3)), Err(NeuronError::BadMaxThreshold(3))));
    }

    #[test]
    fn composed_neuron_validates() {
        for t in [2, 4, 6, 8] {
            let mut c = NeuronConfig::new(t);
            assert!(build_neuron(&c).unwrap().netlist.validate().is_empty());
            c.feedback_reload = true;
            assert!(build_neuron(&c).unwrap().netlist.validate().is_empty());
        }
    }

    #[test]
    fn reset_sorts_before_tu_data() {
        // Reset-dominance at the RTFFs relies on this name order.
        let c = build_neuron(&NeuronConfig::new(4)).unwrap();
        let reset = c.netlist.wire_name(c.ports.controls.reset);
        let set = c.netlist.wire_name(c.ports.tu_set);
        assert!(reset < set);
        assert!(reset < "tu.q1");
    }

    #[test]
    fn arbiter_recovers_coincident_pulse() {
        let t = CellTiming::default();
        let (n, _) = arbiter_netlist(&t, t.and_window + t.merger_delay + SimTime::from_ps(1));
        let mut sim = Simulator::new(n).unwrap();
        sim.inject("load", SimTime::from_ps(0)).unwrap();
        sim.inject("in", SimTime::from_ps(3)).unwrap();
        sim.run_to_completion().unwrap();
        assert_eq!(sim.trace().count_on("out"), 2);
        assert_eq!(sim.trace().count_on("arb.cbu"), 1);
        assert_eq!(sim.trace().count_on("arb.and"), 1);
    }
}
