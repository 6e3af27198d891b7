//! Per-cycle stimulus layout.
//!
//! Each clock period starts with a control slot (increment/decrement
//! pulses), then a simultaneous TU reset and TAU clock, then the load burst
//! settles through the arbiter, and only then does the input window open.

use crate::time::SimTime;

use super::build::gated_min_spacing;
use super::{NeuronConfig, NeuronError, TimingViolation, TuTopology};

/// Spacing of control pulses inside the control slot.
pub const CONTROL_SPACING: SimTime = SimTime::from_ps(5);
/// Slack added around the load burst and after the last input.
pub const GUARD: SimTime = SimTime::from_ps(20);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Increment,
    Decrement,
}

/// What happens in one clock cycle: threshold controls, then inputs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CycleStep {
    pub controls: Vec<Control>,
    pub inputs: u32,
}

impl CycleStep {
    pub fn inputs(n: u32) -> CycleStep {
        CycleStep { controls: Vec::new(), inputs: n }
    }

    pub fn with_controls(mut self, control: Control, count: usize) -> CycleStep {
        self.controls.extend(std::iter::repeat_n(control, count));
        self
    }
}

/// Timing of one clock cycle, relative to the cycle start.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CycleProtocol {
    pub period: SimTime,
    pub control_slots: usize,
    /// Offset of the simultaneous TU reset and TAU clock.
    pub clock_offset: SimTime,
    pub window_start: SimTime,
    pub window_end: SimTime,
    /// Closest allowed spacing of input pulses.
    pub min_spacing: SimTime,
}

impl CycleProtocol {
    pub fn new(config: &NeuronConfig) -> Result<CycleProtocol, NeuronError> {
        config.validate()?;
        let t = &config.timing;
        let control_slots = config.tau_capacity.max(1) as usize;
        let clock_offset = CONTROL_SPACING.times(control_slots as u64 - 1) + t.mndro_write + SimTime::from_ps(5);

        let gated = config.topology() == TuTopology::Gated;
        let merge_spacing = t.merger_dead_time + SimTime::from_fs(1);
        let min_spacing = if gated { merge_spacing.max(gated_min_spacing(t) + SimTime::from_fs(1)) } else { merge_spacing };

        let arbiter_latency = t.splitter_delay + t.merger_delay + t.merger_delay;
        let burst = t.interval_span(config.tau_capacity);
        let window_start = clock_offset + t.mndro_delay + burst + arbiter_latency + GUARD.max(min_spacing);

        let settle = if gated { gated_min_spacing(t) } else { t.rtff_delay.times(u64::from(config.stages())) };
        let tail = arbiter_latency + settle + GUARD;
        let window_end = config.clock_period.saturating_sub(tail);
        if window_end <= window_start {
            return Err(TimingViolation::NoInputWindow {
                period: config.clock_period,
                start: window_start,
                end: window_end,
            }
            .into());
        }
        Ok(CycleProtocol { period: config.clock_period, control_slots, clock_offset, window_start, window_end, min_spacing })
    }

    pub fn window(&self) -> SimTime {
        self.window_end - self.window_start
    }

    /// Largest input count the window holds at the minimum spacing.
    pub fn max_inputs(&self) -> u32 {
        let per = self.window().as_fs() / self.min_spacing.as_fs();
        per.max(1).min(u64::from(u32::MAX)) as u32
    }

    /// `n` pulses evenly spread over the input window of the cycle starting
    /// at `cycle_start`.
    pub fn input_times(&self, cycle_start: SimTime, n: u32) -> Result<Vec<SimTime>, TimingViolation> {
        even_spacing(cycle_start + self.window_start, self.window(), n, self.min_spacing)
    }
}

/// `n` pulses at `start + j * window / n`. Rejects spacings below `min_spacing`.
pub fn even_spacing(start: SimTime, window: SimTime, n: u32, min_spacing: SimTime) -> Result<Vec<SimTime>, TimingViolation> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let w = window.as_fs();
    let spacing = SimTime::from_fs(w / u64::from(n));
    if n > 1 && spacing < min_spacing {
        return Err(TimingViolation::RateOverflow { pulses: n, window, spacing, min_spacing });
    }
    Ok((0..u64::from(n)).map(|j| start + SimTime::from_fs(j * w / u64::from(n))).collect())
}

/// Port names used when expanding a cycle into stimulus pulses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PortNames {
    pub incr: String,
    pub decr: String,
    pub clk: String,
    pub reset: String,
}

impl PortNames {
    pub fn single() -> PortNames {
        PortNames { incr: "incr".into(), decr: "decr".into(), clk: "clk".into(), reset: "reset".into() }
    }

    pub fn prefixed(prefix: &str) -> PortNames {
        PortNames {
            incr: format!("{prefix}incr"),
            decr: format!("{prefix}decr"),
            clk: format!("{prefix}clk"),
            reset: format!("{prefix}reset"),
        }
    }
}

/// `(port, time)` stimulus pulses.
pub type Stimulus = Vec<(String, SimTime)>;

/// Control, reset and clock pulses for one cycle. Input pulses are placed
/// by the caller, which knows which input port(s) they go to.
pub fn cycle_stimulus(
    protocol: &CycleProtocol,
    ports: &PortNames,
    cycle_start: SimTime,
    controls: &[Control],
) -> Result<Stimulus, NeuronError> {
    if controls.len() > protocol.control_slots {
        return Err(NeuronError::TooManyControls { controls: controls.len(), slots: protocol.control_slots });
    }
    let mut out = Vec::with_capacity(controls.len() + 2);
    for (j, c) in controls.iter().enumerate() {
        let port = match c {
            Control::Increment => &ports.incr,
            Control::Decrement => &ports.decr,
        };
        out.push((port.clone(), cycle_start + CONTROL_SPACING.times(j as u64)));
    }
    let clock = cycle_start + protocol.clock_offset;
    out.push((ports.reset.clone(), clock));
    out.push((ports.clk.clone(), clock));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ps(v: u64) -> SimTime {
        SimTime::from_ps(v)
    }

    #[test]
    fn even_spacing_two_pulses() {
        let t = even_spacing(ps(200), ps(100), 2, ps(1)).unwrap();
        assert_eq!(t, vec![ps(200), ps(250)]);
        assert!(even_spacing(ps(0), ps(100), 0, ps(1)).unwrap().is_empty());
    }

    #[test]
    fn dense_inputs_rejected() {
        assert!(matches!(
            even_spacing(ps(0), ps(100), 20, ps(9)),
            Err(TimingViolation::RateOverflow { pulses: 20, .. })
        ));
    }

    #[test]
    fn sixteen_inputs_fit_at_three_gigahertz() {
        let c = NeuronConfig::new(4).with_period(SimTime::from_fs(333_333));
        let p = CycleProtocol::new(&c).unwrap();
        assert!(p.max_inputs() >= 16);
        let times = p.input_times(SimTime::ZERO, 16).unwrap();
        assert_eq!(times.len(), 16);
        assert!(*times.last().unwrap() < p.window_end);
    }

    #[test]
    fn short_period_has_no_window() {
        let c = NeuronConfig::new(4).with_period(ps(80));
        assert!(matches!(CycleProtocol::new(&c), Err(NeuronError::Timing(TimingViolation::NoInputWindow { .. }))));
    }

    #[test]
    fn stimulus_layout() {
        let c = NeuronConfig::new(4);
        let p = CycleProtocol::new(&c).unwrap();
        let s = cycle_stimulus(&p, &PortNames::single(), ps(1000), &[Control::Increment, Control::Increment]).unwrap();
        assert_eq!(s[0], ("incr".to_string(), ps(1000)));
        assert_eq!(s[1], ("incr".to_string(), ps(1005)));
        // The clock follows the last control by at least the M-NDRO write time.
        assert!(s[3].1 >= s[1].1 + c.timing.mndro_write);
        assert!(cycle_stimulus(&p, &PortNames::single(), ps(0), &[Control::Increment; 4]).is_err());
    }
}
