//! The trainable neuron: threshold adjustment unit (TAU), arbiter and
//! threshold unit (TU), composed from library cells.
//!
//! The effective threshold is the TU's hardware maximum minus the number of
//! load pulses the TAU replays into the TU at the start of every cycle.

mod build;
mod protocol;
mod sim;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use build::{
    add_arbiter, add_neuron, add_threshold_unit, arbiter_netlist, build_neuron, comp_delay_for_span, ArbiterPorts,
    ControlWires, NeuronCircuit, NeuronPorts, TuTopology,
};
pub use protocol::{
    cycle_stimulus, even_spacing, Control, CycleProtocol, CycleStep, PortNames, Stimulus, CONTROL_SPACING, GUARD,
};
pub use sim::{adjustment_latency, NeuronSim};

use crate::cells::CellTiming;
use crate::kernel::SimError;
use crate::time::SimTime;

/// The TAU's stored load. With the default capacity of three the reachable
/// states are Idle, Load1, Load2 and Load3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct TauState(u32);

impl TauState {
    pub const IDLE: TauState = TauState(0);
    pub const LOAD1: TauState = TauState(1);
    pub const LOAD2: TauState = TauState(2);
    pub const LOAD3: TauState = TauState(3);

    pub const fn with_load(load: u32) -> TauState {
        TauState(load)
    }

    pub const fn load(self) -> u32 {
        self.0
    }
}

impl fmt::Display for TauState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            0 => f.write_str("Idle"),
            n => write!(f, "Load{n}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TauSignal {
    Increment,
    Decrement,
    Clock,
}

/// TAU state machine. Increments and decrements saturate at the ends; a
/// clock leaves the state alone and emits one load pulse per stored unit.
pub fn tau_transition(state: TauState, signal: TauSignal, capacity: u32) -> (TauState, u32) {
    match signal {
        TauSignal::Increment => (TauState((state.0 + 1).min(capacity)), 0),
        TauSignal::Decrement => (TauState(state.0.saturating_sub(1)), 0),
        TauSignal::Clock => (state, state.0),
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NeuronError {
    #[error("maximum threshold {0} must be even and at least 2")]
    BadMaxThreshold(u32),
    #[error("TAU capacity must be at least 1")]
    ZeroCapacity,
    #[error("load {load} leaves no positive threshold below maximum {max_threshold}")]
    LoadTooLarge { load: u32, max_threshold: u32 },
    #[error("threshold {requested} is unreachable; reachable range is {min}..={max}")]
    Unreachable { requested: i64, min: u32, max: u32 },
    #[error("{controls} control pulses do not fit the {slots} control slots of a cycle")]
    TooManyControls { controls: usize, slots: usize },
    #[error("timing: {0}")]
    Timing(#[from] TimingViolation),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// A stimulus that cannot be applied safely with the configured cell timing.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TimingViolation {
    #[error("clock period {period} leaves no input window (window would open at {start}, close at {end})")]
    NoInputWindow { period: SimTime, start: SimTime, end: SimTime },
    #[error("{pulses} input pulses in a {window} window are {spacing} apart; at least {min_spacing} required")]
    RateOverflow { pulses: u32, window: SimTime, spacing: SimTime, min_spacing: SimTime },
    #[error("M-NDRO readout interval {interval} is below the threshold unit's minimum pulse spacing {min_spacing}")]
    LoadTooDense { interval: SimTime, min_spacing: SimTime },
}

fn default_capacity() -> u32 {
    3
}

fn default_period() -> SimTime {
    SimTime::from_ps(500)
}

/// Hardware and timing parameters of one neuron.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, from = "RawNeuronConfig")]
pub struct NeuronConfig {
    /// Hardware threshold: twice the number of RTFF stages.
    pub max_threshold: u32,
    #[serde(default = "default_capacity")]
    pub tau_capacity: u32,
    #[serde(with = "crate::time::ps", rename = "clock_period_ps", default = "default_period")]
    pub clock_period: SimTime,
    #[serde(default)]
    pub timing: CellTiming,
    /// Arbiter recovery delay; defaults to AND window + merger delay + 1 ps.
    #[serde(with = "crate::time::ps_opt", rename = "comp_delay_ps", default, skip_serializing_if = "Option::is_none")]
    pub comp_delay: Option<SimTime>,
    /// Route the neuron output back into the TAU clock so every fire reloads.
    #[serde(default)]
    pub feedback_reload: bool,
}

/// File form of [`NeuronConfig`]: a missing timing table means the
/// defaults for the given threshold, not the bare library defaults.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNeuronConfig {
    max_threshold: u32,
    #[serde(default = "default_capacity")]
    tau_capacity: u32,
    #[serde(with = "crate::time::ps", rename = "clock_period_ps", default = "default_period")]
    clock_period: SimTime,
    #[serde(default)]
    timing: Option<CellTiming>,
    #[serde(with = "crate::time::ps_opt", rename = "comp_delay_ps", default)]
    comp_delay: Option<SimTime>,
    #[serde(default)]
    feedback_reload: bool,
}

impl From<RawNeuronConfig> for NeuronConfig {
    fn from(raw: RawNeuronConfig) -> Self {
        let base = NeuronConfig::new(raw.max_threshold);
        NeuronConfig {
            max_threshold: raw.max_threshold,
            tau_capacity: raw.tau_capacity,
            clock_period: raw.clock_period,
            timing: raw.timing.unwrap_or(base.timing),
            comp_delay: raw.comp_delay,
            feedback_reload: raw.feedback_reload,
        }
    }
}

impl NeuronConfig {
    /// Default timing for a given hardware threshold. Thresholds of six and
    /// above use the gated TU, whose stage handoff needs a wider readout
    /// interval than the default.
    pub fn new(max_threshold: u32) -> NeuronConfig {
        let mut config = NeuronConfig {
            max_threshold,
            tau_capacity: 3,
            clock_period: default_period(),
            timing: CellTiming::default(),
            comp_delay: None,
            feedback_reload: false,
        };
        if config.topology() == TuTopology::Gated {
            let spacing = build::gated_min_spacing(&config.timing);
            config.timing.mndro_interval = config.timing.mndro_interval.max(spacing + SimTime::from_ps(5));
        }
        config
    }

    pub fn with_period(mut self, period: SimTime) -> Self {
        self.clock_period = period;
        self
    }

    pub fn stages(&self) -> u32 {
        self.max_threshold / 2
    }

    pub fn topology(&self) -> TuTopology {
        TuTopology::for_stages(self.stages())
    }

    pub fn comp_delay(&self) -> SimTime {
        self.comp_delay
            .unwrap_or(self.timing.and_window + self.timing.merger_delay + SimTime::from_ps(1))
    }

    /// Largest load that still leaves a positive threshold.
    pub fn max_load(&self) -> u32 {
        self.tau_capacity.min(self.max_threshold.saturating_sub(1))
    }

    /// Thresholds reachable by loading the TAU, ascending.
    pub fn reachable_thresholds(&self) -> Vec<u32> {
        (0..=self.max_load()).map(|l| self.max_threshold - l).rev().collect()
    }

    pub fn validate(&self) -> Result<(), NeuronError> {
        if self.max_threshold < 2 || !self.max_threshold.is_multiple_of(2) {
            return Err(NeuronError::BadMaxThreshold(self.max_threshold));
        }
        if self.tau_capacity == 0 {
            return Err(NeuronError::ZeroCapacity);
        }
        if self.topology() == TuTopology::Gated {
            let min_spacing = build::gated_min_spacing(&self.timing);
            if self.timing.mndro_interval <= min_spacing {
                return Err(TimingViolation::LoadTooDense {
                    interval: self.timing.mndro_interval,
                    min_spacing,
                }
                .into());
            }
        }
        Ok(())
    }
}

/// Threshold seen by inputs: hardware maximum minus the TAU load.
pub fn adjusted_threshold(config: &NeuronConfig, tau: TauState) -> Result<u32, NeuronError> {
    if tau.load() >= config.max_threshold {
        return Err(NeuronError::LoadTooLarge { load: tau.load(), max_threshold: config.max_threshold });
    }
    Ok(config.max_threshold - tau.load())
}

/// Load needed for a requested threshold, if reachable.
pub fn load_for_threshold(config: &NeuronConfig, threshold: i64) -> Result<u32, NeuronError> {
    let reachable = config.reachable_thresholds();
    let (min, max) = (reachable[0], *reachable.last().unwrap());
    if threshold < i64::from(min) || threshold > i64::from(max) {
        return Err(NeuronError::Unreachable { requested: threshold, min, max });
    }
    Ok(config.max_threshold - threshold as u32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tau_table() {
        assert_eq!(tau_transition(TauState::IDLE, TauSignal::Clock, 3), (TauState::IDLE, 0));
        assert_eq!(tau_transition(TauState::LOAD2, TauSignal::Clock, 3), (TauState::LOAD2, 2));
        assert_eq!(tau_transition(TauState::LOAD3, TauSignal::Increment, 3), (TauState::LOAD3, 0));
        assert_eq!(tau_transition(TauState::IDLE, TauSignal::Decrement, 3), (TauState::IDLE, 0));
        assert_eq!(tau_transition(TauState::LOAD1, TauSignal::Increment, 3), (TauState::LOAD2, 0));
        assert_eq!(tau_transition(TauState::LOAD3, TauSignal::Decrement, 3), (TauState::LOAD2, 0));
    }

    #[test]
    fn tau_names() {
        assert_eq!(TauState::IDLE.to_string(), "Idle");
        assert_eq!(TauState::LOAD3.to_string(), "Load3");
    }

    #[test]
    fn threshold_formula() {
        let c = NeuronConfig::new(4);
        assert_eq!(adjusted_threshold(&c, TauState::LOAD1), Ok(3));
        assert_eq!(adjusted_threshold(&c, TauState::LOAD3), Ok(1));
        assert_eq!(adjusted_threshold(&c, TauState::IDLE), Ok(4));
        let c2 = NeuronConfig::new(2);
        assert!(matches!(adjusted_threshold(&c2, TauState::LOAD2), Err(NeuronError::LoadTooLarge { .. })));
    }

    #[test]
    fn reachable_set() {
        assert_eq!(NeuronConfig::new(4).reachable_thresholds(), vec![1, 2, 3, 4]);
        assert_eq!(NeuronConfig::new(2).reachable_thresholds(), vec![1, 2]);
        assert_eq!(NeuronConfig::new(8).reachable_thresholds(), vec![5, 6, 7, 8]);
        assert!(load_for_threshold(&NeuronConfig::new(4), 0).is_err());
        assert_eq!(load_for_threshold(&NeuronConfig::new(4), 2), Ok(2));
    }

    #[test]
    fn odd_threshold_rejected() {
        assert_eq!(NeuronConfig::new(3).validate(), Err(NeuronError::BadMaxThreshold(3)));
        assert_eq!(NeuronConfig::new(0).validate(), Err(NeuronError::BadMaxThreshold(0)));
    }

    #[test]
    fn config_roundtrips_through_toml() {
        let c = NeuronConfig::new(4).with_period(SimTime::from_fs(333_333));
        let text = toml::to_string(&c).unwrap();
        let back: NeuronConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn missing_timing_uses_threshold_defaults() {
        let c: NeuronConfig = toml::from_str("max_threshold = 8").unwrap();
        assert_eq!(c, NeuronConfig::new(8));
        assert!(c.validate().is_ok());
        assert!(toml::from_str::<NeuronConfig>("max_threshold = 4\nbogus = 1").is_err());
    }
}
