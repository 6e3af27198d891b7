//! Layers of neurons with integer-weighted fan-in.
//!
//! A presynaptic value `x_k` is a pulse count. A synapse of weight `w`
//! replicates each of those pulses `w` times, so neuron `i` of a layer sees
//! `sum_k w_ik * x_k` pulses in its input window. Layers share one clock and
//! a layer's output counts become the next layer's input values.

mod dataset;
mod layer;
mod net;
mod search;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dataset::{ClassRange, Dataset, Sample, SyntheticSpec};
pub use layer::{LayerConfig, LayerSim};
pub use net::{predict, Network, NetworkRunReport, NeuronRef};
pub use search::{threshold_search, CandidateResult, SearchReport};

use crate::neuron::{even_spacing, NeuronError, TimingViolation};
use crate::time::SimTime;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetworkError {
    #[error("layer has no neurons")]
    EmptyLayer,
    #[error("weight row {row} has {found} entries, expected {expected}")]
    RaggedWeights { row: usize, expected: usize, found: usize },
    #[error("layer {layer} expects {expected} inputs but receives {found}")]
    FanInMismatch { layer: usize, expected: usize, found: usize },
    #[error("input {input} carries {value} pulses, above the maximum rate {max}")]
    InputRate { input: usize, value: u32, max: u32 },
    #[error("neuron {neuron}: threshold {current} shifted by {delta} leaves the reachable range {min}..={max}")]
    ThresholdOutOfRange { neuron: usize, current: u32, delta: i64, min: u32, max: u32 },
    #[error("no neuron {0} in layer")]
    NoSuchNeuron(usize),
    #[error("network has no layers")]
    NoLayers,
    #[error("candidate has {found} thresholds for {expected} layers")]
    CandidateShape { expected: usize, found: usize },
    #[error("dataset: {0}")]
    Dataset(String),
    #[error(transparent)]
    Neuron(#[from] NeuronError),
}

impl From<TimingViolation> for NetworkError {
    fn from(v: TimingViolation) -> Self {
        NetworkError::Neuron(v.into())
    }
}

/// Non-negative integer weights, one row per postsynaptic neuron.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<u32>>", into = "Vec<Vec<u32>>")]
pub struct SynapseMatrix {
    rows: Vec<Vec<u32>>,
    fan_in: usize,
}

impl SynapseMatrix {
    pub fn new(rows: Vec<Vec<u32>>) -> Result<SynapseMatrix, NetworkError> {
        if rows.is_empty() {
            return Err(NetworkError::EmptyLayer);
        }
        let fan_in = rows[0].len();
        if let Some((row, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != fan_in) {
            return Err(NetworkError::RaggedWeights { row, expected: fan_in, found: r.len() });
        }
        Ok(SynapseMatrix { rows, fan_in })
    }

    pub fn neurons(&self) -> usize {
        self.rows.len()
    }

    pub fn fan_in(&self) -> usize {
        self.fan_in
    }

    pub fn weight(&self, post: usize, pre: usize) -> u32 {
        self.rows[post][pre]
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    /// Pulses arriving at each postsynaptic neuron.
    pub fn apply(&self, x: &[u32]) -> Result<Vec<u32>, NetworkError> {
        if x.len() != self.fan_in {
            return Err(NetworkError::FanInMismatch { layer: 0, expected: self.fan_in, found: x.len() });
        }
        Ok(self.rows.iter().map(|row| row.iter().zip(x).map(|(w, v)| w * v).sum()).collect())
    }

    /// Largest input any neuron can see when every value is at most `max_x`.
    pub fn max_weighted_input(&self, post: usize, max_x: u32) -> u32 {
        self.rows[post].iter().sum::<u32>() * max_x
    }
}

impl TryFrom<Vec<Vec<u32>>> for SynapseMatrix {
    type Error = NetworkError;

    fn try_from(rows: Vec<Vec<u32>>) -> Result<Self, Self::Error> {
        SynapseMatrix::new(rows)
    }
}

impl From<SynapseMatrix> for Vec<Vec<u32>> {
    fn from(m: SynapseMatrix) -> Self {
        m.rows
    }
}

/// Input pulses as `(input index, time)`, ordered by time then index.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PulseSchedule {
    pub pulses: Vec<(usize, SimTime)>,
}

impl PulseSchedule {
    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    pub fn len(&self) -> usize {
        self.pulses.len()
    }

    pub fn times_for(&self, input: usize) -> Vec<SimTime> {
        self.pulses.iter().filter(|(k, _)| *k == input).map(|(_, t)| *t).collect()
    }
}

/// Value `v` on input `k` becomes `v` pulses at `window_start + j * window / v`.
pub fn encode_input(x: &[u32], window_start: SimTime, window: SimTime, max_rate: u32) -> Result<PulseSchedule, NetworkError> {
    let mut pulses = Vec::new();
    for (k, &v) in x.iter().enumerate() {
        if v > max_rate {
            return Err(NetworkError::InputRate { input: k, value: v, max: max_rate });
        }
        pulses.extend(even_spacing(window_start, window, v, SimTime::ZERO)?.into_iter().map(|t| (k, t)));
    }
    pulses.sort_by_key(|&(k, t)| (t, k));
    Ok(PulseSchedule { pulses })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ps(v: u64) -> SimTime {
        SimTime::from_ps(v)
    }

    #[test]
    fn zero_inputs_encode_to_nothing() {
        assert!(encode_input(&[0, 0, 0], ps(100), ps(100), 4).unwrap().is_empty());
    }

    #[test]
    fn two_pulses_split_window() {
        let s = encode_input(&[2], ps(100), ps(100), 4).unwrap();
        assert_eq!(s.times_for(0), vec![ps(100), ps(150)]);
    }

    #[test]
    fn rate_cap() {
        assert_eq!(
            encode_input(&[1, 5], ps(0), ps(100), 4),
            Err(NetworkError::InputRate { input: 1, value: 5, max: 4 })
        );
    }

    #[test]
    fn schedule_is_time_ordered() {
        let s = encode_input(&[2, 1], ps(0), ps(100), 4).unwrap();
        assert_eq!(s.pulses, vec![(0, ps(0)), (1, ps(0)), (0, ps(50))]);
    }

    #[test]
    fn replication() {
        let m = SynapseMatrix::new(vec![vec![2, 0, 1], vec![0, 3, 0]]).unwrap();
        assert_eq!(m.apply(&[1, 2, 3]).unwrap(), vec![5, 6]);
        assert_eq!(m.max_weighted_input(0, 3), 9);
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(matches!(SynapseMatrix::new(vec![vec![1], vec![1, 2]]), Err(NetworkError::RaggedWeights { row: 1, .. })));
        assert!(toml::from_str::<std::collections::BTreeMap<String, SynapseMatrix>>("w = [[1], [1, 2]]").is_err());
    }
}
