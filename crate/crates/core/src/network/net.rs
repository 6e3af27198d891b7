use serde::{Deserialize, Serialize};

use super::{Dataset, LayerConfig, LayerSim, NetworkError};

/// A neuron addressed by layer and position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NeuronRef {
    pub layer: usize,
    pub neuron: usize,
}

/// Feed-forward stack of layers on a shared clock.
#[derive(Debug, Clone)]
pub struct Network {
    layers: Vec<LayerSim>,
}

impl Network {
    pub fn new(configs: &[LayerConfig]) -> Result<Network, NetworkError> {
        if configs.is_empty() {
            return Err(NetworkError::NoLayers);
        }
        for (l, pair) in configs.windows(2).enumerate() {
            if pair[1].weights.fan_in() != pair[0].neuron_count() {
                return Err(NetworkError::FanInMismatch {
                    layer: l + 1,
                    expected: pair[1].weights.fan_in(),
                    found: pair[0].neuron_count(),
                });
            }
        }
        let layers = configs.iter().cloned().map(LayerSim::new).collect::<Result<_, _>>()?;
        Ok(Network { layers })
    }

    pub fn layers(&self) -> &[LayerSim] {
        &self.layers
    }

    pub fn layer_mut(&mut self, l: usize) -> &mut LayerSim {
        &mut self.layers[l]
    }

    pub fn fan_in(&self) -> usize {
        self.layers[0].config().weights.fan_in()
    }

    /// Sets every layer to a uniform threshold, one entry per layer. All
    /// entries are checked before any layer is touched.
    pub fn set_thresholds(&mut self, thresholds: &[u32]) -> Result<(), NetworkError> {
        if thresholds.len() != self.layers.len() {
            return Err(NetworkError::CandidateShape { expected: self.layers.len(), found: thresholds.len() });
        }
        for (layer, &t) in self.layers.iter().zip(thresholds) {
            let reachable = layer.config().neuron.reachable_thresholds();
            if !reachable.contains(&t) {
                let current = layer.thresholds()[0];
                return Err(NetworkError::ThresholdOutOfRange {
                    neuron: 0,
                    current,
                    delta: i64::from(current) - i64::from(t),
                    min: reachable[0],
                    max: *reachable.last().unwrap(),
                });
            }
        }
        for (layer, &t) in self.layers.iter_mut().zip(thresholds) {
            layer.set_layer_threshold(t)?;
        }
        Ok(())
    }

    pub fn thresholds(&self) -> Vec<Vec<u32>> {
        self.layers.iter().map(LayerSim::thresholds).collect()
    }

    /// Output counts of every layer for one sample.
    pub fn forward(&mut self, x: &[u32]) -> Result<Vec<Vec<u32>>, NetworkError> {
        let mut out = Vec::with_capacity(self.layers.len());
        let mut values = x.to_vec();
        for (l, layer) in self.layers.iter_mut().enumerate() {
            values = layer.forward(&values).map_err(|e| match e {
                NetworkError::FanInMismatch { expected, found, .. } => NetworkError::FanInMismatch { layer: l, expected, found },
                e => e,
            })?;
            out.push(values.clone());
        }
        Ok(out)
    }

    /// Runs every sample, one per cycle, and classifies by the last layer.
    pub fn evaluate(&mut self, data: &Dataset) -> Result<NetworkRunReport, NetworkError> {
        let thresholds = self.thresholds();
        let mut counts = Vec::with_capacity(data.samples.len());
        for s in &data.samples {
            counts.push(self.forward(&s.x)?);
        }
        Ok(NetworkRunReport::new(thresholds, counts, data))
    }
}

/// Class of a sample: the output neuron with the most pulses among the
/// first `classes` outputs; the lowest index wins ties.
pub fn predict(outputs: &[u32], classes: usize) -> usize {
    let considered = &outputs[..classes.min(outputs.len())];
    let mut best = 0;
    for (i, &c) in considered.iter().enumerate() {
        if c > considered[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkRunReport {
    /// Adjusted threshold of every neuron, per layer.
    pub thresholds: Vec<Vec<u32>>,
    /// Output pulse counts per sample, per layer, per neuron.
    pub counts: Vec<Vec<Vec<u32>>>,
    pub predictions: Vec<usize>,
    /// Neurons that never fired on the evaluation set.
    pub dead: Vec<NeuronRef>,
    /// Neurons that fired on every sample.
    pub always_fire: Vec<NeuronRef>,
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

impl NetworkRunReport {
    pub fn new(thresholds: Vec<Vec<u32>>, counts: Vec<Vec<Vec<u32>>>, data: &Dataset) -> NetworkRunReport {
        let predictions: Vec<usize> =
            counts.iter().map(|c| predict(c.last().map(Vec::as_slice).unwrap_or(&[]), data.classes)).collect();
        let correct = predictions.iter().zip(&data.samples).filter(|(p, s)| **p == s.label).count();
        let total = data.samples.len();
        let mut dead = Vec::new();
        let mut always_fire = Vec::new();
        if total > 0 {
            for (layer, sizes) in thresholds.iter().enumerate() {
                for neuron in 0..sizes.len() {
                    let fires = counts.iter().filter(|c| c[layer][neuron] > 0).count();
                    let r = NeuronRef { layer, neuron };
                    if fires == 0 {
                        dead.push(r);
                    } else if fires == total {
                        always_fire.push(r);
                    }
                }
            }
        }
        let accuracy = if total == 0 { 0.0 } else { correct as f64 / total as f64 };
        NetworkRunReport { thresholds, counts, predictions, dead, always_fire, correct, total, accuracy }
    }

    /// Total output pulses of one neuron over the evaluation set.
    pub fn fire_count(&self, r: NeuronRef) -> u32 {
        self.counts.iter().map(|c| c[r.layer][r.neuron]).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Sample, SynapseMatrix};
    use crate::neuron::NeuronConfig;

    fn two_layer() -> Vec<LayerConfig> {
        vec![
            LayerConfig::new(NeuronConfig::new(4), SynapseMatrix::new(vec![vec![2, 2, 0, 0], vec![0, 0, 2, 2]]).unwrap()),
            LayerConfig::new(NeuronConfig::new(4), SynapseMatrix::new(vec![vec![1, 0], vec![0, 1]]).unwrap()),
        ]
    }

    #[test]
    fn argmax_first_wins() {
        assert_eq!(predict(&[0, 0], 2), 0);
        assert_eq!(predict(&[1, 3, 3], 3), 1);
        assert_eq!(predict(&[0, 5], 1), 0);
    }

    #[test]
    fn counts_flow_between_layers() {
        let mut net = Network::new(&two_layer()).unwrap();
        // Layer 1: 2*(3+3) = 12 pulses -> 3 fires; layer 2 sees 3 < 4.
        assert_eq!(net.forward(&[3, 3, 0, 0]).unwrap(), vec![vec![3, 0], vec![0, 0]]);
        net.set_thresholds(&[4, 2]).unwrap();
        assert_eq!(net.forward(&[3, 3, 0, 0]).unwrap(), vec![vec![3, 0], vec![1, 0]]);
    }

    #[test]
    fn shape_checks() {
        let mut bad = two_layer();
        bad[1].weights = SynapseMatrix::new(vec![vec![1, 0, 0]]).unwrap();
        assert!(matches!(Network::new(&bad), Err(NetworkError::FanInMismatch { layer: 1, .. })));
        let mut net = Network::new(&two_layer()).unwrap();
        assert!(matches!(net.set_thresholds(&[4]), Err(NetworkError::CandidateShape { .. })));
        assert!(matches!(net.set_thresholds(&[4, 0]), Err(NetworkError::ThresholdOutOfRange { .. })));
        assert_eq!(net.thresholds(), vec![vec![4, 4], vec![4, 4]]);
    }

    #[test]
    fn dead_and_always_fire() {
        let data = Dataset {
            classes: 2,
            samples: vec![Sample { x: vec![3, 3, 0, 0], label: 0 }, Sample { x: vec![2, 2, 1, 0], label: 0 }],
        };
        let mut net = Network::new(&two_layer()).unwrap();
        let r = net.evaluate(&data).unwrap();
        assert_eq!(r.always_fire, vec![NeuronRef { layer: 0, neuron: 0 }]);
        assert_eq!(r.dead.len(), 3);
        assert_eq!(r.correct, 2);
        assert_eq!(r.fire_count(NeuronRef { layer: 0, neuron: 0 }), 5);
    }
}
