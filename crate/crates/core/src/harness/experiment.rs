use serde::{Deserialize, Serialize};

use crate::network::{threshold_search, CandidateResult, Dataset, LayerConfig, Network, NeuronRef, SearchReport, SyntheticSpec};

use super::HarnessError;

/// A network, a labeled dataset and the threshold vectors to try.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub layers: Vec<LayerConfig>,
    /// One threshold per layer, per candidate.
    pub candidates: Vec<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<Dataset>,
}

impl ExperimentConfig {
    pub fn dataset(&self) -> Result<Dataset, HarnessError> {
        match (&self.synthetic, &self.data) {
            (Some(s), None) => Ok(s.generate()?),
            (None, Some(d)) => Ok(d.clone()),
            _ => Err(HarnessError::Invalid("an experiment needs exactly one of [synthetic] or [data]".into())),
        }
    }

    pub fn validate(&self) -> Result<Dataset, HarnessError> {
        Network::new(&self.layers)?;
        if self.candidates.is_empty() {
            return Err(HarnessError::Invalid("at least one candidate is required".into()));
        }
        let data = self.dataset()?;
        let fan_in = self.layers[0].weights.fan_in();
        for (i, s) in data.samples.iter().enumerate() {
            if s.x.len() != fan_in {
                return Err(HarnessError::Invalid(format!(
                    "sample {i} has {} features, the first layer takes {fan_in}",
                    s.x.len()
                )));
            }
            if s.label >= data.classes {
                return Err(HarnessError::Invalid(format!("sample {i} has label {} of {} classes", s.label, data.classes)));
            }
        }
        Ok(data)
    }

    /// Every layer at its hardware maximum threshold.
    pub fn baseline(&self) -> Vec<u32> {
        self.layers.iter().map(|l| l.neuron.max_threshold).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub classes: usize,
    pub samples: usize,
    /// Every layer at maximum threshold, for comparison.
    pub baseline: CandidateResult,
    pub search: SearchReport,
    /// Neurons dead at the baseline that fire under the best candidate.
    pub revived: Vec<NeuronRef>,
}

impl ExperimentReport {
    pub fn best(&self) -> Option<&CandidateResult> {
        self.search.best()
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    let data = config.validate()?;
    let baseline = threshold_search(&config.layers, &data, &[config.baseline()]).candidates.remove(0);
    if let Some(e) = &baseline.error {
        return Err(HarnessError::Invalid(format!("baseline run failed: {e}")));
    }
    let search = threshold_search(&config.layers, &data, &config.candidates);
    let revived = match (&baseline.report, search.best().and_then(|b| b.report.as_ref())) {
        (Some(base), Some(best)) => base.dead.iter().copied().filter(|r| !best.dead.contains(r)).collect(),
        _ => Vec::new(),
    };
    Ok(ExperimentReport { name: config.name.clone(), classes: data.classes, samples: data.samples.len(), baseline, search, revived })
}
