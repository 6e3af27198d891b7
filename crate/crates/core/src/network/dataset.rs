use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::NetworkError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sample {
    pub x: Vec<u32>,
    pub label: usize,
}

/// Labeled samples. Labels run from 0 to `classes - 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dataset {
    pub classes: usize,
    pub samples: Vec<Sample>,
}

/// Inclusive per-feature value range of one class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassRange {
    pub low: Vec<u32>,
    pub high: Vec<u32>,
}

/// Class-dependent integer rate vectors drawn uniformly from per-class ranges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub seed: u64,
    pub samples_per_class: usize,
    pub classes: Vec<ClassRange>,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<usize, NetworkError> {
        let bad = |m: String| Err(NetworkError::Dataset(m));
        let Some(first) = self.classes.first() else {
            return bad("at least one class is required".into());
        };
        let features = first.low.len();
        for (c, r) in self.classes.iter().enumerate() {
            if r.low.len() != features || r.high.len() != features {
                return bad(format!("class {c} does not have {features} features"));
            }
            if let Some(k) = (0..features).find(|&k| r.low[k] > r.high[k]) {
                return bad(format!("class {c} feature {k}: low {} above high {}", r.low[k], r.high[k]));
            }
        }
        Ok(features)
    }

    /// Samples interleaved by class: sample 0 of every class, then sample 1, ...
    pub fn generate(&self) -> Result<Dataset, NetworkError> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut samples = Vec::with_capacity(self.samples_per_class * self.classes.len());
        for _ in 0..self.samples_per_class {
            for (label, r) in self.classes.iter().enumerate() {
                let x = r.low.iter().zip(&r.high).map(|(&lo, &hi)| rng.random_range(lo..=hi)).collect();
                samples.push(Sample { x, label });
            }
        }
        Ok(Dataset { classes: self.classes.len(), samples })
    }
}
