use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Dataset, LayerConfig, Network, NetworkRunReport};

/// Outcome of one candidate threshold vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateResult {
    /// One threshold per layer.
    pub thresholds: Vec<u32>,
    /// `None` when the candidate could not be applied or run.
    pub accuracy: Option<f64>,
    pub dead_count: usize,
    pub always_fire_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<NetworkRunReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub candidates: Vec<CandidateResult>,
    /// Index of the most accurate candidate; the earliest wins ties.
    pub best: Option<usize>,
}

impl SearchReport {
    pub fn best(&self) -> Option<&CandidateResult> {
        self.best.map(|i| &self.candidates[i])
    }
}

fn evaluate(layers: &[LayerConfig], data: &Dataset, thresholds: &[u32]) -> CandidateResult {
    let run = Network::new(layers).and_then(|mut net| {
        net.set_thresholds(thresholds)?;
        net.evaluate(data)
    });
    match run {
        Ok(r) => CandidateResult {
            thresholds: thresholds.to_vec(),
            accuracy: Some(r.accuracy),
            dead_count: r.dead.len(),
            always_fire_count: r.always_fire.len(),
            error: None,
            report: Some(r),
        },
        Err(e) => CandidateResult {
            thresholds: thresholds.to_vec(),
            accuracy: None,
            dead_count: 0,
            always_fire_count: 0,
            error: Some(e.to_string()),
            report: None,
        },
    }
}

/// Evaluates every candidate on a fresh network. Candidates run in parallel;
/// the report lists them in the given order.
pub fn threshold_search(layers: &[LayerConfig], data: &Dataset, candidates: &[Vec<u32>]) -> SearchReport {
    let results: Vec<CandidateResult> = candidates.par_iter().map(|c| evaluate(layers, data, c)).collect();
    let mut best: Option<usize> = None;
    for (i, r) in results.iter().enumerate() {
        if let Some(a) = r.accuracy {
            if best.is_none_or(|b| a > results[b].accuracy.unwrap()) {
                best = Some(i);
            }
        }
    }
    SearchReport { candidates: results, best }
}
