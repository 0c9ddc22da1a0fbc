//! Recall and summary statistics.

use std::collections::HashSet;

use fanns_core::KnnResult;
use serde::{Deserialize, Serialize};

/// `|ids(result[..k]) ∩ ids(truth[..k])| / min(k, |truth|)`. An empty truth
/// (no matching item) scores 1.
pub fn recall_at_k(result: &KnnResult, truth: &KnnResult, k: usize) -> f64 {
    let truth_ids: HashSet<u32> = truth.entries.iter().take(k).map(|n| n.id).collect();
    let denom = k.min(truth_ids.len());
    if denom == 0 {
        return 1.0;
    }
    let hits = result
        .entries
        .iter()
        .take(k)
        .map(|n| n.id)
        .collect::<HashSet<u32>>()
        .intersection(&truth_ids)
        .count();
    hits as f64 / denom as f64
}

/// Mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Aggregate over repeated runs at one search width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub width: usize,
    pub recall_mean: f64,
    pub recall_std: f64,
    pub qps_mean: f64,
    pub qps_std: f64,
    pub runs: usize,
}
