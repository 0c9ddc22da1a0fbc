//! Recall/QPS sweeps over search widths.

use std::time::Instant;

use anyhow::{bail, ensure, Result};
use fanns_core::{KnnResult, Query};
use serde::{Deserialize, Serialize};

use crate::methods::FilteredIndex;
use crate::metrics::{mean_std, recall_at_k, SweepPoint};

pub const DEFAULT_RUNS: usize = 5;

/// One timed pass over the query set at one width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub width: usize,
    pub run: usize,
    pub recall: f64,
    pub qps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub points: Vec<SweepPoint>,
    pub runs: Vec<RunRecord>,
}

/// Runs every query sequentially at each width, `runs` times, with no
/// warm-up. QPS is `p / elapsed` per run; recall is the mean over queries.
pub fn run_sweep(
    index: &dyn FilteredIndex,
    queries: &[Query],
    truth: &[KnnResult],
    widths: &[usize],
    runs: usize,
) -> Result<Sweep> {
    ensure!(!queries.is_empty(), "no queries");
    ensure!(
        queries.len() == truth.len(),
        "{} queries but {} ground-truth rows",
        queries.len(),
        truth.len()
    );
    ensure!(!widths.is_empty(), "no widths");
    ensure!(runs >= 1, "runs must be at least 1");
    let max_k = queries.iter().map(|q| q.k).max().unwrap_or(0);
    if index.beam_width() {
        if let Some(&w) = widths.iter().find(|&&w| w < max_k) {
            bail!("width {w} is below k = {max_k}");
        }
    }
    let mut points = Vec::with_capacity(widths.len());
    let mut records = Vec::with_capacity(widths.len() * runs);
    for &width in widths {
        let mut recalls = Vec::with_capacity(runs);
        let mut qpss = Vec::with_capacity(runs);
        for run in 0..runs {
            let mut results = Vec::with_capacity(queries.len());
            let start = Instant::now();
            for q in queries {
                results.push(index.query(q, width)?);
            }
            let elapsed = start.elapsed().as_secs_f64().max(1e-9);
            let recall = results
                .iter()
                .zip(queries.iter().zip(truth))
                .map(|(r, (q, t))| recall_at_k(r, t, q.k))
                .sum::<f64>()
                / queries.len() as f64;
            let qps = queries.len() as f64 / elapsed;
            recalls.push(recall);
            qpss.push(qps);
            records.push(RunRecord {
                width,
                run,
                recall,
                qps,
            });
        }
        let (recall_mean, recall_std) = mean_std(&recalls);
        let (qps_mean, qps_std) = mean_std(&qpss);
        points.push(SweepPoint {
            width,
            recall_mean,
            recall_std,
            qps_mean,
            qps_std,
            runs,
        });
    }
    Ok(Sweep { points, runs: records })
}

#[cfg(test)]
mod tests {
    use fanns_core::batch_ground_truth;
    use serde_json::json;

    use super::*;
    use crate::gen::{gen_dataset, DatasetSpec};
    use crate::methods::build_method;
    use crate::queries::{gen_queries, Family, QuerySpec};

    #[test]
    fn exact_method_and_width_checks() {
        let ds = gen_dataset(&DatasetSpec::standard(400, 8, 3)).unwrap();
        let qs = gen_queries(
            &ds,
            &QuerySpec {
                family: Family::Em,
                p: 20,
                ..Default::default()
            },
        )
        .unwrap();
        let truth = batch_ground_truth(&ds, &qs.queries, 10).unwrap();
        let pre = build_method("pre-filter", &ds, &json!({})).unwrap();
        let s = run_sweep(pre.as_ref(), &qs.queries, &truth, &[400], 2).unwrap();
        assert_eq!(s.points[0].recall_mean, 1.0);
        assert_eq!(s.runs.len(), 2);
        assert!(run_sweep(pre.as_ref(), &qs.queries, &truth, &[5], 1).is_err());
        let ivf = build_method("ivf", &ds, &json!({"c": 8})).unwrap();
        let s = run_sweep(ivf.as_ref(), &qs.queries, &truth, &[1, 8], 1).unwrap();
        assert_eq!(s.points[1].recall_mean, 1.0);
    }
}
