//! Greedy coordinate search over discrete parameter grids.

use std::cmp::Ordering;

use anyhow::{ensure, Result};
use fanns_core::{KnnResult, Query};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::methods::FilteredIndex;
use crate::metrics::SweepPoint;
use crate::sweep::run_sweep;

/// Recall a tuned configuration must reach.
pub const TARGET_RECALL: f64 = 0.95;
/// Relative improvement that triggers another pass over the parameters.
pub const REPEAT_FACTOR: f64 = 1.01;
pub const DEFAULT_ITERATIONS: usize = 2;
pub const DEFAULT_TUNE_QUERIES: usize = 50;

/// Candidate values per parameter and the starting index into each list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuneSpec {
    pub params: Vec<String>,
    pub value_lists: Vec<Vec<Value>>,
    pub default_indices: Vec<usize>,
}

impl TuneSpec {
    pub fn validate(&self) -> Result<()> {
        ensure!(!self.params.is_empty(), "tune spec names no parameters");
        ensure!(
            self.params.len() == self.value_lists.len() && self.params.len() == self.default_indices.len(),
            "params, value_lists and default_indices must have equal lengths"
        );
        for ((p, list), &d) in self.params.iter().zip(&self.value_lists).zip(&self.default_indices) {
            ensure!(!list.is_empty(), "parameter `{p}` has no candidate values");
            ensure!(d < list.len(), "default index {d} of `{p}` is out of bounds");
        }
        Ok(())
    }

    /// `base` with each tuned parameter set to its selected value.
    pub fn assign(&self, base: &Value, indices: &[usize]) -> Result<Value> {
        let mut obj = match base {
            Value::Null => Map::new(),
            Value::Object(m) => m.clone(),
            _ => anyhow::bail!("base parameters must be a JSON object"),
        };
        for ((p, list), &i) in self.params.iter().zip(&self.value_lists).zip(indices) {
            obj.insert(p.clone(), list[i].clone());
        }
        Ok(Value::Object(obj))
    }
}

/// Whether the target recall was reached, and the best QPS among points
/// reaching it (or else the best recall). Ordered lexicographically.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reward {
    pub reached: bool,
    pub value: f64,
}

impl Reward {
    pub const FAILED: Reward = Reward {
        reached: false,
        value: 0.0,
    };

    /// `self > other * factor`: a newly reached target always counts; with
    /// equal flags the factor applies to the value.
    pub fn exceeds_by(&self, other: &Reward, factor: f64) -> bool {
        match (self.reached, other.reached) {
            (true, false) => true,
            (false, true) => false,
            _ => self.value > other.value * factor,
        }
    }
}

impl PartialOrd for Reward {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.reached.cmp(&other.reached) {
            Ordering::Equal => self.value.partial_cmp(&other.value),
            o => Some(o),
        }
    }
}

/// Reward of the pointwise (by width) mean of several sweep curves.
pub fn reward_from_curves(curves: &[Vec<SweepPoint>]) -> Reward {
    let Some(first) = curves.first() else {
        return Reward::FAILED;
    };
    let mut reached = false;
    let mut best_qps = 0.0f64;
    let mut best_recall = 0.0f64;
    for (i, p) in first.iter().enumerate() {
        let same: Vec<&SweepPoint> = curves
            .iter()
            .filter_map(|c| c.get(i).filter(|q| q.width == p.width))
            .collect();
        let recall = same.iter().map(|q| q.recall_mean).sum::<f64>() / same.len() as f64;
        let qps = same.iter().map(|q| q.qps_mean).sum::<f64>() / same.len() as f64;
        best_recall = best_recall.max(recall);
        if recall >= TARGET_RECALL {
            reached = true;
            best_qps = best_qps.max(qps);
        }
    }
    Reward {
        reached,
        value: if reached { best_qps } else { best_recall },
    }
}

/// Builds and sweeps `iterations` times; a failed build or sweep scores
/// [`Reward::FAILED`].
pub fn get_reward(
    build: &mut dyn FnMut() -> Result<Box<dyn FilteredIndex>>,
    queries: &[Query],
    truth: &[KnnResult],
    widths: &[usize],
    iterations: usize,
) -> Reward {
    let mut curves = Vec::with_capacity(iterations);
    for _ in 0..iterations.max(1) {
        let sweep = build().and_then(|idx| run_sweep(idx.as_ref(), queries, truth, widths, 1));
        match sweep {
            Ok(s) => curves.push(s.points),
            Err(_) => return Reward::FAILED,
        }
    }
    reward_from_curves(&curves)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub indices: Vec<usize>,
    pub reward: Reward,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneOutcome {
    pub indices: Vec<usize>,
    pub best: Reward,
    pub evaluations: Vec<Evaluation>,
}

/// Starting from the defaults, tries moving each parameter one step down
/// and up, keeping any move that improves the reward. Passes repeat while
/// some move improved the reward by more than [`REPEAT_FACTOR`].
/// Out-of-range moves are skipped.
pub fn greedy_parameter_search(spec: &TuneSpec, mut reward: impl FnMut(&[usize]) -> Reward) -> Result<TuneOutcome> {
    spec.validate()?;
    let mut indices = spec.default_indices.clone();
    let mut evaluations = Vec::new();
    let mut eval = |ix: &[usize], evaluations: &mut Vec<Evaluation>| {
        let r = reward(ix);
        evaluations.push(Evaluation {
            indices: ix.to_vec(),
            reward: r,
        });
        r
    };
    let mut best = eval(&indices, &mut evaluations);
    let mut repeat = true;
    while repeat {
        repeat = false;
        for par in 0..spec.params.len() {
            for change in [-1isize, 1] {
                let Some(next) = indices[par].checked_add_signed(change) else {
                    continue;
                };
                if next >= spec.value_lists[par].len() {
                    continue;
                }
                let mut trial = indices.clone();
                trial[par] = next;
                let r = eval(&trial, &mut evaluations);
                if r > best {
                    if r.exceeds_by(&best, REPEAT_FACTOR) {
                        repeat = true;
                    }
                    best = r;
                    indices[par] = next;
                }
            }
        }
    }
    Ok(TuneOutcome {
        indices,
        best,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use serde_json::json;

    use super::*;

    fn spec1(n: usize, default: usize) -> TuneSpec {
        TuneSpec {
            params: vec!["x".into()],
            value_lists: vec![(0..n).map(|i| json!(i)).collect()],
            default_indices: vec![default],
        }
    }

    fn r(v: f64) -> Reward {
        Reward {
            reached: true,
            value: v,
        }
    }

    #[test]
    fn climbs_to_the_peak() {
        let rewards = [1.0, 2.0, 5.0, 4.0, 3.0];
        let out = greedy_parameter_search(&spec1(5, 0), |ix| r(rewards[ix[0]])).unwrap();
        assert_eq!(out.indices, vec![2]);
        assert_eq!(out.best, r(5.0));
    }

    #[test]
    fn reward_order_and_factor() {
        let miss = |v| Reward {
            reached: false,
            value: v,
        };
        assert!(r(1.0) > miss(0.99));
        assert!(r(2.0) > r(1.0));
        assert!(miss(0.9) > miss(0.8));
        assert!(r(1.0).exceeds_by(&miss(0.99), REPEAT_FACTOR));
        assert!(!r(1.005).exceeds_by(&r(1.0), REPEAT_FACTOR));
        assert!(r(1.02).exceeds_by(&r(1.0), REPEAT_FACTOR));
    }

    #[test]
    fn curves_average_by_width() {
        let p = |w, rec, q| SweepPoint {
            width: w,
            recall_mean: rec,
            recall_std: 0.0,
            qps_mean: q,
            qps_std: 0.0,
            runs: 1,
        };
        let a = vec![p(10, 0.9, 100.0), p(20, 0.96, 50.0)];
        let b = vec![p(10, 1.0, 200.0), p(20, 0.98, 70.0)];
        assert_eq!(reward_from_curves(&[a.clone(), b]), r(150.0));
        assert_eq!(reward_from_curves(&[a]), r(50.0));
        let low = vec![p(10, 0.5, 100.0), p(20, 0.7, 50.0)];
        assert_eq!(
            reward_from_curves(&[low]),
            Reward {
                reached: false,
                value: 0.7
            }
        );
    }

    #[test]
    fn assign_overrides_base() {
        let s = TuneSpec {
            params: vec!["m".into(), "ef_construction".into()],
            value_lists: vec![vec![json!(8), json!(16)], vec![json!(32), json!(64)]],
            default_indices: vec![0, 1],
        };
        let v = s.assign(&json!({"m": 4, "seed": 3}), &[1, 0]).unwrap();
        assert_eq!(v, json!({"m": 16, "ef_construction": 32, "seed": 3}));
        let mut bad = s.clone();
        bad.default_indices = vec![0, 2];
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn single_peak_is_found(n in 1usize..30, peak_frac in 0.0f64..1.0, start_frac in 0.0f64..1.0) {
            let peak = ((n - 1) as f64 * peak_frac).round() as usize;
            let start = ((n - 1) as f64 * start_frac).round() as usize;
            let f = |i: usize| 1000.0 - 10.0 * (i as f64 - peak as f64).abs();
            let out = greedy_parameter_search(&spec1(n, start), |ix| r(f(ix[0]))).unwrap();
            prop_assert_eq!(out.indices, vec![peak]);
        }
    }
}
