use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::model::VectorMatrix;

/// Default number of Lloyd iterations.
pub const DEFAULT_ITERATIONS: usize = 25;

/// Trained k-means centroids.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansModel {
    pub(crate) dim: usize,
    pub(crate) centroids: Vec<f64>,
    pub(crate) iterations: usize,
    pub(crate) seed: u64,
    pub(crate) objective: Vec<f64>,
}

#[inline]
fn sq_dist(a: &[f32], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x as f64 - y;
            d * d
        })
        .sum()
}

impl KMeansModel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of centroids.
    pub fn len(&self) -> usize {
        self.centroids.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.centroids.is_empty()
    }

    pub fn centroid(&self, i: usize) -> &[f64] {
        &self.centroids[i * self.dim..(i + 1) * self.dim]
    }

    /// Lloyd iterations actually run (early exit on a fixed point).
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Sum of squared distances to the assigned centroid, recorded after
    /// every assignment step.
    pub fn objective_history(&self) -> &[f64] {
        &self.objective
    }

    /// Nearest centroid and squared distance; ties go to the lower index.
    pub fn nearest(&self, v: &[f32]) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for i in 0..self.len() {
            let d = sq_dist(v, self.centroid(i));
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    }

    /// Centroid indices ordered by `(distance to v, index)`.
    pub fn ranked(&self, v: &[f32]) -> Vec<usize> {
        let mut ds: Vec<(f64, usize)> = (0..self.len()).map(|i| (sq_dist(v, self.centroid(i)), i)).collect();
        ds.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        ds.into_iter().map(|(_, i)| i).collect()
    }
}

/// k-means over `data` (row-major, `dim` columns): k-means++ seeding, then
/// up to `iters` Lloyd steps. Empty clusters are re-seeded with the point
/// farthest from its assigned centroid.
pub(crate) fn train_flat(data: &[f32], dim: usize, c: usize, iters: usize, seed: u64) -> Result<KMeansModel> {
    if dim == 0 {
        return Err(invalid("k-means needs a positive dimension"));
    }
    let n = data.len() / dim;
    if c == 0 || c > n {
        return Err(invalid(format!("cannot form {c} clusters from {n} vectors")));
    }
    let row = |i: usize| &data[i * dim..(i + 1) * dim];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids: Vec<f64> = Vec::with_capacity(c * dim);
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    centroids.extend(row(first).iter().map(|&x| x as f64));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(row(i), &centroids[..dim])).collect();
    for _ in 1..c {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 {
                    acc += d;
                    pick = Some(i);
                    if acc > target {
                        break;
                    }
                }
            }
            pick.expect("positive total has a positive term")
        } else {
            chosen.iter().position(|&x| !x).expect("c <= n")
        };
        chosen[pick] = true;
        let start = centroids.len();
        centroids.extend(row(pick).iter().map(|&x| x as f64));
        let center = &centroids[start..];
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(row(i), center));
        }
    }

    let mut model = KMeansModel {
        dim,
        centroids,
        iterations: 0,
        seed,
        objective: Vec::new(),
    };
    let mut assign = vec![usize::MAX; n];
    for _ in 0..iters {
        let next: Vec<(usize, f64)> = (0..n).into_par_iter().map(|i| model.nearest(row(i))).collect();
        let changed = next.iter().zip(&assign).any(|(a, &b)| a.0 != b);
        model.objective.push(next.iter().map(|a| a.1).sum());
        model.iterations += 1;
        for (slot, a) in assign.iter_mut().zip(&next) {
            *slot = a.0;
        }
        if !changed {
            break;
        }
        let mut sums = vec![0.0f64; c * dim];
        let mut counts = vec![0usize; c];
        for (i, &a) in assign.iter().enumerate().take(n) {
            counts[a] += 1;
            for (s, &x) in sums[a * dim..(a + 1) * dim].iter_mut().zip(row(i)) {
                *s += x as f64;
            }
        }
        let mut cost: Vec<f64> = next.iter().map(|a| a.1).collect();
        for j in 0..c {
            let target = &mut model.centroids[j * dim..(j + 1) * dim];
            if counts[j] > 0 {
                for (t, s) in target.iter_mut().zip(&sums[j * dim..(j + 1) * dim]) {
                    *t = s / counts[j] as f64;
                }
            } else {
                let far = (0..n)
                    .max_by(|&a, &b| cost[a].total_cmp(&cost[b]).then(b.cmp(&a)))
                    .expect("n >= 1");
                for (t, &x) in target.iter_mut().zip(row(far)) {
                    *t = x as f64;
                }
                cost[far] = 0.0;
            }
        }
    }
    Ok(model)
}

pub fn kmeans_train(vectors: &VectorMatrix, c: usize, iters: usize, seed: u64) -> Result<KMeansModel> {
    train_flat(vectors.as_flat(), vectors.dim(), c, iters, seed)
}
