//! Exact filtered k-NN by linear scan: the ground truth every index is
//! checked against.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::distance::l2;
use crate::error::Result;
use crate::filter::{CompiledFilter, Query};
use crate::model::Dataset;

/// One result entry. Orders by `(distance, id)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub id: u32,
    pub distance: f64,
}

impl Neighbor {
    pub fn new(id: u32, distance: f64) -> Self {
        Self { id, distance }
    }
}

impl Eq for Neighbor {}

impl Ord for Neighbor {
    fn cmp(&self, other: &Self) -> Ordering {
        self.distance.total_cmp(&other.distance).then(self.id.cmp(&other.id))
    }
}

impl PartialOrd for Neighbor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Neighbors sorted ascending by `(distance, id)`, duplicate-free.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct KnnResult {
    pub entries: Vec<Neighbor>,
}

impl KnnResult {
    /// Sorts, drops duplicate ids (keeping the closest), and truncates to `k`.
    pub fn from_unsorted(mut entries: Vec<Neighbor>, k: usize) -> Self {
        entries.sort();
        let mut seen = std::collections::HashSet::with_capacity(entries.len());
        entries.retain(|n| seen.insert(n.id));
        entries.truncate(k);
        Self { entries }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> Vec<u32> {
        self.entries.iter().map(|n| n.id).collect()
    }

    /// Checks the strict `(distance, id)` order invariant.
    pub fn is_strictly_sorted(&self) -> bool {
        self.entries.windows(2).all(|w| w[0] < w[1])
    }
}

/// Bounded max-heap keeping the `k` smallest neighbors.
#[derive(Debug)]
pub(crate) struct TopK {
    k: usize,
    heap: BinaryHeap<Neighbor>,
}

impl TopK {
    pub(crate) fn new(k: usize) -> Self {
        Self {
            k,
            heap: BinaryHeap::with_capacity(k + 1),
        }
    }

    #[inline]
    pub(crate) fn push(&mut self, n: Neighbor) {
        if self.k == 0 {
            return;
        }
        if self.heap.len() < self.k {
            self.heap.push(n);
        } else if let Some(top) = self.heap.peek() {
            if n < *top {
                self.heap.pop();
                self.heap.push(n);
            }
        }
    }

    pub(crate) fn into_result(self) -> KnnResult {
        KnnResult {
            entries: self.heap.into_sorted_vec(),
        }
    }
}

/// Exact top-k over the items matching `filter` (all items when `None`).
pub fn exact_knn_compiled(dataset: &Dataset, q: &[f32], k: usize, filter: Option<&CompiledFilter>) -> KnnResult {
    let mut top = TopK::new(k);
    for id in 0..dataset.len() as u32 {
        if let Some(f) = filter {
            if !f.matches(dataset.attributes(id)) {
                continue;
            }
        }
        top.push(Neighbor::new(id, l2(q, dataset.vector(id))));
    }
    top.into_result()
}

/// Exact top-k over an explicit candidate id list.
pub fn exact_knn_over(dataset: &Dataset, q: &[f32], k: usize, ids: &[u32]) -> KnnResult {
    let mut top = TopK::new(k);
    for &id in ids {
        top.push(Neighbor::new(id, l2(q, dataset.vector(id))));
    }
    top.into_result()
}

/// The `min(k, #matching)` matching items closest to the query vector.
pub fn exact_filtered_knn(dataset: &Dataset, query: &Query) -> Result<KnnResult> {
    let compiled = query.validate(dataset)?;
    Ok(exact_knn_compiled(
        dataset,
        query.vector.as_slice(),
        query.k,
        compiled.as_ref(),
    ))
}

/// Ground truth for a batch of queries, each with `k` overriding the query's own.
///
/// Queries are partitioned across the rayon pool; output order follows input.
pub fn batch_ground_truth(dataset: &Dataset, queries: &[Query], k: usize) -> Result<Vec<KnnResult>> {
    let compiled = queries
        .iter()
        .map(|q| q.validate(dataset))
        .collect::<Result<Vec<_>>>()?;
    Ok(queries
        .par_iter()
        .zip(compiled.par_iter())
        .map(|(q, f)| exact_knn_compiled(dataset, q.vector.as_slice(), k, f.as_ref()))
        .collect())
}
