//! Hierarchical navigable small-world graph with a densification factor,
//! plus filtered traversal modes.

pub(crate) mod build;
pub(crate) mod graph;
pub(crate) mod search;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::distance::l2;
use crate::error::{invalid, Error, Result};
use crate::filter::Query;
use crate::model::{Dataset, VectorMatrix};
use crate::oracle::{KnnResult, Neighbor};
use crate::predicate::{FilterPredicate, MatchAll, Predicate};

use build::Builder;
use graph::{with_visited, Cand, GraphLayer, GraphView};

/// Construction parameters.
///
/// Upper layers keep at most `m * gamma` neighbors per node. Layer 0 keeps
/// at most `m_beta` when set, otherwise `2 * m * gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HnswParams {
    pub m: usize,
    pub ef_construction: usize,
    pub gamma: usize,
    pub m_beta: Option<usize>,
    pub seed: u64,
}

impl Default for HnswParams {
    fn default() -> Self {
        Self {
            m: 16,
            ef_construction: 100,
            gamma: 1,
            m_beta: None,
            seed: 42,
        }
    }
}

impl HnswParams {
    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(invalid("M must be at least 2"));
        }
        if self.ef_construction < self.m {
            return Err(invalid("ef_construction must be at least M"));
        }
        if self.gamma < 1 {
            return Err(invalid("gamma must be at least 1"));
        }
        if let Some(mb) = self.m_beta {
            if mb < 1 || mb > 2 * self.m * self.gamma {
                return Err(invalid("M_beta must lie in 1..=2*M*gamma"));
            }
        }
        if self.m.saturating_mul(self.gamma) > u16::MAX as usize {
            return Err(invalid("M*gamma is too large"));
        }
        Ok(())
    }

    /// Adjacency cap on `layer`.
    pub fn cap(&self, layer: usize) -> usize {
        if layer == 0 {
            self.m_beta.unwrap_or(2 * self.m * self.gamma)
        } else {
            self.m * self.gamma
        }
    }

    /// Number of neighbors a newly inserted node links to on `layer`.
    pub fn select_count(&self, layer: usize) -> usize {
        (self.m * self.gamma).min(self.cap(layer))
    }
}

/// Vectors addressed by local node id, optionally through a member list.
#[derive(Debug, Clone)]
pub(crate) struct NodeVectors {
    vectors: VectorMatrix,
    members: Option<Arc<[u32]>>,
}

impl NodeVectors {
    pub fn new(vectors: VectorMatrix, members: Option<Arc<[u32]>>) -> Self {
        Self { vectors, members }
    }

    #[inline]
    pub fn item(&self, node: u32) -> u32 {
        match &self.members {
            Some(m) => m[node as usize],
            None => node,
        }
    }

    #[inline]
    pub fn row(&self, node: u32) -> &[f32] {
        self.vectors.row(self.item(node) as usize)
    }

    pub fn len(&self) -> usize {
        self.members.as_ref().map_or(self.vectors.len(), |m| m.len())
    }

    pub fn members(&self) -> Option<&[u32]> {
        self.members.as_deref()
    }

    pub fn vectors(&self) -> &VectorMatrix {
        &self.vectors
    }
}

#[cfg(test)]
thread_local! {
    pub(crate) static DISTANCE_EVALS: std::cell::Cell<usize> = const { std::cell::Cell::new(0) };
}

/// A built HNSW index. Immutable; queries may run concurrently.
#[derive(Debug, Clone)]
pub struct HnswIndex {
    pub(crate) params: HnswParams,
    pub(crate) store: NodeVectors,
    pub(crate) levels: Vec<u8>,
    pub(crate) layers: Vec<GraphLayer>,
    pub(crate) entry: u32,
}

impl GraphView for HnswIndex {
    fn node_count(&self) -> usize {
        self.levels.len()
    }

    fn entry(&self) -> Option<(u32, usize)> {
        Some((self.entry, self.levels[self.entry as usize] as usize))
    }

    fn neighbors(&self, node: u32, layer: usize) -> impl Iterator<Item = u32> + '_ {
        self.layers[layer].neighbors(node).iter().copied()
    }

    #[inline]
    fn distance(&self, q: &[f32], node: u32) -> f64 {
        #[cfg(test)]
        DISTANCE_EVALS.with(|c| c.set(c.get() + 1));
        l2(q, self.store.row(node))
    }
}

impl HnswIndex {
    /// Builds over every item of `dataset`, inserting in id order.
    pub fn build(dataset: &Dataset, params: HnswParams) -> Result<Self> {
        if dataset.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Self::from_store(NodeVectors::new(dataset.vectors().clone(), None), params)
    }

    /// Builds over `members` (item ids), inserting in the given order.
    /// Local node `i` is item `members[i]`.
    pub fn build_subset(dataset: &Dataset, members: Vec<u32>, params: HnswParams) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if members.iter().any(|&id| id as usize >= dataset.len()) {
            return Err(invalid("member id out of range"));
        }
        Self::from_store(
            NodeVectors::new(dataset.vectors().clone(), Some(members.into())),
            params,
        )
    }

    fn from_store(store: NodeVectors, params: HnswParams) -> Result<Self> {
        params.validate()?;
        let mut b = Builder::new(params, &store, ());
        for _ in 0..store.len() {
            b.insert_next();
        }
        let f = b.finish();
        Ok(Self {
            params,
            levels: f.levels,
            layers: f.layers,
            entry: f.entry,
            store,
        })
    }

    pub fn params(&self) -> &HnswParams {
        &self.params
    }

    /// Number of indexed nodes.
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    /// Level of local node `node`.
    pub fn level(&self, node: u32) -> usize {
        self.levels[node as usize] as usize
    }

    /// Local id of the entry point.
    pub fn entry_point(&self) -> u32 {
        self.entry
    }

    /// Item id of local node `node`.
    pub fn item_id(&self, node: u32) -> u32 {
        self.store.item(node)
    }

    /// Local neighbor ids of `node` on `layer`, nearest first.
    pub fn neighbors(&self, node: u32, layer: usize) -> &[u32] {
        self.layers[layer].neighbors(node)
    }

    /// Local ids present on `layer`, ascending.
    pub fn layer_nodes(&self, layer: usize) -> Vec<u32> {
        let l = &self.layers[layer];
        (0..l.len()).map(|s| l.node_at(s)).collect()
    }

    /// Approximate heap footprint of the graph (vectors excluded).
    pub fn graph_bytes(&self) -> usize {
        self.levels.len()
            + self.layers.iter().map(GraphLayer::heap_bytes).sum::<usize>()
            + 4 * self.store.members().map_or(0, <[u32]>::len)
    }

    fn finish(&self, found: Vec<Cand>, k: usize) -> KnnResult {
        let entries = found
            .into_iter()
            .map(|c| Neighbor::new(self.store.item(c.node), c.dist))
            .collect();
        KnnResult::from_unsorted(entries, k)
    }

    pub fn search(&self, q: &[f32], k: usize, ef: usize) -> Result<KnnResult> {
        self.check(q, k, ef)?;
        let found = with_visited(|v| search::knn_unfiltered(self, q, ef, v));
        Ok(self.finish(found, k))
    }

    /// Visit-all filtered search: traversal ignores the predicate, results
    /// are restricted to items it accepts.
    pub fn search_visit_all<P: Predicate + ?Sized>(
        &self,
        q: &[f32],
        k: usize,
        ef: usize,
        pred: &P,
    ) -> Result<KnnResult> {
        self.check(q, k, ef)?;
        if pred.known_empty() {
            return Ok(KnnResult::empty());
        }
        let matches = |node: u32| pred.matches(self.store.item(node));
        let found = with_visited(|v| search::knn_visit_all(self, q, ef, v, &matches));
        Ok(self.finish(found, k))
    }

    /// Induced-subgraph filtered search with two-hop supplementation.
    pub fn search_induced<P: Predicate + ?Sized>(&self, q: &[f32], k: usize, ef: usize, pred: &P) -> Result<KnnResult> {
        self.check(q, k, ef)?;
        if pred.known_empty() {
            return Ok(KnnResult::empty());
        }
        let matches = |node: u32| pred.matches(self.store.item(node));
        let found = with_visited(|v| search::knn_induced(self, q, ef, v, &matches, self.params.m));
        Ok(self.finish(found, k))
    }

    fn check(&self, q: &[f32], k: usize, ef: usize) -> Result<()> {
        if q.len() != self.store.vectors().dim() {
            return Err(Error::DimensionMismatch {
                expected: self.store.vectors().dim(),
                actual: q.len(),
            });
        }
        if ef < k {
            return Err(Error::WidthBelowK { width: ef, k });
        }
        Ok(())
    }
}

pub fn build_hnsw(dataset: &Dataset, params: HnswParams) -> Result<HnswIndex> {
    HnswIndex::build(dataset, params)
}

pub fn search_unfiltered(index: &HnswIndex, q: &[f32], k: usize, ef: usize) -> Result<KnnResult> {
    index.search(q, k, ef)
}

pub fn search_visit_all(index: &HnswIndex, dataset: &Dataset, query: &Query, ef: usize) -> Result<KnnResult> {
    let q = query.vector.as_slice();
    match query.validate(dataset)? {
        Some(f) => index.search_visit_all(q, query.k, ef, &FilterPredicate::new(dataset, &f)),
        None => index.search_visit_all(q, query.k, ef, &MatchAll),
    }
}

pub fn search_induced(index: &HnswIndex, dataset: &Dataset, query: &Query, ef: usize) -> Result<KnnResult> {
    let q = query.vector.as_slice();
    match query.validate(dataset)? {
        Some(f) => index.search_induced(q, query.k, ef, &FilterPredicate::new(dataset, &f)),
        None => index.search_induced(q, query.k, ef, &MatchAll),
    }
}

#[cfg(test)]
mod tests;
