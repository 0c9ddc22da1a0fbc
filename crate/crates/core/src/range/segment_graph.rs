use std::sync::Arc;

use super::SortedColumn;
use crate::distance::l2;
use crate::error::{Error, Result};
use crate::filter::Query;
use crate::hnsw::build::{Builder, EdgeLog};
use crate::hnsw::graph::{with_visited, GraphLayer, GraphView};
use crate::hnsw::search::knn_unfiltered;
use crate::hnsw::{HnswParams, NodeVectors};
use crate::model::{Dataset, OrderedValue};
use crate::oracle::{exact_knn_over, KnnResult, Neighbor};

/// Validity of a directed edge over 1-based insertion ranks: the edge is
/// present in the prefix graph of the first `b` items iff
/// `birth <= b < death`. `death == n + 1` means never pruned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeValidity {
    pub birth: u32,
    pub death: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct SegmentLayer {
    pub graph: GraphLayer,
    pub birth: Vec<u32>,
    pub death: Vec<u32>,
}

/// HNSW built by inserting items in ascending attribute order, retaining
/// every edge ever created together with its validity interval.
#[derive(Debug, Clone)]
pub struct SegmentGraphIndex {
    pub(crate) column: SortedColumn,
    pub(crate) params: HnswParams,
    pub(crate) store: NodeVectors,
    pub(crate) levels: Vec<u8>,
    pub(crate) layers: Vec<SegmentLayer>,
    /// Entry-point history as `(rank, node)`: the entry of prefix `b` is
    /// the last record with `rank <= b`.
    pub(crate) entries: Vec<(u32, u32)>,
}

const OPEN: u32 = u32::MAX;

struct Record {
    target: u32,
    dist: f64,
    birth: u32,
    death: u32,
}

#[derive(Default)]
struct ValidityLog {
    rank: u32,
    records: Vec<Vec<Vec<Record>>>,
    entries: Vec<(u32, u32)>,
}

impl EdgeLog for ValidityLog {
    fn node_added(&mut self, node: u32, level: usize) {
        self.rank = node + 1;
        self.records.push((0..=level).map(|_| Vec::new()).collect());
    }

    fn edge_added(&mut self, from: u32, layer: usize, to: u32, dist: f64) {
        self.records[from as usize][layer].push(Record {
            target: to,
            dist,
            birth: self.rank,
            death: OPEN,
        });
    }

    fn edge_removed(&mut self, from: u32, layer: usize, to: u32) {
        let list = &mut self.records[from as usize][layer];
        let rec = list
            .iter_mut()
            .rev()
            .find(|r| r.target == to && r.death == OPEN)
            .expect("removed edge was logged");
        rec.death = self.rank;
    }

    fn entry_changed(&mut self, node: u32, _level: usize) {
        self.entries.push((node + 1, node));
    }
}

/// Read-only view of the prefix graph over the first `b` ranks.
struct Prefix<'a> {
    index: &'a SegmentGraphIndex,
    b: u32,
}

impl GraphView for Prefix<'_> {
    fn node_count(&self) -> usize {
        self.b as usize
    }

    fn entry(&self) -> Option<(u32, usize)> {
        let i = self.index.entries.partition_point(|&(r, _)| r <= self.b);
        let (_, node) = *self.index.entries.get(i.checked_sub(1)?)?;
        Some((node, self.index.levels[node as usize] as usize))
    }

    fn neighbors(&self, node: u32, layer: usize) -> impl Iterator<Item = u32> + '_ {
        let l = &self.index.layers[layer];
        let b = self.b;
        l.graph
            .range(node)
            .filter(move |&e| l.birth[e] <= b && b < l.death[e])
            .map(move |e| l.graph.targets[e])
    }

    fn distance(&self, q: &[f32], node: u32) -> f64 {
        l2(q, self.index.store.row(node))
    }
}

impl SegmentGraphIndex {
    pub fn build(dataset: &Dataset, column: &str, params: HnswParams) -> Result<Self> {
        params.validate()?;
        let column = SortedColumn::new(dataset, column)?;
        let n = column.order.len();
        let store = NodeVectors::new(dataset.vectors().clone(), Some(Arc::from(column.order.clone())));
        let mut b = Builder::new(params, &store, ValidityLog::default());
        for _ in 0..n {
            b.insert_next();
        }
        let frozen = b.finish();
        let log = frozen.log;
        let top = frozen.levels.iter().copied().max().unwrap_or(0) as usize;
        let never = n as u32 + 1;
        let mut layers = Vec::with_capacity(top + 1);
        for layer in 0..=top {
            let mut nodes = Vec::new();
            let mut offsets = vec![0u32];
            let (mut targets, mut birth, mut death) = (Vec::new(), Vec::new(), Vec::new());
            for (node, per_layer) in log.records.iter().enumerate() {
                let Some(recs) = per_layer.get(layer) else {
                    continue;
                };
                let mut sorted: Vec<&Record> = recs.iter().collect();
                sorted.sort_by(|a, b| {
                    a.dist
                        .total_cmp(&b.dist)
                        .then(a.target.cmp(&b.target))
                        .then(a.birth.cmp(&b.birth))
                });
                for r in sorted {
                    targets.push(r.target);
                    birth.push(r.birth);
                    death.push(if r.death == OPEN { never } else { r.death });
                }
                nodes.push(node as u32);
                offsets.push(targets.len() as u32);
            }
            layers.push(SegmentLayer {
                graph: GraphLayer {
                    nodes: (layer > 0).then_some(nodes),
                    offsets,
                    targets,
                },
                birth,
                death,
            });
        }
        Ok(Self {
            column,
            params,
            store,
            levels: frozen.levels,
            layers,
            entries: log.entries,
        })
    }

    pub fn column(&self) -> &str {
        &self.column.name
    }

    pub fn params(&self) -> &HnswParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    /// Item ids in insertion (rank) order; local node `v` has rank `v + 1`.
    pub fn sorted_ids(&self) -> &[u32] {
        &self.column.order
    }

    pub fn level(&self, node: u32) -> usize {
        self.levels[node as usize] as usize
    }

    /// Total number of stored edges, pruned ones included.
    pub fn edge_count(&self) -> usize {
        self.layers.iter().map(|l| l.graph.targets.len()).sum()
    }

    /// Every stored edge of `node` on `layer` with its validity, in
    /// `(distance, target)` order.
    pub fn edges(&self, node: u32, layer: usize) -> Vec<(u32, EdgeValidity)> {
        let l = &self.layers[layer];
        l.graph
            .range(node)
            .map(|e| {
                (
                    l.graph.targets[e],
                    EdgeValidity {
                        birth: l.birth[e],
                        death: l.death[e],
                    },
                )
            })
            .collect()
    }

    /// Adjacency of `node` on `layer` restricted to prefix `b`.
    pub fn prefix_neighbors(&self, node: u32, layer: usize, b: usize) -> Vec<u32> {
        Prefix {
            index: self,
            b: b as u32,
        }
        .neighbors(node, layer)
        .collect()
    }

    /// Entry point (local id) of prefix `b`.
    pub fn prefix_entry(&self, b: usize) -> Option<u32> {
        Prefix {
            index: self,
            b: b as u32,
        }
        .entry()
        .map(|e| e.0)
    }

    /// Number of items with value `<= upper`.
    pub fn prefix_len(&self, upper: OrderedValue) -> usize {
        self.column.values.partition_point(|v| *v <= upper)
    }

    /// Unfiltered search on the prefix graph of the first `b` ranks.
    pub fn search_prefix(&self, q: &[f32], k: usize, ef: usize, b: usize) -> Result<KnnResult> {
        if q.len() != self.store.vectors().dim() {
            return Err(Error::DimensionMismatch {
                expected: self.store.vectors().dim(),
                actual: q.len(),
            });
        }
        if ef < k {
            return Err(Error::WidthBelowK { width: ef, k });
        }
        let view = Prefix {
            index: self,
            b: b.min(self.len()) as u32,
        };
        let found = with_visited(|v| knn_unfiltered(&view, q, ef, v));
        let entries = found
            .into_iter()
            .map(|c| Neighbor::new(self.store.item(c.node), c.dist))
            .collect();
        Ok(KnnResult::from_unsorted(entries, k))
    }

    /// Top-k among items with value `<= upper`.
    pub fn search_leq(&self, q: &[f32], k: usize, ef: usize, upper: OrderedValue) -> Result<KnnResult> {
        self.search_prefix(q, k, ef, self.prefix_len(upper))
    }

    /// Range search: half-bounded ranges use the prefix graph, two-sided
    /// ranges fall back to an exact scan of the matching rank slice.
    pub fn search_range(
        &self,
        dataset: &Dataset,
        q: &[f32],
        k: usize,
        ef: usize,
        low: OrderedValue,
        high: OrderedValue,
    ) -> Result<KnnResult> {
        if low <= OrderedValue::MIN || low <= self.column.values[0] {
            return self.search_leq(q, k, ef, high);
        }
        if ef < k {
            return Err(Error::WidthBelowK { width: ef, k });
        }
        let (a, b) = self.column.ranks(low, high);
        Ok(exact_knn_over(dataset, q, k, &self.column.order[a..b.max(a)]))
    }

    pub fn graph_bytes(&self) -> usize {
        self.levels.len()
            + self
                .layers
                .iter()
                .map(|l| l.graph.heap_bytes() + 4 * (l.birth.len() + l.death.len()))
                .sum::<usize>()
            + 20 * self.column.order.len()
    }
}

pub fn build_segment_graph(dataset: &Dataset, column: &str, params: HnswParams) -> Result<SegmentGraphIndex> {
    SegmentGraphIndex::build(dataset, column, params)
}

pub fn segment_graph_query_leq(
    index: &SegmentGraphIndex,
    q: &[f32],
    k: usize,
    ef: usize,
    upper_value: OrderedValue,
) -> Result<KnnResult> {
    index.search_leq(q, k, ef, upper_value)
}

impl SegmentGraphIndex {
    /// Answers a query whose filter is a single range leaf on the column.
    pub fn query(&self, dataset: &Dataset, query: &Query, ef: usize) -> Result<KnnResult> {
        query.validate(dataset)?;
        let filter = query
            .filter
            .as_ref()
            .ok_or_else(|| Error::UnsupportedFilter("segment graph queries need a range filter".into()))?;
        let (low, high) = self.column.bounds_of(dataset, filter)?;
        self.search_range(dataset, query.vector.as_slice(), query.k, ef, low, high)
    }
}
