use rayon::prelude::*;

use super::SortedColumn;
use crate::error::{invalid, Error, Result};
use crate::filter::Query;
use crate::hnsw::{HnswIndex, HnswParams};
use crate::model::{Dataset, OrderedValue};
use crate::oracle::KnnResult;

/// A tree node: the half-open rank interval `[lo, hi)` of the sorted order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeNode {
    pub lo: usize,
    pub hi: usize,
    pub depth: usize,
    /// Children occupy `first_child..first_child + child_count` in node order.
    pub first_child: usize,
    pub child_count: usize,
}

impl TreeNode {
    pub fn len(&self) -> usize {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.hi == self.lo
    }
}

/// A β-ary tree over the sorted order of one ordered column with an HNSW
/// index per node.
#[derive(Debug, Clone)]
pub struct SegmentTreeIndex {
    column: SortedColumn,
    beta: usize,
    params: HnswParams,
    nodes: Vec<TreeNode>,
    graphs: Vec<HnswIndex>,
}

/// Node layout in breadth-first order. Child `j` of `[a, a + len)` covers
/// `[a + j*len/β, a + (j+1)*len/β)`; empty children are skipped and
/// single-item nodes are leaves.
fn layout(n: usize, beta: usize) -> Vec<TreeNode> {
    let mut nodes = vec![TreeNode {
        lo: 0,
        hi: n,
        depth: 0,
        first_child: 0,
        child_count: 0,
    }];
    let mut i = 0;
    while i < nodes.len() {
        let TreeNode { lo, hi, depth, .. } = nodes[i];
        let len = hi - lo;
        if len > 1 {
            let first = nodes.len();
            for j in 0..beta {
                let (a, b) = (lo + j * len / beta, lo + (j + 1) * len / beta);
                if a < b {
                    nodes.push(TreeNode {
                        lo: a,
                        hi: b,
                        depth: depth + 1,
                        first_child: 0,
                        child_count: 0,
                    });
                }
            }
            nodes[i].first_child = first;
            nodes[i].child_count = nodes.len() - first;
        }
        i += 1;
    }
    nodes
}

impl SegmentTreeIndex {
    pub fn build(dataset: &Dataset, column: &str, beta: usize, params: HnswParams) -> Result<Self> {
        if beta < 2 {
            return Err(invalid("beta must be at least 2"));
        }
        params.validate()?;
        let column = SortedColumn::new(dataset, column)?;
        let nodes = layout(dataset.len(), beta);
        let graphs = nodes
            .par_iter()
            .enumerate()
            .map(|(i, node)| {
                let p = HnswParams {
                    seed: params.seed.wrapping_add(i as u64),
                    ..params
                };
                HnswIndex::build_subset(dataset, column.order[node.lo..node.hi].to_vec(), p)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            column,
            beta,
            params,
            nodes,
            graphs,
        })
    }

    pub fn column(&self) -> &str {
        &self.column.name
    }

    pub fn beta(&self) -> usize {
        self.beta
    }

    pub fn params(&self) -> &HnswParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.column.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.column.order.is_empty()
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    /// Item ids in `(value, id)` order.
    pub fn sorted_ids(&self) -> &[u32] {
        &self.column.order
    }

    pub fn node_graph(&self, node: usize) -> &HnswIndex {
        &self.graphs[node]
    }

    pub fn graph_bytes(&self) -> usize {
        self.graphs.iter().map(HnswIndex::graph_bytes).sum::<usize>()
            + self.nodes.len() * std::mem::size_of::<TreeNode>()
            + 20 * self.column.order.len()
    }

    /// Canonical cover of the inclusive rank range `[lo, hi]`: every node
    /// fully inside the range whose parent is not.
    pub fn minimal_cover(&self, lo: usize, hi: usize) -> Result<Vec<usize>> {
        if lo > hi || hi >= self.len() {
            return Err(invalid(format!("rank range [{lo}, {hi}] outside [0, {})", self.len())));
        }
        let mut out = Vec::new();
        self.cover_into(0, lo, hi + 1, &mut out);
        Ok(out)
    }

    fn cover_into(&self, node: usize, lo: usize, hi: usize, out: &mut Vec<usize>) {
        let t = self.nodes[node];
        if t.hi <= lo || hi <= t.lo {
            return;
        }
        if lo <= t.lo && t.hi <= hi {
            out.push(node);
            return;
        }
        for c in t.first_child..t.first_child + t.child_count {
            self.cover_into(c, lo, hi, out);
        }
    }

    /// Top-k items with value in `[low, high]`, merged over the cover.
    pub fn search_range(
        &self,
        q: &[f32],
        k: usize,
        ef: usize,
        low: OrderedValue,
        high: OrderedValue,
    ) -> Result<KnnResult> {
        if ef < k {
            return Err(Error::WidthBelowK { width: ef, k });
        }
        let (a, b) = self.column.ranks(low, high);
        if a >= b {
            return Ok(KnnResult::empty());
        }
        let mut merged = Vec::new();
        for node in self.minimal_cover(a, b - 1)? {
            merged.extend(self.graphs[node].search(q, k, ef)?.entries);
        }
        Ok(KnnResult::from_unsorted(merged, k))
    }
}

pub fn build_segment_tree(
    dataset: &Dataset,
    column: &str,
    beta: usize,
    params: HnswParams,
) -> Result<SegmentTreeIndex> {
    SegmentTreeIndex::build(dataset, column, beta, params)
}

pub fn minimal_cover(index: &SegmentTreeIndex, lo_rank: usize, hi_rank: usize) -> Result<Vec<usize>> {
    index.minimal_cover(lo_rank, hi_rank)
}

pub fn segment_tree_query(index: &SegmentTreeIndex, dataset: &Dataset, query: &Query, ef: usize) -> Result<KnnResult> {
    query.validate(dataset)?;
    let filter = query
        .filter
        .as_ref()
        .ok_or_else(|| Error::UnsupportedFilter("segment tree queries need a range filter".into()))?;
    let (low, high) = index.column.bounds_of(dataset, filter)?;
    index.search_range(query.vector.as_slice(), query.k, ef, low, high)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::filter::Filter;
    use crate::oracle::{exact_filtered_knn, exact_knn_compiled};
    use crate::testutil::{random_dataset, random_vector};

    fn params() -> HnswParams {
        HnswParams {
            m: 8,
            ef_construction: 32,
            ..HnswParams::default()
        }
    }

    #[test]
    fn beta_items_give_root_and_singletons() {
        let ds = random_dataset(3, 4, 1);
        let t = SegmentTreeIndex::build(&ds, "year", 3, params()).unwrap();
        assert_eq!(t.nodes().len(), 4);
        assert_eq!(t.nodes()[0].child_count, 3);
        assert!(t.nodes()[1..].iter().all(|n| n.len() == 1 && n.depth == 1));
    }

    #[test]
    fn perfect_ternary_layers() {
        let nodes = layout(243, 3);
        for l in 0..=5 {
            let layer: Vec<_> = nodes.iter().filter(|n| n.depth == l).collect();
            assert_eq!(layer.len(), 3usize.pow(l as u32));
            assert!(layer.iter().all(|n| n.len() == 243 / 3usize.pow(l as u32)));
        }
    }

    #[test]
    fn node_members_are_sorted_slices() {
        let ds = random_dataset(100, 4, 2);
        let t = SegmentTreeIndex::build(&ds, "year", 2, params()).unwrap();
        for (i, node) in t.nodes().iter().enumerate() {
            let g = t.node_graph(i);
            let mut members: Vec<u32> = (0..g.len() as u32).map(|v| g.item_id(v)).collect();
            let mut slice = t.sorted_ids()[node.lo..node.hi].to_vec();
            members.sort_unstable();
            slice.sort_unstable();
            assert_eq!(members, slice);
        }
        assert!(t.depth() <= 7);
    }

    #[test]
    fn rejects_non_ordered_column_and_bad_beta() {
        let ds = random_dataset(10, 4, 3);
        assert!(matches!(
            SegmentTreeIndex::build(&ds, "cat", 2, params()),
            Err(Error::KindMismatch { .. })
        ));
        assert!(SegmentTreeIndex::build(&ds, "year", 1, params()).is_err());
    }

    #[test]
    fn cover_edges() {
        let ds = random_dataset(50, 2, 4);
        let t = SegmentTreeIndex::build(&ds, "year", 2, params()).unwrap();
        assert_eq!(t.minimal_cover(0, 49).unwrap(), vec![0]);
        let single = t.minimal_cover(17, 17).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(t.nodes()[single[0]].len(), 1);
        assert!(t.minimal_cover(3, 50).is_err());
        assert!(t.minimal_cover(5, 4).is_err());
    }

    #[test]
    fn exhaustive_queries_match_oracle() {
        let ds = random_dataset(1000, 8, 5);
        let t = SegmentTreeIndex::build(&ds, "year", 2, params()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for (lo, hi) in [(0i64, 99i64), (10, 10), (20, 60), (99, 99), (150, 200)] {
            let q = Query::new(random_vector(&mut rng, 8), 10, Some(Filter::range("year", lo, hi))).unwrap();
            let got = segment_tree_query(&t, &ds, &q, 1000).unwrap();
            assert_eq!(got, exact_filtered_knn(&ds, &q).unwrap(), "[{lo}, {hi}]");
        }
        let everything = Query::new(vec![0.0; 8], 10, Some(Filter::range("year", -5i64, 500i64))).unwrap();
        assert_eq!(
            segment_tree_query(&t, &ds, &everything, 1000).unwrap(),
            exact_knn_compiled(&ds, &[0.0; 8], 10, None)
        );
        let wrong = Query::new(vec![0.0; 8], 10, Some(Filter::em("cat", "a"))).unwrap();
        assert!(segment_tree_query(&t, &ds, &wrong, 100).is_err());
    }

    proptest! {
        #[test]
        fn cover_is_disjoint_complete_minimal(n in 1usize..200, beta in 2usize..6, a in 0usize..200, b in 0usize..200) {
            let nodes = layout(n, beta);
            let (lo, hi) = ((a % n).min(b % n), (a % n).max(b % n));
            let t = SegmentTreeIndex {
                column: SortedColumn { name: String::new(), col: 0, values: vec![], order: (0..n as u32).collect() },
                beta,
                params: params(),
                nodes: nodes.clone(),
                graphs: vec![],
            };
            let cover = t.minimal_cover(lo, hi).unwrap();
            let mut spans: Vec<(usize, usize)> = cover.iter().map(|&c| (nodes[c].lo, nodes[c].hi)).collect();
            spans.sort();
            prop_assert_eq!(spans[0].0, lo);
            prop_assert_eq!(spans.last().unwrap().1, hi + 1);
            for w in spans.windows(2) {
                prop_assert_eq!(w[0].1, w[1].0);
            }
            let depth = nodes.iter().map(|x| x.depth).max().unwrap();
            prop_assert!(cover.len() <= (2 * (beta - 1) * depth).max(1));
        }
    }
}
