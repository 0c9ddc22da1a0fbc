//! Label-aware flat proximity graph for exact-match-in-set filters.
//!
//! One single-layer graph covers all items. Every label has an entry point
//! carrying that label; queries traverse only vertices carrying a query
//! label.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::distance::{l2, l2_mixed};
use crate::error::{invalid, Error, Result};
use crate::filter::{Filter, FilterValue, Query};
use crate::hnsw::graph::{beam, with_visited, Cand, GraphLayer, GraphView, VisitedList};
use crate::model::{AttributeKind, AttributeValue, Dataset, VectorMatrix};
use crate::oracle::{KnnResult, Neighbor};

/// Labels with more members than this get an approximate medoid.
pub const EXACT_MEDOID_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelGraphParams {
    /// Degree cap.
    pub r: usize,
    /// Beam width during construction.
    pub l_build: usize,
    /// Distance-ratio pruning factor.
    pub alpha: f64,
}

impl Default for LabelGraphParams {
    fn default() -> Self {
        Self {
            r: 32,
            l_build: 64,
            alpha: 1.0,
        }
    }
}

impl LabelGraphParams {
    pub fn validate(&self) -> Result<()> {
        if self.r < 4 {
            return Err(invalid("R must be at least 4"));
        }
        if self.l_build < 1 {
            return Err(invalid("L_build must be at least 1"));
        }
        if !(self.alpha.is_finite() && self.alpha >= 1.0) {
            return Err(invalid("alpha must be finite and at least 1"));
        }
        Ok(())
    }
}

/// Reachability of one label's members from its entry point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelReach {
    pub label: String,
    pub members: usize,
    pub reachable: usize,
}

#[derive(Debug, Clone)]
pub struct LabelGraphIndex {
    pub(crate) column: String,
    pub(crate) params: LabelGraphParams,
    pub(crate) vectors: VectorMatrix,
    pub(crate) graph: GraphLayer,
    /// Sorted label dictionary; a label's id is its position.
    pub(crate) labels: Vec<String>,
    /// Per-item sorted label ids, CSR.
    pub(crate) label_offsets: Vec<u32>,
    pub(crate) label_ids: Vec<u32>,
    pub(crate) entries: Vec<u32>,
}

/// Item labels in CSR form.
#[derive(Clone, Copy)]
struct LabelTable<'a> {
    offsets: &'a [u32],
    ids: &'a [u32],
}

impl LabelTable<'_> {
    #[inline]
    fn of(&self, item: u32) -> &[u32] {
        let i = item as usize;
        &self.ids[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }

    #[inline]
    fn has(&self, item: u32, label: u32) -> bool {
        self.of(item).binary_search(&label).is_ok()
    }

    #[inline]
    fn has_any(&self, item: u32, labels: &[u32]) -> bool {
        let own = self.of(item);
        labels.iter().any(|l| own.binary_search(l).is_ok())
    }
}

/// Adjacency under construction.
struct Draft<'a> {
    lists: &'a [Vec<u32>],
    vectors: &'a VectorMatrix,
}

impl GraphView for Draft<'_> {
    fn node_count(&self) -> usize {
        self.lists.len()
    }

    fn entry(&self) -> Option<(u32, usize)> {
        (!self.lists.is_empty()).then_some((0, 0))
    }

    fn neighbors(&self, node: u32, _layer: usize) -> impl Iterator<Item = u32> + '_ {
        self.lists[node as usize].iter().copied()
    }

    fn distance(&self, q: &[f32], node: u32) -> f64 {
        l2(q, self.vectors.row(node as usize))
    }
}

impl GraphView for LabelGraphIndex {
    fn node_count(&self) -> usize {
        self.vectors.len()
    }

    fn entry(&self) -> Option<(u32, usize)> {
        None
    }

    fn neighbors(&self, node: u32, _layer: usize) -> impl Iterator<Item = u32> + '_ {
        self.graph.neighbors(node).iter().copied()
    }

    fn distance(&self, q: &[f32], node: u32) -> f64 {
        l2(q, self.vectors.row(node as usize))
    }
}

fn item_tokens(value: &AttributeValue) -> Vec<&str> {
    match value {
        AttributeValue::Set(ts) => ts.iter().map(String::as_str).collect(),
        AttributeValue::Unordered(t) => vec![t.as_str()],
        AttributeValue::Ordered(_) => Vec::new(),
    }
}

#[derive(Clone, Copy)]
struct Pruner<'a> {
    vectors: &'a VectorMatrix,
    table: LabelTable<'a>,
    r: usize,
    alpha: f64,
}

impl Pruner<'_> {
    /// Keeps label-sharing candidates plus the nearest others needed to
    /// reach `R/2`, then applies label-aware α-pruning: `c` is dropped by a
    /// selected `s` when `α·d(s, c) <= d(p, c)` and every label `p` shares
    /// with `c` is also carried by `s`.
    fn prune(&self, p: u32, pool: &[Cand]) -> Vec<u32> {
        let lp = self.table.of(p);
        let (mut kept, mut others) = (Vec::new(), Vec::new());
        for &c in pool {
            if c.node == p {
                continue;
            }
            if self.table.has_any(c.node, lp) {
                kept.push(c);
            } else {
                others.push(c);
            }
        }
        let extra = (self.r / 2).saturating_sub(kept.len());
        kept.extend(others.into_iter().take(extra));
        kept.sort();
        let mut out = Vec::with_capacity(self.r);
        let mut rest: VecDeque<Cand> = kept.into();
        while let Some(s) = rest.pop_front() {
            if out.len() >= self.r {
                break;
            }
            out.push(s.node);
            let vs = self.vectors.row(s.node as usize);
            let ls = self.table.of(s.node);
            rest.retain(|c| {
                let close = self.alpha * l2(vs, self.vectors.row(c.node as usize)) <= c.dist;
                let covered = lp
                    .iter()
                    .filter(|l| self.table.has(c.node, **l))
                    .all(|l| ls.binary_search(l).is_ok());
                !(close && covered)
            });
        }
        out
    }

    fn reprune(&self, t: u32, list: &[u32]) -> Vec<u32> {
        let vt = self.vectors.row(t as usize);
        let mut pool: Vec<Cand> = list
            .iter()
            .map(|&c| Cand {
                dist: l2(vt, self.vectors.row(c as usize)),
                node: c,
            })
            .collect();
        pool.sort();
        self.prune(t, &pool)
    }
}

/// Member minimizing the summed distance to the label's members; above
/// [`EXACT_MEDOID_LIMIT`] members, the member nearest the exact centroid.
fn medoid(vectors: &VectorMatrix, members: &[u32]) -> u32 {
    if members.len() <= EXACT_MEDOID_LIMIT {
        let mut best = (f64::INFINITY, members[0]);
        for &a in members {
            let va = vectors.row(a as usize);
            let mut sum = 0.0;
            for &b in members {
                sum += l2(va, vectors.row(b as usize));
                if sum > best.0 {
                    break;
                }
            }
            if sum < best.0 {
                best = (sum, a);
            }
        }
        return best.1;
    }
    let d = vectors.dim();
    let mut centroid = vec![0.0f64; d];
    for &m in members {
        for (c, &x) in centroid.iter_mut().zip(vectors.row(m as usize)) {
            *c += x as f64;
        }
    }
    centroid.iter_mut().for_each(|c| *c /= members.len() as f64);
    let mut best = (f64::INFINITY, members[0]);
    for &m in members {
        let dist = l2_mixed(vectors.row(m as usize), &centroid);
        if dist < best.0 {
            best = (dist, m);
        }
    }
    best.1
}

/// Gives every member a path from its label's entry point through label
/// carriers: an unreached member gets an in-edge from the nearest reached
/// member with spare degree (or, failing that, replaces the nearest reached
/// member's farthest edge).
fn connect_labels(
    lists: &mut [Vec<u32>],
    vectors: &VectorMatrix,
    table: LabelTable<'_>,
    postings: &[Vec<u32>],
    entries: &[u32],
    r: usize,
) {
    let mut seen = vec![u32::MAX; lists.len()];
    let mut reached = Vec::new();
    let mut queue = VecDeque::new();
    for (lab, members) in postings.iter().enumerate() {
        let lab32 = lab as u32;
        reached.clear();
        let mut visit = |from: u32, lists: &[Vec<u32>], reached: &mut Vec<u32>, seen: &mut [u32]| {
            seen[from as usize] = lab32;
            queue.push_back(from);
            while let Some(v) = queue.pop_front() {
                reached.push(v);
                for &u in &lists[v as usize] {
                    if seen[u as usize] != lab32 && table.has(u, lab32) {
                        seen[u as usize] = lab32;
                        queue.push_back(u);
                    }
                }
            }
        };
        visit(entries[lab], lists, &mut reached, &mut seen);
        for &u in members {
            if seen[u as usize] == lab32 {
                continue;
            }
            let vu = vectors.row(u as usize);
            let dist = |v: u32| l2(vu, vectors.row(v as usize));
            let nearest = |pred: &dyn Fn(u32) -> bool| {
                reached
                    .iter()
                    .copied()
                    .filter(|&v| pred(v))
                    .map(|v| (dist(v), v))
                    .min_by(|a, b| a.0.total_cmp(&b.0))
                    .map(|(_, v)| v)
            };
            let v = match nearest(&|v| lists[v as usize].len() < r) {
                Some(v) => v,
                None => {
                    let v = nearest(&|_| true).expect("the entry point is always reached");
                    let vv = vectors.row(v as usize);
                    let list = &mut lists[v as usize];
                    let far = (0..list.len())
                        .max_by(|&a, &b| {
                            l2(vv, vectors.row(list[a] as usize)).total_cmp(&l2(vv, vectors.row(list[b] as usize)))
                        })
                        .expect("a full list is non-empty");
                    list.swap_remove(far);
                    v
                }
            };
            lists[v as usize].push(u);
            visit(u, lists, &mut reached, &mut seen);
        }
    }
}

impl LabelGraphIndex {
    pub fn build(dataset: &Dataset, column: &str, params: LabelGraphParams) -> Result<Self> {
        params.validate()?;
        let col = dataset.schema().index_of(column)?;
        let kind = dataset.schema().kind(col);
        if kind == AttributeKind::Ordered {
            return Err(Error::KindMismatch {
                column: column.to_string(),
                expected: "set or unordered",
                actual: kind,
            });
        }
        if dataset.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let n = dataset.len();
        let mut dict: BTreeMap<&str, u32> = BTreeMap::new();
        for it in dataset.items() {
            for t in item_tokens(&it.attributes[col]) {
                dict.insert(t, 0);
            }
        }
        for (i, v) in dict.values_mut().enumerate() {
            *v = i as u32;
        }
        let labels: Vec<String> = dict.keys().map(|s| s.to_string()).collect();
        let mut label_offsets = vec![0u32];
        let mut label_ids = Vec::new();
        for it in dataset.items() {
            let mut ids: Vec<u32> = item_tokens(&it.attributes[col]).iter().map(|t| dict[t]).collect();
            ids.sort_unstable();
            label_ids.extend(ids);
            label_offsets.push(label_ids.len() as u32);
        }
        drop(dict);

        let vectors = dataset.vectors().clone();
        let pruner = Pruner {
            vectors: &vectors,
            table: LabelTable {
                offsets: &label_offsets,
                ids: &label_ids,
            },
            r: params.r,
            alpha: params.alpha,
        };
        let mut postings: Vec<Vec<u32>> = vec![Vec::new(); labels.len()];
        for p in 0..n as u32 {
            for &lab in pruner.table.of(p) {
                postings[lab as usize].push(p);
            }
        }
        let entries: Vec<u32> = postings.iter().map(|m| medoid(&vectors, m)).collect();
        // Entry points are inserted first so every later search can start there.
        let mut first = vec![false; n];
        let mut order: Vec<u32> = Vec::with_capacity(n);
        for &e in &entries {
            if !std::mem::replace(&mut first[e as usize], true) {
                order.push(e);
            }
        }
        order.extend((0..n as u32).filter(|&p| !first[p as usize]));
        drop(first);

        let slack = (params.r * 13).div_ceil(10);
        let mut lists: Vec<Vec<u32>> = vec![Vec::new(); n];
        let mut inserted = vec![false; n];
        let mut visited = VisitedList::default();
        let mut pool = Vec::new();
        let start_node = order[0];
        for &p in &order {
            let q = vectors.row(p as usize);
            pool.clear();
            if p != start_node {
                let view = Draft {
                    lists: &lists,
                    vectors: &vectors,
                };
                let start = Cand {
                    dist: l2(q, vectors.row(start_node as usize)),
                    node: start_node,
                };
                pool.extend(beam(
                    &view,
                    q,
                    &[start],
                    params.l_build,
                    0,
                    &mut visited,
                    |g, v, l, out| out.extend(g.neighbors(v, l)),
                    |v| v != p,
                ));
                for &lab in pruner.table.of(p) {
                    let e = entries[lab as usize];
                    if !inserted[e as usize] {
                        continue;
                    }
                    let seed = Cand {
                        dist: l2(q, vectors.row(e as usize)),
                        node: e,
                    };
                    let has = |v: u32| pruner.table.has(v, lab);
                    pool.extend(beam(
                        &view,
                        q,
                        &[seed],
                        params.l_build,
                        0,
                        &mut visited,
                        |g, v, l, out| out.extend(g.neighbors(v, l).filter(|&u| has(u))),
                        |v| v != p && has(v),
                    ));
                }
            }
            pool.sort();
            pool.dedup_by_key(|c| c.node);
            let out = pruner.prune(p, &pool);
            for &t in &out {
                let list = &mut lists[t as usize];
                list.push(p);
                if list.len() > slack {
                    let next = pruner.reprune(t, list);
                    lists[t as usize] = next;
                }
            }
            lists[p as usize] = out;
            inserted[p as usize] = true;
        }
        for (t, list) in lists.iter_mut().enumerate() {
            if list.len() > params.r {
                *list = pruner.reprune(t as u32, list);
            }
        }
        connect_labels(&mut lists, &vectors, pruner.table, &postings, &entries, params.r);

        let mut offsets = vec![0u32];
        let mut targets = Vec::new();
        for list in &lists {
            targets.extend_from_slice(list);
            offsets.push(targets.len() as u32);
        }
        Ok(Self {
            column: column.to_string(),
            params,
            vectors,
            graph: GraphLayer {
                nodes: None,
                offsets,
                targets,
            },
            labels,
            label_offsets,
            label_ids,
            entries,
        })
    }

    fn table(&self) -> LabelTable<'_> {
        LabelTable {
            offsets: &self.label_offsets,
            ids: &self.label_ids,
        }
    }

    pub fn column(&self) -> &str {
        &self.column
    }

    pub fn params(&self) -> &LabelGraphParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn neighbors(&self, node: u32) -> &[u32] {
        self.graph.neighbors(node)
    }

    fn label_id(&self, label: &str) -> Option<u32> {
        self.labels
            .binary_search_by(|l| l.as_str().cmp(label))
            .ok()
            .map(|i| i as u32)
    }

    /// Entry point of `label`, if the label occurs.
    pub fn entry_point(&self, label: &str) -> Option<u32> {
        self.label_id(label).map(|l| self.entries[l as usize])
    }

    pub fn item_labels(&self, item: u32) -> Vec<&str> {
        self.table()
            .of(item)
            .iter()
            .map(|&l| self.labels[l as usize].as_str())
            .collect()
    }

    pub fn graph_bytes(&self) -> usize {
        self.graph.heap_bytes()
            + 4 * (self.label_offsets.len() + self.label_ids.len() + self.entries.len())
            + self.labels.iter().map(|l| l.len() + 24).sum::<usize>()
    }

    pub fn label_query(&self, q: &[f32], k: usize, ef: usize, label: &str) -> Result<KnnResult> {
        self.label_multi_query(q, k, ef, &[label])
    }

    /// Items carrying at least one of `labels`.
    pub fn label_multi_query<S: AsRef<str>>(&self, q: &[f32], k: usize, ef: usize, labels: &[S]) -> Result<KnnResult> {
        if q.len() != self.vectors.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.vectors.dim(),
                actual: q.len(),
            });
        }
        if ef < k {
            return Err(Error::WidthBelowK { width: ef, k });
        }
        let mut ids: Vec<u32> = labels.iter().filter_map(|l| self.label_id(l.as_ref())).collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.is_empty() {
            return Ok(KnnResult::empty());
        }
        let table = self.table();
        let mut seeds: Vec<Cand> = ids
            .iter()
            .map(|&l| {
                let e = self.entries[l as usize];
                Cand {
                    dist: self.distance(q, e),
                    node: e,
                }
            })
            .collect();
        seeds.sort();
        seeds.dedup();
        let ok = |v: u32| table.has_any(v, &ids);
        let found = with_visited(|visited| {
            beam(
                self,
                q,
                &seeds,
                ef,
                0,
                visited,
                |g: &Self, v, l, out| out.extend(GraphView::neighbors(g, v, l).filter(|&u| ok(u))),
                ok,
            )
        });
        let entries = found.into_iter().map(|c| Neighbor::new(c.node, c.dist)).collect();
        Ok(KnnResult::from_unsorted(entries, k))
    }

    /// Answers EMIS leaves on the column (EM leaves for unordered columns),
    /// or a disjunction of them.
    pub fn query(&self, dataset: &Dataset, query: &Query, ef: usize) -> Result<KnnResult> {
        query.validate(dataset)?;
        let filter = query
            .filter
            .as_ref()
            .ok_or_else(|| Error::UnsupportedFilter("label queries need a filter".into()))?;
        let mut labels = Vec::new();
        self.collect_labels(filter, &mut labels)?;
        self.label_multi_query(query.vector.as_slice(), query.k, ef, &labels)
    }

    fn collect_labels<'f>(&self, filter: &'f Filter, out: &mut Vec<&'f str>) -> Result<()> {
        match filter {
            Filter::Emis(l) if l.column == self.column => out.push(&l.value),
            Filter::Em(l) if l.column == self.column => match &l.value {
                FilterValue::Token(t) => out.push(t),
                FilterValue::Ordered(_) => return Err(Error::UnsupportedFilter("label values are tokens".into())),
            },
            Filter::Or(children) => {
                for c in children {
                    self.collect_labels(c, out)?;
                }
            }
            _ => {
                return Err(Error::UnsupportedFilter(format!(
                    "expected exact-match leaves on `{}` or their disjunction",
                    self.column
                )))
            }
        }
        Ok(())
    }

    /// Breadth-first reachability of each label's members from its entry
    /// point through vertices carrying the label.
    pub fn reachability(&self) -> Vec<LabelReach> {
        let table = self.table();
        let mut seen = vec![u32::MAX; self.len()];
        (0..self.labels.len() as u32)
            .map(|lab| {
                let members = (0..self.len() as u32).filter(|&v| table.has(v, lab)).count();
                let start = self.entries[lab as usize];
                let mut queue = VecDeque::from([start]);
                seen[start as usize] = lab;
                let mut reachable = 0;
                while let Some(v) = queue.pop_front() {
                    reachable += 1;
                    for &u in self.graph.neighbors(v) {
                        if seen[u as usize] != lab && table.has(u, lab) {
                            seen[u as usize] = lab;
                            queue.push_back(u);
                        }
                    }
                }
                LabelReach {
                    label: self.labels[lab as usize].clone(),
                    members,
                    reachable,
                }
            })
            .collect()
    }
}

pub fn build_label_graph(
    dataset: &Dataset,
    column: &str,
    r: usize,
    l_build: usize,
    alpha: f64,
) -> Result<LabelGraphIndex> {
    LabelGraphIndex::build(dataset, column, LabelGraphParams { r, l_build, alpha })
}

pub fn label_query(index: &LabelGraphIndex, q: &[f32], k: usize, ef: usize, label: &str) -> Result<KnnResult> {
    index.label_query(q, k, ef, label)
}

pub fn label_multi_query<S: AsRef<str>>(
    index: &LabelGraphIndex,
    q: &[f32],
    k: usize,
    ef: usize,
    labels: &[S],
) -> Result<KnnResult> {
    index.label_multi_query(q, k, ef, labels)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::model::{AttributeSchema, ColumnDef, Item};
    use crate::oracle::{exact_filtered_knn, exact_knn_compiled};
    use crate::testutil::{random_dataset, random_vector};

    fn single_label_dataset(n: usize, seed: u64) -> Dataset {
        let schema = AttributeSchema::new(vec![ColumnDef {
            name: "tags".into(),
            kind: AttributeKind::Set,
        }])
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let items = (0..n as u32)
            .map(|id| Item {
                id,
                vector: random_vector(&mut rng, 6),
                attributes: vec![AttributeValue::set([if id % 2 == 0 { "even" } else { "odd" }, "all"])],
            })
            .collect();
        Dataset::from_items(schema, 6, items).unwrap()
    }

    fn params() -> LabelGraphParams {
        LabelGraphParams {
            r: 16,
            l_build: 32,
            ..LabelGraphParams::default()
        }
    }

    #[test]
    fn degree_and_entry_invariants() {
        let ds = random_dataset(600, 6, 1);
        let g = LabelGraphIndex::build(&ds, "tags", params()).unwrap();
        for v in 0..600u32 {
            let nb = g.neighbors(v);
            assert!(nb.len() <= 16);
            let mut s = nb.to_vec();
            s.sort_unstable();
            s.dedup();
            assert_eq!(s.len(), nb.len());
            assert!(!nb.contains(&v));
        }
        for label in g.labels() {
            let e = g.entry_point(label).unwrap();
            assert!(g.item_labels(e).contains(&label.as_str()));
        }
        for r in g.reachability() {
            assert_eq!(r.reachable, r.members, "{}", r.label);
        }
    }

    #[test]
    fn single_label_entry_is_global_medoid() {
        let ds = single_label_dataset(300, 2);
        let g = LabelGraphIndex::build(&ds, "tags", params()).unwrap();
        let sums: Vec<f64> = (0..300u32)
            .map(|a| (0..300u32).map(|b| l2(ds.vector(a), ds.vector(b))).sum())
            .collect();
        let best = (0..300).min_by(|&a, &b| sums[a].total_cmp(&sums[b])).unwrap() as u32;
        assert_eq!(g.entry_point("all"), Some(best));
        let q = random_vector(&mut ChaCha8Rng::seed_from_u64(3), 6);
        assert_eq!(
            g.label_query(&q, 10, 300, "all").unwrap(),
            exact_knn_compiled(&ds, &q, 10, None)
        );
        let both = g.label_multi_query(&q, 10, 300, &["even", "odd"]).unwrap();
        assert_eq!(both, exact_knn_compiled(&ds, &q, 10, None));
    }

    #[test]
    fn singleton_and_unknown_labels() {
        let schema = AttributeSchema::new(vec![ColumnDef {
            name: "tags".into(),
            kind: AttributeKind::Set,
        }])
        .unwrap();
        let items = (0..50u32)
            .map(|id| Item {
                id,
                vector: vec![id as f32, 0.0],
                attributes: vec![AttributeValue::set(if id == 7 { vec!["rare", "x"] } else { vec!["x"] })],
            })
            .collect();
        let ds = Dataset::from_items(schema, 2, items).unwrap();
        let g = LabelGraphIndex::build(&ds, "tags", params()).unwrap();
        assert_eq!(g.entry_point("rare"), Some(7));
        assert_eq!(g.label_query(&[40.0, 0.0], 5, 10, "rare").unwrap().ids(), vec![7]);
        assert!(g.label_query(&[0.0, 0.0], 5, 10, "nope").unwrap().is_empty());
        assert!(g
            .label_multi_query(&[0.0, 0.0], 5, 10, &["nope", "nada"])
            .unwrap()
            .is_empty());
    }

    #[test]
    fn unordered_column_as_singleton_labels() {
        let ds = random_dataset(500, 6, 4);
        let g = LabelGraphIndex::build(&ds, "cat", params()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q = Query::new(random_vector(&mut rng, 6), 10, Some(Filter::em("cat", "c"))).unwrap();
        assert_eq!(g.query(&ds, &q, 500).unwrap(), exact_filtered_knn(&ds, &q).unwrap());
        assert!(matches!(
            LabelGraphIndex::build(&ds, "year", params()),
            Err(Error::KindMismatch { .. })
        ));
    }

    #[test]
    fn benchmark_setting_accepted() {
        let p = LabelGraphParams {
            r: 32,
            l_build: 64,
            alpha: 1.2,
        };
        p.validate().unwrap();
        assert!(LabelGraphParams { r: 3, ..p }.validate().is_err());
        assert!(LabelGraphParams { alpha: 0.9, ..p }.validate().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn results_carry_a_query_label(seed in 0u64..500, ef in 10usize..60, a in 0usize..6, b in 0usize..6) {
            let ds = random_dataset(200, 4, seed);
            let g = LabelGraphIndex::build(&ds, "tags", params()).unwrap();
            let tags = crate::testutil::TAGS;
            let q = ds.vector((seed % 200) as u32).to_vec();
            let r = g.label_multi_query(&q, 10, ef, &[tags[a], tags[b]]).unwrap();
            prop_assert!(r.is_strictly_sorted());
            for id in r.ids() {
                let own = g.item_labels(id);
                prop_assert!(own.contains(&tags[a]) || own.contains(&tags[b]));
            }
        }
    }
}
