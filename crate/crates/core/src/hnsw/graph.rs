use std::cell::RefCell;
use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::error::{format, Result};

/// A search candidate: local node id plus distance to the query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Cand {
    pub dist: f64,
    pub node: u32,
}

impl Eq for Cand {}

impl Ord for Cand {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist.total_cmp(&other.dist).then(self.node.cmp(&other.node))
    }
}

impl PartialOrd for Cand {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Read access to a layered proximity graph over local node ids.
pub(crate) trait GraphView {
    fn node_count(&self) -> usize;
    /// Entry node and the top layer.
    fn entry(&self) -> Option<(u32, usize)>;
    fn neighbors(&self, node: u32, layer: usize) -> impl Iterator<Item = u32> + '_;
    fn distance(&self, q: &[f32], node: u32) -> f64;
}

/// Epoch-stamped visited set, reused across searches.
#[derive(Debug, Default)]
pub(crate) struct VisitedList {
    marks: Vec<u32>,
    epoch: u32,
}

impl VisitedList {
    pub fn reset(&mut self, n: usize) {
        if self.marks.len() < n {
            self.marks.resize(n, 0);
        }
        if self.epoch == u32::MAX {
            self.marks.iter_mut().for_each(|m| *m = 0);
            self.epoch = 0;
        }
        self.epoch += 1;
    }

    /// Marks `node`; returns `false` if it was already visited.
    #[inline]
    pub fn insert(&mut self, node: u32) -> bool {
        let m = &mut self.marks[node as usize];
        if *m == self.epoch {
            false
        } else {
            *m = self.epoch;
            true
        }
    }
}

thread_local! {
    static VISITED: RefCell<VisitedList> = RefCell::new(VisitedList::default());
}

/// Runs `f` with this thread's visited list. Not reentrant.
pub(crate) fn with_visited<R>(f: impl FnOnce(&mut VisitedList) -> R) -> R {
    VISITED.with(|v| f(&mut v.borrow_mut()))
}

/// Best-first beam search on one layer.
///
/// `expand` yields the neighbors to consider from a node, `accept` decides
/// which visited nodes may enter the result set. A node becomes a candidate
/// when the result set has room or it beats the current worst result.
/// Returns up to `ef` accepted nodes, ascending.
#[allow(clippy::too_many_arguments)]
pub(crate) fn beam<G, X, A>(
    g: &G,
    q: &[f32],
    seeds: &[Cand],
    ef: usize,
    layer: usize,
    visited: &mut VisitedList,
    mut expand: X,
    accept: A,
) -> Vec<Cand>
where
    G: GraphView,
    X: FnMut(&G, u32, usize, &mut Vec<u32>),
    A: Fn(u32) -> bool,
{
    visited.reset(g.node_count());
    let mut frontier: BinaryHeap<Reverse<Cand>> = BinaryHeap::new();
    let mut results: BinaryHeap<Cand> = BinaryHeap::with_capacity(ef + 1);
    for &s in seeds {
        if visited.insert(s.node) {
            frontier.push(Reverse(s));
            if accept(s.node) {
                results.push(s);
                if results.len() > ef {
                    results.pop();
                }
            }
        }
    }
    let mut buf = Vec::new();
    while let Some(Reverse(c)) = frontier.pop() {
        if results.len() >= ef && results.peek().is_some_and(|w| c > *w) {
            break;
        }
        buf.clear();
        expand(g, c.node, layer, &mut buf);
        for &v in &buf {
            if !visited.insert(v) {
                continue;
            }
            let cand = Cand {
                dist: g.distance(q, v),
                node: v,
            };
            if results.len() < ef || results.peek().is_some_and(|w| cand < *w) {
                frontier.push(Reverse(cand));
                if accept(v) {
                    results.push(cand);
                    if results.len() > ef {
                        results.pop();
                    }
                }
            }
        }
    }
    results.into_sorted_vec()
}

pub(crate) fn expand_all<G: GraphView>(g: &G, node: u32, layer: usize, out: &mut Vec<u32>) {
    out.extend(g.neighbors(node, layer));
}

/// Neighbor expansion restricted to matching nodes, supplemented by
/// matching two-hop neighbors while fewer than `min_degree` survive.
pub(crate) fn expand_induced<G, P>(g: &G, node: u32, layer: usize, out: &mut Vec<u32>, matches: &P, min_degree: usize)
where
    G: GraphView,
    P: Fn(u32) -> bool,
{
    out.extend(g.neighbors(node, layer).filter(|&v| matches(v)));
    if out.len() >= min_degree {
        return;
    }
    'outer: for u in g.neighbors(node, layer) {
        for w in g.neighbors(u, layer) {
            if w != node && matches(w) && !out.contains(&w) {
                out.push(w);
                if out.len() >= min_degree {
                    break 'outer;
                }
            }
        }
    }
}

/// One layer of a frozen graph in CSR form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct GraphLayer {
    /// Sorted node ids present in the layer; `None` means all nodes.
    pub nodes: Option<Vec<u32>>,
    pub offsets: Vec<u32>,
    pub targets: Vec<u32>,
}

impl GraphLayer {
    #[inline]
    pub fn slot(&self, node: u32) -> Option<usize> {
        match &self.nodes {
            None => Some(node as usize).filter(|&s| s + 1 < self.offsets.len()),
            Some(ns) => ns.binary_search(&node).ok(),
        }
    }

    #[inline]
    pub fn range(&self, node: u32) -> std::ops::Range<usize> {
        match self.slot(node) {
            Some(s) => self.offsets[s] as usize..self.offsets[s + 1] as usize,
            None => 0..0,
        }
    }

    #[inline]
    pub fn neighbors(&self, node: u32) -> &[u32] {
        &self.targets[self.range(node)]
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn node_at(&self, slot: usize) -> u32 {
        match &self.nodes {
            None => slot as u32,
            Some(ns) => ns[slot],
        }
    }

    pub fn heap_bytes(&self) -> usize {
        4 * (self.nodes.as_ref().map_or(0, Vec::len) + self.offsets.len() + self.targets.len())
    }

    /// Structural checks used after decoding untrusted bytes.
    pub fn check(&self, node_count: usize) -> Result<()> {
        if self.offsets.first() != Some(&0) {
            return Err(format("layer offsets must start at zero"));
        }
        if self.offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(format("layer offsets must be non-decreasing"));
        }
        if *self.offsets.last().unwrap() as usize != self.targets.len() {
            return Err(format("layer offsets do not cover the target array"));
        }
        if let Some(ns) = &self.nodes {
            if ns.len() + 1 != self.offsets.len() {
                return Err(format("layer node list and offsets disagree"));
            }
            if ns.windows(2).any(|w| w[0] >= w[1]) {
                return Err(format("layer node list must be strictly increasing"));
            }
            if ns.iter().any(|&v| v as usize >= node_count) {
                return Err(format("layer node id out of range"));
            }
        } else if self.offsets.len() != node_count + 1 {
            return Err(format("base layer must list every node"));
        }
        if self.targets.iter().any(|&t| t as usize >= node_count) {
            return Err(format("edge target out of range"));
        }
        Ok(())
    }
}
