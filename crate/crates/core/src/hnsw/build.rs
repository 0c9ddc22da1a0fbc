//! Incremental HNSW construction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::graph::{beam, expand_all, Cand, GraphLayer, GraphView, VisitedList};
use super::{HnswParams, NodeVectors};
use crate::distance::l2;

/// Highest level a node may be assigned.
pub(crate) const MAX_LEVEL: usize = 31;

/// Observer of adjacency changes during construction.
pub(crate) trait EdgeLog {
    fn node_added(&mut self, _node: u32, _level: usize) {}
    fn edge_added(&mut self, _from: u32, _layer: usize, _to: u32, _dist: f64) {}
    fn edge_removed(&mut self, _from: u32, _layer: usize, _to: u32) {}
    fn entry_changed(&mut self, _node: u32, _level: usize) {}
}

impl EdgeLog for () {}

/// Adjacency entry: distance to the list owner, then target node.
pub(crate) type Link = (f64, u32);

fn link_order(a: &Link, b: &Link) -> std::cmp::Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

pub(crate) struct Builder<'a, L: EdgeLog> {
    params: HnswParams,
    store: &'a NodeVectors,
    rng: ChaCha8Rng,
    level_scale: f64,
    levels: Vec<u8>,
    /// `links[node][layer]`, always sorted by `(distance, target)`.
    links: Vec<Vec<Vec<Link>>>,
    entry: Option<u32>,
    top: usize,
    visited: VisitedList,
    pub log: L,
}

impl<L: EdgeLog> GraphView for Builder<'_, L> {
    fn node_count(&self) -> usize {
        self.links.len()
    }

    fn entry(&self) -> Option<(u32, usize)> {
        self.entry.map(|e| (e, self.top))
    }

    fn neighbors(&self, node: u32, layer: usize) -> impl Iterator<Item = u32> + '_ {
        self.links[node as usize].get(layer).into_iter().flatten().map(|l| l.1)
    }

    fn distance(&self, q: &[f32], node: u32) -> f64 {
        l2(q, self.store.row(node))
    }
}

impl<'a, L: EdgeLog> Builder<'a, L> {
    pub fn new(params: HnswParams, store: &'a NodeVectors, log: L) -> Self {
        Self {
            params,
            store,
            rng: ChaCha8Rng::seed_from_u64(params.seed),
            level_scale: 1.0 / (params.m as f64).ln(),
            levels: Vec::with_capacity(store.len()),
            links: Vec::with_capacity(store.len()),
            entry: None,
            top: 0,
            visited: VisitedList::default(),
            log,
        }
    }

    fn draw_level(&mut self) -> usize {
        let u: f64 = self.rng.random();
        let r = -(1.0 - u).ln() * self.level_scale;
        (r.floor() as usize).min(MAX_LEVEL)
    }

    /// Inserts the next node (`node` must equal the number inserted so far).
    pub fn insert_next(&mut self) {
        let node = self.links.len() as u32;
        let level = self.draw_level();
        self.levels.push(level as u8);
        self.links.push(vec![Vec::new(); level + 1]);
        self.log.node_added(node, level);

        let Some(ep) = self.entry else {
            self.entry = Some(node);
            self.top = level;
            self.log.entry_changed(node, level);
            return;
        };

        let store = self.store;
        let q = store.row(node);
        let mut visited = std::mem::take(&mut self.visited);
        let mut cur = Cand {
            dist: l2(q, store.row(ep)),
            node: ep,
        };
        for layer in (level + 1..=self.top).rev() {
            cur = beam(&*self, q, &[cur], 1, layer, &mut visited, expand_all, |_| true)[0];
        }
        let mut seeds = vec![cur];
        for layer in (0..=level.min(self.top)).rev() {
            let found = beam(
                &*self,
                q,
                &seeds,
                self.params.ef_construction,
                layer,
                &mut visited,
                expand_all,
                |v| v != node,
            );
            let pool: Vec<Link> = found.iter().map(|c| (c.dist, c.node)).collect();
            let selected = self.select(&pool, self.params.select_count(layer));
            self.set_links(node, layer, selected.clone());
            for &(d, target) in &selected {
                self.add_reverse(target, layer, node, d);
            }
            seeds = found;
        }
        self.visited = visited;

        if level > self.top {
            self.entry = Some(node);
            self.top = level;
            self.log.entry_changed(node, level);
        }
    }

    /// Neighbor-selection heuristic over a pool sorted by distance to the
    /// base node: keep a candidate only if it is closer to the base than to
    /// every neighbor kept so far. Densified graphs (`gamma > 1`) then fill
    /// the remaining slots with the nearest discarded candidates.
    fn select(&self, pool: &[Link], count: usize) -> Vec<Link> {
        let mut kept: Vec<Link> = Vec::with_capacity(count);
        let mut discarded = Vec::new();
        for &(d, c) in pool {
            if kept.len() >= count {
                break;
            }
            let vc = self.store.row(c);
            if kept.iter().all(|&(_, r)| l2(vc, self.store.row(r)) > d) {
                kept.push((d, c));
            } else {
                discarded.push((d, c));
            }
        }
        if self.params.gamma > 1 && kept.len() < count && !discarded.is_empty() {
            let room = count - kept.len();
            kept.extend(discarded.into_iter().take(room));
            kept.sort_by(link_order);
        }
        kept
    }

    fn add_reverse(&mut self, owner: u32, layer: usize, node: u32, d: f64) {
        let mut list = self.links[owner as usize][layer].clone();
        let link = (d, node);
        let at = list.partition_point(|l| link_order(l, &link).is_lt());
        list.insert(at, link);
        let cap = self.params.cap(layer);
        let next = if list.len() <= cap {
            list
        } else {
            self.select(&list, cap)
        };
        self.set_links(owner, layer, next);
    }

    fn set_links(&mut self, owner: u32, layer: usize, next: Vec<Link>) {
        let old = std::mem::take(&mut self.links[owner as usize][layer]);
        for &(_, t) in &old {
            if !next.iter().any(|l| l.1 == t) {
                self.log.edge_removed(owner, layer, t);
            }
        }
        for &(d, t) in &next {
            if !old.iter().any(|l| l.1 == t) {
                self.log.edge_added(owner, layer, t, d);
            }
        }
        self.links[owner as usize][layer] = next;
    }

    pub fn finish(self) -> Frozen<L> {
        let top = self.levels.iter().copied().max().unwrap_or(0) as usize;
        let mut layers = Vec::with_capacity(top + 1);
        for layer in 0..=top {
            let mut nodes = Vec::new();
            let mut offsets = vec![0u32];
            let mut targets = Vec::new();
            for (node, lists) in self.links.iter().enumerate() {
                if let Some(list) = lists.get(layer) {
                    nodes.push(node as u32);
                    targets.extend(list.iter().map(|l| l.1));
                    offsets.push(targets.len() as u32);
                }
            }
            layers.push(GraphLayer {
                nodes: (layer > 0).then_some(nodes),
                offsets,
                targets,
            });
        }
        Frozen {
            levels: self.levels,
            layers,
            entry: self.entry.unwrap_or(0),
            log: self.log,
        }
    }
}

pub(crate) struct Frozen<L> {
    pub levels: Vec<u8>,
    pub layers: Vec<GraphLayer>,
    pub entry: u32,
    pub log: L,
}
