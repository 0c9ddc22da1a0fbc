//! Layered traversals shared by every HNSW-shaped graph.

use super::graph::{beam, expand_all, expand_induced, Cand, GraphView, VisitedList};

/// Greedy unfiltered descent from the entry point down to layer 1.
/// Returns the closest node found, the seed for layer 0.
pub(crate) fn descend<G: GraphView>(g: &G, q: &[f32], visited: &mut VisitedList) -> Option<Cand> {
    let (ep, top) = g.entry()?;
    let mut cur = Cand {
        dist: g.distance(q, ep),
        node: ep,
    };
    for layer in (1..=top).rev() {
        cur = beam(g, q, &[cur], 1, layer, visited, expand_all, |_| true)[0];
    }
    Some(cur)
}

pub(crate) fn knn_unfiltered<G: GraphView>(g: &G, q: &[f32], ef: usize, visited: &mut VisitedList) -> Vec<Cand> {
    let Some(seed) = descend(g, q, visited) else {
        return Vec::new();
    };
    beam(g, q, &[seed], ef, 0, visited, expand_all, |_| true)
}

/// Visits vertices regardless of the filter; only matching ones enter the
/// result set.
pub(crate) fn knn_visit_all<G, P>(g: &G, q: &[f32], ef: usize, visited: &mut VisitedList, matches: &P) -> Vec<Cand>
where
    G: GraphView,
    P: Fn(u32) -> bool,
{
    let Some(seed) = descend(g, q, visited) else {
        return Vec::new();
    };
    beam(g, q, &[seed], ef, 0, visited, expand_all, matches)
}

/// Traverses the subgraph induced by matching vertices, with two-hop
/// supplementation below `min_degree` surviving neighbors.
///
/// A matching entry point is used directly on every layer. Otherwise the
/// search descends unfiltered and seeds layer 0 with the nearest matching
/// vertex reachable from the descent point.
pub(crate) fn knn_induced<G, P>(
    g: &G,
    q: &[f32],
    ef: usize,
    visited: &mut VisitedList,
    matches: &P,
    min_degree: usize,
) -> Vec<Cand>
where
    G: GraphView,
    P: Fn(u32) -> bool,
{
    let Some((ep, top)) = g.entry() else {
        return Vec::new();
    };
    let induced =
        |g: &G, node: u32, layer: usize, out: &mut Vec<u32>| expand_induced(g, node, layer, out, matches, min_degree);
    let seed = if matches(ep) {
        let mut cur = Cand {
            dist: g.distance(q, ep),
            node: ep,
        };
        for layer in (1..=top).rev() {
            cur = beam(g, q, &[cur], 1, layer, visited, induced, matches)[0];
        }
        cur
    } else {
        let Some(start) = descend(g, q, visited) else {
            return Vec::new();
        };
        match beam(g, q, &[start], 1, 0, visited, expand_all, matches).first() {
            Some(&c) => c,
            None => return Vec::new(),
        }
    };
    beam(g, q, &[seed], ef, 0, visited, induced, matches)
}
