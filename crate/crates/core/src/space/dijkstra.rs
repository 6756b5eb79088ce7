//! Batched shortest-path distance fields over the CSR adjacency.

use super::{NodeId, SpaceModel};
use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[derive(Copy, Clone, PartialEq)]
struct HeapEntry {
    cost: f64,
    node: u32,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed for a min-heap; costs are never NaN
        other.cost.partial_cmp(&self.cost).unwrap_or(Ordering::Equal)
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Which per-edge weight drives the search.
#[derive(Clone, Copy)]
pub enum EdgeWeights<'a> {
    /// geometric edge lengths (the original metric d)
    Length,
    /// custom weight per undirected edge, indexed like `SpaceModel::edges`
    Custom(&'a [f64]),
}

#[derive(Debug, Clone)]
pub struct DistanceField {
    pub dist: Vec<f64>,
    /// `parent[v]` = u32::MAX for sources/unreached
    pub parent: Vec<u32>,
}

impl DistanceField {
    pub fn path_to(&self, target: NodeId) -> Vec<NodeId> {
        let mut path = vec![target];
        let mut v = target;
        while self.parent[v] != u32::MAX {
            v = self.parent[v] as usize;
            path.push(v);
        }
        path.reverse();
        path
    }
}

/// Dijkstra from (possibly virtual) sources given as (node, initial cost).
pub fn dijkstra(model: &SpaceModel, weights: EdgeWeights, sources: &[(NodeId, f64)]) -> DistanceField {
    let n = model.node_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut parent = vec![u32::MAX; n];
    let mut heap = BinaryHeap::with_capacity(n / 4 + sources.len());
    for &(s, d0) in sources {
        if d0 < dist[s] {
            dist[s] = d0;
            heap.push(HeapEntry { cost: d0, node: s as u32 });
        }
    }
    while let Some(HeapEntry { cost, node }) = heap.pop() {
        let v = node as usize;
        if cost > dist[v] {
            continue;
        }
        let lo = model.adj_offsets[v] as usize;
        let hi = model.adj_offsets[v + 1] as usize;
        for i in lo..hi {
            let w = model.adj_targets[i] as usize;
            let step = match weights {
                EdgeWeights::Length => model.adj_lengths[i],
                EdgeWeights::Custom(ws) => ws[model.adj_edge_ix[i] as usize],
            };
            let next = cost + step;
            if next < dist[w] {
                dist[w] = next;
                parent[w] = node;
                heap.push(HeapEntry { cost: next, node: w as u32 });
            }
        }
    }
    DistanceField { dist, parent }
}

/// Single-source field in the original metric; errors if any requested
/// target is unreachable.
pub fn graph_distance(model: &SpaceModel, source: NodeId, targets: &[NodeId]) -> Result<Vec<f64>> {
    let field = dijkstra(model, EdgeWeights::Length, &[(source, 0.0)]);
    let mut out = Vec::with_capacity(targets.len());
    for &t in targets {
        let d = field.dist[t];
        if !d.is_finite() {
            return Err(Error::Unreachable(format!("node {t} unreachable from {source}")));
        }
        out.push(d);
    }
    Ok(out)
}
