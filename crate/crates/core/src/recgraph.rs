//! Directed recommendation graph: an edge A→B means B was listed while A played.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{SessionLog, VideoId, VideoMeta};
use crate::error::{AuditError, Result};

pub const DEFAULT_DECAY: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecGraph {
    ids: Vec<VideoId>,
    meta: Vec<Option<VideoMeta>>,
    index: HashMap<VideoId, usize>,
    edges: Vec<Edge>,
    weights: Option<Vec<f64>>,
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
}

impl RecGraph {
    /// Assembles a graph from explicit parts. Rejects self-loops, parallel
    /// edges and out-of-range endpoints.
    pub fn from_parts(
        ids: Vec<VideoId>,
        meta: Vec<Option<VideoMeta>>,
        edges: Vec<Edge>,
        weights: Option<Vec<f64>>,
    ) -> Result<Self> {
        if meta.len() != ids.len() {
            return Err(AuditError::integrity(
                "metadata length differs from node count",
            ));
        }
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(AuditError::integrity(format!("duplicate node {id}")));
            }
        }
        if let Some(w) = &weights {
            if w.len() != edges.len() {
                return Err(AuditError::integrity(
                    "weight count differs from edge count",
                ));
            }
            if let Some(bad) = w
                .iter()
                .find(|w| !(w.is_finite() && **w > 0.0 && **w <= 1.0))
            {
                return Err(AuditError::integrity(format!(
                    "edge weight {bad} outside (0, 1]"
                )));
            }
        }
        let n = ids.len();
        let mut seen = std::collections::HashSet::with_capacity(edges.len());
        for e in &edges {
            if e.src >= n || e.dst >= n {
                return Err(AuditError::integrity("edge endpoint out of range"));
            }
            if e.src == e.dst {
                return Err(AuditError::integrity(format!(
                    "self-loop on {}",
                    ids[e.src]
                )));
            }
            if !seen.insert((e.src, e.dst)) {
                return Err(AuditError::integrity(format!(
                    "parallel edge {} -> {}",
                    ids[e.src], ids[e.dst]
                )));
            }
        }
        let (out_edges, in_edges) = adjacency(n, &edges);
        Ok(RecGraph {
            ids,
            meta,
            index,
            edges,
            weights,
            out_edges,
            in_edges,
        })
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn ids(&self) -> &[VideoId] {
        &self.ids
    }

    pub fn id(&self, node: usize) -> &VideoId {
        &self.ids[node]
    }

    pub fn node_index(&self, id: &VideoId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn meta(&self, node: usize) -> Option<&VideoMeta> {
        self.meta[node].as_ref()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn is_weighted(&self) -> bool {
        self.weights.is_some()
    }

    /// Edge indices leaving `node`, in rank order for graphs built from logs.
    pub fn out_edges(&self, node: usize) -> &[usize] {
        &self.out_edges[node]
    }

    pub fn in_edges(&self, node: usize) -> &[usize] {
        &self.in_edges[node]
    }

    pub fn out_degree(&self, node: usize) -> usize {
        self.out_edges[node].len()
    }

    pub fn in_degree(&self, node: usize) -> usize {
        self.in_edges[node].len()
    }

    /// Weight of edge `e`, or 1 when `weighted` is false.
    pub fn edge_value(&self, e: usize, weighted: bool) -> Result<f64> {
        if !weighted {
            return Ok(1.0);
        }
        self.weights
            .as_ref()
            .map(|w| w[e])
            .ok_or_else(|| AuditError::parameter("edge weights have not been assigned"))
    }

    /// Geometric rank weights: the rank-j edge of a source with out-degree n
    /// gets (1−r)/(1−rⁿ)·rʲ.
    pub fn assign_weights(&self, r: f64) -> Result<RecGraph> {
        if !(r > 0.0 && r < 1.0) {
            return Err(AuditError::parameter(format!(
                "decay r must lie in (0, 1), got {r}"
            )));
        }
        let mut weights = vec![0.0; self.edges.len()];
        for node in 0..self.node_count() {
            let out = &self.out_edges[node];
            if out.is_empty() {
                continue;
            }
            let mut ranks: Vec<usize> = out.iter().map(|&e| self.edges[e].rank).collect();
            ranks.sort_unstable();
            if ranks.iter().enumerate().any(|(i, &rk)| i != rk) {
                return Err(AuditError::integrity(format!(
                    "ranks out of {} are not contiguous from 0",
                    self.ids[node]
                )));
            }
            let series = geometric_weights(out.len(), r);
            for &e in out {
                weights[e] = series[self.edges[e].rank];
            }
        }
        Ok(RecGraph {
            weights: Some(weights),
            ..self.clone()
        })
    }
}

fn adjacency(n: usize, edges: &[Edge]) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
    let mut out_edges = vec![Vec::new(); n];
    let mut in_edges = vec![Vec::new(); n];
    for (i, e) in edges.iter().enumerate() {
        out_edges[e.src].push(i);
        in_edges[e.dst].push(i);
    }
    for list in &mut out_edges {
        list.sort_by_key(|&i| edges[i].rank);
    }
    (out_edges, in_edges)
}

/// The n weights (1−r)/(1−rⁿ)·rʲ for j = 0..n.
pub fn geometric_weights(n: usize, r: f64) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    let scale = (1.0 - r) / (1.0 - r.powi(n as i32));
    (0..n).map(|j| scale * r.powi(j as i32)).collect()
}

/// One node per distinct video (first-seen order), one edge per
/// (watched, recommended) pair carrying the observed rank. Self-loops are
/// dropped; a repeated pair keeps its lowest rank.
pub fn build_graph(log: &SessionLog) -> RecGraph {
    let mut ids: Vec<VideoId> = Vec::new();
    let mut index: HashMap<VideoId, usize> = HashMap::new();
    let mut intern = |id: &VideoId, ids: &mut Vec<VideoId>| -> usize {
        *index.entry(id.clone()).or_insert_with(|| {
            ids.push(id.clone());
            ids.len() - 1
        })
    };

    let mut edges: Vec<Edge> = Vec::new();
    let mut pair_slot: HashMap<(usize, usize), usize> = HashMap::new();
    for event in &log.events {
        let src = intern(&event.watched, &mut ids);
        for (rank, rec) in event.recommendations.iter().enumerate() {
            let dst = intern(rec, &mut ids);
            if dst == src {
                continue;
            }
            match pair_slot.get(&(src, dst)) {
                Some(&slot) => {
                    if rank < edges[slot].rank {
                        edges[slot].rank = rank;
                    }
                }
                None => {
                    pair_slot.insert((src, dst), edges.len());
                    edges.push(Edge { src, dst, rank });
                }
            }
        }
    }
    let meta = ids.iter().map(|id| log.metadata.get(id).cloned()).collect();
    RecGraph::from_parts(ids, meta, edges, None).expect("build_graph produces a well-formed graph")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathMode {
    #[default]
    Directed,
    Undirected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub node_count: usize,
    pub edge_count: usize,
    pub avg_degree: f64,
    pub avg_path_length: f64,
    pub diameter: usize,
}

/// Mean out-degree |E|/|V|; zero for an empty graph.
pub fn average_degree(nodes: usize, edges: usize) -> f64 {
    if nodes == 0 {
        0.0
    } else {
        edges as f64 / nodes as f64
    }
}

/// Counts, |E|/|V|, and hop-count path statistics over the largest weakly
/// connected component. Unreachable pairs are skipped.
pub fn graph_stats(g: &RecGraph, mode: PathMode) -> Result<GraphStats> {
    let n = g.node_count();
    if n == 0 {
        return Err(AuditError::parameter(
            "graph statistics need a non-empty graph",
        ));
    }
    let component = largest_weak_component(g);
    let neighbors: Vec<Vec<usize>> = (0..n)
        .map(|v| {
            let mut nb: Vec<usize> = g.out_edges(v).iter().map(|&e| g.edges[e].dst).collect();
            if mode == PathMode::Undirected {
                nb.extend(g.in_edges(v).iter().map(|&e| g.edges[e].src));
                nb.sort_unstable();
                nb.dedup();
            }
            nb
        })
        .collect();

    let (total, pairs, diameter) = component
        .par_iter()
        .map_init(
            || (vec![usize::MAX; n], Vec::with_capacity(n)),
            |(dist, queue), &source| bfs_sum(&neighbors, source, dist, queue),
        )
        .reduce(
            || (0u64, 0u64, 0usize),
            |a, b| (a.0 + b.0, a.1 + b.1, a.2.max(b.2)),
        );

    Ok(GraphStats {
        node_count: n,
        edge_count: g.edge_count(),
        avg_degree: average_degree(n, g.edge_count()),
        avg_path_length: if pairs == 0 {
            0.0
        } else {
            total as f64 / pairs as f64
        },
        diameter,
    })
}

fn bfs_sum(
    neighbors: &[Vec<usize>],
    source: usize,
    dist: &mut [usize],
    queue: &mut Vec<usize>,
) -> (u64, u64, usize) {
    queue.clear();
    queue.push(source);
    dist[source] = 0;
    let mut head = 0;
    let (mut total, mut pairs, mut far) = (0u64, 0u64, 0usize);
    while head < queue.len() {
        let v = queue[head];
        head += 1;
        let d = dist[v];
        for &w in &neighbors[v] {
            if dist[w] == usize::MAX {
                dist[w] = d + 1;
                total += (d + 1) as u64;
                pairs += 1;
                far = far.max(d + 1);
                queue.push(w);
            }
        }
    }
    for &v in queue.iter() {
        dist[v] = usize::MAX;
    }
    (total, pairs, far)
}

/// Nodes of the largest weakly connected component, ascending. Ties go to
/// the component holding the lowest node index.
pub fn largest_weak_component(g: &RecGraph) -> Vec<usize> {
    let n = g.node_count();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for e in g.edges() {
        let (a, b) = (find(&mut parent, e.src), find(&mut parent, e.dst));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let roots: Vec<usize> = (0..n).map(|v| find(&mut parent, v)).collect();
    let mut sizes = vec![0usize; n];
    for &r in &roots {
        sizes[r] += 1;
    }
    let best = (0..n)
        .filter(|&v| sizes[v] > 0)
        .max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a)));
    match best {
        Some(root) => (0..n).filter(|&v| roots[v] == root).collect(),
        None => Vec::new(),
    }
}
