//! Immutable weighted digraph with forward and reverse CSR adjacency.
//!
//! Nodes are dense ids `0..n`. Reverse adjacency is what RR-set sampling
//! walks; forward adjacency backs the cascade simulator and the binary
//! format. Both directions are sorted by neighbor id, so a graph built from
//! the same edge multiset always has the same memory layout.

mod binary;
mod text;

pub use binary::{read_binary, write_binary, BINARY_MAGIC, BINARY_VERSION};
pub use text::{load_edge_list, write_edge_list, LoadOptions};

use crate::error::{Error, Result};

pub type NodeId = u32;

/// Slack allowed on `sum_u w(u, v) <= 1` for LT use.
pub const LT_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, Default, PartialEq)]
pub(crate) struct Csr {
    pub(crate) offsets: Vec<u64>,
    pub(crate) targets: Vec<NodeId>,
    pub(crate) weights: Vec<f64>,
}

impl Csr {
    fn range(&self, v: usize) -> std::ops::Range<usize> {
        self.offsets[v] as usize..self.offsets[v + 1] as usize
    }

    /// Transpose: entry `(u -> v, w)` becomes `(v -> u, w)`.
    fn transpose(&self, n: usize) -> Csr {
        let m = self.targets.len();
        let mut counts = vec![0u64; n + 1];
        for &t in &self.targets {
            counts[t as usize + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let offsets = counts.clone();
        let mut cursor = counts;
        let mut targets = vec![0; m];
        let mut weights = vec![0.0; m];
        for u in 0..n {
            for i in self.range(u) {
                let v = self.targets[i] as usize;
                let slot = cursor[v] as usize;
                targets[slot] = u as NodeId;
                weights[slot] = self.weights[i];
                cursor[v] += 1;
            }
        }
        Csr {
            offsets,
            targets,
            weights,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    n: usize,
    fwd: Csr,
    rev: Csr,
    in_weight_sum: Vec<f64>,
}

impl Graph {
    /// Builds a graph from `(source, target, weight)` triples.
    ///
    /// Self-loops are dropped and parallel edges are merged by summing their
    /// weights (clamped to 1).
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Graph>
    where
        I: IntoIterator<Item = (NodeId, NodeId, f64)>,
    {
        let mut builder = GraphBuilder::new(n);
        for (u, v, w) in edges {
            builder.add_edge(u, v, w)?;
        }
        Ok(builder.build())
    }

    pub(crate) fn from_forward(n: usize, fwd: Csr) -> Graph {
        let rev = fwd.transpose(n);
        let in_weight_sum = (0..n)
            .map(|v| rev.weights[rev.range(v)].iter().sum())
            .collect();
        Graph {
            n,
            fwd,
            rev,
            in_weight_sum,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.fwd.targets.len()
    }

    /// Out-neighbors of `u` and the matching edge weights.
    pub fn out_edges(&self, u: NodeId) -> (&[NodeId], &[f64]) {
        let r = self.fwd.range(u as usize);
        (&self.fwd.targets[r.clone()], &self.fwd.weights[r])
    }

    /// In-neighbors of `v` and the matching edge weights.
    pub fn in_edges(&self, v: NodeId) -> (&[NodeId], &[f64]) {
        let r = self.rev.range(v as usize);
        (&self.rev.targets[r.clone()], &self.rev.weights[r])
    }

    pub fn in_degree(&self, v: NodeId) -> usize {
        self.rev.range(v as usize).len()
    }

    pub fn out_degree(&self, u: NodeId) -> usize {
        self.fwd.range(u as usize).len()
    }

    pub fn in_weight_sum(&self, v: NodeId) -> f64 {
        self.in_weight_sum[v as usize]
    }

    /// All edges in forward order: by source, then target.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, f64)> + '_ {
        (0..self.n).flat_map(move |u| {
            self.fwd
                .range(u)
                .map(move |i| (u as NodeId, self.fwd.targets[i], self.fwd.weights[i]))
        })
    }

    /// Edges as recorded in the reverse adjacency, reported as `(u, v, w)`.
    pub fn reverse_edges(&self) -> impl Iterator<Item = (NodeId, NodeId, f64)> + '_ {
        (0..self.n).flat_map(move |v| {
            self.rev
                .range(v)
                .map(move |i| (self.rev.targets[i], v as NodeId, self.rev.weights[i]))
        })
    }

    pub fn is_lt_valid(&self) -> bool {
        self.check_lt().is_ok()
    }

    /// Checks the LT constraint `sum_u w(u, v) <= 1` at every node.
    pub fn check_lt(&self) -> Result<()> {
        for (v, &s) in self.in_weight_sum.iter().enumerate() {
            if s > 1.0 + LT_TOLERANCE {
                return Err(Error::Model(format!(
                    "in-weights of node {v} sum to {s}, more than 1"
                )));
            }
        }
        Ok(())
    }

    /// Reweights every edge `(u, v)` to `1 / d_in(v)`.
    ///
    /// `d_in` counts distinct in-neighbors (parallel edges are already
    /// merged). If `d_in` copies of the rounded reciprocal would sum past 1
    /// the weight is nudged down one ulp, so the LT check needs no slack.
    pub fn auto_weight(mut self) -> Graph {
        let mut per_node = vec![0.0; self.n];
        for (v, slot) in per_node.iter_mut().enumerate() {
            let d = self.in_degree(v as NodeId);
            if d == 0 {
                continue;
            }
            let mut w = 1.0 / d as f64;
            while (0..d).fold(0.0, |acc, _| acc + w) > 1.0 {
                w = f64::from_bits(w.to_bits() - 1);
            }
            *slot = w;
        }
        for u in 0..self.n {
            for i in self.fwd.range(u) {
                self.fwd.weights[i] = per_node[self.fwd.targets[i] as usize];
            }
        }
        for v in 0..self.n {
            let r = self.rev.range(v);
            let w = per_node[v];
            self.rev.weights[r.clone()].fill(w);
            self.in_weight_sum[v] = self.rev.weights[r].iter().sum();
        }
        self
    }
}

/// Accumulates raw edges, then produces a [`Graph`].
#[derive(Debug)]
pub struct GraphBuilder {
    n: usize,
    edges: Vec<(NodeId, NodeId, f64)>,
    self_loops: usize,
}

impl GraphBuilder {
    pub fn new(n: usize) -> Self {
        GraphBuilder {
            n,
            edges: Vec::new(),
            self_loops: 0,
        }
    }

    pub fn add_edge(&mut self, u: NodeId, v: NodeId, w: f64) -> Result<()> {
        for id in [u, v] {
            if id as usize >= self.n {
                return Err(Error::OutOfRange {
                    id: id as u64,
                    n: self.n,
                });
            }
        }
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::arg(format!("edge weight {w} outside [0, 1]")));
        }
        if u == v {
            self.self_loops += 1;
        } else {
            self.edges.push((u, v, w));
        }
        Ok(())
    }

    pub fn self_loops_dropped(&self) -> usize {
        self.self_loops
    }

    pub fn build(mut self) -> Graph {
        if self.self_loops > 0 {
            log::warn!("dropped {} self-loop(s)", self.self_loops);
        }
        self.edges.sort_unstable_by_key(|&(u, v, _)| (u, v));
        let mut merged: Vec<(NodeId, NodeId, f64)> = Vec::with_capacity(self.edges.len());
        let mut parallel = 0usize;
        for (u, v, w) in self.edges {
            match merged.last_mut() {
                Some(last) if last.0 == u && last.1 == v => {
                    last.2 += w;
                    parallel += 1;
                }
                _ => merged.push((u, v, w)),
            }
        }
        if parallel > 0 {
            log::warn!("merged {parallel} parallel edge(s)");
        }

        let mut offsets = vec![0u64; self.n + 1];
        for &(u, _, _) in &merged {
            offsets[u as usize + 1] += 1;
        }
        for i in 0..self.n {
            offsets[i + 1] += offsets[i];
        }
        let fwd = Csr {
            offsets,
            targets: merged.iter().map(|e| e.1).collect(),
            weights: merged.iter().map(|e| e.2.min(1.0)).collect(),
        };
        Graph::from_forward(self.n, fwd)
    }
}
