//! Random reverse-reachable (RR) sets under IC and LT.
//!
//! Every RR set in a run is drawn from its own ChaCha8 stream keyed by
//! `(seed, channel, index)`. The content of sample `i` therefore does not
//! depend on how many threads produced the stream or in which order, and a
//! sampler may stop a walk early (see [`Sampler::covers`]) without shifting
//! any later draw.

use std::fmt;
use std::str::FromStr;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    IC,
    LT,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::IC => "ic",
            Model::LT => "lt",
        })
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ic" => Ok(Model::IC),
            "lt" => Ok(Model::LT),
            other => Err(Error::arg(format!("unknown model {other:?}"))),
        }
    }
}

/// Bits of the stream id reserved for the per-channel sample index.
const INDEX_BITS: u32 = 40;

/// A reproducible random stream identified by `(seed, stream id)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        RngStream { seed, stream }
    }

    /// Stream of sample `index` on `channel`.
    pub fn for_sample(seed: u64, channel: u32, index: u64) -> Self {
        assert!(
            index < 1 << INDEX_BITS,
            "sample index {index} overflows stream id"
        );
        assert!(
            channel < 1 << (64 - INDEX_BITS),
            "channel {channel} too large"
        );
        RngStream::new(seed, ((channel as u64) << INDEX_BITS) | index)
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// One reverse-reachable sample. `nodes[0]` is always the root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RRSet {
    pub root: NodeId,
    pub nodes: Vec<NodeId>,
}

impl RRSet {
    pub fn contains(&self, v: NodeId) -> bool {
        self.nodes.contains(&v)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

pub fn sample_root_uniform<R: Rng + ?Sized>(n: usize, rng: &mut R) -> NodeId {
    debug_assert!(n >= 1);
    rng.gen_range(0..n) as NodeId
}

/// Prefix-sum table for drawing roots proportionally to node weights.
#[derive(Clone, Debug)]
pub struct WeightedRoots {
    table: WeightedIndex<f64>,
    total: f64,
    len: usize,
}

impl WeightedRoots {
    pub fn new(weights: &[f64]) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::arg("root weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::arg("root weights sum to zero"));
        }
        let table = WeightedIndex::new(weights).map_err(|e| Error::arg(e.to_string()))?;
        Ok(WeightedRoots {
            table,
            total,
            len: weights.len(),
        })
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

pub fn sample_root_weighted<R: Rng + ?Sized>(roots: &WeightedRoots, rng: &mut R) -> NodeId {
    roots.table.sample(rng) as NodeId
}

/// Root distribution of an RR-set stream.
#[derive(Clone, Debug)]
pub enum RootDistribution {
    Uniform,
    Weighted(WeightedRoots),
}

/// Reusable per-thread sampling state. Visited marks are epoch-stamped so
/// nothing is cleared between samples.
#[derive(Debug)]
pub struct Sampler<'g> {
    graph: &'g Graph,
    model: Model,
    marks: Vec<u32>,
    epoch: u32,
    queue: Vec<NodeId>,
}

impl<'g> Sampler<'g> {
    pub fn new(graph: &'g Graph, model: Model) -> Result<Self> {
        if model == Model::LT {
            graph.check_lt()?;
        }
        Ok(Sampler {
            graph,
            model,
            marks: vec![0; graph.n()],
            epoch: 0,
            queue: Vec::new(),
        })
    }

    pub fn model(&self) -> Model {
        self.model
    }

    fn next_epoch(&mut self) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.marks.fill(0);
            self.epoch = 1;
        }
    }

    /// Returns true when `v` is newly visited.
    #[inline]
    fn visit(&mut self, v: NodeId) -> bool {
        let slot = &mut self.marks[v as usize];
        if *slot == self.epoch {
            false
        } else {
            *slot = self.epoch;
            true
        }
    }

    /// Reverse walk from `root`. `on_visit` sees every node as it joins the
    /// set (root first) and may return `true` to stop the walk early.
    fn walk<R, F>(&mut self, root: NodeId, rng: &mut R, mut on_visit: F) -> bool
    where
        R: Rng + ?Sized,
        F: FnMut(NodeId, Option<NodeId>) -> bool,
    {
        self.next_epoch();
        self.visit(root);
        if on_visit(root, None) {
            return true;
        }
        let graph = self.graph;
        match self.model {
            Model::IC => {
                self.queue.clear();
                self.queue.push(root);
                let mut head = 0;
                while head < self.queue.len() {
                    let v = self.queue[head];
                    head += 1;
                    let (srcs, ws) = graph.in_edges(v);
                    for (&u, &w) in srcs.iter().zip(ws) {
                        if self.marks[u as usize] == self.epoch {
                            continue;
                        }
                        if rng.gen::<f64>() < w {
                            self.visit(u);
                            if on_visit(u, Some(v)) {
                                return true;
                            }
                            self.queue.push(u);
                        }
                    }
                }
            }
            Model::LT => {
                let mut v = root;
                loop {
                    let (srcs, ws) = graph.in_edges(v);
                    if srcs.is_empty() {
                        break;
                    }
                    let r = rng.gen::<f64>();
                    let mut acc = 0.0;
                    let mut pick = None;
                    for (&u, &w) in srcs.iter().zip(ws) {
                        acc += w;
                        if r < acc {
                            pick = Some(u);
                            break;
                        }
                    }
                    let Some(u) = pick else { break };
                    if !self.visit(u) {
                        break;
                    }
                    if on_visit(u, Some(v)) {
                        return true;
                    }
                    v = u;
                }
            }
        }
        false
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, root: NodeId, rng: &mut R) -> RRSet {
        let mut nodes = Vec::new();
        self.walk(root, rng, |u, _| {
            nodes.push(u);
            false
        });
        RRSet { root, nodes }
    }

    /// Like [`Sampler::sample`], also returning the live edges `(u, v)` that
    /// brought each non-root node into the set.
    pub fn sample_traced<R: Rng + ?Sized>(
        &mut self,
        root: NodeId,
        rng: &mut R,
    ) -> (RRSet, Vec<(NodeId, NodeId)>) {
        let mut nodes = Vec::new();
        let mut live = Vec::new();
        self.walk(root, rng, |u, via| {
            nodes.push(u);
            if let Some(v) = via {
                live.push((u, v));
            }
            false
        });
        (RRSet { root, nodes }, live)
    }

    /// Whether the RR set rooted at `root` intersects `is_seed`. Stops
    /// walking at the first seed found.
    pub fn covers<R: Rng + ?Sized>(&mut self, root: NodeId, is_seed: &[bool], rng: &mut R) -> bool {
        self.walk(root, rng, |u, _| is_seed[u as usize])
    }
}

pub fn sample_rr_ic<R: Rng + ?Sized>(graph: &Graph, root: NodeId, rng: &mut R) -> RRSet {
    Sampler::new(graph, Model::IC)
        .expect("IC accepts any graph")
        .sample(root, rng)
}

pub fn sample_rr_lt<R: Rng + ?Sized>(graph: &Graph, root: NodeId, rng: &mut R) -> Result<RRSet> {
    Ok(Sampler::new(graph, Model::LT)?.sample(root, rng))
}

/// Samples below this count are drawn on the calling thread.
const PAR_MIN_BATCH: u64 = 256;

/// An indexed, seed-deterministic source of RR sets.
///
/// Sample `i` on `channel` is always the same set for a given seed, whatever
/// `threads` is.
#[derive(Debug)]
pub struct RrSource<'g> {
    graph: &'g Graph,
    model: Model,
    roots: RootDistribution,
    seed: u64,
    scale: f64,
    pool: Option<rayon::ThreadPool>,
    key: [u8; 32],
}

impl<'g> RrSource<'g> {
    pub fn new(
        graph: &'g Graph,
        model: Model,
        roots: RootDistribution,
        seed: u64,
        threads: usize,
    ) -> Result<Self> {
        if graph.n() == 0 {
            return Err(Error::arg("graph has no nodes"));
        }
        if let RootDistribution::Weighted(w) = &roots {
            if w.len != graph.n() {
                return Err(Error::arg(format!(
                    "{} root weights for a graph with {} nodes",
                    w.len,
                    graph.n()
                )));
            }
        }
        Sampler::new(graph, model)?;
        let pool = if threads > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build()
                    .map_err(|e| Error::arg(format!("thread pool: {e}")))?,
            )
        } else {
            None
        };
        let scale = match &roots {
            RootDistribution::Uniform => graph.n() as f64,
            RootDistribution::Weighted(w) => w.total(),
        };
        Ok(RrSource {
            graph,
            model,
            roots,
            seed,
            scale,
            pool,
            key: ChaCha8Rng::seed_from_u64(seed).get_seed(),
        })
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Total root measure: `n` for uniform roots, the weight sum otherwise.
    /// Influence estimates are `scale * (cover fraction)`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn roots(&self) -> &RootDistribution {
        &self.roots
    }

    fn sample_rng(&self, channel: u32, index: u64) -> ChaCha8Rng {
        let stream = RngStream::for_sample(self.seed, channel, index).stream;
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(stream);
        rng
    }

    fn draw_root(&self, rng: &mut ChaCha8Rng) -> NodeId {
        match &self.roots {
            RootDistribution::Uniform => sample_root_uniform(self.graph.n(), rng),
            RootDistribution::Weighted(w) => sample_root_weighted(w, rng),
        }
    }

    fn sampler(&self) -> Sampler<'g> {
        Sampler::new(self.graph, self.model).expect("validated in RrSource::new")
    }

    fn sample_one(&self, sampler: &mut Sampler<'_>, channel: u32, index: u64) -> RRSet {
        let mut rng = self.sample_rng(channel, index);
        let root = self.draw_root(&mut rng);
        sampler.sample(root, &mut rng)
    }

    fn covers_one(
        &self,
        sampler: &mut Sampler<'_>,
        channel: u32,
        index: u64,
        is_seed: &[bool],
    ) -> bool {
        let mut rng = self.sample_rng(channel, index);
        let root = self.draw_root(&mut rng);
        sampler.covers(root, is_seed, &mut rng)
    }

    /// Sample `index` of `channel`.
    pub fn get(&self, channel: u32, index: u64) -> RRSet {
        self.sample_one(&mut self.sampler(), channel, index)
    }

    /// Samples `start..start + count` of `channel`, in index order.
    pub fn draw(&self, channel: u32, start: u64, count: u64) -> Vec<RRSet> {
        let range = start..start + count;
        match &self.pool {
            Some(pool) if count >= PAR_MIN_BATCH => pool.install(|| {
                range
                    .into_par_iter()
                    .map_init(|| self.sampler(), |s, i| self.sample_one(s, channel, i))
                    .collect()
            }),
            _ => {
                let mut s = self.sampler();
                range.map(|i| self.sample_one(&mut s, channel, i)).collect()
            }
        }
    }

    /// Coverage indicators of `is_seed` over samples `start..start + count`.
    pub fn draw_covers(&self, channel: u32, start: u64, count: u64, is_seed: &[bool]) -> Vec<bool> {
        let range = start..start + count;
        match &self.pool {
            Some(pool) if count >= PAR_MIN_BATCH => pool.install(|| {
                range
                    .into_par_iter()
                    .map_init(
                        || self.sampler(),
                        |s, i| self.covers_one(s, channel, i, is_seed),
                    )
                    .collect()
            }),
            _ => {
                let mut s = self.sampler();
                range
                    .map(|i| self.covers_one(&mut s, channel, i, is_seed))
                    .collect()
            }
        }
    }

    pub fn is_parallel(&self) -> bool {
        self.pool.is_some()
    }
}
