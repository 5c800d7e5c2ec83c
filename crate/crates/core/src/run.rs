//! Run configuration and results shared by SSA, D-SSA and TVM.

use serde::{Deserialize, Serialize};

use crate::bounds::EpsilonSplit;
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::sampling::Model;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StopStareConfig {
    pub k: usize,
    pub eps: f64,
    pub delta: f64,
    pub model: Model,
    /// SSA only; `None` selects the default split. D-SSA rejects a split.
    pub split: Option<EpsilonSplit>,
    pub seed: u64,
    pub threads: usize,
}

impl StopStareConfig {
    /// `delta` defaults to `1 / n` of the graph it is run on.
    pub fn new(graph: &Graph, k: usize, eps: f64, model: Model) -> Self {
        StopStareConfig {
            k,
            eps,
            delta: 1.0 / graph.n() as f64,
            model,
            split: None,
            seed: 0,
            threads: 1,
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_split(mut self, split: EpsilonSplit) -> Self {
        self.split = Some(split);
        self
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = threads;
        self
    }

    pub(crate) fn validate(&self, n: usize) -> Result<()> {
        if self.k == 0 || self.k > n {
            return Err(Error::arg(format!("k = {} must be in 1..={n}", self.k)));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::arg(format!(
                "epsilon must be in (0, 1), got {}",
                self.eps
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::arg(format!(
                "delta must be in (0, 1), got {}",
                self.delta
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    CapReached,
    ConditionsMet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seeds: Vec<NodeId>,
    /// Pool estimate `scale * Cov(seeds) / |R|` at the stop, where `scale`
    /// is `n` (or the total target weight for TVM).
    pub est_influence: f64,
    /// RR sets in the main pool (the whole stream for D-SSA).
    pub rr_count_main: u64,
    /// RR sets drawn inside Estimate-Inf over all iterations.
    pub rr_count_verify: u64,
    pub iterations: u32,
    pub stop_reason: StopReason,
    /// Sum of RR-set sizes in the main pool at the stop.
    pub pool_items: u64,
    pub wall_ms: f64,
    pub rng_seed: u64,
}

impl SeedResult {
    pub fn rr_count_total(&self) -> u64 {
        self.rr_count_main + self.rr_count_verify
    }
}
