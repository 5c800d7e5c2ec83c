//! Output records. Field order is the serialization order and is part of the
//! schema; bump `SCHEMA_VERSION` when it changes.

use serde::Serialize;
use stopstare::bounds::EpsilonSplit;
use stopstare::harness::GuaranteeReport;
use stopstare::{Algo, Model, NodeId, SeedResult, StopReason};

pub const SCHEMA_VERSION: u32 = 1;

/// Bytes per node id stored in the RR pool.
const ID_BYTES: u64 = std::mem::size_of::<NodeId>() as u64;

#[derive(Clone, Debug, Serialize)]
pub struct GraphInfo {
    pub path: String,
    pub n: usize,
    pub m: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub command: &'static str,
    pub algo: Algo,
    pub model: Model,
    pub graph: String,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub eps: f64,
    pub delta: f64,
    /// SSA only: the precision split that was used.
    pub eps_split: Option<EpsilonSplit>,
    pub rng_seed: u64,
    pub threads: usize,
    /// TVM only.
    pub weights: Option<String>,
    pub gamma: Option<f64>,
    pub seeds: Vec<NodeId>,
    pub est_influence: f64,
    pub rr_count_main: u64,
    pub rr_count_verify: u64,
    pub rr_count_total: u64,
    pub iterations: u32,
    pub stop_reason: StopReason,
    pub pool_items: u64,
    pub peak_pool_bytes: u64,
    /// `None` under `--no-timing`.
    pub wall_ms: Option<f64>,
}

pub struct RunContext<'a> {
    pub command: &'static str,
    pub algo: Algo,
    pub model: Model,
    pub graph: &'a GraphInfo,
    pub k: usize,
    pub eps: f64,
    pub delta: f64,
    pub eps_split: Option<EpsilonSplit>,
    pub threads: usize,
    pub weights: Option<(String, f64)>,
    pub timing: bool,
}

impl RunRecord {
    pub fn new(ctx: &RunContext<'_>, r: &SeedResult) -> Self {
        RunRecord {
            schema_version: SCHEMA_VERSION,
            command: ctx.command,
            algo: ctx.algo,
            model: ctx.model,
            graph: ctx.graph.path.clone(),
            n: ctx.graph.n,
            m: ctx.graph.m,
            k: ctx.k,
            eps: ctx.eps,
            delta: ctx.delta,
            eps_split: ctx.eps_split,
            rng_seed: r.rng_seed,
            threads: ctx.threads,
            weights: ctx.weights.as_ref().map(|(p, _)| p.clone()),
            gamma: ctx.weights.as_ref().map(|&(_, g)| g),
            seeds: r.seeds.clone(),
            est_influence: r.est_influence,
            rr_count_main: r.rr_count_main,
            rr_count_verify: r.rr_count_verify,
            rr_count_total: r.rr_count_total(),
            iterations: r.iterations,
            stop_reason: r.stop_reason,
            pool_items: r.pool_items,
            peak_pool_bytes: r.pool_items * ID_BYTES,
            wall_ms: ctx.timing.then_some(r.wall_ms),
        }
    }

    pub const CSV_HEADER: &'static str =
        "schema_version,command,algo,model,graph,n,m,k,eps,delta,eps1,eps2,eps3,\
rng_seed,threads,weights,gamma,seeds,est_influence,rr_count_main,rr_count_verify,rr_count_total,\
iterations,stop_reason,pool_items,peak_pool_bytes,wall_ms";

    /// One CSV row; seeds are `;`-separated, absent values are empty.
    pub fn csv_row(&self) -> String {
        fn opt<T: ToString>(v: Option<T>) -> String {
            v.map(|x| x.to_string()).unwrap_or_default()
        }
        let split = self.eps_split;
        let seeds: Vec<String> = self.seeds.iter().map(|s| s.to_string()).collect();
        let stop = match self.stop_reason {
            StopReason::CapReached => "cap_reached",
            StopReason::ConditionsMet => "conditions_met",
        };
        [
            self.schema_version.to_string(),
            self.command.to_string(),
            self.algo.to_string(),
            self.model.to_string(),
            csv_field(&self.graph),
            self.n.to_string(),
            self.m.to_string(),
            self.k.to_string(),
            self.eps.to_string(),
            self.delta.to_string(),
            opt(split.map(|s| s.eps1)),
            opt(split.map(|s| s.eps2)),
            opt(split.map(|s| s.eps3)),
            self.rng_seed.to_string(),
            self.threads.to_string(),
            opt(self.weights.as_deref().map(csv_field)),
            opt(self.gamma),
            seeds.join(";"),
            self.est_influence.to_string(),
            self.rr_count_main.to_string(),
            self.rr_count_verify.to_string(),
            self.rr_count_total.to_string(),
            self.iterations.to_string(),
            stop.to_string(),
            self.pool_items.to_string(),
            self.peak_pool_bytes.to_string(),
            opt(self.wall_ms),
        ]
        .join(",")
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EvalRecord {
    pub schema_version: u32,
    pub command: &'static str,
    pub model: Model,
    pub graph: String,
    pub n: usize,
    pub m: usize,
    pub seeds: Vec<NodeId>,
    pub runs: u64,
    pub rng_seed: u64,
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExactRecord {
    pub schema_version: u32,
    pub command: &'static str,
    pub mode: &'static str,
    pub model: Model,
    pub graph: String,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub seeds: Vec<NodeId>,
    /// `I(seeds)`; for `opt` mode this is `OPT_k`.
    pub influence: f64,
    pub outcomes_enumerated: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GuaranteeRecord {
    pub schema_version: u32,
    pub command: &'static str,
    pub suite: &'static str,
    pub graph: String,
    pub n: usize,
    pub m: usize,
    pub base_seed: u64,
    pub holds: bool,
    #[serde(flatten)]
    pub report: GuaranteeReport,
}
