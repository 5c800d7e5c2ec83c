//! Dynamic Stop-and-Stare (D-SSA).
//!
//! One RR stream is read in doubling windows. At iteration `t` the first
//! half `[0, L 2^(t-1))` picks the greedy candidate and the second half
//! `[L 2^(t-1), L 2^t)` checks it; the precision parameters are derived from
//! the two estimates instead of being fixed up front. The checking half
//! becomes part of the next iteration's first half.
//!
//! The `eps2` and `eps3` formulas divide by `2^(t-1)`, not by the half size
//! `L 2^(t-1)`. That is implemented as written; the traces also carry the
//! values obtained with the half size for comparison.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bounds::{caps_for, Caps, ONE_MINUS_INV_E};
use crate::coverage::RRCollection;
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::run::{SeedResult, StopReason, StopStareConfig};
use crate::sampling::{RootDistribution, RrSource};
use crate::ssa::MAIN_CHANNEL;

/// `(e1 + e2 + e1 e2)(1 - 1/e - eps) + (1 - 1/e) e3`.
pub fn epsilon_t(eps1: f64, eps2: f64, eps3: f64, eps: f64) -> f64 {
    (eps1 + eps2 + eps1 * eps2) * (ONE_MINUS_INV_E - eps) + ONE_MINUS_INV_E * eps3
}

/// Precision parameters derived at one checkpoint.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicEpsilons {
    pub eps1: f64,
    pub eps2: f64,
    pub eps3: f64,
    pub eps_t: f64,
    /// `eps2` and `eps3` with `|R_t|` in place of `2^(t-1)`.
    pub eps2_by_pool: f64,
    pub eps3_by_pool: f64,
}

fn dynamic_epsilons(
    est: f64,
    check_est: f64,
    t: u32,
    half: usize,
    scale: f64,
    eps: f64,
) -> DynamicEpsilons {
    let eps1 = est / check_est - 1.0;
    let e2_core = scale * (1.0 + eps) / check_est;
    let e3_core = e2_core * (ONE_MINUS_INV_E - eps) / (1.0 + eps / 3.0);
    let pow = 2f64.powi(t as i32 - 1);
    let eps2 = eps * (e2_core / pow).sqrt();
    let eps3 = eps * (e3_core / pow).sqrt();
    DynamicEpsilons {
        eps1,
        eps2,
        eps3,
        eps_t: epsilon_t(eps1, eps2, eps3, eps),
        eps2_by_pool: eps * (e2_core / half as f64).sqrt(),
        eps3_by_pool: eps * (e3_core / half as f64).sqrt(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DssaIterationTrace {
    pub t: u32,
    pub pool_half_size: usize,
    pub seeds: Vec<NodeId>,
    pub coverage: u64,
    pub est_influence: f64,
    /// Coverage of the candidate on the checking half.
    pub cov_check: u64,
    pub passed_d1: bool,
    pub epsilons: Option<DynamicEpsilons>,
    pub passed_d2: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DssaOutcome {
    pub result: SeedResult,
    pub caps: Caps,
    /// Initial window `ceil(Lambda)`.
    pub window: u64,
    pub trace: Vec<DssaIterationTrace>,
}

/// D-SSA with uniform roots.
pub fn dssa(graph: &Graph, config: &StopStareConfig) -> Result<DssaOutcome> {
    config.validate(graph.n())?;
    let source = RrSource::new(
        graph,
        config.model,
        RootDistribution::Uniform,
        config.seed,
        config.threads,
    )?;
    run_dssa(&source, config)
}

pub fn run_dssa(source: &RrSource<'_>, config: &StopStareConfig) -> Result<DssaOutcome> {
    let start = Instant::now();
    let n = source.graph().n();
    config.validate(n)?;
    if config.split.is_some() {
        return Err(Error::arg(
            "D-SSA picks its own precision split; none may be given",
        ));
    }
    let eps = config.eps;
    if eps >= ONE_MINUS_INV_E {
        return Err(Error::arg(format!("epsilon {eps} must be below 1 - 1/e")));
    }
    let caps = caps_for(n, config.k, eps, config.delta)?;
    let window = caps.lambda.ceil() as u64;
    let scale = source.scale();

    let mut stream = RRCollection::new(n);
    let mut trace = Vec::new();
    let mut t = 0u32;
    let (seeds, coverage, half, stop_reason) = loop {
        t += 1;
        let half = (window << (t - 1)) as usize;
        let have = stream.len() as u64;
        stream.extend(&source.draw(MAIN_CHANNEL, have, 2 * half as u64 - have))?;

        let greedy = stream.max_coverage_greedy_in(config.k, 0..half)?;
        let est = scale * greedy.coverage as f64 / half as f64;
        let cov_check = stream.cov_in(&greedy.seeds, half..2 * half)?;
        let passed_d1 = cov_check as f64 >= caps.dssa_lambda1;
        let mut epsilons = None;
        let mut passed_d2 = false;
        if passed_d1 {
            let check_est = scale * cov_check as f64 / half as f64;
            let e = dynamic_epsilons(est, check_est, t, half, scale, eps);
            passed_d2 = e.eps_t <= eps;
            epsilons = Some(e);
        }
        log::debug!(
            "dssa t={t} |R_t|={half} cov={} cov_check={cov_check} d1={passed_d1} d2={passed_d2}",
            greedy.coverage
        );
        trace.push(DssaIterationTrace {
            t,
            pool_half_size: half,
            seeds: greedy.seeds.clone(),
            coverage: greedy.coverage,
            est_influence: est,
            cov_check,
            passed_d1,
            epsilons,
            passed_d2,
        });

        if passed_d2 {
            break (
                greedy.seeds,
                greedy.coverage,
                half,
                StopReason::ConditionsMet,
            );
        }
        if half as f64 >= caps.n_max || t >= caps.i_max {
            break (greedy.seeds, greedy.coverage, half, StopReason::CapReached);
        }
    };

    Ok(DssaOutcome {
        result: SeedResult {
            seeds,
            est_influence: scale * coverage as f64 / half as f64,
            rr_count_main: stream.len() as u64,
            rr_count_verify: 0,
            iterations: t,
            stop_reason,
            pool_items: stream.total_items() as u64,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
            rng_seed: config.seed,
        },
        caps,
        window,
        trace,
    })
}
