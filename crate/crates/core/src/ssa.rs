//! Stop-and-Stare (SSA): double the RR pool, pick a greedy candidate and
//! stop once an independent Estimate-Inf run confirms the pool estimate.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bounds::{caps_for, default_epsilon_split, estimate_threshold, Caps, EpsilonSplit};
use crate::coverage::RRCollection;
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::run::{SeedResult, StopReason, StopStareConfig};
use crate::sampling::{RootDistribution, RrSource};

/// Channel of the main RR pool. Estimate-Inf at iteration `t` draws from
/// channel `t`, so verification samples never enter the pool.
pub const MAIN_CHANNEL: u32 = 0;

/// Coverage indicators are drawn this many at a time when Estimate-Inf runs
/// on a thread pool.
const VERIFY_BATCH: u64 = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum EstimateOutcome {
    Estimate(f64),
    Exceeded,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub outcome: EstimateOutcome,
    /// RR sets consumed: the stopping index `T`, or `t_max`.
    pub draws: u64,
    pub coverage: u64,
    pub threshold: f64,
}

/// Stopping-rule influence estimate of `seeds`.
///
/// Draws samples `0, 1, ...` of `channel` and returns
/// `scale * threshold / T` at the first `T` with `Cov >= threshold`, where
/// `threshold = 1 + (1 + eps) Upsilon(eps, delta)`. Gives up after `t_max`
/// draws.
pub fn estimate_inf(
    source: &RrSource<'_>,
    seeds: &[NodeId],
    eps: f64,
    delta: f64,
    t_max: u64,
    channel: u32,
) -> Result<EstimateReport> {
    if seeds.is_empty() {
        return Err(Error::arg("seed set is empty"));
    }
    if t_max == 0 {
        return Err(Error::arg("t_max must be at least 1"));
    }
    let threshold = estimate_threshold(eps, delta)?;
    let n = source.graph().n();
    let mut is_seed = vec![false; n];
    for &s in seeds {
        *is_seed
            .get_mut(s as usize)
            .ok_or(Error::OutOfRange { id: s as u64, n })? = true;
    }

    let batch = if source.is_parallel() {
        VERIFY_BATCH
    } else {
        1
    };
    let mut cov = 0u64;
    let mut drawn = 0u64;
    while drawn < t_max {
        let count = batch.min(t_max - drawn);
        let hits = source.draw_covers(channel, drawn, count, &is_seed);
        for (offset, hit) in hits.into_iter().enumerate() {
            cov += hit as u64;
            if cov as f64 >= threshold {
                let t = drawn + offset as u64 + 1;
                return Ok(EstimateReport {
                    outcome: EstimateOutcome::Estimate(source.scale() * threshold / t as f64),
                    draws: t,
                    coverage: cov,
                    threshold,
                });
            }
        }
        drawn += count;
    }
    Ok(EstimateReport {
        outcome: EstimateOutcome::Exceeded,
        draws: t_max,
        coverage: cov,
        threshold,
    })
}

/// Estimate-Inf budget `ceil(2 |R| (1 + e2) / (1 - e2) * e3^2 / e2^2)`.
pub fn verify_budget(pool_size: usize, split: &EpsilonSplit) -> u64 {
    let EpsilonSplit { eps2, eps3, .. } = *split;
    (2.0 * pool_size as f64 * (1.0 + eps2) / (1.0 - eps2) * (eps3 * eps3) / (eps2 * eps2)).ceil()
        as u64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SsaIterationTrace {
    pub t: u32,
    pub pool_size: usize,
    pub seeds: Vec<NodeId>,
    pub coverage: u64,
    pub est_influence: f64,
    pub passed_c1: bool,
    pub estimate: Option<EstimateReport>,
    pub verify_channel: Option<u32>,
    pub passed_c2: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SsaOutcome {
    pub result: SeedResult,
    pub split: EpsilonSplit,
    pub caps: Caps,
    pub lambda1: f64,
    pub trace: Vec<SsaIterationTrace>,
}

/// SSA with uniform roots.
pub fn ssa(graph: &Graph, config: &StopStareConfig) -> Result<SsaOutcome> {
    config.validate(graph.n())?;
    let source = RrSource::new(
        graph,
        config.model,
        RootDistribution::Uniform,
        config.seed,
        config.threads,
    )?;
    run_ssa(&source, config)
}

/// SSA over an arbitrary RR source; estimates are scaled by `source.scale()`.
pub fn run_ssa(source: &RrSource<'_>, config: &StopStareConfig) -> Result<SsaOutcome> {
    let start = Instant::now();
    let n = source.graph().n();
    config.validate(n)?;
    let split = match config.split {
        Some(s) => s,
        None => default_epsilon_split(config.eps)?,
    };
    split.validate_for(config.eps)?;
    let caps = caps_for(n, config.k, config.eps, config.delta)?;
    let lambda1 = caps.ssa_lambda1(&split);
    let delta_iter = caps.delta_iter();
    let scale = source.scale();

    let mut pool = RRCollection::new(n);
    pool.extend(&source.draw(MAIN_CHANNEL, 0, caps.lambda.ceil() as u64))?;

    let mut trace = Vec::new();
    let mut verify_draws = 0u64;
    let mut t = 0u32;
    let (greedy, stop_reason) = loop {
        t += 1;
        let len = pool.len() as u64;
        pool.extend(&source.draw(MAIN_CHANNEL, len, len))?;
        let greedy = pool.max_coverage_greedy(config.k)?;
        let est = scale * greedy.coverage as f64 / pool.len() as f64;

        let passed_c1 = greedy.coverage as f64 >= lambda1;
        let mut estimate = None;
        let mut passed_c2 = false;
        if passed_c1 {
            let t_max = verify_budget(pool.len(), &split);
            let report = estimate_inf(source, &greedy.seeds, split.eps2, delta_iter, t_max, t)?;
            verify_draws += report.draws;
            if let EstimateOutcome::Estimate(ic) = report.outcome {
                passed_c2 = est <= (1.0 + split.eps1) * ic;
            }
            estimate = Some(report);
        }
        log::debug!(
            "ssa t={t} |R|={} cov={} est={est:.3} c1={passed_c1} c2={passed_c2}",
            pool.len(),
            greedy.coverage
        );
        trace.push(SsaIterationTrace {
            t,
            pool_size: pool.len(),
            seeds: greedy.seeds.clone(),
            coverage: greedy.coverage,
            est_influence: est,
            passed_c1,
            estimate,
            verify_channel: passed_c1.then_some(t),
            passed_c2,
        });

        if passed_c2 {
            break (greedy, StopReason::ConditionsMet);
        }
        if pool.len() as f64 >= caps.n_max || t >= caps.i_max {
            break (greedy, StopReason::CapReached);
        }
    };

    let est_influence = scale * greedy.coverage as f64 / pool.len() as f64;
    Ok(SsaOutcome {
        result: SeedResult {
            seeds: greedy.seeds,
            est_influence,
            rr_count_main: pool.len() as u64,
            rr_count_verify: verify_draws,
            iterations: t,
            stop_reason,
            pool_items: pool.total_items() as u64,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
            rng_seed: config.seed,
        },
        split,
        caps,
        lambda1,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{generate, SyntheticSpec};
    use crate::sampling::Model;

    fn g1() -> Graph {
        Graph::from_edges(2, [(0, 1, 1.0)]).unwrap()
    }

    #[test]
    fn estimate_inf_all_success_stream() {
        // S = V covers every RR set: threshold 19/3 is first reached at T = 7.
        let g = g1();
        let src = RrSource::new(&g, Model::IC, RootDistribution::Uniform, 1, 1).unwrap();
        let e1 = (-1.0f64).exp();
        let r = estimate_inf(&src, &[0, 1], 1.0, e1, 1000, 5).unwrap();
        assert_eq!(r.draws, 7);
        assert_eq!(r.coverage, 7);
        match r.outcome {
            EstimateOutcome::Estimate(v) => assert!((v - 2.0 * (19.0 / 3.0) / 7.0).abs() < 1e-12),
            EstimateOutcome::Exceeded => panic!("expected an estimate"),
        }
    }

    #[test]
    fn estimate_inf_cap() {
        let g = Graph::from_edges(50, []).unwrap();
        let src = RrSource::new(&g, Model::IC, RootDistribution::Uniform, 1, 1).unwrap();
        let r = estimate_inf(&src, &[0], 0.5, 0.1, 1, 1).unwrap();
        assert_eq!(r.outcome, EstimateOutcome::Exceeded);
        assert_eq!(r.draws, 1);
        assert!(estimate_inf(&src, &[], 0.5, 0.1, 1, 1).is_err());
        assert!(estimate_inf(&src, &[0], 0.5, 0.1, 0, 1).is_err());
        assert!(estimate_inf(&src, &[0], 0.0, 0.1, 10, 1).is_err());
    }

    #[test]
    fn estimate_inf_parallel_matches_serial() {
        let g = generate(&SyntheticSpec::erdos_renyi(200, 0.02, 4)).unwrap();
        let one = RrSource::new(&g, Model::IC, RootDistribution::Uniform, 9, 1).unwrap();
        let four = RrSource::new(&g, Model::IC, RootDistribution::Uniform, 9, 4).unwrap();
        let seeds = [3, 50, 77];
        let a = estimate_inf(&one, &seeds, 0.1, 0.01, 1_000_000, 2).unwrap();
        let b = estimate_inf(&four, &seeds, 0.1, 0.01, 1_000_000, 2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_node_graph() {
        let g = Graph::from_edges(1, []).unwrap();
        let cfg = StopStareConfig::new(&g, 1, 0.1, Model::IC).with_delta(0.1);
        let out = ssa(&g, &cfg).unwrap();
        assert_eq!(out.result.seeds, vec![0]);
        assert_eq!(out.result.est_influence, 1.0);
    }

    #[test]
    fn star_picks_center() {
        let g = generate(&SyntheticSpec::star(5)).unwrap();
        for seed in 0..10 {
            let cfg = StopStareConfig::new(&g, 1, 0.2, Model::IC)
                .with_delta(0.1)
                .with_seed(seed);
            assert_eq!(ssa(&g, &cfg).unwrap().result.seeds, vec![0]);
        }
    }

    #[test]
    fn doubling_schedule_and_caps() {
        let g = generate(&SyntheticSpec::erdos_renyi(300, 0.01, 2)).unwrap();
        for model in [Model::IC, Model::LT] {
            let cfg = StopStareConfig::new(&g, 5, 0.2, model).with_seed(17);
            let out = ssa(&g, &cfg).unwrap();
            let initial = out.caps.lambda.ceil() as usize;
            for tr in &out.trace {
                assert_eq!(tr.pool_size, initial << tr.t);
            }
            let r = &out.result;
            assert!(r.iterations <= out.caps.i_max);
            assert!((r.rr_count_main as f64) < 2.0 * out.caps.n_max);
            assert_eq!(r.rr_count_main as usize, initial << r.iterations);
            let verify: u64 = out
                .trace
                .iter()
                .filter_map(|t| t.estimate)
                .map(|e| e.draws)
                .sum();
            assert_eq!(verify, r.rr_count_verify);
            // Each Estimate-Inf call uses its own channel, never the pool's.
            for tr in &out.trace {
                if let Some(ch) = tr.verify_channel {
                    assert_eq!(ch, tr.t);
                    assert_ne!(ch, MAIN_CHANNEL);
                }
            }
            let mut distinct = r.seeds.clone();
            distinct.sort();
            distinct.dedup();
            assert_eq!(distinct.len(), 5);
            assert!(r.est_influence >= 0.0 && r.est_influence <= g.n() as f64);
        }
    }

    #[test]
    fn verification_pool_is_discarded() {
        // The final pool equals a fresh draw of the main channel prefix.
        let g = generate(&SyntheticSpec::erdos_renyi(100, 0.03, 8)).unwrap();
        let cfg = StopStareConfig::new(&g, 3, 0.3, Model::IC).with_seed(5);
        let out = ssa(&g, &cfg).unwrap();
        let src = RrSource::new(&g, Model::IC, RootDistribution::Uniform, 5, 1).unwrap();
        let mut fresh = RRCollection::new(g.n());
        fresh
            .extend(&src.draw(MAIN_CHANNEL, 0, out.result.rr_count_main))
            .unwrap();
        let greedy = fresh.max_coverage_greedy(3).unwrap();
        assert_eq!(greedy.seeds, out.result.seeds);
        assert_eq!(fresh.total_items() as u64, out.result.pool_items);
    }

    #[test]
    fn reproducible_and_thread_independent() {
        let g = generate(&SyntheticSpec::erdos_renyi(200, 0.02, 1)).unwrap();
        let cfg = StopStareConfig::new(&g, 4, 0.2, Model::LT).with_seed(99);
        let a = ssa(&g, &cfg).unwrap().result;
        let b = ssa(&g, &cfg).unwrap().result;
        let c = ssa(&g, &cfg.clone().with_threads(3)).unwrap().result;
        for r in [&b, &c] {
            assert_eq!(a.seeds, r.seeds);
            assert_eq!(a.rr_count_main, r.rr_count_main);
            assert_eq!(a.rr_count_verify, r.rr_count_verify);
            assert_eq!(a.est_influence.to_bits(), r.est_influence.to_bits());
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let g = g1();
        let base = StopStareConfig::new(&g, 1, 0.1, Model::IC).with_delta(0.1);
        let mut cfg = base.clone();
        cfg.k = 3;
        assert!(matches!(ssa(&g, &cfg), Err(Error::Argument(_))));
        let bad = base.clone().with_split(EpsilonSplit::new(1.0, 0.5, 0.5));
        assert!(matches!(ssa(&g, &bad), Err(Error::Argument(_))));
        let mut cfg = base;
        cfg.delta = 1.0;
        assert!(ssa(&g, &cfg).is_err());
    }

    #[test]
    fn explicit_split_is_used() {
        let g = generate(&SyntheticSpec::erdos_renyi(100, 0.03, 3)).unwrap();
        let split = EpsilonSplit::new(0.05, 0.05, 0.1);
        assert!(split.validate_for(0.2).is_ok());
        let cfg = StopStareConfig::new(&g, 2, 0.2, Model::IC).with_split(split);
        let out = ssa(&g, &cfg).unwrap();
        assert_eq!(out.split, split);
        assert!((out.lambda1 - out.caps.ssa_lambda1(&split)).abs() < 1e-9);
    }

    #[test]
    fn verify_budget_formula() {
        let split = EpsilonSplit::new(0.01, 0.1, 0.2);
        // 2 * 100 * 1.1 / 0.9 * 4 = 977.7...
        assert_eq!(verify_budget(100, &split), 978);
    }
}
