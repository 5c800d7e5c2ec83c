//! Targeted viral marketing: SSA or D-SSA with RR roots drawn in
//! proportion to per-node target weights. Influence estimates become the
//! weighted influence `sum_v w_v * Pr[v activated]`, i.e. `gamma` times the
//! probability that the seeds cover a weighted-root RR set.

use std::io::BufRead;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dssa::run_dssa;
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::run::{SeedResult, StopStareConfig};
use crate::sampling::{RootDistribution, RrSource, WeightedRoots};
use crate::ssa::run_ssa;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Ssa,
    Dssa,
}

impl std::fmt::Display for Algo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algo::Ssa => "ssa",
            Algo::Dssa => "dssa",
        })
    }
}

impl FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ssa" => Ok(Algo::Ssa),
            "dssa" | "d-ssa" => Ok(Algo::Dssa),
            _ => Err(Error::arg(format!(
                "unknown algorithm `{s}` (expected ssa or dssa)"
            ))),
        }
    }
}

/// Runs `algo` with uniform roots.
pub fn run_plain(graph: &Graph, config: &StopStareConfig, algo: Algo) -> Result<SeedResult> {
    Ok(match algo {
        Algo::Ssa => crate::ssa::ssa(graph, config)?.result,
        Algo::Dssa => crate::dssa::dssa(graph, config)?.result,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetWeights {
    weights: Vec<f64>,
    gamma: f64,
}

impl TargetWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some((v, &w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w >= 0.0))
        {
            return Err(Error::arg(format!(
                "weight of node {v} is {w}; weights must be finite and nonnegative"
            )));
        }
        let gamma: f64 = weights.iter().sum();
        if !(gamma > 0.0) {
            return Err(Error::arg("target weights sum to zero"));
        }
        Ok(TargetWeights { weights, gamma })
    }

    /// Every node weighted 1.
    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(vec![1.0; n])
    }

    /// Reads `node_id weight` lines; `#` starts a comment, unlisted nodes get 0,
    /// repeated ids keep the last value.
    pub fn load<R: BufRead>(reader: R, n: usize) -> Result<Self> {
        let mut weights = vec![0.0; n];
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let mut fields = body.split_whitespace();
            let (Some(id), Some(w), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(Error::Parse {
                    line: lineno,
                    msg: "expected `node_id weight`".into(),
                });
            };
            let id: u64 = id.parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad node id `{id}`"),
            })?;
            let w: f64 = w.parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad weight `{w}`"),
            })?;
            if id >= n as u64 {
                return Err(Error::NodeRange {
                    line: lineno,
                    id,
                    n,
                });
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::WeightValue {
                    line: lineno,
                    weight: w,
                });
            }
            weights[id as usize] = w;
        }
        Self::new(weights)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    fn is_constant(&self) -> bool {
        self.weights.iter().all(|&w| w == self.weights[0])
    }

    /// Root distribution and the matching estimate scale.
    ///
    /// Constant weights give the uniform distribution, so a run with
    /// weights all 1 draws exactly the same RR sets as the plain algorithm.
    pub fn root_distribution(&self) -> Result<(RootDistribution, f64)> {
        if self.is_constant() {
            Ok((RootDistribution::Uniform, self.gamma))
        } else {
            Ok((
                RootDistribution::Weighted(WeightedRoots::new(&self.weights)?),
                self.gamma,
            ))
        }
    }
}

/// Runs `algo` with roots drawn proportionally to `weights`.
pub fn tvm_run(
    graph: &Graph,
    weights: &TargetWeights,
    config: &StopStareConfig,
    algo: Algo,
) -> Result<SeedResult> {
    config.validate(graph.n())?;
    if weights.len() != graph.n() {
        return Err(Error::arg(format!(
            "{} target weights for a graph with {} nodes",
            weights.len(),
            graph.n()
        )));
    }
    let (roots, gamma) = weights.root_distribution()?;
    let source =
        RrSource::new(graph, config.model, roots, config.seed, config.threads)?.with_scale(gamma);
    Ok(match algo {
        Algo::Ssa => run_ssa(&source, config)?.result,
        Algo::Dssa => run_dssa(&source, config)?.result,
    })
}

/// `gamma` times the fraction of `count` weighted-root RR sets covered by `seeds`.
pub fn weighted_cover_estimate(
    graph: &Graph,
    weights: &TargetWeights,
    model: crate::sampling::Model,
    seeds: &[NodeId],
    count: u64,
    seed: u64,
) -> Result<f64> {
    let (roots, gamma) = weights.root_distribution()?;
    let source = RrSource::new(graph, model, roots, seed, 1)?.with_scale(gamma);
    let mut is_seed = vec![false; graph.n()];
    for &s in seeds {
        *is_seed.get_mut(s as usize).ok_or(Error::OutOfRange {
            id: s as u64,
            n: graph.n(),
        })? = true;
    }
    let hits = source
        .draw_covers(0, 0, count, &is_seed)
        .iter()
        .filter(|&&c| c)
        .count();
    Ok(gamma * hits as f64 / count as f64)
}
