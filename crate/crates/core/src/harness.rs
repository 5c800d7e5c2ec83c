//! Synthetic graphs and the statistical drivers used by the test suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::ONE_MINUS_INV_E;
use crate::error::{Error, Result};
use crate::graph::{Graph, GraphBuilder, NodeId};
use crate::oracle::ExactTable;
use crate::run::StopStareConfig;
use crate::sampling::Model;
use crate::tvm::{run_plain, Algo};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Family {
    /// Each ordered pair `(u, v)`, `u != v`, is an edge with probability `p`.
    ErdosRenyi { n: usize, p: f64 },
    /// Node 0 points at every other node.
    Star { n: usize },
    /// `i -> i + 1`.
    Path { n: usize },
    /// `i -> (i + 1) mod n`, each with weight `w`.
    Cycle { n: usize, w: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightRule {
    /// The family's own weight (`w` for cycles, 1 otherwise).
    Explicit,
    /// `1 / d_in(v)` on every edge into `v`.
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub family: Family,
    pub weights: WeightRule,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Auto-weighted directed G(n, p).
    pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Self {
        SyntheticSpec {
            family: Family::ErdosRenyi { n, p },
            weights: WeightRule::Auto,
            seed,
        }
    }

    pub fn star(n: usize) -> Self {
        Self::explicit(Family::Star { n })
    }

    pub fn path(n: usize) -> Self {
        Self::explicit(Family::Path { n })
    }

    pub fn cycle(n: usize, w: f64) -> Self {
        Self::explicit(Family::Cycle { n, w })
    }

    pub fn with_weights(mut self, rule: WeightRule) -> Self {
        self.weights = rule;
        self
    }

    fn explicit(family: Family) -> Self {
        SyntheticSpec {
            family,
            weights: WeightRule::Explicit,
            seed: 0,
        }
    }
}

pub fn generate(spec: &SyntheticSpec) -> Result<Graph> {
    let n = match spec.family {
        Family::ErdosRenyi { n, .. }
        | Family::Star { n }
        | Family::Path { n }
        | Family::Cycle { n, .. } => n,
    };
    if n == 0 {
        return Err(Error::arg("a synthetic graph needs at least one node"));
    }
    if n > NodeId::MAX as usize {
        return Err(Error::arg(format!("{n} nodes do not fit 32-bit ids")));
    }
    let mut b = GraphBuilder::new(n);
    let last = n as NodeId - 1;
    match spec.family {
        Family::ErdosRenyi { p, .. } => {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::arg(format!(
                    "edge probability {p} must be in (0, 1)"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            for u in 0..=last {
                for v in 0..=last {
                    if u != v && rng.gen::<f64>() < p {
                        b.add_edge(u, v, 1.0)?;
                    }
                }
            }
        }
        Family::Star { .. } => {
            for v in 1..=last {
                b.add_edge(0, v, 1.0)?;
            }
        }
        Family::Path { .. } => {
            for u in 0..last {
                b.add_edge(u, u + 1, 1.0)?;
            }
        }
        Family::Cycle { w, .. } => {
            if n < 2 {
                return Err(Error::arg("a cycle needs at least two nodes"));
            }
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::arg(format!("cycle weight {w} must be in [0, 1]")));
            }
            for u in 0..=last {
                b.add_edge(u, if u == last { 0 } else { u + 1 }, w)?;
            }
        }
    }
    let g = b.build();
    Ok(match spec.weights {
        WeightRule::Explicit => g,
        WeightRule::Auto => g.auto_weight(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GuaranteeReport {
    pub algo: Algo,
    pub model: Model,
    pub k: usize,
    pub eps: f64,
    pub delta: f64,
    pub trials: usize,
    pub passes: usize,
    pub pass_fraction: f64,
    pub opt: f64,
    pub opt_seeds: Vec<NodeId>,
    /// `(1 - 1/e - eps) * opt`.
    pub target: f64,
    /// `1 - delta - 3 sqrt(delta (1 - delta) / trials)`.
    pub lower_bound: f64,
    pub worst_influence: f64,
}

impl GuaranteeReport {
    pub fn holds(&self) -> bool {
        self.pass_fraction >= self.lower_bound
    }
}

/// Runs `algo` `trials` times with seeds `base_seed..base_seed + trials` and
/// counts runs whose exact influence reaches `(1 - 1/e - eps) * OPT_k`.
#[allow(clippy::too_many_arguments)]
pub fn guarantee_trial(
    graph: &Graph,
    k: usize,
    eps: f64,
    delta: f64,
    algo: Algo,
    model: Model,
    trials: usize,
    base_seed: u64,
) -> Result<GuaranteeReport> {
    if trials == 0 {
        return Err(Error::arg("trials must be at least 1"));
    }
    let table = ExactTable::build(graph, k, model)?;
    let (opt_seeds, opt) = table.best(graph.n());
    let target = (ONE_MINUS_INV_E - eps) * opt;
    let base = StopStareConfig::new(graph, k, eps, model).with_delta(delta);
    let influences = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let r = run_plain(
                graph,
                &base.clone().with_seed(base_seed.wrapping_add(i)),
                algo,
            )?;
            table
                .lookup(&r.seeds)
                .ok_or_else(|| Error::arg(format!("seed set {:?} is not of size {k}", r.seeds)))
        })
        .collect::<Result<Vec<f64>>>()?;
    let passes = influences.iter().filter(|&&x| x >= target - 1e-12).count();
    let t = trials as f64;
    Ok(GuaranteeReport {
        algo,
        model,
        k,
        eps,
        delta,
        trials,
        passes,
        pass_fraction: passes as f64 / t,
        opt,
        opt_seeds,
        target,
        lower_bound: 1.0 - delta - 3.0 * (delta * (1.0 - delta) / t).sqrt(),
        worst_influence: influences.iter().copied().fold(f64::INFINITY, f64::min),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn star_layout() {
        let g = generate(&SyntheticSpec::star(5)).unwrap();
        assert_eq!(g.n(), 5);
        assert_eq!(
            g.edges().collect::<Vec<_>>(),
            (1..5).map(|v| (0, v, 1.0)).collect::<Vec<_>>()
        );
    }

    #[test]
    fn cycle_is_g2() {
        let g = generate(&SyntheticSpec::cycle(3, 0.5)).unwrap();
        assert_eq!(
            g.edges().collect::<Vec<_>>(),
            vec![(0, 1, 0.5), (1, 2, 0.5), (2, 0, 0.5)]
        );
    }

    #[test]
    fn path_layout() {
        let g = generate(&SyntheticSpec::path(4)).unwrap();
        assert_eq!(g.m(), 3);
        assert_eq!(generate(&SyntheticSpec::path(1)).unwrap().m(), 0);
    }

    #[test]
    fn erdos_renyi_is_seed_deterministic() {
        let a = generate(&SyntheticSpec::erdos_renyi(8, 0.3, 1)).unwrap();
        let b = generate(&SyntheticSpec::erdos_renyi(8, 0.3, 1)).unwrap();
        assert_eq!(a.edges().collect::<Vec<_>>(), b.edges().collect::<Vec<_>>());
        assert!(a.is_lt_valid());
        let c = generate(&SyntheticSpec::erdos_renyi(8, 0.3, 2)).unwrap();
        assert_ne!(a.edges().collect::<Vec<_>>(), c.edges().collect::<Vec<_>>());
    }

    #[test]
    fn erdos_renyi_density() {
        let g = generate(&SyntheticSpec::erdos_renyi(300, 0.05, 9)).unwrap();
        let expected: f64 = 0.05 * 300.0 * 299.0;
        let sd = (expected * 0.95).sqrt();
        assert!((g.m() as f64 - expected).abs() < 5.0 * sd, "m = {}", g.m());
    }

    #[test]
    fn invalid_parameters() {
        assert!(generate(&SyntheticSpec::erdos_renyi(0, 0.3, 1)).is_err());
        assert!(generate(&SyntheticSpec::erdos_renyi(5, 0.0, 1)).is_err());
        assert!(generate(&SyntheticSpec::erdos_renyi(5, 1.0, 1)).is_err());
        assert!(generate(&SyntheticSpec::cycle(1, 0.5)).is_err());
        assert!(generate(&SyntheticSpec::cycle(3, 1.5)).is_err());
        assert!(generate(&SyntheticSpec::star(0)).is_err());
    }

    #[test]
    fn trivial_guarantee_trials() {
        let single = Graph::from_edges(1, []).unwrap();
        let star = generate(&SyntheticSpec::star(5)).unwrap();
        for algo in [Algo::Ssa, Algo::Dssa] {
            let r = guarantee_trial(&single, 1, 0.3, 0.2, algo, Model::IC, 10, 0).unwrap();
            assert_eq!(r.pass_fraction, 1.0);
            let r = guarantee_trial(&star, 1, 0.3, 0.2, algo, Model::LT, 10, 0).unwrap();
            assert_eq!(r.pass_fraction, 1.0);
            assert_eq!(r.opt_seeds, vec![0]);
            assert_eq!(r.worst_influence, 5.0);
        }
    }
}
