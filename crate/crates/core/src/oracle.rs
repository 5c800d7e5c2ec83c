//! Ground truth for small graphs: forward cascade simulation, exact
//! influence by enumerating live-edge realizations, and exhaustive `OPT_k`.
//!
//! IC realizations keep each edge independently with probability `w`. LT
//! realizations keep at most one in-edge per node: `(u, v)` with
//! probability `w(u, v)`, none with probability `1 - sum_u w(u, v)`. The
//! final active set of a cascade is distributed as the set reachable from
//! the seeds in a random realization.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::sampling::Model;

/// Largest realization space enumerated (IC: `2^m`, LT: `prod (d_in + 1)`).
pub const MAX_OUTCOMES: u64 = 1 << 22;
/// Largest number of candidate seed sets for [`exact_opt`].
pub const MAX_SEED_SETS: u64 = 100_000;
/// Node sets are held as `u128` masks.
pub const MAX_EXACT_NODES: usize = 128;

type Mask = u128;

/// Nonzero-probability in-edge choices of one node (`None` keeps no edge).
type LtChoices = (NodeId, Vec<(Option<NodeId>, f64)>);

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        self.comp += if self.sum.abs() >= x.abs() {
            (self.sum - t) + x
        } else {
            (x - t) + self.sum
        };
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

// ---------------------------------------------------------------------------
// Simulation

/// Runs one forward cascade from `seeds` and returns the number of active
/// nodes at quiescence.
pub fn simulate_once<R: Rng + ?Sized>(
    graph: &Graph,
    seeds: &[NodeId],
    model: Model,
    rng: &mut R,
) -> Result<usize> {
    check_seeds(graph, seeds)?;
    if model == Model::LT {
        graph.check_lt()?;
    }
    Ok(cascade(graph, seeds, model, rng))
}

fn cascade<R: Rng + ?Sized>(graph: &Graph, seeds: &[NodeId], model: Model, rng: &mut R) -> usize {
    let n = graph.n();
    let mut active = vec![false; n];
    let mut frontier: Vec<NodeId> = Vec::new();
    for &s in seeds {
        if !active[s as usize] {
            active[s as usize] = true;
            frontier.push(s);
        }
    }
    let mut count = frontier.len();
    match model {
        Model::IC => {
            while let Some(u) = frontier.pop() {
                let (outs, ws) = graph.out_edges(u);
                for (&v, &w) in outs.iter().zip(ws) {
                    if !active[v as usize] && rng.gen::<f64>() < w {
                        active[v as usize] = true;
                        count += 1;
                        frontier.push(v);
                    }
                }
            }
        }
        Model::LT => {
            // Thresholds in (0, 1], drawn when a node is first touched.
            let mut threshold = vec![f64::NAN; n];
            let mut incoming = vec![0.0f64; n];
            let mut touched = Vec::new();
            while !frontier.is_empty() {
                touched.clear();
                for &u in &frontier {
                    let (outs, ws) = graph.out_edges(u);
                    for (&v, &w) in outs.iter().zip(ws) {
                        let vi = v as usize;
                        if active[vi] {
                            continue;
                        }
                        if threshold[vi].is_nan() {
                            threshold[vi] = 1.0 - rng.gen::<f64>();
                        }
                        incoming[vi] += w;
                        touched.push(v);
                    }
                }
                frontier.clear();
                for &v in &touched {
                    let vi = v as usize;
                    if !active[vi] && incoming[vi] >= threshold[vi] {
                        active[vi] = true;
                        count += 1;
                        frontier.push(v);
                    }
                }
            }
        }
    }
    count
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub runs: u64,
}

/// Mean and standard error of `runs` independent cascades.
pub fn mc_influence<R: Rng + ?Sized>(
    graph: &Graph,
    seeds: &[NodeId],
    model: Model,
    runs: u64,
    rng: &mut R,
) -> Result<McEstimate> {
    if runs == 0 {
        return Err(Error::arg("runs must be at least 1"));
    }
    check_seeds(graph, seeds)?;
    if model == Model::LT {
        graph.check_lt()?;
    }
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..runs {
        let x = cascade(graph, seeds, model, rng) as f64;
        sum += x;
        sum_sq += x * x;
    }
    let r = runs as f64;
    let mean = sum / r;
    let var = if runs > 1 {
        ((sum_sq - r * mean * mean) / (r - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(McEstimate {
        mean,
        stderr: (var / r).sqrt(),
        runs,
    })
}

fn check_seeds(graph: &Graph, seeds: &[NodeId]) -> Result<()> {
    if seeds.is_empty() {
        return Err(Error::arg("seed set is empty"));
    }
    if let Some(&bad) = seeds.iter().find(|&&s| s as usize >= graph.n()) {
        return Err(Error::OutOfRange {
            id: bad as u64,
            n: graph.n(),
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Enumeration

/// Visits every live-edge realization with nonzero probability, passing the
/// probability and the live edges. Returns the size of the full outcome space.
fn for_each_realization<F>(graph: &Graph, model: Model, mut visit: F) -> Result<u64>
where
    F: FnMut(f64, &[(NodeId, NodeId)]),
{
    if graph.n() > MAX_EXACT_NODES {
        return Err(Error::Size(format!(
            "{} nodes; exact evaluation supports at most {MAX_EXACT_NODES}",
            graph.n()
        )));
    }
    match model {
        Model::IC => {
            let m = graph.m();
            if m > 22 {
                return Err(Error::Size(format!("2^{m} IC outcomes exceed 2^22")));
            }
            // Certain edges (w = 0 or 1) are fixed; only the rest are enumerated.
            let mut fixed = Vec::new();
            let mut uncertain = Vec::new();
            for (u, v, w) in graph.edges() {
                if w >= 1.0 {
                    fixed.push((u, v));
                } else if w > 0.0 {
                    uncertain.push((u, v, w));
                }
            }
            let mut live = Vec::with_capacity(m);
            for bits in 0u64..1 << uncertain.len() {
                live.clear();
                live.extend_from_slice(&fixed);
                let mut p = 1.0;
                for (i, &(u, v, w)) in uncertain.iter().enumerate() {
                    if bits >> i & 1 == 1 {
                        p *= w;
                        live.push((u, v));
                    } else {
                        p *= 1.0 - w;
                    }
                }
                visit(p, &live);
            }
            Ok(1 << m)
        }
        Model::LT => {
            graph.check_lt()?;
            let mut space: u64 = 1;
            let mut choices: Vec<LtChoices> = Vec::new();
            for v in 0..graph.n() as NodeId {
                let (srcs, ws) = graph.in_edges(v);
                if srcs.is_empty() {
                    continue;
                }
                space = space.saturating_mul(srcs.len() as u64 + 1);
                if space > MAX_OUTCOMES {
                    return Err(Error::Size("LT outcome space exceeds 2^22".into()));
                }
                let mut opts: Vec<(Option<NodeId>, f64)> = srcs
                    .iter()
                    .zip(ws)
                    .filter(|(_, &w)| w > 0.0)
                    .map(|(&u, &w)| (Some(u), w))
                    .collect();
                let rest = (1.0 - graph.in_weight_sum(v)).max(0.0);
                if rest > 0.0 {
                    opts.push((None, rest));
                }
                choices.push((v, opts));
            }
            let mut digits = vec![0usize; choices.len()];
            let mut live = Vec::with_capacity(choices.len());
            loop {
                live.clear();
                let mut p = 1.0;
                for (&(v, ref opts), &d) in choices.iter().zip(&digits) {
                    let (pick, q) = opts[d];
                    p *= q;
                    if let Some(u) = pick {
                        live.push((u, v));
                    }
                }
                visit(p, &live);
                // advance the mixed-radix counter
                let mut i = 0;
                loop {
                    if i == digits.len() {
                        return Ok(space);
                    }
                    digits[i] += 1;
                    if digits[i] < choices[i].1.len() {
                        break;
                    }
                    digits[i] = 0;
                    i += 1;
                }
            }
        }
    }
}

/// Nodes reachable from `from` over `live`.
fn reach(from: Mask, live: &[(NodeId, NodeId)]) -> Mask {
    let mut set = from;
    loop {
        let before = set;
        for &(u, v) in live {
            if set >> u & 1 == 1 {
                set |= 1 << v;
            }
        }
        if set == before {
            return set;
        }
    }
}

/// `reach[v]` for every node: closure of `{v}` over `live`.
fn reach_all(n: usize, live: &[(NodeId, NodeId)], out: &mut Vec<Mask>) {
    out.clear();
    out.extend((0..n).map(|v| 1 << v));
    loop {
        let mut changed = false;
        for &(u, v) in live {
            let add = out[v as usize] & !out[u as usize];
            if add != 0 {
                out[u as usize] |= add;
                changed = true;
            }
        }
        if !changed {
            return;
        }
    }
}

fn seed_mask(graph: &Graph, seeds: &[NodeId]) -> Result<Mask> {
    check_seeds(graph, seeds)?;
    Ok(seeds.iter().fold(0, |m, &s| m | 1 << s))
}

fn weighted_count(mask: Mask, weights: Option<&[f64]>) -> f64 {
    match weights {
        None => mask.count_ones() as f64,
        Some(w) => (0..w.len())
            .filter(|&v| mask >> v & 1 == 1)
            .map(|v| w[v])
            .sum(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactInfluenceReport {
    pub influence: f64,
    pub outcomes_enumerated: u64,
    pub model: Model,
}

/// Exact expected number of nodes activated by `seeds`.
pub fn exact_influence(
    graph: &Graph,
    seeds: &[NodeId],
    model: Model,
) -> Result<ExactInfluenceReport> {
    exact_influence_inner(graph, seeds, model, None)
}

/// Exact `sum_v weights[v] * Pr[v is activated by seeds]`.
pub fn exact_weighted_influence(
    graph: &Graph,
    seeds: &[NodeId],
    model: Model,
    weights: &[f64],
) -> Result<ExactInfluenceReport> {
    if weights.len() != graph.n() {
        return Err(Error::arg("one weight per node required"));
    }
    exact_influence_inner(graph, seeds, model, Some(weights))
}

fn exact_influence_inner(
    graph: &Graph,
    seeds: &[NodeId],
    model: Model,
    weights: Option<&[f64]>,
) -> Result<ExactInfluenceReport> {
    if graph.n() > MAX_EXACT_NODES {
        return Err(Error::Size(format!("{} nodes", graph.n())));
    }
    let start = seed_mask(graph, seeds)?;
    let mut acc = CompensatedSum::default();
    let outcomes = for_each_realization(graph, model, |p, live| {
        if p > 0.0 {
            acc.add(p * weighted_count(reach(start, live), weights));
        }
    })?;
    Ok(ExactInfluenceReport {
        influence: acc.value(),
        outcomes_enumerated: outcomes,
        model,
    })
}

/// Exact influence of every size-`k` seed set, in lexicographic order.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactTable {
    pub k: usize,
    pub sets: Vec<Vec<NodeId>>,
    pub influence: Vec<f64>,
    pub outcomes_enumerated: u64,
}

impl ExactTable {
    pub fn build(graph: &Graph, k: usize, model: Model) -> Result<Self> {
        let n = graph.n();
        if k == 0 || k > n {
            return Err(Error::arg(format!("k = {k} must be in 1..={n}")));
        }
        let count = crate::bounds::ln_choose(n as u64, k as u64)?.exp().round();
        if count > MAX_SEED_SETS as f64 {
            return Err(Error::Size(format!(
                "C({n}, {k}) seed sets exceed {MAX_SEED_SETS}"
            )));
        }
        let sets = k_subsets(n, k);
        let masks: Vec<Vec<usize>> = sets
            .iter()
            .map(|s| s.iter().map(|&v| v as usize).collect())
            .collect();
        let mut acc = vec![CompensatedSum::default(); sets.len()];
        let mut reach_v = Vec::with_capacity(n);
        let outcomes = for_each_realization(graph, model, |p, live| {
            if p <= 0.0 {
                return;
            }
            reach_all(n, live, &mut reach_v);
            for (members, a) in masks.iter().zip(acc.iter_mut()) {
                let union = members.iter().fold(0, |m, &v| m | reach_v[v]);
                a.add(p * union.count_ones() as f64);
            }
        })?;
        Ok(ExactTable {
            k,
            sets,
            influence: acc.iter().map(CompensatedSum::value).collect(),
            outcomes_enumerated: outcomes,
        })
    }

    /// Exact influence of `seeds` (any order).
    pub fn lookup(&self, seeds: &[NodeId]) -> Option<f64> {
        let mut key = seeds.to_vec();
        key.sort_unstable();
        self.sets
            .binary_search(&key)
            .ok()
            .map(|i| self.influence[i])
    }

    /// Best set; near-ties (within `1e-12 * n`) go to the
    /// lexicographically first set.
    pub fn best(&self, n: usize) -> (Vec<NodeId>, f64) {
        let tol = 1e-12 * n as f64;
        let mut best = 0;
        for i in 1..self.sets.len() {
            if self.influence[i] > self.influence[best] + tol {
                best = i;
            }
        }
        (self.sets[best].clone(), self.influence[best])
    }
}

fn k_subsets(n: usize, k: usize) -> Vec<Vec<NodeId>> {
    let mut out = Vec::new();
    let mut cur: Vec<NodeId> = (0..k as NodeId).collect();
    loop {
        out.push(cur.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if (cur[i] as usize) < n - k + i {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactOpt {
    pub seeds: Vec<NodeId>,
    pub opt: f64,
    pub outcomes_enumerated: u64,
}

/// Exhaustive `OPT_k`.
pub fn exact_opt(graph: &Graph, k: usize, model: Model) -> Result<ExactOpt> {
    let table = ExactTable::build(graph, k, model)?;
    let (seeds, opt) = table.best(graph.n());
    Ok(ExactOpt {
        seeds,
        opt,
        outcomes_enumerated: table.outcomes_enumerated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::RngStream;

    fn g1() -> Graph {
        Graph::from_edges(2, [(0, 1, 1.0)]).unwrap()
    }

    fn g2() -> Graph {
        Graph::from_edges(3, [(0, 1, 0.5), (1, 2, 0.5), (2, 0, 0.5)]).unwrap()
    }

    fn g3() -> Graph {
        Graph::from_edges(5, (1..5).map(|v| (0, v, 1.0))).unwrap()
    }

    fn g4() -> Graph {
        Graph::from_edges(3, [(0, 1, 0.3), (2, 1, 0.4)]).unwrap()
    }

    #[test]
    fn exact_examples() {
        let r = exact_influence(&g1(), &[0], Model::IC).unwrap();
        assert_eq!(r.influence, 2.0);
        assert_eq!(r.outcomes_enumerated, 2);
        let r = exact_influence(&g2(), &[0], Model::IC).unwrap();
        assert!((r.influence - 1.75).abs() < 1e-15);
        assert_eq!(r.outcomes_enumerated, 8);
        let r = exact_influence(&g4(), &[0], Model::LT).unwrap();
        assert!((r.influence - 1.3).abs() < 1e-15);
        assert_eq!(r.outcomes_enumerated, 3);
    }

    #[test]
    fn full_seed_set_activates_everything() {
        for g in [g1(), g2(), g3(), g4()] {
            let all: Vec<NodeId> = (0..g.n() as NodeId).collect();
            for model in [Model::IC, Model::LT] {
                let r = exact_influence(&g, &all, model).unwrap();
                assert!((r.influence - g.n() as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn opt_examples() {
        let o = exact_opt(&g1(), 1, Model::IC).unwrap();
        assert_eq!((o.seeds, o.opt), (vec![0], 2.0));
        let o = exact_opt(&g3(), 1, Model::IC).unwrap();
        assert_eq!((o.seeds, o.opt), (vec![0], 5.0));
        let o = exact_opt(&g2(), 3, Model::LT).unwrap();
        assert_eq!(o.seeds, vec![0, 1, 2]);
        assert!((o.opt - 3.0).abs() < 1e-12);
    }

    #[test]
    fn table_agrees_with_single_set_evaluation() {
        let g = crate::harness::generate(&crate::harness::SyntheticSpec::erdos_renyi(7, 0.3, 4))
            .unwrap();
        for model in [Model::IC, Model::LT] {
            let table = ExactTable::build(&g, 2, model).unwrap();
            for (set, &inf) in table.sets.iter().zip(&table.influence) {
                let single = exact_influence(&g, set, model).unwrap().influence;
                assert!((single - inf).abs() < 1e-12, "{set:?}: {single} vs {inf}");
            }
        }
    }

    #[test]
    fn monotone_in_seed_set() {
        let g = crate::harness::generate(&crate::harness::SyntheticSpec::erdos_renyi(7, 0.3, 11))
            .unwrap();
        for model in [Model::IC, Model::LT] {
            for a in 0..7 {
                let base = exact_influence(&g, &[a], model).unwrap().influence;
                assert!(base >= 1.0 - 1e-12);
                for b in 0..7 {
                    let with = exact_influence(&g, &[a, b], model).unwrap().influence;
                    assert!(with >= base - 1e-12);
                }
            }
        }
    }

    #[test]
    fn guards() {
        let big = Graph::from_edges(30, (0..29).map(|i| (i, i + 1, 0.5))).unwrap();
        assert!(matches!(
            exact_influence(&big, &[0], Model::IC),
            Err(Error::Size(_))
        ));
        let many = Graph::from_edges(200, []).unwrap();
        assert!(matches!(
            exact_influence(&many, &[0], Model::IC),
            Err(Error::Size(_))
        ));
        let g = Graph::from_edges(40, []).unwrap();
        assert!(matches!(exact_opt(&g, 10, Model::IC), Err(Error::Size(_))));
        let heavy = Graph::from_edges(3, [(0, 2, 0.8), (1, 2, 0.8)]).unwrap();
        assert!(matches!(
            exact_influence(&heavy, &[0], Model::LT),
            Err(Error::Model(_))
        ));
    }

    #[test]
    fn simulate_deterministic_cases() {
        let mut rng = RngStream::new(3, 0).rng();
        for _ in 0..50 {
            assert_eq!(simulate_once(&g1(), &[0], Model::IC, &mut rng).unwrap(), 2);
            assert_eq!(simulate_once(&g1(), &[0], Model::LT, &mut rng).unwrap(), 2);
            assert_eq!(
                simulate_once(&g2(), &[0, 1, 2], Model::IC, &mut rng).unwrap(),
                3
            );
        }
    }

    #[test]
    fn mc_agrees_with_exact() {
        let mut rng = RngStream::new(5, 1).rng();
        let est = mc_influence(&g2(), &[0], Model::IC, 200_000, &mut rng).unwrap();
        assert!((est.mean - 1.75).abs() <= 4.0 * est.stderr, "{est:?}");
        let est = mc_influence(&g4(), &[0], Model::LT, 200_000, &mut rng).unwrap();
        assert!((est.mean - 1.3).abs() <= 4.0 * est.stderr, "{est:?}");
        let g = crate::harness::generate(&crate::harness::SyntheticSpec::erdos_renyi(8, 0.3, 2))
            .unwrap();
        for model in [Model::IC, Model::LT] {
            let exact = exact_influence(&g, &[1, 5], model).unwrap().influence;
            let est = mc_influence(&g, &[1, 5], model, 100_000, &mut rng).unwrap();
            assert!(
                (est.mean - exact).abs() <= 4.0 * est.stderr,
                "{model}: {est:?} vs {exact}"
            );
        }
        assert!(mc_influence(&g2(), &[0], Model::IC, 0, &mut rng).is_err());
    }

    #[test]
    fn weighted_exact_reduces_to_plain() {
        let g = g2();
        let plain = exact_influence(&g, &[0], Model::IC).unwrap().influence;
        let w = exact_weighted_influence(&g, &[0], Model::IC, &[1.0; 3])
            .unwrap()
            .influence;
        assert!((plain - w).abs() < 1e-15);
        // Only node 1 counts: Pr[1 active | S = {0}] = 0.5.
        let w = exact_weighted_influence(&g, &[0], Model::IC, &[0.0, 1.0, 0.0])
            .unwrap()
            .influence;
        assert!((w - 0.5).abs() < 1e-15);
    }

    #[test]
    fn k_subsets_lexicographic() {
        assert_eq!(
            k_subsets(4, 2),
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
        assert_eq!(k_subsets(3, 3), vec![vec![0, 1, 2]]);
        assert_eq!(k_subsets(3, 1).len(), 3);
    }
}
