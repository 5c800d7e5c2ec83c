//! RR-set pool with an inverted index, coverage counting and greedy
//! max-coverage.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::sampling::RRSet;

/// Append-only pool of RR sets stored in flat arrays. RR ids are positions
/// in generation order, so `index(v)` lists are always ascending.
#[derive(Clone, Debug, Default)]
pub struct RRCollection {
    n: usize,
    offsets: Vec<usize>,
    items: Vec<NodeId>,
    roots: Vec<NodeId>,
    index: Vec<Vec<u32>>,
}

/// Result of greedy max-coverage.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Greedy {
    pub seeds: Vec<NodeId>,
    pub coverage: u64,
}

impl RRCollection {
    pub fn new(n: usize) -> Self {
        RRCollection {
            n,
            offsets: vec![0],
            items: Vec::new(),
            roots: Vec::new(),
            index: vec![Vec::new(); n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    /// Sum of RR-set sizes.
    pub fn total_items(&self) -> usize {
        self.items.len()
    }

    /// Node ids of RR set `id`; the root comes first.
    pub fn get(&self, id: usize) -> &[NodeId] {
        &self.items[self.offsets[id]..self.offsets[id + 1]]
    }

    pub fn root(&self, id: usize) -> NodeId {
        self.roots[id]
    }

    /// Ids of the RR sets containing `v`, ascending.
    pub fn index(&self, v: NodeId) -> &[u32] {
        &self.index[v as usize]
    }

    /// Appends one RR set. Its node list must be duplicate-free.
    pub fn append(&mut self, rr: &RRSet) -> Result<()> {
        if let Some(&bad) = rr.nodes.iter().find(|&&v| v as usize >= self.n) {
            return Err(Error::OutOfRange {
                id: bad as u64,
                n: self.n,
            });
        }
        let id = u32::try_from(self.len())
            .map_err(|_| Error::arg("RR collection is full (2^32 sets)"))?;
        for &v in &rr.nodes {
            self.index[v as usize].push(id);
        }
        self.items.extend_from_slice(&rr.nodes);
        self.offsets.push(self.items.len());
        self.roots.push(rr.root);
        Ok(())
    }

    pub fn extend<'a, I: IntoIterator<Item = &'a RRSet>>(&mut self, sets: I) -> Result<()> {
        sets.into_iter().try_for_each(|rr| self.append(rr))
    }

    fn check_range(&self, range: &Range<usize>) -> Result<()> {
        if range.start > range.end || range.end > self.len() {
            return Err(Error::arg(format!(
                "RR range {range:?} outside 0..{}",
                self.len()
            )));
        }
        Ok(())
    }

    fn check_seeds(&self, seeds: &[NodeId]) -> Result<()> {
        if seeds.is_empty() {
            return Err(Error::arg("seed set is empty"));
        }
        if let Some(&bad) = seeds.iter().find(|&&v| v as usize >= self.n) {
            return Err(Error::OutOfRange {
                id: bad as u64,
                n: self.n,
            });
        }
        Ok(())
    }

    /// Slice of `index(v)` falling inside `range`.
    fn index_in(&self, v: NodeId, range: &Range<usize>) -> &[u32] {
        let list = &self.index[v as usize];
        let lo = list.partition_point(|&id| (id as usize) < range.start);
        let hi = list.partition_point(|&id| (id as usize) < range.end);
        &list[lo..hi]
    }

    /// Number of RR sets in the whole pool intersecting `seeds`.
    pub fn cov(&self, seeds: &[NodeId]) -> Result<u64> {
        self.cov_in(seeds, 0..self.len())
    }

    /// Number of RR sets with id in `range` intersecting `seeds`.
    pub fn cov_in(&self, seeds: &[NodeId], range: Range<usize>) -> Result<u64> {
        self.check_seeds(seeds)?;
        self.check_range(&range)?;
        let mut hit = vec![false; range.len()];
        let mut count = 0;
        for &s in seeds {
            for &id in self.index_in(s, &range) {
                let slot = &mut hit[id as usize - range.start];
                if !*slot {
                    *slot = true;
                    count += 1;
                }
            }
        }
        Ok(count)
    }

    /// `scale * cov / |range|`; `scale` is `n` for plain influence.
    pub fn estimate_scaled(
        &self,
        seeds: &[NodeId],
        range: Range<usize>,
        scale: f64,
    ) -> Result<f64> {
        if range.is_empty() {
            return Err(Error::arg("cannot estimate influence on an empty RR range"));
        }
        let len = range.len();
        Ok(scale * self.cov_in(seeds, range)? as f64 / len as f64)
    }

    /// `n * Cov(S) / |range|`.
    pub fn estimate_influence(&self, seeds: &[NodeId], range: Range<usize>) -> Result<f64> {
        self.estimate_scaled(seeds, range, self.n as f64)
    }

    pub fn max_coverage_greedy(&self, k: usize) -> Result<Greedy> {
        self.max_coverage_greedy_in(k, 0..self.len())
    }

    /// Greedy max-coverage over the RR sets in `range`.
    ///
    /// Always returns exactly `k` distinct nodes: the largest marginal gain
    /// wins, ties go to the smallest id, and zero-gain nodes pad the result.
    /// Gains only shrink, so stale heap entries are refreshed lazily.
    pub fn max_coverage_greedy_in(&self, k: usize, range: Range<usize>) -> Result<Greedy> {
        if k == 0 || k > self.n {
            return Err(Error::arg(format!("k = {k} must be in 1..={}", self.n)));
        }
        self.check_range(&range)?;
        let mut gain: Vec<u64> = (0..self.n as NodeId)
            .map(|v| self.index_in(v, &range).len() as u64)
            .collect();
        let mut heap: BinaryHeap<(u64, Reverse<NodeId>)> = gain
            .iter()
            .enumerate()
            .map(|(v, &g)| (g, Reverse(v as NodeId)))
            .collect();
        let mut covered = vec![false; range.len()];
        let mut seeds = Vec::with_capacity(k);
        let mut coverage = 0;

        while seeds.len() < k {
            let (g, Reverse(v)) = heap.pop().expect("k <= n nodes in the heap");
            if g != gain[v as usize] {
                heap.push((gain[v as usize], Reverse(v)));
                continue;
            }
            seeds.push(v);
            coverage += g;
            for &id in self.index_in(v, &range) {
                let slot = &mut covered[id as usize - range.start];
                if *slot {
                    continue;
                }
                *slot = true;
                for &u in self.get(id as usize) {
                    gain[u as usize] -= 1;
                }
            }
            debug_assert_eq!(gain[v as usize], 0);
        }
        Ok(Greedy { seeds, coverage })
    }
}
