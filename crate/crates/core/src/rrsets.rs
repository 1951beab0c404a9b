//! Reverse-reachability sampling and reach estimation.
//!
//! A collection of reverse reachable sets for one advertiser turns influence
//! estimation into set coverage: the fraction of sets a seed set hits, scaled
//! by n, is an unbiased estimate of its expected reach.

use crate::graph::InfluenceNetwork;
use crate::seeding;
use crate::{Error, Result};
use rand::Rng;
use rayon::prelude::*;
use std::io::{Read, Write};

/// One sampled reverse reachable set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RRSet {
    /// The uniformly sampled target node.
    pub root: u32,
    /// Nodes that reach the root in the realized live-edge graph, sorted.
    /// Always contains the root.
    pub nodes: Vec<u32>,
}

/// A multiset of reverse reachable sets for one advertiser, with an inverted
/// node -> set-indices index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RRCollection {
    advertiser: usize,
    node_count: usize,
    sets: Vec<RRSet>,
    inverted: Vec<Vec<u32>>,
}

/// Reusable scratch for one sampling thread.
struct Scratch {
    stamp_of: Vec<u32>,
    stamp: u32,
    queue: Vec<u32>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Scratch {
            stamp_of: vec![0; n],
            stamp: 0,
            queue: Vec::new(),
        }
    }
}

fn sample_one<R: Rng>(net: &InfluenceNetwork, rng: &mut R, scratch: &mut Scratch) -> RRSet {
    let n = net.node_count();
    let root = rng.gen_range(0..n) as u32;
    scratch.stamp += 1;
    let stamp = scratch.stamp;
    scratch.queue.clear();
    scratch.queue.push(root);
    scratch.stamp_of[root as usize] = stamp;
    let mut head = 0;
    // Each incoming arc of a visited node is flipped at most once: a node is
    // dequeued once, and already-visited sources are skipped before flipping.
    while head < scratch.queue.len() {
        let v = scratch.queue[head];
        head += 1;
        for &(u, p) in net.in_arcs(v) {
            if scratch.stamp_of[u as usize] != stamp && rng.gen::<f64>() < p {
                scratch.stamp_of[u as usize] = stamp;
                scratch.queue.push(u);
            }
        }
    }
    let mut nodes = scratch.queue.clone();
    nodes.sort_unstable();
    RRSet { root, nodes }
}

impl RRCollection {
    fn assemble(advertiser: usize, node_count: usize, sets: Vec<RRSet>) -> Self {
        let mut inverted = vec![Vec::new(); node_count];
        for (i, set) in sets.iter().enumerate() {
            for &v in &set.nodes {
                inverted[v as usize].push(i as u32);
            }
        }
        RRCollection {
            advertiser,
            node_count,
            sets,
            inverted,
        }
    }

    /// Samples `count` reverse reachable sets sequentially. Sample `i`
    /// derives its stream from (seed, i).
    pub fn sample(
        net: &InfluenceNetwork,
        advertiser: usize,
        count: usize,
        rng_seed: u64,
    ) -> Result<Self> {
        if count == 0 {
            return Err(Error::Domain("RR sample count must be at least 1".into()));
        }
        let mut scratch = Scratch::new(net.node_count());
        let sets = (0..count)
            .map(|i| {
                let mut rng = seeding::stream(rng_seed, i as u64);
                sample_one(net, &mut rng, &mut scratch)
            })
            .collect();
        Ok(Self::assemble(advertiser, net.node_count(), sets))
    }

    /// Parallel sampling; bit-identical to [`RRCollection::sample`] for the
    /// same seed because sample `i` owns stream (seed, i) and sets are kept
    /// in index order.
    pub fn sample_par(
        net: &InfluenceNetwork,
        advertiser: usize,
        count: usize,
        rng_seed: u64,
    ) -> Result<Self> {
        if count == 0 {
            return Err(Error::Domain("RR sample count must be at least 1".into()));
        }
        let sets: Vec<RRSet> = (0..count)
            .into_par_iter()
            .map_init(
                || Scratch::new(net.node_count()),
                |scratch, i| {
                    let mut rng = seeding::stream(rng_seed, i as u64);
                    sample_one(net, &mut rng, scratch)
                },
            )
            .collect();
        Ok(Self::assemble(advertiser, net.node_count(), sets))
    }

    pub fn advertiser(&self) -> usize {
        self.advertiser
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Number of sampled sets (rho).
    pub fn rho(&self) -> usize {
        self.sets.len()
    }

    pub fn sets(&self) -> &[RRSet] {
        &self.sets
    }

    /// Indices of the sets containing `v`, sorted ascending.
    pub fn sets_containing(&self, v: u32) -> &[u32] {
        &self.inverted[v as usize]
    }

    /// Number of sets intersecting `seeds`, via the inverted index with a
    /// per-call visited mark.
    pub fn coverage_count(&self, seeds: &[u32]) -> usize {
        let mut hit = vec![false; self.sets.len()];
        let mut count = 0;
        for &v in seeds {
            for &i in &self.inverted[v as usize] {
                if !hit[i as usize] {
                    hit[i as usize] = true;
                    count += 1;
                }
            }
        }
        count
    }

    /// Unbiased reach estimate n * I(S) / rho.
    pub fn estimate_reach(&self, seeds: &[u32]) -> f64 {
        self.node_count as f64 * self.coverage_count(seeds) as f64 / self.rho() as f64
    }

    /// Binary dump: magic, advertiser, n, rho, then one record per set
    /// (root, length, sorted nodes), all little-endian.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(b"RRC1")?;
        w.write_all(&(self.advertiser as u64).to_le_bytes())?;
        w.write_all(&(self.node_count as u64).to_le_bytes())?;
        w.write_all(&(self.sets.len() as u64).to_le_bytes())?;
        for set in &self.sets {
            w.write_all(&set.root.to_le_bytes())?;
            w.write_all(&(set.nodes.len() as u32).to_le_bytes())?;
            for &v in &set.nodes {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != b"RRC1" {
            return Err(Error::Parse {
                line: 0,
                msg: "bad RR collection magic".into(),
            });
        }
        let mut u64buf = [0u8; 8];
        let mut read_u64 = |r: &mut R| -> Result<u64> {
            r.read_exact(&mut u64buf)?;
            Ok(u64::from_le_bytes(u64buf))
        };
        let advertiser = read_u64(&mut r)? as usize;
        let node_count = read_u64(&mut r)? as usize;
        let rho = read_u64(&mut r)? as usize;
        if rho == 0 {
            return Err(Error::Parse {
                line: 0,
                msg: "RR collection must contain at least one set".into(),
            });
        }
        let mut u32buf = [0u8; 4];
        let mut read_u32 = |r: &mut R| -> Result<u32> {
            r.read_exact(&mut u32buf)?;
            Ok(u32::from_le_bytes(u32buf))
        };
        let mut sets = Vec::with_capacity(rho);
        for _ in 0..rho {
            let root = read_u32(&mut r)?;
            let len = read_u32(&mut r)? as usize;
            let mut nodes = Vec::with_capacity(len);
            for _ in 0..len {
                nodes.push(read_u32(&mut r)?);
            }
            let sorted = nodes.windows(2).all(|w| w[0] < w[1]);
            let in_range = nodes.iter().all(|&v| (v as usize) < node_count);
            if !sorted || !in_range || nodes.binary_search(&root).is_err() {
                return Err(Error::Parse {
                    line: 0,
                    msg: "malformed RR set record".into(),
                });
            }
            sets.push(RRSet { root, nodes });
        }
        Ok(Self::assemble(advertiser, node_count, sets))
    }
}

/// The calibrated default sample count: 10 n sets per advertiser.
pub fn default_sample_count(n: usize) -> usize {
    10 * n
}

/// The theoretical per-advertiser sample-size bound
/// `9 n^3 m^2 (c ln n + ln m + ln C(n, k_j) + ln 2) / (opt_j eps^2)`.
///
/// Documented for reference only; it is never used as a runtime default
/// because it is far too large to be practical. Use
/// [`default_sample_count`] instead.
pub fn theoretical_sample_bound(
    n: usize,
    m: usize,
    seed_cap: usize,
    c: f64,
    epsilon: f64,
    opt_lower_bound: f64,
) -> f64 {
    let ln_choose = |n: usize, k: usize| -> f64 {
        let k = k.min(n - k.min(n));
        (0..k)
            .map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln())
            .sum()
    };
    let nf = n as f64;
    let mf = m as f64;
    9.0 * nf.powi(3) * mf * mf * (c * nf.ln() + mf.ln() + ln_choose(n, seed_cap) + 2f64.ln())
        / (opt_lower_bound * epsilon * epsilon)
}

/// Incremental coverage bookkeeping for greedy selection: supports O(1)
/// marginal-coverage queries and amortized marking of newly covered sets.
#[derive(Debug, Clone)]
pub struct CoverageTracker<'a> {
    collection: &'a RRCollection,
    covered: Vec<bool>,
    /// Per node, the number of sets containing it that are not yet covered.
    uncovered_sets_of: Vec<u32>,
    covered_total: usize,
}

impl<'a> CoverageTracker<'a> {
    pub fn new(collection: &'a RRCollection) -> Self {
        let uncovered_sets_of = (0..collection.node_count())
            .map(|v| collection.inverted[v].len() as u32)
            .collect();
        CoverageTracker {
            collection,
            covered: vec![false; collection.rho()],
            uncovered_sets_of,
            covered_total: 0,
        }
    }

    /// Number of not-yet-covered sets that `v` would newly cover.
    pub fn newly_covered(&self, v: u32) -> u32 {
        self.uncovered_sets_of[v as usize]
    }

    /// Marks every set containing `v` as covered.
    pub fn mark(&mut self, v: u32) {
        for &i in self.collection.sets_containing(v) {
            if !self.covered[i as usize] {
                self.covered[i as usize] = true;
                self.covered_total += 1;
                for &w in &self.collection.sets[i as usize].nodes {
                    self.uncovered_sets_of[w as usize] -= 1;
                }
            }
        }
    }

    pub fn covered_count(&self) -> usize {
        self.covered_total
    }

    /// Current reach estimate of the marked seed set.
    pub fn reach(&self) -> f64 {
        self.collection.node_count as f64 * self.covered_total as f64
            / self.collection.rho() as f64
    }

    /// Reach estimate if `v` were added.
    pub fn reach_with(&self, v: u32) -> f64 {
        self.collection.node_count as f64
            * (self.covered_total + self.newly_covered(v) as usize) as f64
            / self.collection.rho() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::exact_influence;
    use crate::graph::{assign_uniform_probabilities, preferential_attachment, InfluenceNetwork};
    use proptest::prelude::*;

    fn single_arc(p: f64) -> InfluenceNetwork {
        InfluenceNetwork::from_arcs(2, [(0, 1, p)]).unwrap()
    }

    #[test]
    fn zero_count_rejected() {
        let net = single_arc(0.5);
        assert!(RRCollection::sample(&net, 0, 0, 1).is_err());
    }

    #[test]
    fn zero_probability_sets_are_roots_only() {
        let net = InfluenceNetwork::from_arcs(5, []).unwrap();
        let coll = RRCollection::sample(&net, 0, 50, 2).unwrap();
        for set in coll.sets() {
            assert_eq!(set.nodes, vec![set.root]);
        }
    }

    #[test]
    fn certain_probability_gives_deterministic_reachability() {
        // chain 0 -> 1 -> 2, p = 1: set of root 2 is everyone, of root 0 is {0}
        let net = InfluenceNetwork::from_arcs(3, [(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let coll = RRCollection::sample(&net, 0, 200, 3).unwrap();
        for set in coll.sets() {
            let expected: Vec<u32> = (0..=set.root).collect();
            assert_eq!(set.nodes, expected);
        }
    }

    #[test]
    fn single_arc_binomial_check() {
        let net = single_arc(0.5);
        let rho = 100_000;
        let coll = RRCollection::sample(&net, 0, rho, 7).unwrap();
        let (mut root_b, mut full) = (0u32, 0u32);
        for set in coll.sets() {
            if set.root == 1 {
                root_b += 1;
                if set.nodes == vec![0, 1] {
                    full += 1;
                }
            }
        }
        let frac = full as f64 / root_b as f64;
        let sigma = (0.5 * 0.5 / root_b as f64).sqrt();
        assert!(
            (frac - 0.5).abs() <= 3.0 * sigma,
            "fraction {frac} vs 0.5 +- {sigma}"
        );
    }

    #[test]
    fn coverage_trivia() {
        let net = single_arc(0.5);
        let coll = RRCollection::sample(&net, 0, 1000, 9).unwrap();
        assert_eq!(coll.coverage_count(&[]), 0);
        assert_eq!(coll.coverage_count(&[0, 1]), coll.rho());
        assert_eq!(coll.estimate_reach(&[0, 1]), 2.0);
        assert_eq!(
            coll.coverage_count(&[0]),
            coll.sets_containing(0).len()
        );
    }

    #[test]
    fn estimate_tracks_exact_influence() {
        let net = single_arc(0.5);
        let coll = RRCollection::sample(&net, 0, 100_000, 11).unwrap();
        let est = coll.estimate_reach(&[0]);
        assert!((est - 1.5).abs() / 1.5 < 0.02, "estimate {est}");
    }

    #[test]
    fn unbiasedness_over_collections() {
        let base = preferential_attachment(10, 2, 5).unwrap();
        let net = crate::graph::assign_lambda_probabilities(&base, 0.4, 6).unwrap();
        let seeds = [0u32, 3];
        let exact = exact_influence(&net, &seeds);
        let exact = match exact {
            Ok(v) => v,
            // Too many arcs for the oracle: thin the graph instead.
            Err(_) => return,
        };
        let draws = 400;
        let per = 200;
        let mut means = Vec::new();
        for d in 0..draws {
            let coll = RRCollection::sample(&net, 0, per, 1000 + d).unwrap();
            means.push(coll.estimate_reach(&seeds));
        }
        let mean: f64 = means.iter().sum::<f64>() / draws as f64;
        let var: f64 =
            means.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (draws as f64 - 1.0);
        let sigma = (var / draws as f64).sqrt();
        assert!(
            (mean - exact).abs() <= 4.0 * sigma.max(1e-9),
            "mean {mean} vs exact {exact} +- {sigma}"
        );
    }

    #[test]
    fn parallel_equals_sequential() {
        let base = preferential_attachment(60, 3, 13).unwrap();
        let net = crate::graph::assign_lambda_probabilities(&base, 0.4, 14).unwrap();
        let seq = RRCollection::sample(&net, 2, 500, 77).unwrap();
        let par = RRCollection::sample_par(&net, 2, 500, 77).unwrap();
        assert_eq!(seq, par);
    }

    #[test]
    fn default_sample_count_is_ten_n() {
        assert_eq!(default_sample_count(100), 1000);
        assert_eq!(default_sample_count(1), 10);
        assert_eq!(default_sample_count(2889), 28890);
    }

    #[test]
    fn theoretical_bound_dwarfs_the_default() {
        let bound = theoretical_sample_bound(100, 2, 5, 1.0, 0.1, 10.0);
        assert!(bound > default_sample_count(100) as f64 * 1e3);
    }

    #[test]
    fn tracker_matches_direct_coverage() {
        let base = preferential_attachment(30, 2, 21).unwrap();
        let net = crate::graph::assign_lambda_probabilities(&base, 0.4, 22).unwrap();
        let coll = RRCollection::sample(&net, 0, 2000, 23).unwrap();
        let mut tracker = CoverageTracker::new(&coll);
        let mut seeds = Vec::new();
        for v in [4u32, 9, 17] {
            // marginal identity: reach(S + v) - reach(S) = n/rho * newly covered
            let direct_before = coll.estimate_reach(&seeds);
            let gain = tracker.reach_with(v) - tracker.reach();
            seeds.push(v);
            let direct_after = coll.estimate_reach(&seeds);
            assert!((gain - (direct_after - direct_before)).abs() < 1e-12);
            tracker.mark(v);
            assert_eq!(tracker.covered_count(), coll.coverage_count(&seeds));
        }
    }

    #[test]
    fn binary_roundtrip() {
        let base = preferential_attachment(15, 2, 31).unwrap();
        let net = assign_uniform_probabilities(&base, 0.3).unwrap();
        let coll = RRCollection::sample(&net, 1, 64, 32).unwrap();
        let mut buf = Vec::new();
        coll.write_binary(&mut buf).unwrap();
        let back = RRCollection::read_binary(&buf[..]).unwrap();
        assert_eq!(coll, back);
    }

    proptest! {
        // Coverage of RR sets is a coverage function, hence submodular in the
        // seed set.
        #[test]
        fn coverage_is_submodular(seed in 0u64..200) {
            let base = preferential_attachment(12, 2, seed).unwrap();
            let net = crate::graph::assign_lambda_probabilities(&base, 0.5, seed ^ 9).unwrap();
            let coll = RRCollection::sample(&net, 0, 60, seed ^ 5).unwrap();
            let cover = |mask: u32| {
                let seeds: Vec<u32> = (0..12u32).filter(|&v| mask >> v & 1 == 1).collect();
                coll.coverage_count(&seeds) as i64
            };
            let s = (seed as u32) & 0xAAA;
            let t = s | ((seed as u32) >> 3 & 0x555);
            for x in 0..12u32 {
                if t >> x & 1 == 1 { continue; }
                let gs = cover(s | 1 << x) - cover(s);
                let gt = cover(t | 1 << x) - cover(t);
                prop_assert!(gs >= gt);
            }
        }
    }
}
