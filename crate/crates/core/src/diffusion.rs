//! Forward Independent Cascade simulation and an exact brute-force influence
//! oracle for small graphs. The oracle is the ground truth the
//! reverse-reachability estimator is validated against.

use crate::graph::InfluenceNetwork;
use crate::seeding;
use crate::{Error, Result};
use rand::Rng;
use rayon::prelude::*;

/// One realized cascade.
#[derive(Debug, Clone)]
pub struct DiffusionOutcome {
    /// Activated nodes, sorted; always contains the seeds.
    pub activated: Vec<u32>,
    /// Diffusion rounds until quiescence (0 for an empty seed set).
    pub rounds: usize,
}

fn check_seeds(net: &InfluenceNetwork, seeds: &[u32]) -> Result<()> {
    for &s in seeds {
        if s as usize >= net.node_count() {
            return Err(Error::Domain(format!(
                "seed {s} out of range for {} nodes",
                net.node_count()
            )));
        }
    }
    Ok(())
}

/// Runs one Independent Cascade from `seeds`: each arc out of a newly active
/// node fires once, succeeding independently with its probability, until a
/// round activates nothing.
pub fn simulate_ic(net: &InfluenceNetwork, seeds: &[u32], rng_seed: u64) -> Result<DiffusionOutcome> {
    check_seeds(net, seeds)?;
    let mut rng = seeding::rng(rng_seed);
    Ok(simulate_ic_with(net, seeds, &mut rng))
}

/// As [`simulate_ic`] but drawing from a caller-provided RNG.
pub(crate) fn simulate_ic_with<R: Rng>(
    net: &InfluenceNetwork,
    seeds: &[u32],
    rng: &mut R,
) -> DiffusionOutcome {
    let mut active = vec![false; net.node_count()];
    let mut frontier: Vec<u32> = Vec::new();
    for &s in seeds {
        if !active[s as usize] {
            active[s as usize] = true;
            frontier.push(s);
        }
    }
    let mut activated: Vec<u32> = frontier.clone();
    let mut rounds = 0;
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &u in &frontier {
            for &(v, p) in net.out_arcs(u) {
                if !active[v as usize] && rng.gen::<f64>() < p {
                    active[v as usize] = true;
                    next.push(v);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        rounds += 1;
        activated.extend_from_slice(&next);
        frontier = next;
    }
    activated.sort_unstable();
    DiffusionOutcome { activated, rounds }
}

/// Monte Carlo estimate of the expected final cascade size.
#[derive(Debug, Clone, Copy)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: usize,
}

/// Estimates E[|activated|] over `trials` independent cascades. Trial `t`
/// derives its stream from (seed, t), so the result is independent of
/// evaluation order and identical whether run sequentially or in parallel.
pub fn estimate_influence_mc(
    net: &InfluenceNetwork,
    seeds: &[u32],
    trials: usize,
    rng_seed: u64,
) -> Result<McEstimate> {
    if trials < 1 {
        return Err(Error::Domain("trials must be at least 1".into()));
    }
    check_seeds(net, seeds)?;
    // Sizes are integers, so summing u64/u128 keeps the reduction exact and
    // order-independent.
    let (sum, sum_sq) = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = seeding::stream(rng_seed, t as u64);
            let size = simulate_ic_with(net, seeds, &mut rng).activated.len() as u64;
            (size, size as u128 * size as u128)
        })
        .reduce(|| (0u64, 0u128), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = trials as f64;
    let mean = sum as f64 / n;
    let var = if trials > 1 {
        ((sum_sq as f64) - (sum as f64) * (sum as f64) / n) / (n - 1.0)
    } else {
        0.0
    };
    Ok(McEstimate {
        mean,
        std_error: (var.max(0.0) / n).sqrt(),
        trials,
    })
}

/// Maximum number of unforced arcs [`exact_influence`] will enumerate.
pub const EXACT_ARC_LIMIT: usize = 24;

/// Exact expected influence by live-edge enumeration: sums reach over all
/// 2^|E| arc subsets weighted by their probability. Arcs with probability 1
/// are always live and do not count against the limit.
pub fn exact_influence(net: &InfluenceNetwork, seeds: &[u32]) -> Result<f64> {
    check_seeds(net, seeds)?;
    let forced: Vec<(u32, u32)> = net
        .arcs()
        .filter(|&(_, _, p)| p >= 1.0)
        .map(|(u, v, _)| (u, v))
        .collect();
    let random: Vec<(u32, u32, f64)> = net.arcs().filter(|&(_, _, p)| p < 1.0).collect();
    if random.len() > EXACT_ARC_LIMIT {
        return Err(Error::Capacity(format!(
            "exact_influence enumerates 2^arcs subgraphs and is capped at {} random arcs; got {}",
            EXACT_ARC_LIMIT,
            random.len()
        )));
    }
    if seeds.is_empty() {
        return Ok(0.0);
    }

    // Compact the nodes that can matter: seeds and arc endpoints. Everything
    // else never activates.
    let mut compact: Vec<u32> = seeds.to_vec();
    for &(u, v) in &forced {
        compact.push(u);
        compact.push(v);
    }
    for &(u, v, _) in &random {
        compact.push(u);
        compact.push(v);
    }
    compact.sort_unstable();
    compact.dedup();
    let index_of = |x: u32| compact.binary_search(&x).unwrap();
    let k = compact.len();
    assert!(k <= 64 + seeds.len(), "compact node set stays bitset-sized");
    let seed_mask: u128 = seeds.iter().map(|&s| 1u128 << index_of(s)).sum();
    let forced_ix: Vec<(usize, usize)> = forced
        .iter()
        .map(|&(u, v)| (index_of(u), index_of(v)))
        .collect();
    let random_ix: Vec<(usize, usize)> = random
        .iter()
        .map(|&(u, v, _)| (index_of(u), index_of(v)))
        .collect();
    debug_assert!(k <= 128);

    let mut total = 0.0;
    for mask in 0u64..(1u64 << random.len()) {
        let mut prob = 1.0;
        for (i, &(_, _, p)) in random.iter().enumerate() {
            prob *= if mask >> i & 1 == 1 { p } else { 1.0 - p };
        }
        if prob == 0.0 {
            continue;
        }
        // reach over live arcs by fixpoint iteration on a bitset
        let mut reach: u128 = seed_mask;
        loop {
            let before = reach;
            for &(u, v) in &forced_ix {
                if reach >> u & 1 == 1 {
                    reach |= 1 << v;
                }
            }
            for (i, &(u, v)) in random_ix.iter().enumerate() {
                if mask >> i & 1 == 1 && reach >> u & 1 == 1 {
                    reach |= 1 << v;
                }
            }
            if reach == before {
                break;
            }
        }
        total += prob * reach.count_ones() as f64;
    }
    Ok(total)
}
