//! Dependent randomized rounding of fractional selections.
//!
//! The x variables are edges of a bipartite graph (nodes on one side,
//! advertisers on the other). Rounding repeatedly picks a cycle or a maximal
//! path among the fractional edges, splits it into the two alternating
//! matchings, and shifts one matching up and the other down by a two-sided
//! random amount that keeps every marginal exact and makes at least one edge
//! integral. Interior vertices keep their fractional degree exactly, so
//! exposure bounds and seed caps hold in every single trial, and rounded
//! values within a vertex's edges are negatively correlated.
//!
//! The total seed budget is not a bipartite degree, so once the fractional
//! edges form a matching the remaining pairs are rounded with the same
//! sum-preserving shift, and a final lone variable becomes 1 with probability
//! equal to its value.

use super::{LPInstance, LPSolution, INTEGRALITY_SNAP};
use crate::allocation::{Allocation, GroundElement};
use crate::seeding;
use crate::{Error, Result};
use rand::Rng;
use rayon::prelude::*;

/// Outcome of one rounding trial.
#[derive(Debug, Clone)]
pub struct RoundedAllocation {
    pub allocation: Allocation,
    /// (n / rho_j) c_j times the number of covered sets, summed; the
    /// in-expectation revenue the (1 - 1/e) guarantee speaks about.
    pub revenue_uncapped: f64,
    /// Same with each advertiser's budget cap applied per trial.
    pub revenue_capped: f64,
}

fn is_fractional(v: f64) -> bool {
    v > INTEGRALITY_SNAP && v < 1.0 - INTEGRALITY_SNAP
}

fn snap(v: &mut f64) {
    if *v <= INTEGRALITY_SNAP {
        *v = 0.0;
    } else if *v >= 1.0 - INTEGRALITY_SNAP {
        *v = 1.0;
    }
}

/// Shifts matching `m1` up / `m2` down by alpha with probability
/// beta / (alpha + beta), else m1 down / m2 up by beta; preserves every
/// marginal and integralizes at least one participating variable. `m2` may be
/// empty, which degenerates to Bernoulli rounding of a single variable.
fn pair_shift<R: Rng>(x: &mut [f64], m1: &[usize], m2: &[usize], rng: &mut R) {
    let min_over = |ids: &[usize], f: &dyn Fn(f64) -> f64| {
        ids.iter().map(|&e| f(x[e])).fold(f64::INFINITY, f64::min)
    };
    let alpha = min_over(m1, &|v| 1.0 - v).min(min_over(m2, &|v| v));
    let beta = min_over(m1, &|v| v).min(min_over(m2, &|v| 1.0 - v));
    debug_assert!(alpha > 0.0 && beta > 0.0);
    let up = rng.gen::<f64>() < beta / (alpha + beta);
    let (d1, d2) = if up { (alpha, -alpha) } else { (-beta, beta) };
    for &e in m1 {
        x[e] += d1;
        snap(&mut x[e]);
    }
    for &e in m2 {
        x[e] += d2;
        snap(&mut x[e]);
    }
}

/// Splits a walk's edges into its two alternating matchings and shifts.
fn round_walk<R: Rng>(x: &mut [f64], walk: &[usize], rng: &mut R) {
    let m1: Vec<usize> = walk.iter().step_by(2).copied().collect();
    let m2: Vec<usize> = walk.iter().skip(1).step_by(2).copied().collect();
    pair_shift(x, &m1, &m2, rng);
}

/// Bipartite view over the fractional entries of x. Vertices 0..n are nodes,
/// n..n+m advertisers; edge ids are x indices.
fn fractional_adjacency(x: &[f64], n: usize, m: usize) -> Vec<Vec<(usize, usize)>> {
    let mut adj = vec![Vec::new(); n + m];
    for j in 0..m {
        for v in 0..n {
            let e = j * n + v;
            if is_fractional(x[e]) {
                adj[v].push((e, n + j));
                adj[n + j].push((e, v));
            }
        }
    }
    adj
}

/// Finds any cycle among the fractional edges, as a list of consecutive edge
/// ids (even length in a bipartite graph).
fn find_cycle(adj: &[Vec<(usize, usize)>]) -> Option<Vec<usize>> {
    let nv = adj.len();
    let mut color = vec![0u8; nv];
    let mut parent_edge = vec![usize::MAX; nv];
    let mut parent_vertex = vec![usize::MAX; nv];
    for start in 0..nv {
        if color[start] != 0 || adj[start].is_empty() {
            continue;
        }
        let mut stack: Vec<(usize, usize)> = vec![(start, 0)];
        color[start] = 1;
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            if *next < adj[v].len() {
                let (e, w) = adj[v][*next];
                *next += 1;
                if e == parent_edge[v] {
                    continue;
                }
                match color[w] {
                    0 => {
                        color[w] = 1;
                        parent_edge[w] = e;
                        parent_vertex[w] = v;
                        stack.push((w, 0));
                    }
                    1 => {
                        // back edge closes a cycle through the DFS stack
                        let mut cycle = vec![e];
                        let mut cur = v;
                        while cur != w {
                            cycle.push(parent_edge[cur]);
                            cur = parent_vertex[cur];
                        }
                        return Some(cycle);
                    }
                    _ => {}
                }
            } else {
                color[v] = 2;
                stack.pop();
            }
        }
    }
    None
}

/// In a forest, walks from some leaf to another; returns the edge sequence if
/// it has at least two edges.
fn find_long_path(adj: &[Vec<(usize, usize)>]) -> Option<Vec<usize>> {
    for leaf in 0..adj.len() {
        if adj[leaf].len() != 1 {
            continue;
        }
        let mut edges = Vec::new();
        let mut prev = usize::MAX;
        let mut cur = leaf;
        loop {
            match adj[cur].iter().find(|&&(e, _)| e != prev) {
                None => break,
                Some(&(e, w)) => {
                    edges.push(e);
                    prev = e;
                    cur = w;
                }
            }
        }
        if edges.len() >= 2 {
            return Some(edges);
        }
    }
    None
}

fn fractional_ids(x: &[f64]) -> Vec<usize> {
    (0..x.len()).filter(|&e| is_fractional(x[e])).collect()
}

/// Shared final phases: pair remaining fractional variables (a matching at
/// this point in the dependent case, arbitrary leftovers in the star case)
/// with the sum-preserving shift, then round a lone survivor by itself.
fn finish_rounding<R: Rng>(x: &mut [f64], rng: &mut R) {
    loop {
        let frac = fractional_ids(x);
        match frac.len() {
            0 => return,
            1 => {
                pair_shift(x, &[frac[0]], &[], rng);
                return;
            }
            _ => pair_shift(x, &[frac[0]], &[frac[1]], rng),
        }
    }
}

fn validate_fractional(sol: &LPSolution) -> Result<()> {
    for &v in &sol.x {
        if !(-INTEGRALITY_SNAP..=1.0 + INTEGRALITY_SNAP).contains(&v) {
            return Err(Error::Domain(format!("x value {v} outside [0, 1]")));
        }
    }
    Ok(())
}

fn assemble(lp: &LPInstance, x: &[f64]) -> Result<RoundedAllocation> {
    let n = lp.node_count;
    let m = lp.advertiser_count;
    let mut allocation = Allocation::new(n, m);
    let mut selected = vec![false; x.len()];
    for j in 0..m as u32 {
        for v in 0..n as u32 {
            let e = j as usize * n + v as usize;
            debug_assert!(x[e] == 0.0 || x[e] == 1.0);
            if x[e] == 1.0 {
                selected[e] = true;
                allocation.insert(GroundElement::new(v, j))?;
            }
        }
    }
    let mut uncapped = 0.0;
    let mut capped = 0.0;
    for j in 0..m {
        let hit_sets = lp.sets[j]
            .iter()
            .filter(|set| set.iter().any(|&v| selected[j * n + v as usize]))
            .count();
        let revenue = lp.coeff[j] * hit_sets as f64;
        uncapped += revenue;
        capped += revenue.min(lp.budgets[j]);
    }
    Ok(RoundedAllocation {
        allocation,
        revenue_uncapped: uncapped,
        revenue_capped: capped,
    })
}

/// General dependent rounding on the bipartite constraint graph; valid with
/// or without advertiser caps.
pub fn dependent_round(
    lp: &LPInstance,
    sol: &LPSolution,
    rng_seed: u64,
) -> Result<RoundedAllocation> {
    validate_fractional(sol)?;
    let mut x = sol.x.clone();
    x.iter_mut().for_each(snap);
    let mut rng = seeding::rng(rng_seed);
    loop {
        let adj = fractional_adjacency(&x, lp.node_count, lp.advertiser_count);
        if let Some(cycle) = find_cycle(&adj) {
            round_walk(&mut x, &cycle, &mut rng);
        } else if let Some(path) = find_long_path(&adj) {
            round_walk(&mut x, &path, &mut rng);
        } else {
            break; // fractional edges now form a matching
        }
    }
    finish_rounding(&mut x, &mut rng);
    assemble(lp, &x)
}

/// Linear-time specialization for instances without advertiser caps: the
/// bipartite constraints are disjoint stars, so it suffices to pair-round
/// fractional variables sharing a node until at most one remains per node,
/// then run the cross-node pairing loop.
pub fn star_round(lp: &LPInstance, sol: &LPSolution, rng_seed: u64) -> Result<RoundedAllocation> {
    if lp.advertiser_caps.is_some() {
        return Err(Error::Config(
            "star rounding requires an instance without advertiser seed caps; \
             use dependent_round"
                .into(),
        ));
    }
    validate_fractional(sol)?;
    let n = lp.node_count;
    let m = lp.advertiser_count;
    let mut x = sol.x.clone();
    x.iter_mut().for_each(snap);
    let mut rng = seeding::rng(rng_seed);
    for v in 0..n {
        loop {
            let frac: Vec<usize> = (0..m)
                .map(|j| j * n + v)
                .filter(|&e| is_fractional(x[e]))
                .collect();
            if frac.len() < 2 {
                break;
            }
            pair_shift(&mut x, &[frac[0]], &[frac[1]], &mut rng);
        }
    }
    finish_rounding(&mut x, &mut rng);
    assemble(lp, &x)
}

/// One row of the rounding report CSV.
#[derive(Debug, Clone)]
pub struct RoundingTrial {
    pub trial: usize,
    pub uncapped: f64,
    pub capped: f64,
    pub feasible: bool,
}

/// Runs `trials` independent roundings (star when the instance has no caps),
/// with trial t derived from (seed, t); aggregation is order-independent.
pub fn rounding_report(
    lp: &LPInstance,
    sol: &LPSolution,
    trials: usize,
    rng_seed: u64,
) -> Result<Vec<RoundingTrial>> {
    let star = lp.advertiser_caps.is_none();
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let seed = seeding::salted(rng_seed, t as u64);
            let rounded = if star {
                star_round(lp, sol, seed)?
            } else {
                dependent_round(lp, sol, seed)?
            };
            Ok(RoundingTrial {
                trial: t,
                uncapped: rounded.revenue_uncapped,
                capped: rounded.revenue_capped,
                feasible: check_feasible(lp, &rounded.allocation),
            })
        })
        .collect()
}

/// Explicit constraint check used by the report; rounding guarantees this
/// holds in every trial.
pub fn check_feasible(lp: &LPInstance, alloc: &Allocation) -> bool {
    if alloc.len() > lp.total_cap as usize {
        return false;
    }
    let mut per_node = vec![0u32; lp.node_count];
    let mut per_adv = vec![0u32; lp.advertiser_count];
    for e in alloc.iter() {
        per_node[e.node as usize] += 1;
        per_adv[e.advertiser as usize] += 1;
    }
    if per_node
        .iter()
        .enumerate()
        .any(|(v, &c)| c > lp.exposure[v])
    {
        return false;
    }
    if let Some(caps) = &lp.advertiser_caps {
        if per_adv.iter().zip(caps).any(|(&c, &cap)| c > cap) {
            return false;
        }
    }
    true
}

/// CSV for the rounding report.
pub fn report_csv(rows: &[RoundingTrial]) -> String {
    let mut out = String::from("trial,rounded_objective_uncapped,rounded_objective_capped,feasible\n");
    for r in rows {
        out.push_str(&format!(
            "{},{:.6},{:.6},{}\n",
            r.trial, r.uncapped, r.capped, r.feasible
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    /// A bare LP shell for rounding tests: sets are singleton roots so
    /// revenue bookkeeping stays trivial.
    fn shell(n: usize, m: usize, total_cap: u32, caps: Option<Vec<u32>>) -> LPInstance {
        LPInstance {
            node_count: n,
            advertiser_count: m,
            sets: (0..m)
                .map(|_| (0..n as u32).map(|v| vec![v]).collect())
                .collect(),
            coeff: vec![1.0; m],
            budgets: vec![f64::INFINITY; m],
            prices: vec![1.0; m],
            exposure: vec![1; n],
            advertiser_caps: caps,
            total_cap,
        }
    }

    fn solution(lp: &LPInstance, x: Vec<f64>) -> LPSolution {
        let n = lp.node_count;
        let mut y = Vec::new();
        let mut z = Vec::new();
        for j in 0..lp.advertiser_count {
            let yj: Vec<f64> = lp.sets[j]
                .iter()
                .map(|s| s.iter().map(|&v| x[j * n + v as usize]).sum::<f64>().min(1.0))
                .collect();
            z.push(lp.coeff[j] * yj.iter().sum::<f64>());
            y.push(yj);
        }
        LPSolution {
            objective: z.iter().sum(),
            x,
            y,
            z,
            simplex_iterations: 0,
        }
    }

    #[test]
    fn integral_input_passes_through() {
        let lp = shell(3, 2, 3, None);
        let sol = solution(&lp, vec![1.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        for seed in 0..5 {
            let out = star_round(&lp, &sol, seed).unwrap();
            let nodes: Vec<u32> = out.allocation.seeds_of(0);
            assert_eq!(nodes, vec![0, 2]);
            assert_eq!(out.allocation.len(), 2);
        }
    }

    #[test]
    fn lone_variable_marginal_preserved() {
        let lp = shell(1, 1, 1, None);
        let sol = solution(&lp, vec![0.5]);
        let trials = 100_000;
        let mut ones = 0;
        for t in 0..trials {
            let out = star_round(&lp, &sol, t).unwrap();
            ones += out.allocation.len();
        }
        let frac = ones as f64 / trials as f64;
        let sigma = (0.5 * 0.5 / trials as f64).sqrt();
        assert!((frac - 0.5).abs() <= 3.0 * sigma, "frac {frac}");
    }

    #[test]
    fn same_node_pair_sums_to_one() {
        let lp = shell(1, 2, 1, None);
        let sol = solution(&lp, vec![0.3, 0.7]);
        let trials = 100_000;
        let mut first = 0;
        for t in 0..trials {
            let out = star_round(&lp, &sol, t).unwrap();
            assert_eq!(out.allocation.len(), 1, "exactly one of the pair selected");
            if out.allocation.contains(GroundElement::new(0, 0)) {
                first += 1;
            }
        }
        let frac = first as f64 / trials as f64;
        let sigma = (0.3 * 0.7 / trials as f64).sqrt();
        assert!((frac - 0.3).abs() <= 3.0 * sigma, "frac {frac}");
    }

    #[test]
    fn exposure_rounds_to_adjacent_integer() {
        // one node split 0.5/0.4/0.4 across three advertisers: fractional
        // exposure 1.3, so every trial must expose the node 1 or 2 times
        let mut lp = shell(1, 3, 3, None);
        lp.exposure = vec![2];
        let sol = solution(&lp, vec![0.5, 0.4, 0.4]);
        for t in 0..2000 {
            for out in [
                star_round(&lp, &sol, t).unwrap(),
                dependent_round(&lp, &sol, t).unwrap(),
            ] {
                let count = out.allocation.exposure_count(0);
                assert!(count == 1 || count == 2, "exposure {count}");
            }
        }
    }

    #[test]
    fn degree_constraints_hold_every_trial_with_caps() {
        let lp = shell(4, 2, 3, Some(vec![2, 1]));
        // fractional degrees: adv 0 -> 1.4, adv 1 -> 0.9; nodes within 1
        let sol = solution(
            &lp,
            vec![0.5, 0.3, 0.4, 0.2, 0.3, 0.2, 0.1, 0.3],
        );
        for t in 0..3000 {
            let out = dependent_round(&lp, &sol, t).unwrap();
            assert!(check_feasible(&lp, &out.allocation), "trial {t}");
            let a0 = out.allocation.seeds_of(0).len();
            let a1 = out.allocation.seeds_of(1).len();
            assert!(a0 == 1 || a0 == 2, "adv 0 degree {a0}");
            assert!(a1 == 0 || a1 == 1, "adv 1 degree {a1}");
            assert!(out.allocation.len() <= 3);
        }
    }

    #[test]
    fn marginals_preserved_under_dependent_rounding() {
        let lp = shell(3, 2, 4, Some(vec![2, 2]));
        let x = vec![0.6, 0.25, 0.4, 0.3, 0.5, 0.35];
        let sol = solution(&lp, x.clone());
        let trials = 60_000;
        let mut counts = vec![0u32; x.len()];
        for t in 0..trials {
            let out = dependent_round(&lp, &sol, t as u64).unwrap();
            for e in out.allocation.iter() {
                counts[e.advertiser as usize * 3 + e.node as usize] += 1;
            }
        }
        for (i, &c) in counts.iter().enumerate() {
            let frac = c as f64 / trials as f64;
            let sigma = (x[i] * (1.0 - x[i]) / trials as f64).sqrt();
            assert!(
                (frac - x[i]).abs() <= 4.0 * sigma,
                "var {i}: {frac} vs {}",
                x[i]
            );
        }
    }

    #[test]
    fn negative_correlation_within_a_node() {
        let lp = shell(1, 2, 2, None);
        let sol = solution(&lp, vec![0.5, 0.4]);
        let trials = 50_000;
        let mut both_zero = 0;
        for t in 0..trials {
            let out = star_round(&lp, &sol, t).unwrap();
            if out.allocation.is_empty() {
                both_zero += 1;
            }
        }
        // independent rounding would give 0.5 * 0.6 = 0.3
        let frac = both_zero as f64 / trials as f64;
        let indep = 0.5 * 0.6;
        let sigma = (indep * (1.0 - indep) / trials as f64).sqrt();
        assert!(frac <= indep + 3.0 * sigma, "P(both zero) = {frac}");
    }

    #[test]
    fn star_round_refuses_caps() {
        let lp = shell(2, 2, 2, Some(vec![1, 1]));
        let sol = solution(&lp, vec![0.5, 0.0, 0.0, 0.5]);
        match star_round(&lp, &sol, 1) {
            Err(Error::Config(msg)) => assert!(msg.contains("dependent_round")),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn report_has_expected_shape() {
        let lp = shell(2, 2, 2, None);
        let sol = solution(&lp, vec![0.5, 0.25, 0.25, 0.5]);
        let rows = rounding_report(&lp, &sol, 50, 3).unwrap();
        assert_eq!(rows.len(), 50);
        assert!(rows.iter().all(|r| r.feasible));
        let csv = report_csv(&rows);
        assert!(csv.starts_with(
            "trial,rounded_objective_uncapped,rounded_objective_capped,feasible\n"
        ));
    }
}
