//! Structure-only baseline allocators: node degree and eigenvector
//! centrality with round-robin advertiser assignment. Both ignore the
//! influence probabilities entirely.

use crate::allocation::{Allocation, GroundElement};
use crate::payoff::ProblemInstance;
use crate::Result;

/// Assigns nodes in the given priority order: each node goes to its next
/// `r_v` advertisers under a global round-robin pointer, skipping advertisers
/// whose seed cap is exhausted, stopping at the total budget.
fn round_robin_assign(order: &[u32], instance: &ProblemInstance) -> Result<Allocation> {
    let n = instance.node_count();
    let m = instance.advertiser_count();
    let cs = &instance.constraints;
    let mut alloc = Allocation::new(n, m);
    let mut cap_left: Vec<u32> = match cs.advertiser_caps() {
        Some(caps) => caps.to_vec(),
        None => vec![u32::MAX; m],
    };
    let mut total_left = cs.total_cap();
    let mut pointer = 0usize;
    'nodes: for &v in order {
        let want = cs.exposure_bound(v).min(m as u32);
        let mut given = 0;
        let mut scanned = 0;
        while given < want && scanned < m {
            let j = (pointer % m) as u32;
            pointer += 1;
            scanned += 1;
            if cap_left[j as usize] == 0 {
                continue;
            }
            if total_left == 0 {
                break 'nodes;
            }
            alloc.insert(GroundElement::new(v, j))?;
            cap_left[j as usize] -= 1;
            total_left -= 1;
            given += 1;
            scanned = 0;
        }
        if total_left == 0 {
            break;
        }
        // scanned == m with nothing assignable: every advertiser is capped
        if given < want && cap_left.iter().all(|&c| c == 0) {
            break;
        }
    }
    Ok(alloc)
}

/// Considers nodes by non-increasing total degree (ties toward the smaller
/// node index) and assigns them round-robin.
pub fn max_degree_allocate(instance: &ProblemInstance) -> Result<Allocation> {
    let mut order: Vec<u32> = (0..instance.node_count() as u32).collect();
    order.sort_by_key(|&v| (std::cmp::Reverse(instance.base.total_degree(v)), v));
    round_robin_assign(&order, instance)
}

/// Eigenvector centrality scores by power iteration on the unweighted
/// adjacency matrix (out-link orientation for directed graphs): `x_u` is
/// driven by the scores of the nodes `u` points to. Returns the score vector
/// and whether the iteration converged.
pub fn eigenvector_centrality(
    base: &crate::graph::BaseGraph,
    tolerance: f64,
    max_iterations: usize,
) -> (Vec<f64>, bool) {
    let n = base.node_count();
    if n == 0 {
        return (Vec::new(), true);
    }
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut next = vec![0.0; n];
    for _ in 0..max_iterations {
        for v in next.iter_mut() {
            *v = 0.0;
        }
        for u in 0..n as u32 {
            let mut acc = 0.0;
            for &v in base.out_neighbors(u) {
                acc += x[v as usize];
            }
            next[u as usize] = acc;
        }
        let norm = next.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            // no edges: centrality degenerates to the start vector
            return (x, true);
        }
        for v in next.iter_mut() {
            *v /= norm;
        }
        let change = x
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        x.copy_from_slice(&next);
        if change < tolerance {
            return (x, true);
        }
    }
    (x, false)
}

/// Considers nodes by non-increasing eigenvector centrality and assigns them
/// round-robin. Non-convergent iterations (disconnected or bipartite
/// pathologies) fall back to the final iterate with a warning.
pub fn eigen_centrality_allocate(instance: &ProblemInstance) -> Result<Allocation> {
    let (scores, converged) = eigenvector_centrality(&instance.base, 1e-8, 1000);
    if !converged {
        eprintln!(
            "warning: eigenvector power iteration did not converge in 1000 iterations; \
             using the final iterate"
        );
    }
    let mut order: Vec<u32> = (0..instance.node_count() as u32).collect();
    order.sort_by(|&a, &b| {
        scores[b as usize]
            .total_cmp(&scores[a as usize])
            .then(a.cmp(&b))
    });
    round_robin_assign(&order, instance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocation::ConstraintSystem;
    use crate::graph::{BaseGraph, InfluenceNetwork};
    use crate::payoff::AdvertiserProfile;
    use rand::seq::SliceRandom;

    fn star_instance(m: usize, k: u32, r: u32) -> ProblemInstance {
        // center 0 with 4 leaves, undirected
        let base = BaseGraph::from_arcs(5, [(0, 1), (0, 2), (0, 3), (0, 4)], false).unwrap();
        let nets: Vec<InfluenceNetwork> = (0..m)
            .map(|_| crate::graph::assign_uniform_probabilities(&base, 0.5).unwrap())
            .collect();
        ProblemInstance::new(
            base,
            nets,
            (0..m).map(|_| AdvertiserProfile::unbudgeted(1.0)).collect(),
            ConstraintSystem::uniform(r, k),
        )
        .unwrap()
    }

    #[test]
    fn star_degree_assignment() {
        let inst = star_instance(2, 2, 1);
        let alloc = max_degree_allocate(&inst).unwrap();
        // center first to advertiser 0, then the lowest-index leaf to advertiser 1
        assert!(alloc.contains(GroundElement::new(0, 0)));
        assert!(alloc.contains(GroundElement::new(1, 1)));
        assert_eq!(alloc.len(), 2);
    }

    #[test]
    fn exposure_two_gives_consecutive_advertisers() {
        let inst = star_instance(3, 9, 2);
        let alloc = max_degree_allocate(&inst).unwrap();
        // center gets advertisers 0 and 1; next node continues with 2
        assert_eq!(alloc.advertisers_of(0), vec![0, 1]);
        assert!(alloc.contains(GroundElement::new(1, 2)));
    }

    #[test]
    fn zero_budget_allocates_nothing() {
        let inst = star_instance(2, 0, 1);
        assert!(max_degree_allocate(&inst).unwrap().is_empty());
        assert!(eigen_centrality_allocate(&inst).unwrap().is_empty());
    }

    #[test]
    fn star_center_has_top_centrality() {
        let inst = star_instance(1, 1, 1);
        let alloc = eigen_centrality_allocate(&inst).unwrap();
        assert!(alloc.contains(GroundElement::new(0, 0)));
    }

    #[test]
    fn cycle_centrality_degenerates_to_index_order() {
        let base = BaseGraph::from_arcs(4, [(0, 1), (1, 2), (2, 3), (3, 0)], false).unwrap();
        let (scores, _) = eigenvector_centrality(&base, 1e-8, 1000);
        for w in scores.windows(2) {
            assert!((w[0] - w[1]).abs() < 1e-9, "cycle scores are uniform");
        }
        let nets = vec![crate::graph::assign_uniform_probabilities(&base, 0.1).unwrap()];
        let inst = ProblemInstance::new(
            base,
            nets,
            vec![AdvertiserProfile::unbudgeted(1.0)],
            ConstraintSystem::uniform(1, 2),
        )
        .unwrap();
        let alloc = eigen_centrality_allocate(&inst).unwrap();
        assert_eq!(alloc.seeds_of(0), vec![0, 1]);
    }

    #[test]
    fn path_centrality_matches_closed_form() {
        // path 0-1-2-3: leading eigenvector has components sin(k pi / 5)
        let base = BaseGraph::from_arcs(4, [(0, 1), (1, 2), (2, 3)], false).unwrap();
        let (scores, converged) = eigenvector_centrality(&base, 1e-10, 5000);
        assert!(converged);
        let pi = std::f64::consts::PI;
        let reference: Vec<f64> = (1..=4).map(|k| (k as f64 * pi / 5.0).sin()).collect();
        let norm = reference.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (got, want) in scores.iter().zip(reference.iter().map(|v| v / norm)) {
            assert!((got - want).abs() < 1e-6, "{got} vs {want}");
        }
        assert!(scores[1] > scores[0] && scores[2] > scores[3]);
    }

    #[test]
    fn caps_are_skipped_in_round_robin() {
        let mut inst = star_instance(3, 9, 1);
        inst.constraints = ConstraintSystem::uniform(1, 9).with_caps(vec![1, 0, 2]);
        let alloc = max_degree_allocate(&inst).unwrap();
        assert!(alloc.seeds_of(1).is_empty(), "capped-out advertiser skipped");
        assert_eq!(alloc.len(), 3);
        assert!(inst.constraints.is_feasible(&alloc));
    }

    #[test]
    fn heuristics_ignore_probabilities() {
        let base = crate::graph::preferential_attachment(30, 2, 8).unwrap();
        let nets = vec![crate::graph::assign_lambda_probabilities(&base, 0.4, 9).unwrap()];
        let inst = ProblemInstance::new(
            base.clone(),
            nets.clone(),
            vec![AdvertiserProfile::unbudgeted(1.0)],
            ConstraintSystem::uniform(1, 6),
        )
        .unwrap();
        let a1 = max_degree_allocate(&inst).unwrap();
        let e1 = eigen_centrality_allocate(&inst).unwrap();

        // permute the probability values over the same arcs
        let mut probs: Vec<f64> = nets[0].arcs().map(|(_, _, p)| p).collect();
        let mut rng = crate::seeding::rng(99);
        probs.shuffle(&mut rng);
        let permuted = InfluenceNetwork::from_arcs(
            30,
            nets[0]
                .arcs()
                .zip(probs)
                .map(|((u, v, _), p)| (u, v, p)),
        )
        .unwrap();
        let inst2 = ProblemInstance::new(
            base,
            vec![permuted],
            vec![AdvertiserProfile::unbudgeted(1.0)],
            ConstraintSystem::uniform(1, 6),
        )
        .unwrap();
        assert_eq!(a1, max_degree_allocate(&inst2).unwrap());
        assert_eq!(e1, eigen_centrality_allocate(&inst2).unwrap());
    }

    #[test]
    fn heuristic_allocations_are_feasible() {
        for seed in 0..5 {
            let base = crate::graph::preferential_attachment(20, 2, seed).unwrap();
            let nets =
                vec![crate::graph::assign_lambda_probabilities(&base, 0.4, seed).unwrap(); 3];
            let inst = ProblemInstance::new(
                base,
                nets,
                (0..3).map(|_| AdvertiserProfile::unbudgeted(1.0)).collect(),
                ConstraintSystem::uniform(1, 7).with_caps(vec![2, 3, 1]),
            )
            .unwrap();
            for alloc in [
                max_degree_allocate(&inst).unwrap(),
                eigen_centrality_allocate(&inst).unwrap(),
            ] {
                assert!(inst.constraints.is_feasible(&alloc));
            }
        }
    }
}
