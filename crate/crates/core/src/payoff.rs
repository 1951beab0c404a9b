//! Advertiser value functions and the global revenue objectives.
//!
//! The default objective applies each advertiser's budget cap to its
//! *expected* reach (revenue-in-expectation); the alternative applies the cap
//! per realized cascade and averages. A penalty variant subtracts a
//! beta-scaled charge for expected exposure beyond the budget.

use crate::allocation::{Allocation, ConstraintSystem, GroundElement};
use crate::diffusion;
use crate::graph::{BaseGraph, InfluenceNetwork};
use crate::rrsets::RRCollection;
use crate::seeding;
use crate::{Error, Result};
use rayon::prelude::*;

/// Commercial terms of one advertiser: budget B, price-per-exposure c, and
/// an optional cap on its seed set size.
#[derive(Debug, Clone)]
pub struct AdvertiserProfile {
    pub budget: f64,
    pub price: f64,
    pub seed_cap: Option<u32>,
}

impl AdvertiserProfile {
    pub fn new(budget: f64, price: f64) -> Result<Self> {
        if !(budget >= 0.0) {
            return Err(Error::Domain(format!("budget {budget} must be >= 0")));
        }
        if !(price > 0.0) {
            return Err(Error::Domain(format!("price {price} must be > 0")));
        }
        Ok(AdvertiserProfile {
            budget,
            price,
            seed_cap: None,
        })
    }

    pub fn with_seed_cap(mut self, cap: u32) -> Self {
        self.seed_cap = Some(cap);
        self
    }

    /// An advertiser with unbounded budget: pays `price` per exposure, cap
    /// never binds.
    pub fn unbudgeted(price: f64) -> Self {
        AdvertiserProfile {
            budget: f64::INFINITY,
            price,
            seed_cap: None,
        }
    }

    /// The capped-linear value min(B, c * reach).
    pub fn value(&self, reach: f64) -> f64 {
        value_capped_linear(self, reach)
    }

    /// Value minus the beta-scaled free-exposure penalty.
    pub fn penalty_value(&self, reach: f64, beta: f64) -> f64 {
        self.value(reach) - beta * (self.price * reach - self.budget).max(0.0)
    }
}

/// min(B_j, c_j * reach).
pub fn value_capped_linear(profile: &AdvertiserProfile, reach: f64) -> f64 {
    debug_assert!(reach >= 0.0);
    (profile.price * reach).min(profile.budget)
}

/// A monotone concave value function of the reach. Only the capped-linear
/// function ships; the trait is the extension point for other concave
/// valuations.
pub trait ValueFunction {
    fn value(&self, reach: f64) -> f64;
}

impl ValueFunction for AdvertiserProfile {
    fn value(&self, reach: f64) -> f64 {
        value_capped_linear(self, reach)
    }
}

/// Spot-checks monotonicity and midpoint concavity of a value function at
/// three probe points.
pub fn check_value_function_shape(f: &dyn ValueFunction, probes: [f64; 3]) -> bool {
    let [a, b, c] = probes;
    debug_assert!(a < b && b < c);
    let (fa, fb, fc) = (f.value(a), f.value(b), f.value(c));
    let monotone = fa <= fb + 1e-12 && fb <= fc + 1e-12;
    // chord test at b between a and c
    let t = (b - a) / (c - a);
    let concave = fb + 1e-12 >= fa + t * (fc - fa);
    monotone && concave
}

/// One problem instance: m influence networks over a shared node set, the m
/// advertiser profiles, and the constraint system.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub base: BaseGraph,
    pub networks: Vec<InfluenceNetwork>,
    pub profiles: Vec<AdvertiserProfile>,
    pub constraints: ConstraintSystem,
}

impl ProblemInstance {
    pub fn new(
        base: BaseGraph,
        networks: Vec<InfluenceNetwork>,
        profiles: Vec<AdvertiserProfile>,
        constraints: ConstraintSystem,
    ) -> Result<Self> {
        if networks.is_empty() || networks.len() != profiles.len() {
            return Err(Error::Config(format!(
                "{} networks for {} profiles",
                networks.len(),
                profiles.len()
            )));
        }
        for net in &networks {
            if net.node_count() != base.node_count() {
                return Err(Error::Config(
                    "all networks must share the base graph's node set".into(),
                ));
            }
        }
        if let Some(caps) = constraints.advertiser_caps() {
            if caps.len() != profiles.len() {
                return Err(Error::Config(format!(
                    "{} advertiser caps for {} advertisers",
                    caps.len(),
                    profiles.len()
                )));
            }
        }
        Ok(ProblemInstance {
            base,
            networks,
            profiles,
            constraints,
        })
    }

    pub fn node_count(&self) -> usize {
        self.base.node_count()
    }

    pub fn advertiser_count(&self) -> usize {
        self.profiles.len()
    }
}

/// Maps (advertiser, seed set) to an expected-reach value.
///
/// The exact and Monte Carlo backings return values in [|seeds|, n] for
/// nonempty seed sets; the RR backing satisfies that in expectation only.
pub trait ReachEstimator: Sync {
    fn reach(&self, advertiser: usize, seeds: &[u32]) -> f64;
    fn advertiser_count(&self) -> usize;
}

/// Reach estimation from one RR collection per advertiser.
pub struct RrEstimator<'a> {
    collections: &'a [RRCollection],
}

impl<'a> RrEstimator<'a> {
    pub fn new(collections: &'a [RRCollection]) -> Self {
        RrEstimator { collections }
    }

    pub fn collections(&self) -> &'a [RRCollection] {
        self.collections
    }
}

impl ReachEstimator for RrEstimator<'_> {
    fn reach(&self, advertiser: usize, seeds: &[u32]) -> f64 {
        self.collections[advertiser].estimate_reach(seeds)
    }

    fn advertiser_count(&self) -> usize {
        self.collections.len()
    }
}

/// Exact live-edge enumeration; only viable on tiny networks.
pub struct ExactEstimator<'a> {
    networks: &'a [InfluenceNetwork],
}

impl<'a> ExactEstimator<'a> {
    pub fn new(networks: &'a [InfluenceNetwork]) -> Self {
        ExactEstimator { networks }
    }
}

impl ReachEstimator for ExactEstimator<'_> {
    fn reach(&self, advertiser: usize, seeds: &[u32]) -> f64 {
        diffusion::exact_influence(&self.networks[advertiser], seeds)
            .expect("exact estimator used beyond the enumeration cap")
    }

    fn advertiser_count(&self) -> usize {
        self.networks.len()
    }
}

/// Monte Carlo reach estimation with a fixed trial budget per query.
pub struct McEstimator<'a> {
    networks: &'a [InfluenceNetwork],
    trials: usize,
    rng_seed: u64,
}

impl<'a> McEstimator<'a> {
    pub fn new(networks: &'a [InfluenceNetwork], trials: usize, rng_seed: u64) -> Self {
        McEstimator {
            networks,
            trials,
            rng_seed,
        }
    }
}

impl ReachEstimator for McEstimator<'_> {
    fn reach(&self, advertiser: usize, seeds: &[u32]) -> f64 {
        diffusion::estimate_influence_mc(
            &self.networks[advertiser],
            seeds,
            self.trials,
            seeding::salted(self.rng_seed, advertiser as u64),
        )
        .expect("trial count is fixed positive")
        .mean
    }

    fn advertiser_count(&self) -> usize {
        self.networks.len()
    }
}

/// Sum of capped values of estimated reach, without a feasibility gate.
/// The public objectives wrap this with their contracts.
pub(crate) fn revenue_of_seed_sets(
    profiles: &[AdvertiserProfile],
    seeds_per_adv: &[Vec<u32>],
    estimator: &dyn ReachEstimator,
) -> f64 {
    profiles
        .iter()
        .enumerate()
        .map(|(j, p)| {
            let seeds = &seeds_per_adv[j];
            if seeds.is_empty() {
                0.0
            } else {
                p.value(estimator.reach(j, seeds))
            }
        })
        .sum()
}

fn seeds_per_advertiser(instance: &ProblemInstance, alloc: &Allocation) -> Vec<Vec<u32>> {
    (0..instance.advertiser_count() as u32)
        .map(|j| alloc.seeds_of(j))
        .collect()
}

/// Revenue-in-expectation: sum over advertisers of V_j(E[reach_j]).
pub fn objective_revenue(
    instance: &ProblemInstance,
    alloc: &Allocation,
    estimator: &dyn ReachEstimator,
) -> Result<f64> {
    if !instance.constraints.is_feasible(alloc) {
        return Err(Error::Contract(
            "objective evaluated on an infeasible allocation".into(),
        ));
    }
    Ok(revenue_of_seed_sets(
        &instance.profiles,
        &seeds_per_advertiser(instance, alloc),
        estimator,
    ))
}

/// Expected revenue: Monte Carlo mean of the per-cascade capped sum. Caps are
/// applied per realized cascade, then averaged; trial t derives its stream
/// from (seed, t), so results are order-independent.
pub fn objective_expected_revenue(
    instance: &ProblemInstance,
    alloc: &Allocation,
    trials: usize,
    rng_seed: u64,
) -> Result<f64> {
    if trials < 1 {
        return Err(Error::Domain("trials must be at least 1".into()));
    }
    let seeds = seeds_per_advertiser(instance, alloc);
    let per_trial: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            instance
                .profiles
                .iter()
                .enumerate()
                .map(|(j, p)| {
                    if seeds[j].is_empty() {
                        return 0.0;
                    }
                    let mut rng =
                        seeding::stream(seeding::salted(rng_seed, j as u64), t as u64);
                    let reach =
                        diffusion::simulate_ic_with(&instance.networks[j], &seeds[j], &mut rng)
                            .activated
                            .len() as f64;
                    p.value(reach)
                })
                .sum()
        })
        .collect();
    Ok(per_trial.iter().sum::<f64>() / trials as f64)
}

/// Revenue-in-expectation minus the beta-scaled expected free exposure:
/// `W_hat - beta * sum_j max(c_j * reach_j - B_j, 0)`.
pub fn penalty_objective(
    instance: &ProblemInstance,
    alloc: &Allocation,
    estimator: &dyn ReachEstimator,
    beta: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::Domain(format!("beta {beta} outside [0, 1]")));
    }
    if !instance.constraints.is_feasible(alloc) {
        return Err(Error::Contract(
            "objective evaluated on an infeasible allocation".into(),
        ));
    }
    let seeds = seeds_per_advertiser(instance, alloc);
    Ok(penalty_of_seed_sets(&instance.profiles, &seeds, estimator, beta))
}

pub(crate) fn penalty_of_seed_sets(
    profiles: &[AdvertiserProfile],
    seeds_per_adv: &[Vec<u32>],
    estimator: &dyn ReachEstimator,
    beta: f64,
) -> f64 {
    profiles
        .iter()
        .enumerate()
        .map(|(j, p)| {
            let seeds = &seeds_per_adv[j];
            if seeds.is_empty() {
                0.0
            } else {
                p.penalty_value(estimator.reach(j, seeds), beta)
            }
        })
        .sum()
}

/// Which global objective to evaluate.
#[derive(Debug, Clone, Copy)]
pub enum ObjectiveKind {
    /// Revenue-in-expectation.
    Revenue,
    /// Revenue-in-expectation minus the beta-scaled free-exposure penalty.
    Penalty { beta: f64 },
}

/// objective(alloc + element) - objective(alloc). The element must not
/// already be allocated; feasibility of the augmented allocation is the
/// caller's concern.
pub fn marginal_gain(
    instance: &ProblemInstance,
    alloc: &Allocation,
    element: GroundElement,
    objective: ObjectiveKind,
    estimator: &dyn ReachEstimator,
) -> Result<f64> {
    if alloc.contains(element) {
        return Err(Error::Contract(format!("element {element} already allocated")));
    }
    let mut seeds = seeds_per_advertiser(instance, alloc);
    let eval = |seeds: &[Vec<u32>]| match objective {
        ObjectiveKind::Revenue => revenue_of_seed_sets(&instance.profiles, seeds, estimator),
        ObjectiveKind::Penalty { beta } => {
            penalty_of_seed_sets(&instance.profiles, seeds, estimator, beta)
        }
    };
    let before = eval(&seeds);
    let list = &mut seeds[element.advertiser as usize];
    let pos = list.partition_point(|&v| v < element.node);
    list.insert(pos, element.node);
    Ok(eval(&seeds) - before)
}

/// Per-mille overshoot report: for each advertiser, the expected exposure
/// beyond its budget under the estimator (zero when the cap does not bind).
pub fn overshoot_per_advertiser(
    instance: &ProblemInstance,
    alloc: &Allocation,
    estimator: &dyn ReachEstimator,
) -> Vec<f64> {
    (0..instance.advertiser_count())
        .map(|j| {
            let seeds = alloc.seeds_of(j as u32);
            if seeds.is_empty() {
                return 0.0;
            }
            let p = &instance.profiles[j];
            (p.price * estimator.reach(j, &seeds) - p.budget).max(0.0)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocation::ConstraintSystem;
    use crate::graph::BaseGraph;

    fn single_arc_instance(p: f64, budget: f64) -> ProblemInstance {
        let base = BaseGraph::from_arcs(2, [(0, 1)], true).unwrap();
        let net = InfluenceNetwork::from_arcs(2, [(0, 1, p)]).unwrap();
        ProblemInstance::new(
            base,
            vec![net],
            vec![AdvertiserProfile::new(budget, 1.0).unwrap()],
            ConstraintSystem::uniform(1, 2),
        )
        .unwrap()
    }

    #[test]
    fn capped_linear_values() {
        let p = AdvertiserProfile::new(10.0, 1.0).unwrap();
        assert_eq!(value_capped_linear(&p, 4.0), 4.0);
        assert_eq!(value_capped_linear(&p, 14.0), 10.0);
        let shared = AdvertiserProfile::new(25.0, 1.0).unwrap();
        assert_eq!(value_capped_linear(&shared, 100.0), 25.0);
    }

    #[test]
    fn profile_validation() {
        assert!(AdvertiserProfile::new(-1.0, 1.0).is_err());
        assert!(AdvertiserProfile::new(1.0, 0.0).is_err());
    }

    #[test]
    fn value_function_shape_holds() {
        let p = AdvertiserProfile::new(5.0, 2.0).unwrap();
        assert!(check_value_function_shape(&p, [0.5, 2.5, 7.0]));
    }

    #[test]
    fn empty_allocation_worth_zero() {
        let inst = single_arc_instance(0.5, 10.0);
        let nets = inst.networks.clone();
        let est = ExactEstimator::new(&nets);
        let alloc = Allocation::new(2, 1);
        assert_eq!(objective_revenue(&inst, &alloc, &est).unwrap(), 0.0);
        assert_eq!(
            objective_expected_revenue(&inst, &alloc, 100, 0).unwrap(),
            0.0
        );
    }

    #[test]
    fn unbudgeted_revenue_equals_reach() {
        let inst = single_arc_instance(0.5, f64::INFINITY);
        let nets = inst.networks.clone();
        let est = ExactEstimator::new(&nets);
        let mut alloc = Allocation::new(2, 1);
        alloc.insert(GroundElement::new(0, 0)).unwrap();
        assert_eq!(objective_revenue(&inst, &alloc, &est).unwrap(), 1.5);
    }

    #[test]
    fn infeasible_allocation_is_a_contract_violation() {
        let inst = single_arc_instance(0.5, 10.0);
        let nets = inst.networks.clone();
        let est = ExactEstimator::new(&nets);
        let mut alloc = Allocation::new(2, 1);
        alloc.insert(GroundElement::new(0, 0)).unwrap();
        alloc.insert(GroundElement::new(1, 0)).unwrap();
        // K = 2 allows this; shrink K to force infeasibility
        let mut tight = inst.clone();
        tight.constraints = ConstraintSystem::uniform(1, 1);
        assert!(matches!(
            objective_revenue(&tight, &alloc, &est),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn expected_vs_in_expectation_revenue() {
        // single arc p = 0.5, seeds {a}: reach is 1 or 2 equally likely.
        // B = 1: W = E[min(1, reach)] = 1 = W_hat = min(1, 1.5).
        let inst = single_arc_instance(0.5, 1.0);
        let nets = inst.networks.clone();
        let est = ExactEstimator::new(&nets);
        let mut alloc = Allocation::new(2, 1);
        alloc.insert(GroundElement::new(0, 0)).unwrap();
        let w_hat = objective_revenue(&inst, &alloc, &est).unwrap();
        assert_eq!(w_hat, 1.0);
        let w = objective_expected_revenue(&inst, &alloc, 40_000, 5).unwrap();
        assert!((w - 1.0).abs() < 0.02);

        // B = 1.2: W = 0.5 * 1 + 0.5 * 1.2 = 1.1 < W_hat = 1.2.
        let inst = single_arc_instance(0.5, 1.2);
        let nets = inst.networks.clone();
        let est = ExactEstimator::new(&nets);
        let w_hat = objective_revenue(&inst, &alloc, &est).unwrap();
        assert!((w_hat - 1.2).abs() < 1e-12);
        let w = objective_expected_revenue(&inst, &alloc, 100_000, 6).unwrap();
        assert!((w - 1.1).abs() < 0.01, "W = {w}");
        assert!(w < w_hat);
    }

    #[test]
    fn deterministic_network_makes_both_objectives_equal() {
        let inst = single_arc_instance(1.0, 1.7);
        let nets = inst.networks.clone();
        let est = ExactEstimator::new(&nets);
        let mut alloc = Allocation::new(2, 1);
        alloc.insert(GroundElement::new(0, 0)).unwrap();
        let w_hat = objective_revenue(&inst, &alloc, &est).unwrap();
        let w = objective_expected_revenue(&inst, &alloc, 50, 3).unwrap();
        assert!((w_hat - w).abs() < 1e-12, "{w_hat} vs {w}");
    }

    #[test]
    fn penalty_formula_and_beta_zero() {
        let p = AdvertiserProfile::new(10.0, 1.0).unwrap();
        assert_eq!(p.penalty_value(14.0, 0.5), 10.0 - 0.5 * 4.0);
        assert_eq!(p.penalty_value(7.0, 0.9), 7.0);

        let inst = single_arc_instance(0.5, 1.2);
        let nets = inst.networks.clone();
        let est = ExactEstimator::new(&nets);
        let mut alloc = Allocation::new(2, 1);
        alloc.insert(GroundElement::new(0, 0)).unwrap();
        let w_hat = objective_revenue(&inst, &alloc, &est).unwrap();
        let pen0 = penalty_objective(&inst, &alloc, &est, 0.0).unwrap();
        assert_eq!(w_hat.to_bits(), pen0.to_bits(), "beta = 0 is bit-identical");
        let pen1 = penalty_objective(&inst, &alloc, &est, 1.0).unwrap();
        assert!((pen1 - (1.2 - (1.5 - 1.2))).abs() < 1e-12);
        assert!(penalty_objective(&inst, &alloc, &est, 1.5).is_err());
    }

    #[test]
    fn marginal_gain_cases() {
        let inst = single_arc_instance(0.5, 10.0);
        let nets = inst.networks.clone();
        let est = ExactEstimator::new(&nets);
        let alloc = Allocation::new(2, 1);
        let gain = marginal_gain(
            &inst,
            &alloc,
            GroundElement::new(0, 0),
            ObjectiveKind::Revenue,
            &est,
        )
        .unwrap();
        assert_eq!(gain, 1.5, "first element gain is c * reach of {{v}}");

        // once the cap binds, extra reach is worthless
        let capped = single_arc_instance(0.5, 1.0);
        let nets = capped.networks.clone();
        let est = ExactEstimator::new(&nets);
        let mut alloc = Allocation::new(2, 1);
        alloc.insert(GroundElement::new(0, 0)).unwrap();
        let gain = marginal_gain(
            &capped,
            &alloc,
            GroundElement::new(1, 0),
            ObjectiveKind::Revenue,
            &est,
        )
        .unwrap();
        assert_eq!(gain, 0.0);

        // penalty objective can make an addition strictly harmful
        let pen = single_arc_instance(0.5, 1.2);
        let nets = pen.networks.clone();
        let est = ExactEstimator::new(&nets);
        let mut alloc = Allocation::new(2, 1);
        alloc.insert(GroundElement::new(0, 0)).unwrap();
        let gain = marginal_gain(
            &pen,
            &alloc,
            GroundElement::new(1, 0),
            ObjectiveKind::Penalty { beta: 1.0 },
            &est,
        )
        .unwrap();
        // reach goes 1.5 -> 2.0: value stays 1.2, penalty grows by 0.5
        assert!((gain - -0.5).abs() < 1e-12);

        assert!(marginal_gain(
            &pen,
            &alloc,
            GroundElement::new(0, 0),
            ObjectiveKind::Revenue,
            &est
        )
        .is_err());
    }

    fn tiny_two_adv_instance() -> ProblemInstance {
        let base = BaseGraph::from_arcs(3, [(0, 1), (1, 2)], true).unwrap();
        let nets = vec![
            InfluenceNetwork::from_arcs(3, [(0, 1, 0.5), (1, 2, 0.25)]).unwrap(),
            InfluenceNetwork::from_arcs(3, [(0, 1, 0.75)]).unwrap(),
        ];
        ProblemInstance::new(
            base,
            nets,
            vec![
                AdvertiserProfile::new(2.0, 1.0).unwrap(),
                AdvertiserProfile::new(1.5, 1.0).unwrap(),
            ],
            ConstraintSystem::uniform(2, 6),
        )
        .unwrap()
    }

    #[test]
    fn revenue_is_monotone_and_submodular_exhaustively() {
        let inst = tiny_two_adv_instance();
        let nets = inst.networks.clone();
        let est = ExactEstimator::new(&nets);
        let ground = crate::allocation::full_ground_set(3, 2);
        let eval = |mask: u32| {
            let mut alloc = Allocation::new(3, 2);
            for (i, &e) in ground.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    alloc.insert(e).unwrap();
                }
            }
            let seeds: Vec<Vec<u32>> = (0..2).map(|j| alloc.seeds_of(j)).collect();
            revenue_of_seed_sets(&inst.profiles, &seeds, &est)
        };
        let g = ground.len();
        let vals: Vec<f64> = (0u32..(1 << g)).map(eval).collect();
        for s in 0u32..(1 << g) {
            for x in 0..g {
                if s >> x & 1 == 1 {
                    continue;
                }
                assert!(
                    vals[(s | 1 << x) as usize] >= vals[s as usize] - 1e-12,
                    "monotone"
                );
                for t in 0u32..(1 << g) {
                    if t & s == s && t >> x & 1 == 0 {
                        let gs = vals[(s | 1 << x) as usize] - vals[s as usize];
                        let gt = vals[(t | 1 << x) as usize] - vals[t as usize];
                        assert!(gs >= gt - 1e-12, "submodular");
                    }
                }
            }
        }
    }

    #[test]
    fn penalty_payoff_is_positive_submodular() {
        // per-advertiser payoff: if gain(x | S) >= 0 then gain(x | S) >= gain(x | T)
        let inst = tiny_two_adv_instance();
        let nets = inst.networks.clone();
        let est = ExactEstimator::new(&nets);
        for beta in [0.25, 0.5, 1.0] {
            for j in 0..2usize {
                let p = &inst.profiles[j];
                let payoff = |mask: u32| {
                    let seeds: Vec<u32> = (0..3u32).filter(|&v| mask >> v & 1 == 1).collect();
                    if seeds.is_empty() {
                        0.0
                    } else {
                        p.penalty_value(est.reach(j, &seeds), beta)
                    }
                };
                for s in 0u32..8 {
                    for t in 0u32..8 {
                        if t & s != s {
                            continue;
                        }
                        for x in 0..3u32 {
                            if t >> x & 1 == 1 {
                                continue;
                            }
                            let gs = payoff(s | 1 << x) - payoff(s);
                            let gt = payoff(t | 1 << x) - payoff(t);
                            if gs >= 0.0 {
                                assert!(gs >= gt - 1e-12, "positive submodularity");
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn overshoot_reporting() {
        let inst = single_arc_instance(0.5, 1.2);
        let nets = inst.networks.clone();
        let est = ExactEstimator::new(&nets);
        let mut alloc = Allocation::new(2, 1);
        alloc.insert(GroundElement::new(0, 0)).unwrap();
        let over = overshoot_per_advertiser(&inst, &alloc, &est);
        assert!((over[0] - 0.3).abs() < 1e-12);
    }
}
