//! Matroid-constrained greedy allocators and two-matroid local search.
//!
//! The main allocator is a lazy greedy over (node, advertiser) pairs: cached
//! marginal gains are valid upper bounds because the objective is submodular,
//! so a popped entry whose gain was recomputed this round dominates the rest
//! of the heap. Ties break toward the smaller advertiser index, then the
//! smaller node index, so runs are reproducible regardless of evaluation
//! order.

use crate::allocation::{
    advertiser_matroid, exposure_matroid, Allocation, GroundElement, Matroid,
};
use crate::payoff::{self, ProblemInstance, ReachEstimator, RrEstimator};
use crate::rrsets::{CoverageTracker, RRCollection};
use crate::{Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// One selection step of an allocator run.
#[derive(Debug, Clone)]
pub struct TraceStep {
    pub round: usize,
    pub element: GroundElement,
    pub gain: f64,
    /// Objective value after this selection.
    pub objective: f64,
}

/// Result of a greedy or local-search run.
#[derive(Debug, Clone)]
pub struct AllocatorRun {
    pub allocation: Allocation,
    pub trace: Vec<TraceStep>,
    pub objective: f64,
}

impl AllocatorRun {
    /// Trace CSV: round, node, advertiser, gain, objective.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("round,node,advertiser,gain,objective\n");
        for step in &self.trace {
            out.push_str(&format!(
                "{},{},{},{:.6},{:.6}\n",
                step.round, step.element.node, step.element.advertiser, step.gain, step.objective
            ));
        }
        out
    }
}

/// Result of the penalty-aware greedy, including whether the theorem's
/// precondition held.
#[derive(Debug, Clone)]
pub struct PenaltyRun {
    pub allocation: Allocation,
    pub trace: Vec<TraceStep>,
    pub objective: f64,
    /// Whether no single node's priced influence exceeds any advertiser's
    /// budget. When false the approximation guarantee is void and the run
    /// carries a warning, but the algorithm still executes.
    pub precondition_satisfied: bool,
    pub beta: f64,
}

impl PenaltyRun {
    /// The proven approximation factor (1 + beta) / (2 + 3 beta), valid when
    /// the precondition held.
    pub fn guarantee_factor(&self) -> f64 {
        (1.0 + self.beta) / (2.0 + 3.0 * self.beta)
    }
}

/// Supplies per-advertiser reach values and marginal reach for candidate
/// additions; implementations may keep incremental state.
trait GainOracle {
    fn reach(&self, advertiser: usize) -> f64;
    fn reach_with(&self, advertiser: usize, node: u32) -> f64;
    fn commit(&mut self, advertiser: usize, node: u32);
}

/// Incremental oracle over RR coverage trackers; marginal queries are O(1).
struct RrGainOracle<'a> {
    trackers: Vec<CoverageTracker<'a>>,
}

impl<'a> RrGainOracle<'a> {
    fn new(collections: &'a [RRCollection]) -> Self {
        RrGainOracle {
            trackers: collections.iter().map(CoverageTracker::new).collect(),
        }
    }
}

impl GainOracle for RrGainOracle<'_> {
    fn reach(&self, advertiser: usize) -> f64 {
        self.trackers[advertiser].reach()
    }

    fn reach_with(&self, advertiser: usize, node: u32) -> f64 {
        self.trackers[advertiser].reach_with(node)
    }

    fn commit(&mut self, advertiser: usize, node: u32) {
        self.trackers[advertiser].mark(node);
    }
}

/// Recomputing oracle over an arbitrary estimator.
struct EstimatorGainOracle<'a> {
    estimator: &'a dyn ReachEstimator,
    seeds: Vec<Vec<u32>>,
    current: Vec<f64>,
}

impl<'a> EstimatorGainOracle<'a> {
    fn new(estimator: &'a dyn ReachEstimator, m: usize) -> Self {
        EstimatorGainOracle {
            estimator,
            seeds: vec![Vec::new(); m],
            current: vec![0.0; m],
        }
    }
}

impl GainOracle for EstimatorGainOracle<'_> {
    fn reach(&self, advertiser: usize) -> f64 {
        self.current[advertiser]
    }

    fn reach_with(&self, advertiser: usize, node: u32) -> f64 {
        let mut seeds = self.seeds[advertiser].clone();
        let pos = seeds.partition_point(|&v| v < node);
        seeds.insert(pos, node);
        self.estimator.reach(advertiser, &seeds)
    }

    fn commit(&mut self, advertiser: usize, node: u32) {
        let seeds = &mut self.seeds[advertiser];
        let pos = seeds.partition_point(|&v| v < node);
        seeds.insert(pos, node);
        self.current[advertiser] = self.estimator.reach(advertiser, seeds);
    }
}

/// Heap entry ordered by gain descending, then advertiser and node ascending.
struct HeapEntry {
    gain: f64,
    element: GroundElement,
    round: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .total_cmp(&other.gain)
            .then_with(|| other.element.cmp(&self.element))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Feasibility counters shared by the allocators: exposure headroom per node,
/// optional cap headroom per advertiser, total headroom.
struct Headroom {
    exposure_left: Vec<u32>,
    cap_left: Option<Vec<u32>>,
    total_left: u32,
}

impl Headroom {
    fn new(instance: &ProblemInstance) -> Self {
        let cs = &instance.constraints;
        Headroom {
            exposure_left: (0..instance.node_count() as u32)
                .map(|v| cs.exposure_bound(v))
                .collect(),
            cap_left: cs.advertiser_caps().map(|caps| caps.to_vec()),
            total_left: cs.total_cap(),
        }
    }

    fn admits(&self, e: GroundElement) -> bool {
        self.total_left > 0
            && self.exposure_left[e.node as usize] > 0
            && self
                .cap_left
                .as_ref()
                .map_or(true, |caps| caps[e.advertiser as usize] > 0)
    }

    fn take(&mut self, e: GroundElement) {
        debug_assert!(self.admits(e));
        self.total_left -= 1;
        self.exposure_left[e.node as usize] -= 1;
        if let Some(caps) = &mut self.cap_left {
            caps[e.advertiser as usize] -= 1;
        }
    }
}

fn value_gain(instance: &ProblemInstance, oracle: &dyn GainOracle, e: GroundElement) -> f64 {
    let j = e.advertiser as usize;
    let p = &instance.profiles[j];
    p.value(oracle.reach_with(j, e.node)) - p.value(oracle.reach(j))
}

fn total_value(instance: &ProblemInstance, oracle: &dyn GainOracle) -> f64 {
    instance
        .profiles
        .iter()
        .enumerate()
        .map(|(j, p)| p.value(oracle.reach(j)))
        .sum()
}

fn run_lazy_greedy(instance: &ProblemInstance, mut oracle: Box<dyn GainOracle + '_>) -> AllocatorRun {
    let n = instance.node_count();
    let m = instance.advertiser_count();
    let mut headroom = Headroom::new(instance);
    let mut allocation = Allocation::new(n, m);
    let mut trace = Vec::new();
    let mut objective = 0.0;

    let mut heap = BinaryHeap::with_capacity(n * m);
    for j in 0..m as u32 {
        for v in 0..n as u32 {
            let e = GroundElement::new(v, j);
            if headroom.admits(e) {
                heap.push(HeapEntry {
                    gain: value_gain(instance, oracle.as_ref(), e),
                    element: e,
                    round: 0,
                });
            }
        }
    }

    let mut round = 0;
    while headroom.total_left > 0 {
        round += 1;
        let selected = loop {
            let Some(top) = heap.pop() else { break None };
            if !headroom.admits(top.element) {
                continue; // dead: its node or advertiser class is exhausted
            }
            if top.round == round {
                break Some(top);
            }
            heap.push(HeapEntry {
                gain: value_gain(instance, oracle.as_ref(), top.element),
                element: top.element,
                round,
            });
        };
        let Some(entry) = selected else { break };
        if entry.gain <= 0.0 {
            break;
        }
        let e = entry.element;
        oracle.commit(e.advertiser as usize, e.node);
        headroom.take(e);
        allocation
            .insert(e)
            .expect("greedy never selects an element twice");
        objective = total_value(instance, oracle.as_ref());
        trace.push(TraceStep {
            round,
            element: e,
            gain: entry.gain,
            objective,
        });
    }
    AllocatorRun {
        allocation,
        trace,
        objective,
    }
}

/// Greedy maximization of revenue-in-expectation: repeatedly adds the
/// feasible element of maximum marginal gain until no feasible element has
/// positive gain or the seed budget is exhausted. Lazy evaluation; guarantees
/// 1/2 of optimal with the exposure matroid alone, 1/3 with advertiser caps
/// active.
pub fn greedy_allocate(
    instance: &ProblemInstance,
    estimator: &dyn ReachEstimator,
) -> Result<AllocatorRun> {
    if estimator.advertiser_count() != instance.advertiser_count() {
        return Err(Error::Config(format!(
            "estimator covers {} advertisers, instance has {}",
            estimator.advertiser_count(),
            instance.advertiser_count()
        )));
    }
    let oracle = EstimatorGainOracle::new(estimator, instance.advertiser_count());
    Ok(run_lazy_greedy(instance, Box::new(oracle)))
}

/// Greedy with incremental RR coverage bookkeeping; identical output to
/// [`greedy_allocate`] over the matching [`RrEstimator`].
pub fn greedy_allocate_rr(
    instance: &ProblemInstance,
    collections: &[RRCollection],
) -> Result<AllocatorRun> {
    if collections.len() != instance.advertiser_count() {
        return Err(Error::Config(format!(
            "{} RR collections for {} advertisers",
            collections.len(),
            instance.advertiser_count()
        )));
    }
    let oracle = RrGainOracle::new(collections);
    Ok(run_lazy_greedy(instance, Box::new(oracle)))
}

/// Plain greedy that rescans the full candidate set each round. Reference
/// implementation for the lazy variant; same tie-breaking.
pub fn greedy_allocate_eager(
    instance: &ProblemInstance,
    estimator: &dyn ReachEstimator,
) -> Result<AllocatorRun> {
    let n = instance.node_count();
    let m = instance.advertiser_count();
    let mut oracle = EstimatorGainOracle::new(estimator, m);
    let mut headroom = Headroom::new(instance);
    let mut allocation = Allocation::new(n, m);
    let mut trace = Vec::new();
    let mut objective = 0.0;
    let mut round = 0;
    while headroom.total_left > 0 {
        round += 1;
        let mut best: Option<(f64, GroundElement)> = None;
        for j in 0..m as u32 {
            for v in 0..n as u32 {
                let e = GroundElement::new(v, j);
                if allocation.contains(e) || !headroom.admits(e) {
                    continue;
                }
                let gain = value_gain(instance, &oracle, e);
                let better = match best {
                    None => true,
                    Some((bg, be)) => gain > bg || (gain == bg && e < be),
                };
                if better {
                    best = Some((gain, e));
                }
            }
        }
        let Some((gain, e)) = best else { break };
        if gain <= 0.0 {
            break;
        }
        oracle.commit(e.advertiser as usize, e.node);
        headroom.take(e);
        allocation.insert(e)?;
        objective = total_value(instance, &oracle);
        trace.push(TraceStep {
            round,
            element: e,
            gain,
            objective,
        });
    }
    Ok(AllocatorRun {
        allocation,
        trace,
        objective,
    })
}

/// Greedy on the penalty objective. Re-evaluates the full frontier each round
/// (lazy caching is not sound for the penalty payoff in general) and stops
/// strictly before adding any element with nonpositive gain.
///
/// The guarantee's precondition - no single node's priced influence exceeds
/// any advertiser's budget - is checked and reported; a violation voids the
/// guarantee but not the run.
pub fn penalty_greedy_allocate(
    instance: &ProblemInstance,
    estimator: &dyn ReachEstimator,
    beta: f64,
) -> Result<PenaltyRun> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::Domain(format!("beta {beta} outside [0, 1]")));
    }
    let n = instance.node_count();
    let m = instance.advertiser_count();

    let mut precondition_satisfied = true;
    'outer: for j in 0..m {
        let p = &instance.profiles[j];
        for v in 0..n as u32 {
            if p.price * estimator.reach(j, &[v]) > p.budget {
                precondition_satisfied = false;
                break 'outer;
            }
        }
    }
    if !precondition_satisfied {
        eprintln!(
            "warning: a single node's priced influence exceeds an advertiser's budget; \
             the penalty-greedy guarantee does not apply"
        );
    }

    let mut oracle = EstimatorGainOracle::new(estimator, m);
    let mut headroom = Headroom::new(instance);
    let mut allocation = Allocation::new(n, m);
    let mut trace = Vec::new();
    let mut objective = 0.0;
    let penalty_total = |oracle: &EstimatorGainOracle| -> f64 {
        instance
            .profiles
            .iter()
            .enumerate()
            .map(|(j, p)| {
                if oracle.seeds[j].is_empty() {
                    0.0
                } else {
                    p.penalty_value(oracle.reach(j), beta)
                }
            })
            .sum()
    };
    let mut round = 0;
    while headroom.total_left > 0 {
        round += 1;
        let mut best: Option<(f64, GroundElement)> = None;
        for j in 0..m as u32 {
            for v in 0..n as u32 {
                let e = GroundElement::new(v, j);
                if allocation.contains(e) || !headroom.admits(e) {
                    continue;
                }
                let p = &instance.profiles[j as usize];
                let gain = p.penalty_value(oracle.reach_with(j as usize, v), beta)
                    - if oracle.seeds[j as usize].is_empty() {
                        0.0
                    } else {
                        p.penalty_value(oracle.reach(j as usize), beta)
                    };
                let better = match best {
                    None => true,
                    Some((bg, be)) => gain > bg || (gain == bg && e < be),
                };
                if better {
                    best = Some((gain, e));
                }
            }
        }
        let Some((gain, e)) = best else { break };
        if gain <= 0.0 {
            break;
        }
        oracle.commit(e.advertiser as usize, e.node);
        headroom.take(e);
        allocation.insert(e)?;
        objective = penalty_total(&oracle);
        trace.push(TraceStep {
            round,
            element: e,
            gain,
            objective,
        });
    }
    Ok(PenaltyRun {
        allocation,
        trace,
        objective,
        precondition_satisfied,
        beta,
    })
}

/// Local search for the two-matroid setting (advertiser caps present):
/// starting from the greedy solution, applies the first improving move in
/// deterministic order - add one element, or swap one element in while
/// removing up to two - accepting only moves that grow the objective by a
/// factor of at least 1 + epsilon / |ground|. Terminates at a local optimum;
/// the result is never below the greedy starting value.
pub fn local_search_two_matroids(
    instance: &ProblemInstance,
    estimator: &dyn ReachEstimator,
    epsilon: f64,
) -> Result<AllocatorRun> {
    if instance.constraints.advertiser_caps().is_none() {
        return Err(Error::Config(
            "local search needs per-advertiser seed caps; without them the \
             single-matroid greedy already has the better guarantee - use greedy_allocate"
                .into(),
        ));
    }
    if epsilon <= 0.0 {
        return Err(Error::Domain(format!("epsilon {epsilon} must be > 0")));
    }
    let n = instance.node_count();
    let m = instance.advertiser_count();
    let em = exposure_matroid(&instance.constraints, n, m);
    let am = advertiser_matroid(&instance.constraints, n)?;

    let start = greedy_allocate(instance, estimator)?;
    let mut current: Vec<GroundElement> = start.allocation.iter().collect();
    let mut objective = start.objective;
    let mut trace = start.trace;
    let ground = crate::allocation::full_ground_set(n, m);
    let threshold = 1.0 + epsilon / ground.len() as f64;

    let eval = |set: &[GroundElement]| -> f64 {
        let mut seeds = vec![Vec::new(); m];
        for e in set {
            seeds[e.advertiser as usize].push(e.node);
        }
        for s in &mut seeds {
            s.sort_unstable();
        }
        payoff::revenue_of_seed_sets(&instance.profiles, &seeds, estimator)
    };
    let feasible = |set: &[GroundElement]| em.is_independent(set) && am.is_independent(set);
    let improving =
        |new_val: f64, cur: f64| -> bool { new_val > cur && new_val >= cur * threshold };

    let mut round = trace.len();
    'search: loop {
        for &e in &ground {
            if current.contains(&e) {
                continue;
            }
            // add move
            let mut with = current.clone();
            with.push(e);
            if feasible(&with) {
                let val = eval(&with);
                if improving(val, objective) {
                    round += 1;
                    trace.push(TraceStep {
                        round,
                        element: e,
                        gain: val - objective,
                        objective: val,
                    });
                    current = with;
                    objective = val;
                    continue 'search;
                }
            }
            // swap moves: e in, one or two out
            for a in 0..current.len() {
                let mut one_out: Vec<GroundElement> = current
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != a)
                    .map(|(_, &x)| x)
                    .collect();
                one_out.push(e);
                if feasible(&one_out) {
                    let val = eval(&one_out);
                    if improving(val, objective) {
                        round += 1;
                        trace.push(TraceStep {
                            round,
                            element: e,
                            gain: val - objective,
                            objective: val,
                        });
                        current = one_out;
                        objective = val;
                        continue 'search;
                    }
                }
                for b in (a + 1)..current.len() {
                    let mut two_out: Vec<GroundElement> = current
                        .iter()
                        .enumerate()
                        .filter(|&(i, _)| i != a && i != b)
                        .map(|(_, &x)| x)
                        .collect();
                    two_out.push(e);
                    if feasible(&two_out) {
                        let val = eval(&two_out);
                        if improving(val, objective) {
                            round += 1;
                            trace.push(TraceStep {
                                round,
                                element: e,
                                gain: val - objective,
                                objective: val,
                            });
                            current = two_out;
                            objective = val;
                            continue 'search;
                        }
                    }
                }
            }
        }
        break;
    }

    let mut allocation = Allocation::new(n, m);
    for e in current {
        allocation.insert(e)?;
    }
    Ok(AllocatorRun {
        allocation,
        trace,
        objective,
    })
}

/// Exhaustive optimum of the revenue objective over all feasible allocations;
/// test and benchmark oracle for tiny instances.
pub fn brute_force_optimum(
    instance: &ProblemInstance,
    estimator: &dyn ReachEstimator,
) -> Result<(f64, Allocation)> {
    let n = instance.node_count();
    let m = instance.advertiser_count();
    let ground = crate::allocation::full_ground_set(n, m);
    if ground.len() > 24 {
        return Err(Error::Capacity(format!(
            "brute force enumerates 2^(n*m) allocations; {} elements is too many",
            ground.len()
        )));
    }
    brute_force_by(instance, &ground, |seeds| {
        payoff::revenue_of_seed_sets(&instance.profiles, seeds, estimator)
    })
}

/// Exhaustive optimum of the penalty objective.
pub fn brute_force_penalty_optimum(
    instance: &ProblemInstance,
    estimator: &dyn ReachEstimator,
    beta: f64,
) -> Result<(f64, Allocation)> {
    let n = instance.node_count();
    let m = instance.advertiser_count();
    let ground = crate::allocation::full_ground_set(n, m);
    if ground.len() > 24 {
        return Err(Error::Capacity("ground set too large".into()));
    }
    brute_force_by(instance, &ground, |seeds| {
        payoff::penalty_of_seed_sets(&instance.profiles, seeds, estimator, beta)
    })
}

fn brute_force_by(
    instance: &ProblemInstance,
    ground: &[GroundElement],
    score: impl Fn(&[Vec<u32>]) -> f64,
) -> Result<(f64, Allocation)> {
    let n = instance.node_count();
    let m = instance.advertiser_count();
    let mut best = (f64::NEG_INFINITY, Allocation::new(n, m));
    for mask in 0u32..(1 << ground.len()) {
        if (mask.count_ones() as usize) > instance.constraints.total_cap() as usize {
            continue;
        }
        let mut alloc = Allocation::new(n, m);
        for (i, &e) in ground.iter().enumerate() {
            if mask >> i & 1 == 1 {
                alloc.insert(e)?;
            }
        }
        if !instance.constraints.is_feasible(&alloc) {
            continue;
        }
        let seeds: Vec<Vec<u32>> = (0..m as u32).map(|j| alloc.seeds_of(j)).collect();
        let val = score(&seeds);
        if val > best.0 {
            best = (val, alloc);
        }
    }
    Ok(best)
}

/// Convenience: greedy over RR collections via the estimator interface.
pub fn greedy_allocate_with_collections(
    instance: &ProblemInstance,
    collections: &[RRCollection],
) -> Result<AllocatorRun> {
    let est = RrEstimator::new(collections);
    let _ = &est;
    greedy_allocate_rr(instance, collections)
}
