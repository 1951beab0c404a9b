//! The (node, advertiser) ground set, the constraint system, and the matroid
//! view of the constraints.
//!
//! Feasible seed assignments are exactly the common independent sets of two
//! partition matroids: exposure bounds plus the total seed budget form a
//! truncated partition matroid over the per-node classes, and the optional
//! per-advertiser seed caps form a partition matroid over the per-advertiser
//! classes.

use crate::{Error, Result};
use std::collections::BTreeSet;
use std::fmt;

/// One assignable unit: show advertiser `advertiser`'s sponsored ad to
/// `node`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GroundElement {
    pub node: u32,
    pub advertiser: u32,
}

impl GroundElement {
    pub fn new(node: u32, advertiser: u32) -> Self {
        GroundElement { node, advertiser }
    }
}

// Ordered by (advertiser, node): the tie-break order used by the allocators
// and the serialization order of allocation CSVs.
impl Ord for GroundElement {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.advertiser, self.node).cmp(&(other.advertiser, other.node))
    }
}

impl PartialOrd for GroundElement {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for GroundElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.node, self.advertiser)
    }
}

/// A set of seed assignments; the decision variable of the whole problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Allocation {
    node_count: usize,
    advertiser_count: usize,
    elements: BTreeSet<GroundElement>,
}

impl Allocation {
    pub fn new(node_count: usize, advertiser_count: usize) -> Self {
        Allocation {
            node_count,
            advertiser_count,
            elements: BTreeSet::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn advertiser_count(&self) -> usize {
        self.advertiser_count
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, e: GroundElement) -> bool {
        self.elements.contains(&e)
    }

    /// Inserts an element; duplicate insertion is a contract violation.
    pub fn insert(&mut self, e: GroundElement) -> Result<()> {
        if e.node as usize >= self.node_count || e.advertiser as usize >= self.advertiser_count {
            return Err(Error::Domain(format!("element {e} out of range")));
        }
        if !self.elements.insert(e) {
            return Err(Error::Contract(format!("duplicate element {e}")));
        }
        Ok(())
    }

    pub fn remove(&mut self, e: GroundElement) -> bool {
        self.elements.remove(&e)
    }

    /// Elements sorted by (advertiser, node).
    pub fn iter(&self) -> impl Iterator<Item = GroundElement> + '_ {
        self.elements.iter().copied()
    }

    /// Seed nodes of advertiser `j`, sorted.
    pub fn seeds_of(&self, j: u32) -> Vec<u32> {
        self.elements
            .range(
                GroundElement::new(0, j)..=GroundElement::new(u32::MAX, j),
            )
            .map(|e| e.node)
            .collect()
    }

    /// Advertisers whose ad node `v` is seeded with, sorted.
    pub fn advertisers_of(&self, v: u32) -> Vec<u32> {
        self.elements
            .iter()
            .filter(|e| e.node == v)
            .map(|e| e.advertiser)
            .collect()
    }

    /// Number of sponsored ads shown to node `v`.
    pub fn exposure_count(&self, v: u32) -> usize {
        self.elements.iter().filter(|e| e.node == v).count()
    }

    /// CSV serialization: a header plus "node,advertiser" lines sorted by
    /// (advertiser, node).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("node,advertiser\n");
        for e in self.iter() {
            out.push_str(&format!("{},{}\n", e.node, e.advertiser));
        }
        out
    }

    pub fn from_csv(text: &str, node_count: usize, advertiser_count: usize) -> Result<Self> {
        let mut alloc = Allocation::new(node_count, advertiser_count);
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (i == 0 && line == "node,advertiser") {
                continue;
            }
            let mut parts = line.split(',');
            let mut field = |name: &str| -> Result<u32> {
                parts
                    .next()
                    .ok_or_else(|| Error::Parse {
                        line: i + 1,
                        msg: format!("missing {name}"),
                    })?
                    .trim()
                    .parse()
                    .map_err(|e| Error::Parse {
                        line: i + 1,
                        msg: format!("bad {name}: {e}"),
                    })
            };
            let node = field("node")?;
            let advertiser = field("advertiser")?;
            alloc.insert(GroundElement::new(node, advertiser))?;
        }
        Ok(alloc)
    }
}

/// Per-node exposure bounds: one shared bound or an explicit per-node list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExposureBounds {
    Uniform(u32),
    PerNode(Vec<u32>),
}

/// The constraint system: exposure bounds r_v, optional per-advertiser seed
/// caps k_j, and the total seed budget K. The caps and the total budget are
/// enforced independently.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintSystem {
    exposure: ExposureBounds,
    advertiser_caps: Option<Vec<u32>>,
    total_cap: u32,
}

impl ConstraintSystem {
    pub fn new(
        exposure: ExposureBounds,
        advertiser_caps: Option<Vec<u32>>,
        total_cap: u32,
    ) -> Self {
        ConstraintSystem {
            exposure,
            advertiser_caps,
            total_cap,
        }
    }

    /// The common experimental setting: every node may see `r` sponsored ads,
    /// no per-advertiser caps, `total_cap` seeds overall.
    pub fn uniform(r: u32, total_cap: u32) -> Self {
        Self::new(ExposureBounds::Uniform(r), None, total_cap)
    }

    pub fn with_caps(mut self, caps: Vec<u32>) -> Self {
        self.advertiser_caps = Some(caps);
        self
    }

    pub fn exposure_bound(&self, v: u32) -> u32 {
        match &self.exposure {
            ExposureBounds::Uniform(r) => *r,
            ExposureBounds::PerNode(rs) => rs[v as usize],
        }
    }

    pub fn advertiser_caps(&self) -> Option<&[u32]> {
        self.advertiser_caps.as_deref()
    }

    pub fn total_cap(&self) -> u32 {
        self.total_cap
    }

    /// Conjunction of all applicable constraints.
    pub fn is_feasible(&self, alloc: &Allocation) -> bool {
        if alloc.len() > self.total_cap as usize {
            return false;
        }
        let mut per_node = vec![0u32; alloc.node_count()];
        let mut per_adv = vec![0u32; alloc.advertiser_count()];
        for e in alloc.iter() {
            per_node[e.node as usize] += 1;
            per_adv[e.advertiser as usize] += 1;
        }
        for (v, &c) in per_node.iter().enumerate() {
            if c > self.exposure_bound(v as u32) {
                return false;
            }
        }
        if let Some(caps) = &self.advertiser_caps {
            for (j, &c) in per_adv.iter().enumerate() {
                if c > caps[j] {
                    return false;
                }
            }
        }
        true
    }
}

/// Conjunction of all applicable constraints (free-function form).
pub fn is_feasible(constraints: &ConstraintSystem, alloc: &Allocation) -> bool {
    constraints.is_feasible(alloc)
}

/// An independence oracle over sets of [`GroundElement`].
pub trait Matroid {
    fn ground_size(&self) -> usize;
    fn is_independent(&self, set: &[GroundElement]) -> bool;
    /// Must agree with `is_independent(set + e)` whenever `set` is
    /// independent and `e` is not in `set`.
    fn can_add(&self, set: &[GroundElement], e: GroundElement) -> bool {
        let mut with: Vec<GroundElement> = set.to_vec();
        with.push(e);
        self.is_independent(&with)
    }
}

/// Truncated partition matroid over the per-node classes X_v: independent iff
/// every node's exposure count is within r_v and the total size is within K.
#[derive(Debug, Clone)]
pub struct ExposureMatroid {
    exposure: ExposureBounds,
    total_cap: u32,
    node_count: usize,
    advertiser_count: usize,
}

impl Matroid for ExposureMatroid {
    fn ground_size(&self) -> usize {
        self.node_count * self.advertiser_count
    }

    fn is_independent(&self, set: &[GroundElement]) -> bool {
        if set.len() > self.total_cap as usize {
            return false;
        }
        let mut count = vec![0u32; self.node_count];
        for e in set {
            count[e.node as usize] += 1;
            if count[e.node as usize]
                > match &self.exposure {
                    ExposureBounds::Uniform(r) => *r,
                    ExposureBounds::PerNode(rs) => rs[e.node as usize],
                }
            {
                return false;
            }
        }
        true
    }

    fn can_add(&self, set: &[GroundElement], e: GroundElement) -> bool {
        if set.len() + 1 > self.total_cap as usize {
            return false;
        }
        let r = match &self.exposure {
            ExposureBounds::Uniform(r) => *r,
            ExposureBounds::PerNode(rs) => rs[e.node as usize],
        };
        let at_node = set.iter().filter(|x| x.node == e.node).count() as u32;
        at_node + 1 <= r
    }
}

/// Partition matroid over the per-advertiser classes N_j: independent iff
/// every advertiser's seed count is within k_j.
#[derive(Debug, Clone)]
pub struct AdvertiserMatroid {
    caps: Vec<u32>,
    node_count: usize,
}

impl Matroid for AdvertiserMatroid {
    fn ground_size(&self) -> usize {
        self.node_count * self.caps.len()
    }

    fn is_independent(&self, set: &[GroundElement]) -> bool {
        let mut count = vec![0u32; self.caps.len()];
        for e in set {
            count[e.advertiser as usize] += 1;
            if count[e.advertiser as usize] > self.caps[e.advertiser as usize] {
                return false;
            }
        }
        true
    }

    fn can_add(&self, set: &[GroundElement], e: GroundElement) -> bool {
        let at_adv = set.iter().filter(|x| x.advertiser == e.advertiser).count() as u32;
        at_adv + 1 <= self.caps[e.advertiser as usize]
    }
}

pub fn exposure_matroid(
    constraints: &ConstraintSystem,
    node_count: usize,
    advertiser_count: usize,
) -> ExposureMatroid {
    ExposureMatroid {
        exposure: constraints.exposure.clone(),
        total_cap: constraints.total_cap,
        node_count,
        advertiser_count,
    }
}

pub fn advertiser_matroid(
    constraints: &ConstraintSystem,
    node_count: usize,
) -> Result<AdvertiserMatroid> {
    match &constraints.advertiser_caps {
        Some(caps) => Ok(AdvertiserMatroid {
            caps: caps.clone(),
            node_count,
        }),
        None => Err(Error::Config(
            "advertiser matroid requires per-advertiser seed caps".into(),
        )),
    }
}

/// Maximum ground-set size [`verify_exchange_property`] will enumerate.
pub const EXCHANGE_CHECK_LIMIT: usize = 14;

/// Exhaustively checks that the oracle restricted to `ground` is a matroid:
/// the empty set is independent, independence is downward closed, and the
/// exchange property holds for every pair of independent sets.
pub fn verify_exchange_property(matroid: &dyn Matroid, ground: &[GroundElement]) -> Result<bool> {
    let g = ground.len();
    if g > EXCHANGE_CHECK_LIMIT {
        return Err(Error::Capacity(format!(
            "exchange check enumerates 2^g subsets and is capped at g = {EXCHANGE_CHECK_LIMIT}; got {g}"
        )));
    }
    let materialize = |mask: u32| -> Vec<GroundElement> {
        (0..g).filter(|i| mask >> i & 1 == 1).map(|i| ground[i]).collect()
    };
    let masks = 1u32 << g;
    let indep: Vec<bool> = (0..masks)
        .map(|mask| matroid.is_independent(&materialize(mask)))
        .collect();
    if !indep[0] {
        return Ok(false);
    }
    for mask in 0..masks {
        if !indep[mask as usize] {
            continue;
        }
        // downward closure via single-element removals
        for i in 0..g {
            if mask >> i & 1 == 1 && !indep[(mask ^ (1 << i)) as usize] {
                return Ok(false);
            }
        }
    }
    // exchange: |S| < |T| implies some x in T \ S with S + x independent
    let mut by_size: Vec<Vec<u32>> = vec![Vec::new(); g + 1];
    for mask in 0..masks {
        if indep[mask as usize] {
            by_size[mask.count_ones() as usize].push(mask);
        }
    }
    let addable: Vec<u32> = (0..masks)
        .map(|mask| {
            if !indep[mask as usize] {
                return 0;
            }
            let mut bits = 0u32;
            for i in 0..g {
                if mask >> i & 1 == 0 && indep[(mask | (1 << i)) as usize] {
                    bits |= 1 << i;
                }
            }
            bits
        })
        .collect();
    for small in 0..g {
        for large in (small + 1)..=g {
            for &s in &by_size[small] {
                for &t in &by_size[large] {
                    if t & !s & addable[s as usize] == 0 {
                        return Ok(false);
                    }
                }
            }
        }
    }
    Ok(true)
}

/// Full ground set for an n-node, m-advertiser instance, in (advertiser,
/// node) order.
pub fn full_ground_set(node_count: usize, advertiser_count: usize) -> Vec<GroundElement> {
    let mut out = Vec::with_capacity(node_count * advertiser_count);
    for j in 0..advertiser_count as u32 {
        for v in 0..node_count as u32 {
            out.push(GroundElement::new(v, j));
        }
    }
    out
}
