//! Graph storage, edge-list loading, and generation of per-advertiser
//! influence networks.
//!
//! A [`BaseGraph`] is the bare structure (contiguous node ids, deduplicated
//! arcs, no self-loops). An [`InfluenceNetwork`] attaches an activation
//! probability to every arc; arcs whose probability is zero are not stored.

use crate::seeding;
use crate::{Error, Result};
use rand::Rng;
use std::collections::{BTreeSet, HashMap};
use std::io::Write;

/// Directed graph with contiguous 0-based node ids.
///
/// Undirected inputs are stored as both arcs. Self-loops are dropped at load
/// and duplicate arcs are collapsed.
#[derive(Debug, Clone)]
pub struct BaseGraph {
    node_count: usize,
    directed: bool,
    out: Vec<Vec<u32>>,
    incoming: Vec<Vec<u32>>,
    arc_count: usize,
    /// Dense id -> original id from the input file, when loaded from text.
    original_ids: Option<Vec<u64>>,
}

impl BaseGraph {
    /// Builds a graph from arcs over `0..node_count`. Self-loops are dropped,
    /// duplicates collapsed; when `directed` is false each edge is stored as
    /// two arcs.
    pub fn from_arcs(
        node_count: usize,
        arcs: impl IntoIterator<Item = (u32, u32)>,
        directed: bool,
    ) -> Result<Self> {
        let mut out = vec![Vec::new(); node_count];
        let mut incoming = vec![Vec::new(); node_count];
        for (u, v) in arcs {
            if u as usize >= node_count || v as usize >= node_count {
                return Err(Error::Domain(format!(
                    "arc ({u}, {v}) out of range for {node_count} nodes"
                )));
            }
            if u == v {
                continue;
            }
            out[u as usize].push(v);
            incoming[v as usize].push(u);
            if !directed {
                out[v as usize].push(u);
                incoming[u as usize].push(v);
            }
        }
        let mut arc_count = 0;
        for list in out.iter_mut().chain(incoming.iter_mut()) {
            list.sort_unstable();
            list.dedup();
        }
        for list in &out {
            arc_count += list.len();
        }
        Ok(Self {
            node_count,
            directed,
            out,
            incoming,
            arc_count,
            original_ids: None,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Number of stored arcs (an undirected edge counts as two).
    pub fn arc_count(&self) -> usize {
        self.arc_count
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn out_neighbors(&self, v: u32) -> &[u32] {
        &self.out[v as usize]
    }

    pub fn in_neighbors(&self, v: u32) -> &[u32] {
        &self.incoming[v as usize]
    }

    /// Total degree (out + in), the sort key used by the structural baselines.
    pub fn total_degree(&self, v: u32) -> usize {
        self.out[v as usize].len() + self.incoming[v as usize].len()
    }

    /// All arcs in (source, target) order, sorted.
    pub fn arcs(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().map(move |&v| (u as u32, v)))
    }

    /// Dense id -> original input id, when the graph came from an edge list.
    pub fn original_id(&self, v: u32) -> u64 {
        match &self.original_ids {
            Some(ids) => ids[v as usize],
            None => v as u64,
        }
    }

    /// Writes the graph back out as an edge list ("u v" per arc; undirected
    /// graphs emit each edge once).
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> Result<()> {
        for (u, v) in self.arcs() {
            if !self.directed && u > v {
                continue;
            }
            writeln!(w, "{} {}", u, v)?;
        }
        Ok(())
    }
}

/// Parses a line-oriented edge list: one "u v" pair per line, '#'-prefixed
/// comment lines skipped, ids remapped to a contiguous 0-based range in order
/// of first appearance. A third column (weight) is ignored with a warning.
pub fn load_edge_list(text: &str, directed: bool) -> Result<BaseGraph> {
    let mut remap: HashMap<u64, u32> = HashMap::new();
    let mut original = Vec::new();
    let mut arcs = Vec::new();
    let mut warned_weights = false;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let parse = |tok: Option<&str>, i: usize| -> Result<u64> {
            tok.ok_or_else(|| Error::Parse {
                line: i + 1,
                msg: "expected two node ids".into(),
            })?
            .parse::<u64>()
            .map_err(|e| Error::Parse {
                line: i + 1,
                msg: format!("bad node id: {e}"),
            })
        };
        let u = parse(it.next(), i)?;
        let v = parse(it.next(), i)?;
        if it.next().is_some() && !warned_weights {
            eprintln!("warning: edge list carries extra columns; weights are ignored");
            warned_weights = true;
        }
        let mut id = |raw: u64| -> u32 {
            *remap.entry(raw).or_insert_with(|| {
                original.push(raw);
                (original.len() - 1) as u32
            })
        };
        let (du, dv) = (id(u), id(v));
        arcs.push((du, dv));
    }
    let mut g = BaseGraph::from_arcs(original.len(), arcs, directed)?;
    g.original_ids = Some(original);
    Ok(g)
}

/// Per-advertiser influence network: the arcs of a base graph, each with an
/// activation probability. Zero-probability arcs are omitted, so every stored
/// probability lies in (0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceNetwork {
    node_count: usize,
    out: Vec<Vec<(u32, f64)>>,
    incoming: Vec<Vec<(u32, f64)>>,
    arc_count: usize,
}

impl InfluenceNetwork {
    /// Builds a network from (source, target, probability) triples.
    /// Probabilities must be in [0, 1]; zeros are dropped.
    pub fn from_arcs(
        node_count: usize,
        arcs: impl IntoIterator<Item = (u32, u32, f64)>,
    ) -> Result<Self> {
        let mut out = vec![Vec::new(); node_count];
        let mut incoming = vec![Vec::new(); node_count];
        let mut arc_count = 0;
        for (u, v, p) in arcs {
            if u as usize >= node_count || v as usize >= node_count || u == v {
                return Err(Error::Domain(format!("bad arc ({u}, {v})")));
            }
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Domain(format!(
                    "probability {p} for arc ({u}, {v}) outside [0, 1]"
                )));
            }
            if p == 0.0 {
                continue;
            }
            out[u as usize].push((v, p));
            incoming[v as usize].push((u, p));
            arc_count += 1;
        }
        for list in out.iter_mut().chain(incoming.iter_mut()) {
            list.sort_unstable_by_key(|&(w, _)| w);
        }
        Ok(Self {
            node_count,
            out,
            incoming,
            arc_count,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn arc_count(&self) -> usize {
        self.arc_count
    }

    /// Outgoing arcs of `v` as (target, probability).
    pub fn out_arcs(&self, v: u32) -> &[(u32, f64)] {
        &self.out[v as usize]
    }

    /// Incoming arcs of `v` as (source, probability).
    pub fn in_arcs(&self, v: u32) -> &[(u32, f64)] {
        &self.incoming[v as usize]
    }

    /// Probability of arc (u, v); zero if absent.
    pub fn prob(&self, u: u32, v: u32) -> f64 {
        match self.out[u as usize].binary_search_by_key(&v, |&(w, _)| w) {
            Ok(i) => self.out[u as usize][i].1,
            Err(_) => 0.0,
        }
    }

    pub fn arcs(&self) -> impl Iterator<Item = (u32, u32, f64)> + '_ {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().map(move |&(v, p)| (u as u32, v, p)))
    }

    /// Sorted multiset of all stored probabilities; node swaps must preserve it.
    pub fn probability_multiset(&self) -> Vec<f64> {
        let mut ps: Vec<f64> = self.arcs().map(|(_, _, p)| p).collect();
        ps.sort_by(f64::total_cmp);
        ps
    }

    /// Relabels nodes `a` and `b` in place, exchanging all incident
    /// probabilities. The result is isomorphic to the input.
    fn swap_nodes(&mut self, a: u32, b: u32) {
        if a == b {
            return;
        }
        self.out.swap(a as usize, b as usize);
        self.incoming.swap(a as usize, b as usize);
        // Every list that can mention a or b: the four swapped rows plus the
        // rows of each counterparty appearing in them.
        let mut touched: BTreeSet<u32> = [a, b].into();
        for x in [a, b] {
            touched.extend(self.out[x as usize].iter().map(|&(w, _)| w));
            touched.extend(self.incoming[x as usize].iter().map(|&(w, _)| w));
        }
        for w in touched {
            for list in [&mut self.out[w as usize], &mut self.incoming[w as usize]] {
                let mut changed = false;
                for entry in list.iter_mut() {
                    if entry.0 == a {
                        entry.0 = b;
                        changed = true;
                    } else if entry.0 == b {
                        entry.0 = a;
                        changed = true;
                    }
                }
                if changed {
                    list.sort_unstable_by_key(|&(t, _)| t);
                }
            }
        }
    }
}

/// Parameters for the influence-network generators.
#[derive(Debug, Clone)]
pub struct GeneratorConfig {
    /// Upper bound of the per-node uniform draw for product probabilities.
    pub lambda_max: f64,
    /// Swap parameter `s`; a variant performs `s * n / 100` node swaps.
    pub swap_parameter: u32,
    /// Uniform arc probability, for the uniform generator.
    pub uniform_p: Option<f64>,
    pub rng_seed: u64,
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda_max) {
            return Err(Error::Domain(format!(
                "lambda_max {} outside [0, 1]",
                self.lambda_max
            )));
        }
        if let Some(p) = self.uniform_p {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Domain(format!("uniform_p {p} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Assigns arc probabilities from an explicit per-node factor vector:
/// arc (u, v) gets `lambda[u] * lambda[v]`.
pub fn network_from_lambdas(base: &BaseGraph, lambda: &[f64]) -> Result<InfluenceNetwork> {
    if lambda.len() != base.node_count() {
        return Err(Error::Domain(format!(
            "{} lambda values for {} nodes",
            lambda.len(),
            base.node_count()
        )));
    }
    InfluenceNetwork::from_arcs(
        base.node_count(),
        base.arcs()
            .map(|(u, v)| (u, v, lambda[u as usize] * lambda[v as usize])),
    )
}

/// Draws a factor `lambda_v` per node independently uniform on
/// `[0, lambda_max]` and assigns arc (u, v) the probability
/// `lambda_u * lambda_v`. Deterministic for a fixed seed.
pub fn assign_lambda_probabilities(
    base: &BaseGraph,
    lambda_max: f64,
    rng_seed: u64,
) -> Result<InfluenceNetwork> {
    if !(0.0..=1.0).contains(&lambda_max) {
        return Err(Error::Domain(format!("lambda_max {lambda_max} outside [0, 1]")));
    }
    let mut rng = seeding::rng(rng_seed);
    let lambda: Vec<f64> = (0..base.node_count())
        .map(|_| rng.gen_range(0.0..=lambda_max))
        .collect();
    network_from_lambdas(base, &lambda)
}

/// Assigns the same probability `p` to every arc.
pub fn assign_uniform_probabilities(base: &BaseGraph, p: f64) -> Result<InfluenceNetwork> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("probability {p} outside [0, 1]")));
    }
    InfluenceNetwork::from_arcs(base.node_count(), base.arcs().map(|(u, v)| (u, v, p)))
}

/// Number of node swaps performed for swap parameter `s` on an `n`-node
/// graph: floor(s * n / 100).
pub fn swap_count(s: u32, n: usize) -> usize {
    s as usize * n / 100
}

/// Applies `floor(s * n / 100)` random node swaps. Each swap picks two nodes
/// independently and uniformly at random (drawing u = v is allowed and is a
/// counted no-op) and exchanges all their incident probabilities. The output
/// is isomorphic to the input.
pub fn node_swap_variant(net: &InfluenceNetwork, s: u32, rng_seed: u64) -> InfluenceNetwork {
    let mut net = net.clone();
    let n = net.node_count();
    if n == 0 {
        return net;
    }
    let mut rng = seeding::rng(rng_seed);
    for _ in 0..swap_count(s, n) {
        let a = rng.gen_range(0..n) as u32;
        let b = rng.gen_range(0..n) as u32;
        net.swap_nodes(a, b);
    }
    net
}

/// How the `m` per-advertiser networks relate to each other.
#[derive(Debug, Clone, Copy)]
pub enum ReplicationMode {
    /// Fresh lambda draws per advertiser.
    Independent { lambda_max: f64 },
    /// One lambda draw shared by all advertisers.
    Identical { lambda_max: f64 },
    /// One shared draw, then an independent swap sequence per advertiser.
    Swapped { lambda_max: f64, s: u32 },
    /// Every arc gets probability `p` for every advertiser.
    Uniform { p: f64 },
}

/// Generates the `m` influence networks for one problem instance.
pub fn replicate_for_advertisers(
    base: &BaseGraph,
    m: usize,
    mode: ReplicationMode,
    rng_seed: u64,
) -> Result<Vec<InfluenceNetwork>> {
    if m < 1 {
        return Err(Error::Domain("advertiser count must be at least 1".into()));
    }
    match mode {
        ReplicationMode::Independent { lambda_max } => (0..m)
            .map(|j| {
                assign_lambda_probabilities(base, lambda_max, seeding::salted(rng_seed, j as u64))
            })
            .collect(),
        ReplicationMode::Identical { lambda_max } => {
            let net = assign_lambda_probabilities(base, lambda_max, rng_seed)?;
            Ok(vec![net; m])
        }
        ReplicationMode::Swapped { lambda_max, s } => {
            let net = assign_lambda_probabilities(base, lambda_max, rng_seed)?;
            Ok((0..m)
                .map(|j| node_swap_variant(&net, s, seeding::salted(rng_seed, 0x5a5a + j as u64)))
                .collect())
        }
        ReplicationMode::Uniform { p } => {
            let net = assign_uniform_probabilities(base, p)?;
            Ok(vec![net; m])
        }
    }
}

/// Writes "u v j p" lines for all arcs of all advertiser networks, with
/// probabilities at 13 significant digits for reproducibility.
pub fn dump_probabilities<W: Write>(networks: &[InfluenceNetwork], mut w: W) -> Result<()> {
    for (j, net) in networks.iter().enumerate() {
        for (u, v, p) in net.arcs() {
            writeln!(w, "{} {} {} {:.12e}", u, v, j, p)?;
        }
    }
    Ok(())
}

/// Undirected preferential-attachment graph: starts from a small clique and
/// attaches each new node to `attach` distinct existing nodes chosen with
/// probability proportional to degree + 1.
pub fn preferential_attachment(n: usize, attach: usize, rng_seed: u64) -> Result<BaseGraph> {
    if attach == 0 || n < attach + 1 {
        return Err(Error::Domain(format!(
            "preferential attachment needs n > attach >= 1, got n={n} attach={attach}"
        )));
    }
    let mut rng = seeding::rng(rng_seed);
    let mut edges: Vec<(u32, u32)> = Vec::new();
    let mut degree = vec![0usize; n];
    let seed_nodes = attach + 1;
    for u in 0..seed_nodes {
        for v in (u + 1)..seed_nodes {
            edges.push((u as u32, v as u32));
            degree[u] += 1;
            degree[v] += 1;
        }
    }
    for u in seed_nodes..n {
        let mut chosen = BTreeSet::new();
        // degree + 1 weights so isolated targets stay reachable
        let mut total: usize = (0..u).map(|v| degree[v] + 1).sum();
        while chosen.len() < attach {
            let mut t = rng.gen_range(0..total);
            let mut pick = 0;
            for v in 0..u {
                if chosen.contains(&(v as u32)) {
                    continue;
                }
                let w = degree[v] + 1;
                if t < w {
                    pick = v;
                    break;
                }
                t -= w;
            }
            chosen.insert(pick as u32);
            total -= degree[pick] + 1;
        }
        for &v in &chosen {
            edges.push((u as u32, v));
            degree[u] += 1;
            degree[v as usize] += 1;
        }
    }
    BaseGraph::from_arcs(n, edges, false)
}

/// Undirected random regular graph via the configuration model with
/// resampling on clashes. `n * degree` must be even.
pub fn random_regular(n: usize, degree: usize, rng_seed: u64) -> Result<BaseGraph> {
    if degree >= n || n * degree % 2 != 0 {
        return Err(Error::Domain(format!(
            "random regular graph needs degree < n and n*degree even, got n={n} degree={degree}"
        )));
    }
    let mut rng = seeding::rng(rng_seed);
    'attempt: for _ in 0..200 {
        let mut stubs: Vec<u32> = (0..n as u32)
            .flat_map(|v| std::iter::repeat(v).take(degree))
            .collect();
        // Fisher-Yates
        for i in (1..stubs.len()).rev() {
            let j = rng.gen_range(0..=i);
            stubs.swap(i, j);
        }
        let mut seen = BTreeSet::new();
        let mut edges = Vec::with_capacity(n * degree / 2);
        for pair in stubs.chunks(2) {
            let (u, v) = (pair[0], pair[1]);
            if u == v || !seen.insert((u.min(v), u.max(v))) {
                continue 'attempt;
            }
            edges.push((u, v));
        }
        return BaseGraph::from_arcs(n, edges, false);
    }
    Err(Error::Internal(format!(
        "configuration model failed to produce a simple {degree}-regular graph on {n} nodes"
    )))
}
