//! Coordinated seed selection for multiple ad campaigns on a shared social
//! network.
//!
//! The host of a social network runs `m` advertisers' campaigns at once. Each
//! advertiser has its own Independent-Cascade influence network over the same
//! node set, pays a fixed price per exposed user up to a budget, and the host
//! must choose which users receive which sponsored ads subject to per-node
//! exposure bounds and an overall seed budget.
//!
//! Module map:
//! - [`graph`]: graph storage, edge-list loading, influence-network generation
//! - [`diffusion`]: forward IC simulation and an exact small-graph oracle
//! - [`rrsets`]: reverse-reachability sampling and reach estimation
//! - [`allocation`]: the (node, advertiser) ground set, constraints, matroids
//! - [`payoff`]: advertiser value functions and the global objectives
//! - [`greedy`]: greedy, penalty-aware greedy, and two-matroid local search
//! - [`lp`]: max-coverage LP relaxation, simplex solve, dependent rounding
//! - [`heuristics`]: degree and eigenvector-centrality baselines
//! - [`bench`]: experiment harness emitting CSV

pub mod allocation;
pub mod bench;
pub mod diffusion;
pub mod graph;
pub mod greedy;
pub mod heuristics;
pub mod lp;
pub mod payoff;
pub mod rrsets;

mod seeding;

pub use allocation::{Allocation, ConstraintSystem, GroundElement};
pub use graph::{BaseGraph, InfluenceNetwork};
pub use payoff::{AdvertiserProfile, ProblemInstance, ReachEstimator};
pub use rrsets::RRCollection;

/// Errors produced anywhere in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("internal error: {0}")]
    Internal(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
