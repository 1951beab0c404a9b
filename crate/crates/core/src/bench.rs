//! Experiment harness: desk-scale reruns of the study designs, emitting CSV.
//!
//! Every experiment is a pure function of (inputs, master seed); reruns
//! produce identical CSV bytes except for wall-clock timing columns. Each CSV
//! starts with a comment line carrying the config hash and the seed.

use crate::allocation::ConstraintSystem;
use crate::graph::{self, BaseGraph, ReplicationMode};
use crate::greedy;
use crate::heuristics;
use crate::lp;
use crate::payoff::{AdvertiserProfile, ProblemInstance, RrEstimator};
use crate::rrsets::RRCollection;
use crate::seeding;
use crate::{Error, Result};
use std::collections::BTreeMap;
use std::time::Instant;

/// Key-value configuration document: one `key = value` per line, `#`
/// comments, lists comma-separated. Mirrors the CLI flags.
#[derive(Debug, Clone, Default)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                msg: "expected 'key = value'".into(),
            })?;
            entries.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Config { entries })
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|s| s.as_str())
    }

    pub fn get_parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|_| {
                Error::Config(format!("config key '{key}' has unparsable value '{raw}'"))
            }),
        }
    }

    pub fn get_list<T: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .split(',')
                .map(|tok| {
                    tok.trim().parse().map_err(|_| {
                        Error::Config(format!("config key '{key}': bad list item '{tok}'"))
                    })
                })
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }

    /// Canonical text (sorted keys); the hashed representation.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }
}

/// FNV-1a over the canonical config text; recorded in every CSV header.
pub fn config_hash(config: &Config) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in config.canonical().bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Assembles a CSV document: comment line with config hash and seed, header
/// row, then data rows.
pub fn csv_document(
    config: &Config,
    seed: u64,
    header: &str,
    rows: impl IntoIterator<Item = String>,
) -> String {
    let mut out = format!("# config_hash={:016x} seed={}\n{}\n", config_hash(config), seed, header);
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    out
}

fn unbudgeted_profiles(m: usize) -> Vec<AdvertiserProfile> {
    (0..m).map(|_| AdvertiserProfile::unbudgeted(1.0)).collect()
}

fn sample_collections(
    networks: &[graph::InfluenceNetwork],
    rho_per_advertiser: usize,
    seed: u64,
) -> Result<Vec<RRCollection>> {
    networks
        .iter()
        .enumerate()
        .map(|(j, net)| {
            RRCollection::sample_par(net, j, rho_per_advertiser, seeding::salted(seed, j as u64))
        })
        .collect()
}

/// Unbudgeted payoff of per-advertiser seed sets under given collections:
/// the sum of estimated reaches.
fn reach_sum(collections: &[RRCollection], seeds: &[Vec<u32>]) -> f64 {
    collections
        .iter()
        .zip(seeds)
        .map(|(coll, s)| coll.estimate_reach(s))
        .sum()
}

/// RR-calibration metrics for one sample-count multiplier.
#[derive(Debug, Clone)]
pub struct CalibrationRow {
    pub multiplier: usize,
    /// Mean over redraws of the total absolute payoff-estimation error of the
    /// reference seed sets, relative to the 200n-reference estimate.
    pub mean_abs_error: f64,
    /// Standard deviation of the redrawn payoff estimates over their mean.
    pub normalized_std: f64,
    /// Mean payoff of greedy run at this multiplier, relative to the greedy
    /// run at the 100n reference (both payoffs measured on the 200n
    /// collections).
    pub greedy_quality: f64,
}

/// Reruns the RR-calibration protocol: reference seed sets from greedy at
/// 200n samples per advertiser, then `repetitions` redraw rounds per
/// multiplier measuring estimation error, estimator spread, and greedy
/// quality against a 100n greedy reference.
pub fn run_calibration(
    base: &BaseGraph,
    m: usize,
    multipliers: &[usize],
    repetitions: usize,
    total_seeds: u32,
    seed: u64,
) -> Result<Vec<CalibrationRow>> {
    let n = base.node_count();
    let networks = graph::replicate_for_advertisers(
        base,
        m,
        ReplicationMode::Independent { lambda_max: 0.4 },
        seeding::salted(seed, 1),
    )?;
    let instance = ProblemInstance::new(
        base.clone(),
        networks.clone(),
        unbudgeted_profiles(m),
        ConstraintSystem::uniform(1, total_seeds),
    )?;

    let reference = sample_collections(&networks, 200 * n, seeding::salted(seed, 2))?;
    let ref_run = greedy::greedy_allocate_rr(&instance, &reference)?;
    let ref_seeds: Vec<Vec<u32>> = (0..m as u32).map(|j| ref_run.allocation.seeds_of(j)).collect();
    let ref_estimates: Vec<f64> = reference
        .iter()
        .zip(&ref_seeds)
        .map(|(coll, s)| coll.estimate_reach(s))
        .collect();
    let ref_total: f64 = ref_estimates.iter().sum();

    let hundred = sample_collections(&networks, 100 * n, seeding::salted(seed, 3))?;
    let hundred_run = greedy::greedy_allocate_rr(&instance, &hundred)?;
    let hundred_seeds: Vec<Vec<u32>> =
        (0..m as u32).map(|j| hundred_run.allocation.seeds_of(j)).collect();
    let hundred_payoff = reach_sum(&reference, &hundred_seeds);

    let mut rows = Vec::new();
    for &mult in multipliers {
        let mut errors = Vec::with_capacity(repetitions);
        let mut totals = Vec::with_capacity(repetitions);
        let mut qualities = Vec::with_capacity(repetitions);
        for rep in 0..repetitions {
            let redraw_seed = seeding::salted(seed, 1000 + (mult as u64) * 7919 + rep as u64);
            let redraw = sample_collections(&networks, mult * n, redraw_seed)?;
            let estimates: Vec<f64> = redraw
                .iter()
                .zip(&ref_seeds)
                .map(|(coll, s)| coll.estimate_reach(s))
                .collect();
            let abs_err: f64 = estimates
                .iter()
                .zip(&ref_estimates)
                .map(|(e, r)| (e - r).abs())
                .sum();
            errors.push(abs_err / ref_total);
            totals.push(estimates.iter().sum::<f64>());

            let run = greedy::greedy_allocate_rr(&instance, &redraw)?;
            let seeds: Vec<Vec<u32>> = (0..m as u32).map(|j| run.allocation.seeds_of(j)).collect();
            qualities.push(reach_sum(&reference, &seeds) / hundred_payoff);
        }
        let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
        let total_mean = mean(&totals);
        let std = (totals
            .iter()
            .map(|t| (t - total_mean) * (t - total_mean))
            .sum::<f64>()
            / (totals.len().max(2) - 1) as f64)
            .sqrt();
        rows.push(CalibrationRow {
            multiplier: mult,
            mean_abs_error: mean(&errors),
            normalized_std: std / total_mean,
            greedy_quality: mean(&qualities),
        });
    }
    Ok(rows)
}

pub fn calibration_csv(rows: &[CalibrationRow]) -> (String, Vec<String>) {
    (
        "multiplier,mean_abs_error,normalized_std,greedy_quality".into(),
        rows.iter()
            .map(|r| {
                format!(
                    "{},{:.6},{:.6},{:.6}",
                    r.multiplier, r.mean_abs_error, r.normalized_std, r.greedy_quality
                )
            })
            .collect(),
    )
}

#[derive(Debug, Clone)]
pub struct PayoffVsKRow {
    pub total_seeds: u32,
    pub algorithm: &'static str,
    pub payoff: f64,
    pub opt_lp: f64,
}

/// Payoff versus the total seed budget: independent per-advertiser networks,
/// unbudgeted advertisers, all four allocators plus the fractional optimum.
pub fn run_payoff_vs_k(
    base: &BaseGraph,
    m: usize,
    k_values: &[u32],
    rho_mult: usize,
    seed: u64,
) -> Result<Vec<PayoffVsKRow>> {
    let n = base.node_count();
    let networks = graph::replicate_for_advertisers(
        base,
        m,
        ReplicationMode::Independent { lambda_max: 0.4 },
        seeding::salted(seed, 11),
    )?;
    let collections = sample_collections(&networks, rho_mult * n, seeding::salted(seed, 12))?;
    let estimator = RrEstimator::new(&collections);
    let mut rows = Vec::new();
    for &k in k_values {
        let instance = ProblemInstance::new(
            base.clone(),
            networks.clone(),
            unbudgeted_profiles(m),
            ConstraintSystem::uniform(1, k),
        )?;
        let lp_instance = lp::build_lp(&instance, &collections)?;
        let lp_solution = lp::solve_lp(&lp_instance)?;
        let opt_lp = lp_solution.objective;

        let greedy_run = greedy::greedy_allocate_rr(&instance, &collections)?;
        rows.push(PayoffVsKRow {
            total_seeds: k,
            algorithm: "greedy",
            payoff: greedy_run.objective,
            opt_lp,
        });
        let rounded = lp::star_round(&lp_instance, &lp_solution, seeding::salted(seed, k as u64))?;
        let lp_payoff =
            crate::payoff::objective_revenue(&instance, &rounded.allocation, &estimator)?;
        rows.push(PayoffVsKRow {
            total_seeds: k,
            algorithm: "lp-round",
            payoff: lp_payoff,
            opt_lp,
        });
        for (name, alloc) in [
            ("max-degree", heuristics::max_degree_allocate(&instance)?),
            ("eigen", heuristics::eigen_centrality_allocate(&instance)?),
        ] {
            let payoff = crate::payoff::objective_revenue(&instance, &alloc, &estimator)?;
            rows.push(PayoffVsKRow {
                total_seeds: k,
                algorithm: name,
                payoff,
                opt_lp,
            });
        }
    }
    Ok(rows)
}

pub fn payoff_vs_k_csv(rows: &[PayoffVsKRow]) -> (String, Vec<String>) {
    (
        "total_seeds,algorithm,payoff,opt_lp".into(),
        rows.iter()
            .map(|r| format!("{},{},{:.6},{:.6}", r.total_seeds, r.algorithm, r.payoff, r.opt_lp))
            .collect(),
    )
}

#[derive(Debug, Clone)]
pub struct PayoffVsMRow {
    pub advertisers: usize,
    pub algorithm: &'static str,
    pub per_advertiser_payoff: f64,
    pub total_payoff: f64,
}

/// Payoff versus the number of advertisers: identical networks, seeds scaled
/// as K = 10 m. The interesting quantity is the per-advertiser payoff.
pub fn run_payoff_vs_m(
    base: &BaseGraph,
    m_values: &[usize],
    rho_mult: usize,
    exposure_bound: Option<u32>,
    seed: u64,
) -> Result<Vec<PayoffVsMRow>> {
    let n = base.node_count();
    let mut rows = Vec::new();
    for &m in m_values {
        let networks = graph::replicate_for_advertisers(
            base,
            m,
            ReplicationMode::Identical { lambda_max: 0.4 },
            seeding::salted(seed, 21),
        )?;
        let collections = sample_collections(&networks, rho_mult * n, seeding::salted(seed, 22))?;
        let estimator = RrEstimator::new(&collections);
        let k = 10 * m as u32;
        let r = exposure_bound.unwrap_or(1);
        let instance = ProblemInstance::new(
            base.clone(),
            networks,
            unbudgeted_profiles(m),
            ConstraintSystem::uniform(r, k),
        )?;
        let greedy_run = greedy::greedy_allocate_rr(&instance, &collections)?;
        rows.push(PayoffVsMRow {
            advertisers: m,
            algorithm: "greedy",
            per_advertiser_payoff: greedy_run.objective / m as f64,
            total_payoff: greedy_run.objective,
        });
        for (name, alloc) in [
            ("max-degree", heuristics::max_degree_allocate(&instance)?),
            ("eigen", heuristics::eigen_centrality_allocate(&instance)?),
        ] {
            let payoff = crate::payoff::objective_revenue(&instance, &alloc, &estimator)?;
            rows.push(PayoffVsMRow {
                advertisers: m,
                algorithm: name,
                per_advertiser_payoff: payoff / m as f64,
                total_payoff: payoff,
            });
        }
    }
    Ok(rows)
}

pub fn payoff_vs_m_csv(rows: &[PayoffVsMRow]) -> (String, Vec<String>) {
    (
        "advertisers,algorithm,per_advertiser_payoff,total_payoff".into(),
        rows.iter()
            .map(|r| {
                format!(
                    "{},{},{:.6},{:.6}",
                    r.advertisers, r.algorithm, r.per_advertiser_payoff, r.total_payoff
                )
            })
            .collect(),
    )
}

#[derive(Debug, Clone)]
pub struct CompetitionRow {
    pub swap_parameter: u32,
    pub payoff: f64,
}

/// Payoff versus network similarity: all advertisers share one probability
/// assignment, each independently perturbed by s * n / 100 node swaps. s = 0
/// is maximal competition.
pub fn run_competition(
    base: &BaseGraph,
    s_values: &[u32],
    m: usize,
    total_seeds: u32,
    rho_mult: usize,
    seed: u64,
) -> Result<Vec<CompetitionRow>> {
    let n = base.node_count();
    let mut rows = Vec::new();
    for &s in s_values {
        let networks = graph::replicate_for_advertisers(
            base,
            m,
            ReplicationMode::Swapped {
                lambda_max: 0.4,
                s,
            },
            seeding::salted(seed, 31),
        )?;
        let collections = sample_collections(
            &networks,
            rho_mult * n,
            seeding::salted(seed, 3100 + s as u64),
        )?;
        let instance = ProblemInstance::new(
            base.clone(),
            networks,
            unbudgeted_profiles(m),
            ConstraintSystem::uniform(1, total_seeds),
        )?;
        let run = greedy::greedy_allocate_rr(&instance, &collections)?;
        rows.push(CompetitionRow {
            swap_parameter: s,
            payoff: run.objective,
        });
    }
    Ok(rows)
}

pub fn competition_csv(rows: &[CompetitionRow]) -> (String, Vec<String>) {
    (
        "swap_parameter,payoff".into(),
        rows.iter()
            .map(|r| format!("{},{:.6}", r.swap_parameter, r.payoff))
            .collect(),
    )
}

#[derive(Debug, Clone)]
pub struct RelativePayoffRow {
    pub probability: f64,
    pub alpha: f64,
    pub payoff_m: f64,
    pub payoff_single: f64,
}

/// Relative payoff alpha(p): host payoff with `m` advertisers over payoff
/// with one, under uniform edge probability p, budgets n/5, and K = 10 m.
pub fn run_relative_payoff(
    base: &BaseGraph,
    p_values: &[f64],
    m: usize,
    rho_mult: usize,
    seed: u64,
) -> Result<Vec<RelativePayoffRow>> {
    let n = base.node_count();
    let budget = n as f64 / 5.0;
    let mut rows = Vec::new();
    for &p in p_values {
        let mut payoffs = [0.0f64; 2];
        for (slot, advertisers) in [(0usize, m), (1, 1)] {
            let networks = graph::replicate_for_advertisers(
                base,
                advertisers,
                ReplicationMode::Uniform { p },
                seeding::salted(seed, 41),
            )?;
            let collections = sample_collections(
                &networks,
                rho_mult * n,
                seeding::salted(seed, 4200 + slot as u64 + (p * 1e6) as u64),
            )?;
            let profiles = (0..advertisers)
                .map(|_| AdvertiserProfile::new(budget, 1.0).unwrap())
                .collect();
            let instance = ProblemInstance::new(
                base.clone(),
                networks,
                profiles,
                ConstraintSystem::uniform(1, 10 * advertisers as u32),
            )?;
            let run = greedy::greedy_allocate_rr(&instance, &collections)?;
            payoffs[slot] = run.objective;
        }
        rows.push(RelativePayoffRow {
            probability: p,
            alpha: payoffs[0] / payoffs[1],
            payoff_m: payoffs[0],
            payoff_single: payoffs[1],
        });
    }
    Ok(rows)
}

pub fn relative_payoff_csv(rows: &[RelativePayoffRow]) -> (String, Vec<String>) {
    (
        "probability,alpha,payoff_m,payoff_single".into(),
        rows.iter()
            .map(|r| {
                format!(
                    "{:.4},{:.6},{:.6},{:.6}",
                    r.probability, r.alpha, r.payoff_m, r.payoff_single
                )
            })
            .collect(),
    )
}

#[derive(Debug, Clone)]
pub struct ScalabilityRow {
    pub advertisers: usize,
    pub threads: usize,
    pub rr_build_seconds: f64,
    pub total_seconds: f64,
    pub identical_to_sequential: bool,
}

/// Measures RR-construction and end-to-end greedy time across thread counts.
/// Per-sample seeding makes every thread count produce the sequential
/// allocation bit-for-bit; the row records that check.
pub fn run_scalability(
    base: &BaseGraph,
    m_values: &[usize],
    thread_counts: &[usize],
    rho_mult: usize,
    seed: u64,
) -> Result<Vec<ScalabilityRow>> {
    let n = base.node_count();
    let mut rows = Vec::new();
    for &m in m_values {
        let networks = graph::replicate_for_advertisers(
            base,
            m,
            ReplicationMode::Independent { lambda_max: 0.4 },
            seeding::salted(seed, 51),
        )?;
        let instance = ProblemInstance::new(
            base.clone(),
            networks.clone(),
            unbudgeted_profiles(m),
            ConstraintSystem::uniform(1, 10 * m as u32),
        )?;
        // sequential baseline
        let baseline_collections: Vec<RRCollection> = networks
            .iter()
            .enumerate()
            .map(|(j, net)| {
                RRCollection::sample(net, j, rho_mult * n, seeding::salted(seed, 52 + j as u64))
            })
            .collect::<Result<_>>()?;
        let baseline = greedy::greedy_allocate_rr(&instance, &baseline_collections)?;

        for &threads in thread_counts {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
            let started = Instant::now();
            let collections: Vec<RRCollection> = pool.install(|| {
                networks
                    .iter()
                    .enumerate()
                    .map(|(j, net)| {
                        RRCollection::sample_par(
                            net,
                            j,
                            rho_mult * n,
                            seeding::salted(seed, 52 + j as u64),
                        )
                    })
                    .collect::<Result<_>>()
            })?;
            let rr_build_seconds = started.elapsed().as_secs_f64();
            let run = greedy::greedy_allocate_rr(&instance, &collections)?;
            let total_seconds = started.elapsed().as_secs_f64();
            rows.push(ScalabilityRow {
                advertisers: m,
                threads,
                rr_build_seconds,
                total_seconds,
                identical_to_sequential: run.allocation == baseline.allocation,
            });
        }
    }
    Ok(rows)
}

pub fn scalability_csv(rows: &[ScalabilityRow]) -> (String, Vec<String>) {
    (
        "advertisers,threads,rr_build_seconds,total_seconds,identical_to_sequential".into(),
        rows.iter()
            .map(|r| {
                format!(
                    "{},{},{:.4},{:.4},{}",
                    r.advertisers,
                    r.threads,
                    r.rr_build_seconds,
                    r.total_seconds,
                    r.identical_to_sequential
                )
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parsing_and_hash_stability() {
        let text = "# experiment\nm = 3\nbudgets = 1.5, 2, 2.5\nseed=9\n";
        let cfg = Config::parse(text).unwrap();
        assert_eq!(cfg.get_parsed::<usize>("m").unwrap(), Some(3));
        assert_eq!(
            cfg.get_list::<f64>("budgets").unwrap(),
            Some(vec![1.5, 2.0, 2.5])
        );
        assert_eq!(cfg.get_parsed::<u64>("seed").unwrap(), Some(9));
        assert_eq!(cfg.get_parsed::<u64>("absent").unwrap(), None);
        let again = Config::parse(&cfg.canonical()).unwrap();
        assert_eq!(config_hash(&cfg), config_hash(&again));
    }

    #[test]
    fn bad_config_line_is_an_error() {
        assert!(matches!(
            Config::parse("just words"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn csv_document_shape() {
        let mut cfg = Config::default();
        cfg.set("k", 3);
        let doc = csv_document(&cfg, 7, "a,b", vec!["1,2".to_string()]);
        let mut lines = doc.lines();
        let comment = lines.next().unwrap();
        assert!(comment.starts_with("# config_hash="));
        assert!(comment.ends_with("seed=7"));
        assert_eq!(lines.next().unwrap(), "a,b");
        assert_eq!(lines.next().unwrap(), "1,2");
    }

    #[test]
    fn calibration_runs_and_improves_with_samples() {
        // dense enough that cascades cover a sizable fraction of the graph;
        // sparse graphs leave the 10n estimator too noisy for tight errors
        let base = graph::preferential_attachment(150, 10, 5).unwrap();
        let rows = run_calibration(&base, 2, &[1, 10], 8, 20, 99).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[1].mean_abs_error <= rows[0].mean_abs_error);
        assert!(rows[1].greedy_quality > 0.9);
        let (header, lines) = calibration_csv(&rows);
        assert!(header.starts_with("multiplier,"));
        assert_eq!(lines.len(), 2);
    }

    #[test]
    fn payoff_vs_k_is_monotone_for_greedy() {
        let base = graph::preferential_attachment(60, 2, 6).unwrap();
        let rows = run_payoff_vs_k(&base, 2, &[2, 6, 10], 5, 7).unwrap();
        let greedy: Vec<f64> = rows
            .iter()
            .filter(|r| r.algorithm == "greedy")
            .map(|r| r.payoff)
            .collect();
        assert!(greedy.windows(2).all(|w| w[1] >= w[0] - 1e-9));
        for r in &rows {
            assert!(
                r.payoff <= r.opt_lp + 1e-6,
                "{} exceeded OPT_LP at K={}",
                r.algorithm,
                r.total_seeds
            );
            if r.algorithm == "greedy" {
                assert!(r.payoff >= 0.5 * r.opt_lp - 1e-6);
            }
        }
    }

    #[test]
    fn payoff_vs_m_single_advertiser_total_equals_per_advertiser() {
        let base = graph::preferential_attachment(50, 2, 8).unwrap();
        let rows = run_payoff_vs_m(&base, &[1, 3], 5, None, 11).unwrap();
        let first = rows.iter().find(|r| r.advertisers == 1 && r.algorithm == "greedy").unwrap();
        assert_eq!(first.per_advertiser_payoff, first.total_payoff);
        let third = rows.iter().find(|r| r.advertisers == 3 && r.algorithm == "greedy").unwrap();
        assert!(third.per_advertiser_payoff <= first.per_advertiser_payoff + 1e-9);
    }

    #[test]
    fn unconstrained_exposure_scales_linearly_in_m() {
        // with r_v = m, identical networks, and a shared estimate, every
        // advertiser independently copies the single-advertiser solution, so
        // the total payoff is exactly linear in m
        let base = graph::preferential_attachment(40, 2, 12).unwrap();
        let net = graph::assign_lambda_probabilities(&base, 0.4, 13).unwrap();
        let coll = RRCollection::sample(&net, 0, 2000, 14).unwrap();
        let total_for = |m: usize| -> f64 {
            let colls: Vec<RRCollection> = (0..m).map(|_| coll.clone()).collect();
            let instance = ProblemInstance::new(
                base.clone(),
                vec![net.clone(); m],
                unbudgeted_profiles(m),
                ConstraintSystem::uniform(m as u32, 10 * m as u32),
            )
            .unwrap();
            greedy::greedy_allocate_rr(&instance, &colls).unwrap().objective
        };
        let total1 = total_for(1);
        let total4 = total_for(4);
        assert!(
            (total4 - 4.0 * total1).abs() <= 1e-9 * total1.max(1.0),
            "expected {} got {}",
            4.0 * total1,
            total4
        );
    }

    #[test]
    fn competition_payoff_grows_with_dissimilarity() {
        let base = graph::preferential_attachment(100, 2, 14).unwrap();
        let rows = run_competition(&base, &[0, 200], 5, 25, 5, 15).unwrap();
        assert!(rows[1].payoff >= rows[0].payoff);
    }

    #[test]
    fn scalability_rows_are_deterministic_across_threads() {
        let base = graph::preferential_attachment(200, 2, 16).unwrap();
        let rows = run_scalability(&base, &[2], &[1, 4], 5, 17).unwrap();
        assert!(rows.iter().all(|r| r.identical_to_sequential));
    }
}
