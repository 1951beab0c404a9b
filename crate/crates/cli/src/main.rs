//! Command-line interface: dataset generation, allocator runs, and the
//! experiment harness. Flags mirror the key-value config document; explicit
//! flags win over config entries.

use adcoord::allocation::{Allocation, ConstraintSystem, ExposureBounds};
use adcoord::bench::{self, Config};
use adcoord::graph::{self, BaseGraph, ReplicationMode};
use adcoord::payoff::{AdvertiserProfile, ProblemInstance, RrEstimator};
use adcoord::rrsets::RRCollection;
use adcoord::{greedy, heuristics, lp, payoff};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "adcoord", about = "Coordinated ad-campaign seed selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct CommonOpts {
    /// Edge-list file ("u v" per line, '#' comments)
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Treat the edge list as directed
    #[arg(long)]
    directed: bool,
    /// Number of advertisers
    #[arg(long)]
    m: Option<usize>,
    /// Total seed budget K
    #[arg(long)]
    total_seeds: Option<u32>,
    /// Per-node exposure bound r (uniform)
    #[arg(long)]
    exposure_bound: Option<u32>,
    /// Per-advertiser budgets, comma separated ("inf" allowed)
    #[arg(long, value_delimiter = ',')]
    budgets: Option<Vec<String>>,
    /// Per-advertiser prices per exposure, comma separated
    #[arg(long, value_delimiter = ',')]
    prices: Option<Vec<f64>>,
    /// Per-advertiser seed caps, comma separated
    #[arg(long, value_delimiter = ',')]
    seed_caps: Option<Vec<u32>>,
    /// Penalty weight for exposure beyond budget
    #[arg(long)]
    beta: Option<f64>,
    /// RR samples per advertiser as a multiple of n
    #[arg(long)]
    rho_mult: Option<usize>,
    /// Master random seed
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
    /// Output path
    #[arg(long)]
    out: Option<PathBuf>,
    /// Key-value config file mirroring these flags
    #[arg(long)]
    config: Option<PathBuf>,
    /// Network generation mode: independent | identical | swapped | uniform
    #[arg(long)]
    mode: Option<String>,
    /// Upper bound of the per-node lambda draw
    #[arg(long)]
    lambda_max: Option<f64>,
    /// Uniform arc probability (for --mode uniform)
    #[arg(long)]
    uniform_p: Option<f64>,
    /// Swap parameter s (for --mode swapped)
    #[arg(long)]
    swaps: Option<u32>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic graph (and optionally its influence networks)
    Gen {
        #[command(flatten)]
        common: CommonOpts,
        /// Generator: pa (preferential attachment) or regular
        #[arg(long, default_value = "pa")]
        model: String,
        #[arg(long, default_value_t = 300)]
        nodes: usize,
        /// Attachment count (pa) or degree (regular)
        #[arg(long, default_value_t = 3)]
        degree: usize,
        /// Also write a "u v j p" probability dump for the networks
        #[arg(long)]
        emit_probs: Option<PathBuf>,
    },
    /// Run one allocator and write the allocation CSV
    Allocate {
        #[command(flatten)]
        common: CommonOpts,
        /// greedy | penalty-greedy | local-search | lp-round | max-degree | eigen
        #[arg(long)]
        algo: String,
        /// Local-search epsilon
        #[arg(long)]
        epsilon: Option<f64>,
        /// Write the selection trace CSV here
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Write the LP rounding-trials report CSV here (lp-round only)
        #[arg(long)]
        report: Option<PathBuf>,
        /// Dump the LP in standard form (lp-round only)
        #[arg(long)]
        lp_dump: Option<PathBuf>,
        /// Rounding trials for the report
        #[arg(long, default_value_t = 200)]
        report_trials: usize,
    },
    /// Monte Carlo evaluation of a stored allocation
    Simulate {
        #[command(flatten)]
        common: CommonOpts,
        /// Allocation CSV ("node,advertiser")
        #[arg(long)]
        allocation: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
    },
    /// RR sample-count calibration sweep
    Calibrate {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long, value_delimiter = ',')]
        multipliers: Option<Vec<usize>>,
        #[arg(long)]
        reps: Option<usize>,
    },
    /// Payoff vs total seed budget
    ExpK {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long, value_delimiter = ',')]
        k_values: Option<Vec<u32>>,
    },
    /// Per-advertiser payoff vs number of advertisers
    ExpM {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long, value_delimiter = ',')]
        m_values: Option<Vec<usize>>,
    },
    /// Payoff vs influence-network similarity (node swaps)
    ExpCompete {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long, value_delimiter = ',')]
        s_values: Option<Vec<u32>>,
    },
    /// Relative payoff vs uniform edge probability
    ExpProb {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long, value_delimiter = ',')]
        p_values: Option<Vec<f64>>,
    },
    /// RR-construction scaling across thread counts
    ExpScale {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long, value_delimiter = ',')]
        m_values: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        thread_counts: Option<Vec<usize>>,
    },
}

/// Options after merging flags over the config file.
struct Resolved {
    common: CommonOpts,
    config: Config,
}

impl Resolved {
    fn new(mut common: CommonOpts) -> Result<Self> {
        let mut config = match &common.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                Config::parse(&text)?
            }
            None => Config::default(),
        };
        // flags win; fill missing flags from the config
        macro_rules! merge {
            ($field:ident, $key:literal, $ty:ty) => {
                if common.$field.is_none() {
                    common.$field = config.get_parsed::<$ty>($key)?;
                }
            };
        }
        merge!(m, "m", usize);
        merge!(total_seeds, "total_seeds", u32);
        merge!(exposure_bound, "exposure_bound", u32);
        merge!(beta, "beta", f64);
        merge!(rho_mult, "rho_mult", usize);
        merge!(seed, "seed", u64);
        merge!(threads, "threads", usize);
        merge!(lambda_max, "lambda_max", f64);
        merge!(uniform_p, "uniform_p", f64);
        merge!(swaps, "swaps", u32);
        if common.mode.is_none() {
            common.mode = config.get("mode").map(str::to_string);
        }
        if common.graph.is_none() {
            common.graph = config.get("graph").map(PathBuf::from);
        }
        if common.budgets.is_none() {
            common.budgets = config.get_list::<String>("budgets")?;
        }
        if common.prices.is_none() {
            common.prices = config.get_list::<f64>("prices")?;
        }
        if common.seed_caps.is_none() {
            common.seed_caps = config.get_list::<u32>("seed_caps")?;
        }
        // record the resolved values so the CSV hash reflects the actual run
        for (key, value) in [
            ("m", common.m.map(|v| v.to_string())),
            ("total_seeds", common.total_seeds.map(|v| v.to_string())),
            ("exposure_bound", common.exposure_bound.map(|v| v.to_string())),
            ("rho_mult", common.rho_mult.map(|v| v.to_string())),
            ("seed", common.seed.map(|v| v.to_string())),
            ("mode", common.mode.clone()),
            ("lambda_max", common.lambda_max.map(|v| v.to_string())),
            ("uniform_p", common.uniform_p.map(|v| v.to_string())),
            ("swaps", common.swaps.map(|v| v.to_string())),
            (
                "graph",
                common.graph.as_ref().map(|p| p.display().to_string()),
            ),
        ] {
            if let Some(v) = value {
                config.set(key, v);
            }
        }
        Ok(Resolved { common, config })
    }

    fn seed(&self) -> u64 {
        self.common.seed.unwrap_or(1)
    }

    fn rho_mult(&self) -> usize {
        self.common.rho_mult.unwrap_or(10)
    }

    fn m(&self) -> usize {
        self.common.m.unwrap_or(1)
    }

    fn install_threads(&self) -> Result<()> {
        if let Some(t) = self.common.threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build_global()
                .context("installing thread pool")?;
        }
        Ok(())
    }

    fn load_graph(&self) -> Result<BaseGraph> {
        let path = self
            .common
            .graph
            .as_ref()
            .context("--graph is required (or 'graph' in the config)")?;
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Ok(graph::load_edge_list(&text, self.common.directed)?)
    }

    fn replication_mode(&self) -> Result<ReplicationMode> {
        let lambda_max = self.common.lambda_max.unwrap_or(0.4);
        match self.common.mode.as_deref().unwrap_or("independent") {
            "independent" => Ok(ReplicationMode::Independent { lambda_max }),
            "identical" => Ok(ReplicationMode::Identical { lambda_max }),
            "swapped" => Ok(ReplicationMode::Swapped {
                lambda_max,
                s: self.common.swaps.unwrap_or(0),
            }),
            "uniform" => Ok(ReplicationMode::Uniform {
                p: self
                    .common
                    .uniform_p
                    .context("--uniform-p is required for --mode uniform")?,
            }),
            other => bail!("unknown mode '{other}'"),
        }
    }

    fn profiles(&self, m: usize) -> Result<Vec<AdvertiserProfile>> {
        let budgets: Vec<f64> = match &self.common.budgets {
            None => vec![f64::INFINITY; m],
            Some(list) => list
                .iter()
                .map(|tok| {
                    let tok = tok.trim();
                    if tok.eq_ignore_ascii_case("inf") {
                        Ok(f64::INFINITY)
                    } else {
                        tok.parse::<f64>()
                            .with_context(|| format!("bad budget '{tok}'"))
                    }
                })
                .collect::<Result<_>>()?,
        };
        if budgets.len() != m {
            bail!("{} budgets for {} advertisers", budgets.len(), m);
        }
        let prices = match &self.common.prices {
            None => vec![1.0; m],
            Some(p) => p.clone(),
        };
        if prices.len() != m {
            bail!("{} prices for {} advertisers", prices.len(), m);
        }
        let mut profiles: Vec<AdvertiserProfile> = budgets
            .iter()
            .zip(&prices)
            .map(|(&b, &c)| AdvertiserProfile::new(b, c).map_err(Into::into))
            .collect::<Result<_>>()?;
        if let Some(caps) = &self.common.seed_caps {
            if caps.len() != m {
                bail!("{} seed caps for {} advertisers", caps.len(), m);
            }
            for (p, &cap) in profiles.iter_mut().zip(caps) {
                p.seed_cap = Some(cap);
            }
        }
        Ok(profiles)
    }

    fn build_instance(&self) -> Result<(ProblemInstance, Vec<RRCollection>)> {
        let base = self.load_graph()?;
        let m = self.m();
        let networks = graph::replicate_for_advertisers(
            &base,
            m,
            self.replication_mode()?,
            self.seed(),
        )?;
        let total = self
            .common
            .total_seeds
            .or_else(|| self.common.seed_caps.as_ref().map(|c| c.iter().sum()))
            .context("--total-seeds is required when no per-advertiser caps are given")?;
        let constraints = ConstraintSystem::new(
            ExposureBounds::Uniform(self.common.exposure_bound.unwrap_or(1)),
            self.common.seed_caps.clone(),
            total,
        );
        let rho = self.rho_mult() * base.node_count();
        let collections: Vec<RRCollection> = networks
            .iter()
            .enumerate()
            .map(|(j, net)| RRCollection::sample_par(net, j, rho, self.seed() ^ (j as u64) << 17))
            .collect::<adcoord::Result<_>>()?;
        let instance = ProblemInstance::new(base, networks, self.profiles(m)?, constraints)?;
        Ok((instance, collections))
    }

    fn write_out(&self, default_name: &str, contents: &str) -> Result<PathBuf> {
        let path = self
            .common
            .out
            .clone()
            .unwrap_or_else(|| PathBuf::from(default_name));
        write_file(&path, contents)?;
        Ok(path)
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Gen {
            common,
            model,
            nodes,
            degree,
            emit_probs,
        } => {
            let resolved = Resolved::new(common)?;
            let seed = resolved.seed();
            let base = match model.as_str() {
                "pa" => graph::preferential_attachment(nodes, degree, seed)?,
                "regular" => graph::random_regular(nodes, degree, seed)?,
                other => bail!("unknown model '{other}' (expected pa or regular)"),
            };
            let mut text = Vec::new();
            base.write_edge_list(&mut text)?;
            resolved.write_out("graph.txt", &String::from_utf8(text)?)?;
            if let Some(prob_path) = emit_probs {
                let networks = graph::replicate_for_advertisers(
                    &base,
                    resolved.m(),
                    resolved.replication_mode()?,
                    seed,
                )?;
                let mut buf = Vec::new();
                graph::dump_probabilities(&networks, &mut buf)?;
                write_file(&prob_path, &String::from_utf8(buf)?)?;
            }
        }
        Command::Allocate {
            common,
            algo,
            epsilon,
            trace,
            report,
            lp_dump,
            report_trials,
        } => {
            let resolved = Resolved::new(common)?;
            resolved.install_threads()?;
            let (instance, collections) = resolved.build_instance()?;
            let estimator = RrEstimator::new(&collections);
            let mut trace_csv = None;
            let (allocation, objective) = match algo.as_str() {
                "greedy" => {
                    let run = greedy::greedy_allocate_rr(&instance, &collections)?;
                    trace_csv = Some(run.trace_csv());
                    (run.allocation, run.objective)
                }
                "penalty-greedy" => {
                    let beta = resolved.common.beta.unwrap_or(0.0);
                    let run = greedy::penalty_greedy_allocate(&instance, &estimator, beta)?;
                    if !run.precondition_satisfied {
                        eprintln!(
                            "note: guarantee factor {:.3} does not apply to this instance",
                            run.guarantee_factor()
                        );
                    }
                    let objective = run.objective;
                    (run.allocation, objective)
                }
                "local-search" => {
                    let run = greedy::local_search_two_matroids(
                        &instance,
                        &estimator,
                        epsilon.unwrap_or(0.1),
                    )?;
                    trace_csv = Some(run.trace_csv());
                    (run.allocation, run.objective)
                }
                "lp-round" => {
                    let lp_instance = lp::build_lp(&instance, &collections)?;
                    let solution = lp::solve_lp(&lp_instance)?;
                    if let Some(path) = &lp_dump {
                        let mut buf = Vec::new();
                        lp_instance.dump_standard_form(&mut buf)?;
                        write_file(path, &String::from_utf8(buf)?)?;
                    }
                    if let Some(path) = &report {
                        let rows = lp::rounding::rounding_report(
                            &lp_instance,
                            &solution,
                            report_trials,
                            resolved.seed(),
                        )?;
                        write_file(path, &lp::rounding::report_csv(&rows))?;
                    }
                    let rounded = if lp_instance.advertiser_caps.is_some() {
                        lp::dependent_round(&lp_instance, &solution, resolved.seed())?
                    } else {
                        lp::star_round(&lp_instance, &solution, resolved.seed())?
                    };
                    eprintln!("OPT_LP = {:.4}", solution.objective);
                    let obj =
                        payoff::objective_revenue(&instance, &rounded.allocation, &estimator)?;
                    (rounded.allocation, obj)
                }
                "max-degree" => {
                    let alloc = heuristics::max_degree_allocate(&instance)?;
                    let obj = payoff::objective_revenue(&instance, &alloc, &estimator)?;
                    (alloc, obj)
                }
                "eigen" => {
                    let alloc = heuristics::eigen_centrality_allocate(&instance)?;
                    let obj = payoff::objective_revenue(&instance, &alloc, &estimator)?;
                    (alloc, obj)
                }
                other => bail!("unknown algorithm '{other}'"),
            };
            eprintln!(
                "selected {} seeds, estimated revenue {:.4}",
                allocation.len(),
                objective
            );
            resolved.write_out("allocation.csv", &allocation.to_csv())?;
            if let (Some(path), Some(csv)) = (trace, trace_csv) {
                write_file(&path, &csv)?;
            }
        }
        Command::Simulate {
            common,
            allocation,
            trials,
        } => {
            let resolved = Resolved::new(common)?;
            resolved.install_threads()?;
            let (instance, collections) = resolved.build_instance()?;
            let text = fs::read_to_string(&allocation)
                .with_context(|| format!("reading {}", allocation.display()))?;
            let alloc = Allocation::from_csv(
                &text,
                instance.node_count(),
                instance.advertiser_count(),
            )?;
            let estimator = RrEstimator::new(&collections);
            let w_hat = payoff::objective_revenue(&instance, &alloc, &estimator)?;
            let w = payoff::objective_expected_revenue(&instance, &alloc, trials, resolved.seed())?;
            println!("revenue_in_expectation {w_hat:.6}");
            println!("expected_revenue {w:.6} ({trials} trials)");
            if let Some(beta) = resolved.common.beta {
                let pen = payoff::penalty_objective(&instance, &alloc, &estimator, beta)?;
                println!("penalty_objective {pen:.6} (beta {beta})");
            }
        }
        Command::Calibrate { common, multipliers, reps } => {
            let resolved = Resolved::new(common)?;
            resolved.install_threads()?;
            let base = resolved.load_graph()?;
            let rows = bench::run_calibration(
                &base,
                resolved.m(),
                &multipliers.unwrap_or_else(|| vec![1, 2, 5, 10, 20, 50]),
                reps.unwrap_or(100),
                resolved
                    .common
                    .total_seeds
                    .unwrap_or(10 * resolved.m() as u32),
                resolved.seed(),
            )?;
            let (header, lines) = bench::calibration_csv(&rows);
            let doc = bench::csv_document(&resolved.config, resolved.seed(), &header, lines);
            resolved.write_out("calibration.csv", &doc)?;
        }
        Command::ExpK { common, k_values } => {
            let resolved = Resolved::new(common)?;
            resolved.install_threads()?;
            let base = resolved.load_graph()?;
            let ks = k_values.unwrap_or_else(|| (1..=10).map(|i| i * 10).collect());
            let rows = bench::run_payoff_vs_k(
                &base,
                resolved.common.m.unwrap_or(3),
                &ks,
                resolved.rho_mult(),
                resolved.seed(),
            )?;
            let (header, lines) = bench::payoff_vs_k_csv(&rows);
            let doc = bench::csv_document(&resolved.config, resolved.seed(), &header, lines);
            resolved.write_out("payoff_vs_k.csv", &doc)?;
        }
        Command::ExpM { common, m_values } => {
            let resolved = Resolved::new(common)?;
            resolved.install_threads()?;
            let base = resolved.load_graph()?;
            let ms = m_values.unwrap_or_else(|| (1..=20).collect());
            let rows = bench::run_payoff_vs_m(
                &base,
                &ms,
                resolved.rho_mult(),
                resolved.common.exposure_bound,
                resolved.seed(),
            )?;
            let (header, lines) = bench::payoff_vs_m_csv(&rows);
            let doc = bench::csv_document(&resolved.config, resolved.seed(), &header, lines);
            resolved.write_out("payoff_vs_m.csv", &doc)?;
        }
        Command::ExpCompete { common, s_values } => {
            let resolved = Resolved::new(common)?;
            resolved.install_threads()?;
            let base = resolved.load_graph()?;
            let ss = s_values.unwrap_or_else(|| (0..=8).map(|i| i * 25).collect());
            let rows = bench::run_competition(
                &base,
                &ss,
                resolved.common.m.unwrap_or(20),
                resolved.common.total_seeds.unwrap_or(200),
                resolved.rho_mult(),
                resolved.seed(),
            )?;
            let (header, lines) = bench::competition_csv(&rows);
            let doc = bench::csv_document(&resolved.config, resolved.seed(), &header, lines);
            resolved.write_out("competition.csv", &doc)?;
        }
        Command::ExpProb { common, p_values } => {
            let resolved = Resolved::new(common)?;
            resolved.install_threads()?;
            let base = resolved.load_graph()?;
            let ps = p_values
                .unwrap_or_else(|| vec![0.005, 0.01, 0.02, 0.04, 0.1, 0.25, 0.5, 0.9]);
            let rows = bench::run_relative_payoff(
                &base,
                &ps,
                resolved.common.m.unwrap_or(20),
                resolved.rho_mult(),
                resolved.seed(),
            )?;
            let (header, lines) = bench::relative_payoff_csv(&rows);
            let doc = bench::csv_document(&resolved.config, resolved.seed(), &header, lines);
            resolved.write_out("relative_payoff.csv", &doc)?;
        }
        Command::ExpScale {
            common,
            m_values,
            thread_counts,
        } => {
            let resolved = Resolved::new(common)?;
            let base = resolved.load_graph()?;
            let rows = bench::run_scalability(
                &base,
                &m_values.unwrap_or_else(|| vec![1, 2, 4]),
                &thread_counts.unwrap_or_else(|| vec![1, 2, 4]),
                resolved.rho_mult(),
                resolved.seed(),
            )?;
            let (header, lines) = bench::scalability_csv(&rows);
            let doc = bench::csv_document(&resolved.config, resolved.seed(), &header, lines);
            resolved.write_out("scalability.csv", &doc)?;
        }
    }
    Ok(())
}
