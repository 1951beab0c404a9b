//! The generalized max-coverage LP over RR collections, its simplex solve,
//! and dependent rounding of the fractional optimum.
//!
//! For advertiser j with rho_j sampled sets, the LP has selection variables
//! x_{v,j} in [0,1], per-set coverage variables y_i in [0,1], and revenue
//! variables z_j >= 0:
//!
//! - y_i <= sum of x_{v,j(i)} over v in R_i, and y_i <= 1
//! - per node v: sum_j x_{v,j} <= r_v
//! - per advertiser (when caps are present): sum_v x_{v,j} <= k_j
//! - total: sum x <= K
//! - z_j <= (n / rho_j) c_j sum of y_i over advertiser j's sets, z_j <= B_j
//!
//! maximizing sum_j z_j. The optimum is an upper bound on the estimated
//! revenue of every feasible allocation over the same collections.

pub mod rounding;
mod simplex;

pub use rounding::{dependent_round, star_round, RoundedAllocation, RoundingTrial};
pub use simplex::DEFAULT_TABLEAU_BYTE_LIMIT;

use crate::payoff::ProblemInstance;
use crate::rrsets::RRCollection;
use crate::{Error, Result};
use std::collections::HashMap;
use std::io::Write;

/// Fractional values this close to an integer are snapped before rounding and
/// treated as integral by the path/cycle search.
pub const INTEGRALITY_SNAP: f64 = 1e-9;

const AUDIT_TOL: f64 = 1e-7;

/// The LP relaxation, stored structurally (sets by value, constraints by
/// their bounds) rather than as an explicit matrix.
#[derive(Debug, Clone)]
pub struct LPInstance {
    pub node_count: usize,
    pub advertiser_count: usize,
    /// Per advertiser: the sampled node sets (sorted), in sample order.
    pub sets: Vec<Vec<Vec<u32>>>,
    /// Revenue-link coefficient (n / rho_j) * c_j per advertiser.
    pub coeff: Vec<f64>,
    pub budgets: Vec<f64>,
    pub prices: Vec<f64>,
    pub exposure: Vec<u32>,
    pub advertiser_caps: Option<Vec<u32>>,
    pub total_cap: u32,
}

/// Variable and constraint counts of the literal LP.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LpCounts {
    pub x_vars: usize,
    pub y_vars: usize,
    pub z_vars: usize,
    pub coverage_rows: usize,
    pub y_bound_rows: usize,
    pub exposure_rows: usize,
    pub cap_rows: usize,
    pub total_rows: usize,
    pub revenue_link_rows: usize,
    pub budget_rows: usize,
}

impl LPInstance {
    pub fn rho(&self, j: usize) -> usize {
        self.sets[j].len()
    }

    pub fn total_sets(&self) -> usize {
        self.sets.iter().map(|s| s.len()).sum()
    }

    pub fn counts(&self) -> LpCounts {
        let y = self.total_sets();
        let m = self.advertiser_count;
        LpCounts {
            x_vars: self.node_count * m,
            y_vars: y,
            z_vars: m,
            coverage_rows: y,
            y_bound_rows: y,
            exposure_rows: self.node_count,
            cap_rows: if self.advertiser_caps.is_some() { m } else { 0 },
            total_rows: 1,
            revenue_link_rows: m,
            budget_rows: m,
        }
    }

    pub fn x_index(&self, v: u32, j: u32) -> usize {
        j as usize * self.node_count + v as usize
    }

    /// Writes the literal LP as standard-form text: the objective row,
    /// constraint rows "coef*var ... <= rhs", then the variable bounds.
    pub fn dump_standard_form<W: Write>(&self, mut w: W) -> Result<()> {
        let terms = |parts: &[(f64, String)]| -> String {
            parts
                .iter()
                .map(|(c, v)| format!("{c}*{v}"))
                .collect::<Vec<_>>()
                .join(" + ")
        };
        let zs: Vec<(f64, String)> = (0..self.advertiser_count)
            .map(|j| (1.0, format!("z_{j}")))
            .collect();
        writeln!(w, "maximize: {}", terms(&zs))?;
        writeln!(w, "subject_to:")?;
        for (j, sets) in self.sets.iter().enumerate() {
            for (i, set) in sets.iter().enumerate() {
                let mut parts = vec![(1.0, format!("y_{j}_{i}"))];
                for &v in set {
                    parts.push((-1.0, format!("x_{v}_{j}")));
                }
                writeln!(w, "cov_{j}_{i}: {} <= 0", terms(&parts))?;
            }
            for i in 0..sets.len() {
                writeln!(w, "ycap_{j}_{i}: 1*y_{j}_{i} <= 1")?;
            }
        }
        for v in 0..self.node_count {
            let parts: Vec<(f64, String)> = (0..self.advertiser_count)
                .map(|j| (1.0, format!("x_{v}_{j}")))
                .collect();
            writeln!(w, "node_{v}: {} <= {}", terms(&parts), self.exposure[v])?;
        }
        if let Some(caps) = &self.advertiser_caps {
            for (j, cap) in caps.iter().enumerate() {
                let parts: Vec<(f64, String)> = (0..self.node_count)
                    .map(|v| (1.0, format!("x_{v}_{j}")))
                    .collect();
                writeln!(w, "adv_{j}: {} <= {}", terms(&parts), cap)?;
            }
        }
        let all_x: Vec<(f64, String)> = (0..self.advertiser_count)
            .flat_map(|j| (0..self.node_count).map(move |v| (1.0, format!("x_{v}_{j}"))))
            .collect();
        writeln!(w, "total: {} <= {}", terms(&all_x), self.total_cap)?;
        for j in 0..self.advertiser_count {
            let mut parts = vec![(1.0, format!("z_{j}"))];
            for i in 0..self.sets[j].len() {
                parts.push((-self.coeff[j], format!("y_{j}_{i}")));
            }
            writeln!(w, "rev_{j}: {} <= 0", terms(&parts))?;
            writeln!(w, "budget_{j}: 1*z_{j} <= {}", self.budgets[j])?;
        }
        writeln!(w, "bounds:")?;
        for j in 0..self.advertiser_count {
            for v in 0..self.node_count {
                writeln!(w, "0 <= x_{v}_{j} <= 1")?;
            }
        }
        for (j, sets) in self.sets.iter().enumerate() {
            for i in 0..sets.len() {
                writeln!(w, "0 <= y_{j}_{i} <= 1")?;
            }
        }
        for j in 0..self.advertiser_count {
            writeln!(w, "0 <= z_{j}")?;
        }
        Ok(())
    }
}

/// A solved relaxation: values for every literal variable plus the optimum.
#[derive(Debug, Clone)]
pub struct LPSolution {
    /// x_{v,j} at index j * n + v.
    pub x: Vec<f64>,
    /// y values per advertiser, in sample order.
    pub y: Vec<Vec<f64>>,
    pub z: Vec<f64>,
    pub objective: f64,
    pub simplex_iterations: usize,
}

/// Builds the literal LP from one RR collection per advertiser.
pub fn build_lp(instance: &ProblemInstance, collections: &[RRCollection]) -> Result<LPInstance> {
    let n = instance.node_count();
    let m = instance.advertiser_count();
    if collections.len() != m {
        return Err(Error::Config(format!(
            "{} RR collections for {} advertisers",
            collections.len(),
            m
        )));
    }
    for coll in collections {
        if coll.node_count() != n {
            return Err(Error::Config(
                "RR collection node count does not match the instance".into(),
            ));
        }
    }
    let sets: Vec<Vec<Vec<u32>>> = collections
        .iter()
        .map(|coll| coll.sets().iter().map(|s| s.nodes.clone()).collect())
        .collect();
    let coeff: Vec<f64> = (0..m)
        .map(|j| n as f64 / collections[j].rho() as f64 * instance.profiles[j].price)
        .collect();
    Ok(LPInstance {
        node_count: n,
        advertiser_count: m,
        sets,
        coeff,
        budgets: instance.profiles.iter().map(|p| p.budget).collect(),
        prices: instance.profiles.iter().map(|p| p.price).collect(),
        exposure: (0..n as u32)
            .map(|v| instance.constraints.exposure_bound(v))
            .collect(),
        advertiser_caps: instance.constraints.advertiser_caps().map(|c| c.to_vec()),
        total_cap: instance.constraints.total_cap(),
    })
}

/// Solves the relaxation with the reference simplex under the default
/// tableau budget.
pub fn solve_lp(lp: &LPInstance) -> Result<LPSolution> {
    solve_lp_with_limit(lp, DEFAULT_TABLEAU_BYTE_LIMIT)
}

/// Solves the relaxation. Duplicate sets of one advertiser are aggregated
/// into weighted coverage classes before the simplex runs (the literal y
/// values are reconstructed afterwards and audited against the literal
/// constraints), which keeps the dense tableau small on instances whose
/// samples repeat.
pub fn solve_lp_with_limit(lp: &LPInstance, tableau_byte_limit: usize) -> Result<LPSolution> {
    let n = lp.node_count;
    let m = lp.advertiser_count;
    let nx = n * m;

    // aggregate duplicate sets per advertiser: class variable = mean coverage
    // of the duplicates, weight = duplicate count
    struct Class {
        advertiser: usize,
        members: Vec<u32>,
        weight: f64,
    }
    let mut classes: Vec<Class> = Vec::new();
    for (j, sets) in lp.sets.iter().enumerate() {
        let mut index: HashMap<&[u32], usize> = HashMap::new();
        for set in sets {
            match index.get(set.as_slice()) {
                Some(&c) => classes[c].weight += 1.0,
                None => {
                    index.insert(set.as_slice(), classes.len());
                    classes.push(Class {
                        advertiser: j,
                        members: set.clone(),
                        weight: 1.0,
                    });
                }
            }
        }
    }

    let ny = classes.len();
    let var_x = |v: u32, j: usize| j * n + v as usize;
    let var_y = |c: usize| nx + c;
    let var_z = |j: usize| nx + ny + j;
    let nvars = nx + ny + m;

    let mut objective = vec![0.0; nvars];
    let mut upper = vec![1.0; nvars];
    for j in 0..m {
        objective[var_z(j)] = 1.0;
        upper[var_z(j)] = lp.budgets[j];
    }

    let mut rows: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
    for (c, class) in classes.iter().enumerate() {
        let mut cols = vec![(var_y(c), 1.0)];
        for &v in &class.members {
            cols.push((var_x(v, class.advertiser), -1.0));
        }
        rows.push((cols, 0.0));
    }
    for v in 0..n as u32 {
        // r_v >= m is implied by the unit bounds on x
        if (lp.exposure[v as usize] as usize) < m {
            let cols = (0..m).map(|j| (var_x(v, j), 1.0)).collect();
            rows.push((cols, lp.exposure[v as usize] as f64));
        }
    }
    if let Some(caps) = &lp.advertiser_caps {
        for (j, &cap) in caps.iter().enumerate() {
            if (cap as usize) < n {
                let cols = (0..n as u32).map(|v| (var_x(v, j), 1.0)).collect();
                rows.push((cols, cap as f64));
            }
        }
    }
    if (lp.total_cap as usize) < nx {
        let cols = (0..nvars - ny - m).map(|x| (x, 1.0)).collect();
        rows.push((cols, lp.total_cap as f64));
    }
    for j in 0..m {
        let mut cols = vec![(var_z(j), 1.0)];
        for (c, class) in classes.iter().enumerate() {
            if class.advertiser == j {
                cols.push((var_y(c), -lp.coeff[j] * class.weight));
            }
        }
        rows.push((cols, 0.0));
    }

    let problem = simplex::StandardForm {
        objective,
        upper,
        rows,
    };
    let outcome = simplex::solve(&problem, tableau_byte_limit)?;

    // reconstruct the literal solution from x: each y_i takes its maximal
    // feasible value, each z_j its capped link value
    let x: Vec<f64> = outcome.values[..nx]
        .iter()
        .map(|&v| v.clamp(0.0, 1.0))
        .collect();
    let mut y: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut z = vec![0.0; m];
    for j in 0..m {
        let mut yj = Vec::with_capacity(lp.sets[j].len());
        let mut sum = 0.0;
        for set in &lp.sets[j] {
            let coverage: f64 = set.iter().map(|&v| x[var_x(v, j)]).sum();
            let yi = coverage.min(1.0);
            sum += yi;
            yj.push(yi);
        }
        z[j] = (lp.coeff[j] * sum).min(lp.budgets[j]);
        y.push(yj);
    }
    let objective: f64 = z.iter().sum();
    if (objective - outcome.objective).abs() > 1e-6 * (1.0 + objective.abs()) {
        return Err(Error::Internal(format!(
            "literal objective {objective} diverged from simplex objective {}",
            outcome.objective
        )));
    }
    let solution = LPSolution {
        x,
        y,
        z,
        objective,
        simplex_iterations: outcome.iterations,
    };
    audit_solution(lp, &solution)?;
    Ok(solution)
}

/// Independent feasibility audit of a literal solution at tolerance 1e-7;
/// run after every solve regardless of the solver path.
pub fn audit_solution(lp: &LPInstance, sol: &LPSolution) -> Result<()> {
    let n = lp.node_count;
    let m = lp.advertiser_count;
    let fail = |msg: String| Err(Error::Internal(format!("LP audit failed: {msg}")));
    if sol.x.len() != n * m || sol.y.len() != m || sol.z.len() != m {
        return fail("dimension mismatch".into());
    }
    for (i, &xv) in sol.x.iter().enumerate() {
        if !(-AUDIT_TOL..=1.0 + AUDIT_TOL).contains(&xv) {
            return fail(format!("x[{i}] = {xv} outside [0, 1]"));
        }
    }
    for j in 0..m {
        if sol.y[j].len() != lp.sets[j].len() {
            return fail(format!("advertiser {j} y-count mismatch"));
        }
        let mut ysum = 0.0;
        for (i, (set, &yi)) in lp.sets[j].iter().zip(&sol.y[j]).enumerate() {
            if !(-AUDIT_TOL..=1.0 + AUDIT_TOL).contains(&yi) {
                return fail(format!("y[{j}][{i}] = {yi} outside [0, 1]"));
            }
            let coverage: f64 = set.iter().map(|&v| sol.x[lp.x_index(v, j as u32)]).sum();
            if yi > coverage + AUDIT_TOL {
                return fail(format!("coverage constraint violated for set {i} of {j}"));
            }
            ysum += yi;
        }
        if sol.z[j] > lp.coeff[j] * ysum + AUDIT_TOL {
            return fail(format!("revenue link violated for advertiser {j}"));
        }
        if sol.z[j] > lp.budgets[j] + AUDIT_TOL {
            return fail(format!("budget exceeded for advertiser {j}"));
        }
        if sol.z[j] < -AUDIT_TOL {
            return fail(format!("negative revenue for advertiser {j}"));
        }
    }
    for v in 0..n {
        let sum: f64 = (0..m).map(|j| sol.x[j * n + v]).sum();
        if sum > lp.exposure[v] as f64 + AUDIT_TOL {
            return fail(format!("exposure bound violated at node {v}"));
        }
    }
    if let Some(caps) = &lp.advertiser_caps {
        for (j, &cap) in caps.iter().enumerate() {
            let sum: f64 = (0..n).map(|v| sol.x[j * n + v]).sum();
            if sum > cap as f64 + AUDIT_TOL {
                return fail(format!("seed cap violated for advertiser {j}"));
            }
        }
    }
    let total: f64 = sol.x.iter().sum();
    if total > lp.total_cap as f64 + AUDIT_TOL {
        return fail("total seed budget violated".into());
    }
    let obj: f64 = sol.z.iter().sum();
    if (obj - sol.objective).abs() > 1e-6 * (1.0 + obj.abs()) {
        return fail("objective does not match sum of z".into());
    }
    Ok(())
}

/// Build, solve, and round: the full LP-rounding allocator. Uses the
/// star-specialized rounding when no advertiser caps are present and the
/// general bipartite rounding otherwise. Returns the rounded allocation and
/// the fractional optimum (the upper bound used for reporting).
pub fn lp_round_allocate(
    instance: &ProblemInstance,
    collections: &[RRCollection],
    rng_seed: u64,
) -> Result<(RoundedAllocation, f64)> {
    let lp = build_lp(instance, collections)?;
    let sol = solve_lp(&lp)?;
    let rounded = if lp.advertiser_caps.is_some() {
        dependent_round(&lp, &sol, rng_seed)?
    } else {
        star_round(&lp, &sol, rng_seed)?
    };
    Ok((rounded, sol.objective))
}
