//! Reference dense-tableau primal simplex with variable upper bounds.
//!
//! Solves `maximize c'x subject to Ax <= b, 0 <= x <= u` where `b >= 0`, so
//! the all-slack basis is feasible and no phase-1 is needed. Upper bounds are
//! handled implicitly (nonbasic-at-upper-bound states and bound flips) rather
//! than as extra rows. Pivoting is Dantzig's rule with an automatic permanent
//! switch to Bland's rule when the objective stalls, which guarantees
//! termination on degenerate instances.

use crate::{Error, Result};
use rayon::prelude::*;

const PIVOT_TOL: f64 = 1e-9;
const RATIO_TOL: f64 = 1e-10;

/// A standard-form problem: rows are sparse `(column, coefficient)` lists
/// with a `<=` right-hand side.
pub struct StandardForm {
    pub objective: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<(Vec<(usize, f64)>, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic(usize),
    AtLower,
    AtUpper,
}

pub struct SimplexOutcome {
    pub values: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

/// Kept small so accidental huge instances fail fast instead of thrashing;
/// callers can raise it explicitly.
pub const DEFAULT_TABLEAU_BYTE_LIMIT: usize = 2_000_000_000;

pub fn solve(problem: &StandardForm, tableau_byte_limit: usize) -> Result<SimplexOutcome> {
    let nstruct = problem.objective.len();
    let nrows = problem.rows.len();
    let ncols = nstruct + nrows;
    let bytes = nrows
        .checked_mul(ncols)
        .and_then(|x| x.checked_mul(8))
        .ok_or_else(|| Error::Capacity("tableau size overflows".into()))?;
    if bytes > tableau_byte_limit {
        return Err(Error::Capacity(format!(
            "dense tableau would need {bytes} bytes (limit {tableau_byte_limit}); \
             reduce the RR sample multiplier or solve externally via the LP dump"
        )));
    }
    for (_, rhs) in &problem.rows {
        if *rhs < 0.0 {
            return Err(Error::Internal("standard form requires rhs >= 0".into()));
        }
    }

    let mut tableau: Vec<Vec<f64>> = vec![vec![0.0; ncols]; nrows];
    let mut xb: Vec<f64> = Vec::with_capacity(nrows);
    for (r, (cols, rhs)) in problem.rows.iter().enumerate() {
        for &(c, a) in cols {
            debug_assert!(c < nstruct);
            tableau[r][c] += a;
        }
        tableau[r][nstruct + r] = 1.0;
        xb.push(*rhs);
    }
    let mut upper: Vec<f64> = problem.upper.clone();
    upper.extend(std::iter::repeat(f64::INFINITY).take(nrows));
    let mut reduced: Vec<f64> = problem.objective.clone();
    reduced.extend(std::iter::repeat(0.0).take(nrows));
    let mut state: Vec<VarState> = vec![VarState::AtLower; ncols];
    let mut basis: Vec<usize> = Vec::with_capacity(nrows);
    for r in 0..nrows {
        basis.push(nstruct + r);
        state[nstruct + r] = VarState::Basic(r);
    }
    let max_iterations = 50 * (nrows + ncols) + 10_000;
    let stall_limit = 4 * (nrows + ncols) + 100;
    let mut stalled = 0usize;
    let mut bland = false;
    let mut iterations = 0usize;

    loop {
        iterations += 1;
        if iterations > max_iterations {
            return Err(Error::Internal(format!(
                "simplex exceeded {max_iterations} iterations"
            )));
        }

        // entering variable: from lower wants positive reduced cost, from
        // upper wants negative
        let eligible = |j: usize, d: f64| -> Option<f64> {
            if upper[j] <= 0.0 {
                return None;
            }
            match state[j] {
                VarState::AtLower if d > PIVOT_TOL => Some(d),
                VarState::AtUpper if d < -PIVOT_TOL => Some(-d),
                _ => None,
            }
        };
        let entering = if bland {
            (0..ncols).find(|&j| eligible(j, reduced[j]).is_some())
        } else {
            let mut best: Option<(f64, usize)> = None;
            for j in 0..ncols {
                if let Some(mag) = eligible(j, reduced[j]) {
                    if best.map_or(true, |(bm, _)| mag > bm) {
                        best = Some((mag, j));
                    }
                }
            }
            best.map(|(_, j)| j)
        };
        let Some(e) = entering else {
            break; // optimal
        };
        let sigma = if state[e] == VarState::AtLower { 1.0 } else { -1.0 };

        // ratio test
        let mut t_best = upper[e]; // bound-flip distance (may be infinite)
        let mut leave: Option<usize> = None; // row index
        let mut leave_to_upper = false;
        for r in 0..nrows {
            let a = sigma * tableau[r][e];
            let (limit, to_upper) = if a > RATIO_TOL {
                (xb[r].max(0.0) / a, false)
            } else if a < -RATIO_TOL {
                let headroom = upper[basis[r]];
                if !headroom.is_finite() {
                    continue;
                }
                ((headroom - xb[r]).max(0.0) / -a, true)
            } else {
                continue;
            };
            let take = if limit < t_best - RATIO_TOL {
                true
            } else if limit <= t_best + RATIO_TOL {
                // tie: prefer a basis change over a bound flip; among rows,
                // Bland wants the smallest basic index, Dantzig the largest
                // pivot magnitude
                match leave {
                    None => true,
                    Some(lr) => {
                        if bland {
                            basis[r] < basis[lr]
                        } else {
                            tableau[r][e].abs() > tableau[lr][e].abs()
                        }
                    }
                }
            } else {
                false
            };
            if take {
                t_best = t_best.min(limit);
                leave = Some(r);
                leave_to_upper = to_upper;
            }
        }
        if t_best.is_infinite() {
            return Err(Error::Internal(
                "LP is unbounded; the revenue LP is always bounded, so this is a bug".into(),
            ));
        }
        let t = t_best.max(0.0);
        let gain = reduced[e] * sigma * t;
        if gain <= 1e-12 {
            stalled += 1;
            if stalled > stall_limit && !bland {
                bland = true;
            }
        } else {
            stalled = 0;
        }

        match leave {
            None => {
                // bound flip: entering traverses its whole range
                for r in 0..nrows {
                    xb[r] -= sigma * tableau[r][e] * t;
                }
                state[e] = match state[e] {
                    VarState::AtLower => VarState::AtUpper,
                    VarState::AtUpper => VarState::AtLower,
                    VarState::Basic(_) => unreachable!("entering variable is nonbasic"),
                };
            }
            Some(r) => {
                for i in 0..nrows {
                    if i != r {
                        xb[i] -= sigma * tableau[i][e] * t;
                    }
                }
                let entering_value = if sigma > 0.0 { t } else { upper[e] - t };
                let leaving = basis[r];
                state[leaving] = if leave_to_upper {
                    VarState::AtUpper
                } else {
                    VarState::AtLower
                };
                // eliminate column e from every other row
                let piv = tableau[r][e];
                debug_assert!(piv.abs() > RATIO_TOL);
                let inv = 1.0 / piv;
                for val in tableau[r].iter_mut() {
                    *val *= inv;
                }
                let pivot_row = std::mem::take(&mut tableau[r]);
                let eliminate = |row: &mut Vec<f64>| {
                    if row.is_empty() {
                        return; // the taken pivot row itself
                    }
                    let f = row[e];
                    if f != 0.0 {
                        for (x, &p) in row.iter_mut().zip(pivot_row.iter()) {
                            *x -= f * p;
                        }
                        row[e] = 0.0; // exact zero keeps the column clean
                    }
                };
                if nrows * ncols > 1 << 21 {
                    tableau.par_iter_mut().for_each(eliminate);
                } else {
                    tableau.iter_mut().for_each(eliminate);
                }
                let f = reduced[e];
                if f != 0.0 {
                    for (x, &p) in reduced.iter_mut().zip(pivot_row.iter()) {
                        *x -= f * p;
                    }
                    reduced[e] = 0.0;
                }
                tableau[r] = pivot_row;
                basis[r] = e;
                state[e] = VarState::Basic(r);
                xb[r] = entering_value;
            }
        }
    }

    let mut values = vec![0.0; nstruct];
    for j in 0..nstruct {
        values[j] = match state[j] {
            VarState::AtLower => 0.0,
            VarState::AtUpper => upper[j],
            VarState::Basic(r) => xb[r].max(0.0).min(if upper[j].is_finite() {
                upper[j]
            } else {
                f64::INFINITY
            }),
        };
    }
    // recompute the objective from the values to shed incremental drift
    let objective = values
        .iter()
        .zip(&problem.objective)
        .map(|(x, c)| x * c)
        .sum();
    Ok(SimplexOutcome {
        values,
        objective,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn solve_ok(problem: &StandardForm) -> SimplexOutcome {
        solve(problem, DEFAULT_TABLEAU_BYTE_LIMIT).unwrap()
    }

    #[test]
    fn simple_box_lp() {
        // max x + y, x + y <= 1.5, x, y in [0, 1]
        let p = StandardForm {
            objective: vec![1.0, 1.0],
            upper: vec![1.0, 1.0],
            rows: vec![(vec![(0, 1.0), (1, 1.0)], 1.5)],
        };
        let out = solve_ok(&p);
        assert!((out.objective - 1.5).abs() < 1e-9);
    }

    #[test]
    fn bound_flip_only() {
        // no rows at all: optimum sits at the upper bounds
        let p = StandardForm {
            objective: vec![2.0, 3.0],
            upper: vec![1.0, 0.5],
            rows: vec![],
        };
        let out = solve_ok(&p);
        assert!((out.objective - 3.5).abs() < 1e-9);
        assert_eq!(out.values, vec![1.0, 0.5]);
    }

    #[test]
    fn degenerate_zero_rhs_rows() {
        // coverage-like structure: y <= x, z <= 0.5 y, max z, x <= 1
        let p = StandardForm {
            objective: vec![0.0, 0.0, 1.0],
            upper: vec![1.0, 1.0, f64::INFINITY],
            rows: vec![
                (vec![(1, 1.0), (0, -1.0)], 0.0),
                (vec![(2, 1.0), (1, -0.5)], 0.0),
            ],
        };
        let out = solve_ok(&p);
        assert!((out.objective - 0.5).abs() < 1e-9, "got {}", out.objective);
    }

    /// Brute-force oracle: enumerates all candidate basic solutions by
    /// choosing, for each variable, either a bound (0 or u) or one of the
    /// tight rows, solving the square system, and keeping the best feasible
    /// point. Exponential; for tiny LPs only.
    fn brute_force(problem: &StandardForm) -> Option<f64> {
        let n = problem.objective.len();
        let m = problem.rows.len();
        let dense: Vec<Vec<f64>> = problem
            .rows
            .iter()
            .map(|(cols, _)| {
                let mut row = vec![0.0; n];
                for &(c, a) in cols {
                    row[c] += a;
                }
                row
            })
            .collect();
        // choices per var: 0 = at zero, 1 = at upper; rows can be tight or not.
        // Enumerate subsets of tight rows and var-bound assignments for the rest.
        let mut best: Option<f64> = None;
        for tight_mask in 0u32..(1 << m) {
            let tight: Vec<usize> = (0..m).filter(|i| tight_mask >> i & 1 == 1).collect();
            if tight.len() > n {
                continue;
            }
            let free_count = tight.len();
            // choose which variables are free (solved from tight rows)
            let var_masks = 1u32 << n;
            for free_mask in 0..var_masks {
                if free_mask.count_ones() as usize != free_count {
                    continue;
                }
                let free: Vec<usize> = (0..n).filter(|j| free_mask >> j & 1 == 1).collect();
                let bound_vars: Vec<usize> = (0..n).filter(|j| free_mask >> j & 1 == 0).collect();
                for bound_mask in 0u32..(1 << bound_vars.len()) {
                    let mut x = vec![0.0; n];
                    let mut ok = true;
                    for (bi, &j) in bound_vars.iter().enumerate() {
                        if bound_mask >> bi & 1 == 1 {
                            if !problem.upper[j].is_finite() {
                                ok = false;
                                break;
                            }
                            x[j] = problem.upper[j];
                        }
                    }
                    if !ok {
                        continue;
                    }
                    // solve tight rows for the free vars by Gaussian elimination
                    let k = free.len();
                    let mut a = vec![vec![0.0; k + 1]; k];
                    for (ri, &r) in tight.iter().enumerate() {
                        for (ci, &j) in free.iter().enumerate() {
                            a[ri][ci] = dense[r][j];
                        }
                        let mut rhs = problem.rows[r].1;
                        for &j in &bound_vars {
                            rhs -= dense[r][j] * x[j];
                        }
                        a[ri][k] = rhs;
                    }
                    let mut solvable = true;
                    for col in 0..k {
                        let piv = (col..k).max_by(|&i1, &i2| {
                            a[i1][col].abs().total_cmp(&a[i2][col].abs())
                        });
                        let piv = piv.unwrap();
                        if a[piv][col].abs() < 1e-10 {
                            solvable = false;
                            break;
                        }
                        a.swap(col, piv);
                        for i in 0..k {
                            if i != col {
                                let f = a[i][col] / a[col][col];
                                for c2 in col..=k {
                                    a[i][c2] -= f * a[col][c2];
                                }
                            }
                        }
                    }
                    if !solvable {
                        continue;
                    }
                    for (ci, &j) in free.iter().enumerate() {
                        x[j] = a[ci][k] / a[ci][ci];
                    }
                    // feasibility
                    let mut feasible = true;
                    for j in 0..n {
                        if x[j] < -1e-8 || x[j] > problem.upper[j] + 1e-8 {
                            feasible = false;
                            break;
                        }
                    }
                    if feasible {
                        for r in 0..m {
                            let lhs: f64 = (0..n).map(|j| dense[r][j] * x[j]).sum();
                            if lhs > problem.rows[r].1 + 1e-8 {
                                feasible = false;
                                break;
                            }
                        }
                    }
                    if feasible {
                        let val: f64 = (0..n).map(|j| x[j] * problem.objective[j]).sum();
                        if best.map_or(true, |b| val > b) {
                            best = Some(val);
                        }
                    }
                }
            }
        }
        best
    }

    #[test]
    fn matches_vertex_enumeration_on_random_lps() {
        let mut rng = crate::seeding::rng(12345);
        for case in 0..200 {
            let n = rng.gen_range(1..=3);
            let m = rng.gen_range(1..=3);
            let problem = StandardForm {
                objective: (0..n).map(|_| rng.gen_range(-1.0..2.0)).collect(),
                upper: (0..n)
                    .map(|_| {
                        if rng.gen_bool(0.3) {
                            f64::INFINITY
                        } else {
                            rng.gen_range(0.2..2.0)
                        }
                    })
                    .collect(),
                rows: (0..m)
                    .map(|_| {
                        let mut cols: Vec<(usize, f64)> = Vec::new();
                        for j in 0..n {
                            if rng.gen_bool(0.8) {
                                cols.push((j, rng.gen_range(0.1..2.0)));
                            }
                        }
                        (cols, rng.gen_range(0.0..3.0))
                    })
                    .collect(),
            };
            // keep the oracle's enumeration bounded and the LP bounded above
            let bounded = problem
                .upper
                .iter()
                .enumerate()
                .all(|(j, u)| u.is_finite() || problem.objective[j] <= 0.0 || {
                    problem
                        .rows
                        .iter()
                        .any(|(cols, _)| cols.iter().any(|&(c, a)| c == j && a > 0.0))
                });
            if !bounded {
                continue;
            }
            let Some(expected) = brute_force(&problem) else {
                continue;
            };
            if !expected.is_finite() {
                continue;
            }
            match solve(&problem, DEFAULT_TABLEAU_BYTE_LIMIT) {
                Ok(out) => assert!(
                    (out.objective - expected).abs() <= 1e-6 * (1.0 + expected.abs()),
                    "case {case}: simplex {} vs oracle {}",
                    out.objective,
                    expected
                ),
                Err(Error::Internal(msg)) if msg.contains("unbounded") => {
                    // oracle found a finite vertex but rays exist; skip
                    continue;
                }
                Err(e) => panic!("case {case}: {e}"),
            }
        }
    }

    #[test]
    fn capacity_guard_triggers() {
        let p = StandardForm {
            objective: vec![1.0; 100],
            upper: vec![1.0; 100],
            rows: (0..100).map(|j| (vec![(j, 1.0)], 0.5)).collect(),
        };
        assert!(matches!(solve(&p, 1000), Err(Error::Capacity(_))));
    }
}
