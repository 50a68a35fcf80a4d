//! Branch-and-bound MILP search over the LP relaxation solver.
//!
//! Branching on the most-fractional binary (lowest id on ties), best-first
//! node selection once an incumbent exists, depth-first diving until the
//! first incumbent is found. An optional warm-start point is used for
//! initial pruning when it passes the feasibility re-check.

use std::time::Instant;

use crate::milp::{
    evaluate, MilpInstance, MilpSolution, SolveStats, SolveStatus, VarKind, FEAS_TOL, INT_TOL,
};
use crate::simplex::{LpStatus, SimplexSolver, SolveError};

/// Search limits; `None` means unlimited.
#[derive(Debug, Clone, Copy, Default)]
pub struct Limits {
    pub max_nodes: Option<u64>,
    pub max_time_s: Option<f64>,
}

#[derive(Debug, Clone)]
struct Node {
    id: u64,
    /// Parent LP objective: a lower bound for the subtree.
    bound: f64,
    /// Bound fixings along the path from the root: (var, lo, hi).
    deltas: Vec<(usize, f64, f64)>,
}

/// Solves `instance` to proven optimality (relative best-bound gap at most
/// 1e-6) or returns the best incumbent with `LimitReached`.
pub fn solve_milp(instance: &MilpInstance, limits: Limits) -> Result<MilpSolution, SolveError> {
    solve_milp_warm(instance, limits, None)
}

/// [`solve_milp`] with an optional warm-start incumbent candidate.
///
/// The candidate is accepted only if it passes an independent feasibility
/// evaluation; an infeasible candidate is silently ignored.
pub fn solve_milp_warm(
    instance: &MilpInstance,
    limits: Limits,
    warm: Option<&[f64]>,
) -> Result<MilpSolution, SolveError> {
    let start = Instant::now();
    let binaries: Vec<usize> = instance
        .vars
        .iter()
        .enumerate()
        .filter(|(_, d)| d.kind == VarKind::Binary)
        .map(|(i, _)| i)
        .collect();
    let mut solver = SimplexSolver::new(instance)?;

    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    if let Some(vals) = warm {
        if vals.len() == instance.num_vars() {
            let eval = evaluate(instance, vals);
            if eval.is_feasible(FEAS_TOL) {
                incumbent = Some((eval.objective, vals.to_vec()));
            }
        }
    }

    let mut nodes_processed: u64 = 0;
    let mut frontier: Vec<Node> = vec![Node { id: 0, bound: f64::NEG_INFINITY, deltas: Vec::new() }];
    let mut next_id: u64 = 1;
    let mut touched: Vec<usize> = Vec::new();
    let mut limit_hit = false;
    let mut bound_history: Vec<f64> = Vec::new();
    let mut incumbent_history: Vec<f64> = Vec::new();

    while !frontier.is_empty() {
        if let Some(max) = limits.max_nodes {
            if nodes_processed >= max {
                limit_hit = true;
                break;
            }
        }
        if let Some(max) = limits.max_time_s {
            if start.elapsed().as_secs_f64() >= max {
                limit_hit = true;
                break;
            }
        }

        // prune against the incumbent before selection
        if let Some((inc, _)) = &incumbent {
            let cutoff = inc - 1e-9 * (1.0 + inc.abs());
            frontier.retain(|n| n.bound < cutoff);
            if frontier.is_empty() {
                break;
            }
        }

        // node selection: dive on the most recent node until an incumbent
        // exists, then best-first by (bound, id)
        let idx = if incumbent.is_none() {
            frontier
                .iter()
                .enumerate()
                .max_by_key(|(_, n)| n.id)
                .map(|(i, _)| i)
                .expect("nonempty")
        } else {
            let mut best = 0;
            for i in 1..frontier.len() {
                let (a, b) = (&frontier[i], &frontier[best]);
                if a.bound < b.bound - 0.0 || (a.bound == b.bound && a.id < b.id) {
                    best = i;
                }
            }
            best
        };
        let node = frontier.swap_remove(idx);
        nodes_processed += 1;
        {
            let frontier_min =
                frontier.iter().map(|n| n.bound).fold(node.bound, f64::min);
            bound_history
                .push(frontier_min.max(bound_history.last().copied().unwrap_or(f64::NEG_INFINITY)));
            incumbent_history
                .push(incumbent.as_ref().map_or(f64::INFINITY, |(o, _)| *o));
        }

        // apply the node's bound fixings
        for &v in &touched {
            solver.reset_var_bounds(v);
        }
        touched.clear();
        for &(v, lo, hi) in &node.deltas {
            solver.set_var_bounds(v, lo, hi);
            touched.push(v);
        }

        let outcome = solver.resolve()?;
        match outcome.status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => return Err(SolveError::Unbounded),
            LpStatus::Stalled => {
                return Err(SolveError::Numerical("simplex pivot limit in node".into()))
            }
            LpStatus::Optimal => {}
        }
        let obj = outcome.objective;
        if let Some((inc, _)) = &incumbent {
            if obj >= inc - 1e-9 * (1.0 + inc.abs()) {
                continue;
            }
        }

        // most fractional binary
        let mut branch: Option<(usize, f64)> = None;
        for &v in &binaries {
            let x = solver.value(v);
            let frac = (x - x.round()).abs();
            if frac <= INT_TOL {
                continue;
            }
            let score = 0.5 - (x - x.floor() - 0.5).abs();
            match branch {
                Some((_, best)) if score <= best => {}
                _ => branch = Some((v, score)),
            }
        }

        match branch {
            None => {
                // integral: candidate incumbent (round binaries exactly)
                let mut vals = solver.values().to_vec();
                for &v in &binaries {
                    vals[v] = vals[v].round();
                }
                let better = match &incumbent {
                    Some((inc, _)) => obj < inc - 1e-12 * (1.0 + inc.abs()),
                    None => true,
                };
                if better {
                    incumbent = Some((obj, vals));
                }
            }
            Some((v, _)) => {
                let x = solver.value(v);
                let up = Node {
                    id: next_id,
                    bound: obj,
                    deltas: with_delta(&node.deltas, (v, 1.0, 1.0)),
                };
                let down = Node {
                    id: next_id + 1,
                    bound: obj,
                    deltas: with_delta(&node.deltas, (v, 0.0, 0.0)),
                };
                next_id += 2;
                // push the preferred (rounded) child last so diving pops it
                if x >= 0.5 {
                    frontier.push(down);
                    frontier.push(up);
                } else {
                    frontier.push(up);
                    frontier.push(down);
                }
            }
        }
    }

    let best_bound = frontier
        .iter()
        .map(|n| n.bound)
        .fold(incumbent.as_ref().map_or(f64::INFINITY, |(o, _)| *o), f64::min);
    let stats = SolveStats {
        simplex_pivots: solver.pivots,
        nodes: nodes_processed,
        solve_time_s: start.elapsed().as_secs_f64(),
        bland_fallback: solver.bland_engaged(),
        best_bound,
        bound_history,
        incumbent_history,
    };

    match incumbent {
        Some((obj, values)) => Ok(MilpSolution {
            status: if limit_hit { SolveStatus::LimitReached } else { SolveStatus::Optimal },
            values,
            objective: obj,
            stats,
        }),
        None if limit_hit => Ok(MilpSolution {
            status: SolveStatus::LimitReached,
            values: Vec::new(),
            objective: f64::INFINITY,
            stats,
        }),
        None => Ok(MilpSolution::infeasible(stats)),
    }
}

fn with_delta(deltas: &[(usize, f64, f64)], extra: (usize, f64, f64)) -> Vec<(usize, f64, f64)> {
    let mut out = Vec::with_capacity(deltas.len() + 1);
    out.extend_from_slice(deltas);
    out.push(extra);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{LinConstraint, Sense, VarDef};
    use crate::simplex::solve_lp;

    #[test]
    fn pure_lp_matches_solve_lp() {
        let mut m = MilpInstance::new();
        let x = m.add_variable(VarDef::continuous("x", 0.0, 10.0)).unwrap();
        let y = m.add_variable(VarDef::continuous("y", 0.0, 10.0)).unwrap();
        m.add_constraint(LinConstraint::new("c", vec![(x, 1.0), (y, 2.0)], Sense::Ge, 7.0))
            .unwrap();
        m.set_objective(vec![(x, 3.0), (y, 1.0)]).unwrap();
        let milp = solve_milp(&m, Limits::default()).unwrap();
        let lp = solve_lp(&m).unwrap();
        assert_eq!(milp.status, SolveStatus::Optimal);
        assert!((milp.objective - lp.objective).abs() < 1e-9);
    }

    #[test]
    fn tiny_assignment_problem() {
        // 2 aircraft x 2 tasks, costs (1,2;2,1): optimal total 2
        let mut m = MilpInstance::new();
        let mut x = Vec::new();
        for i in 0..2 {
            for j in 0..2 {
                x.push(m.add_variable(VarDef::binary(format!("x{i}{j}"))).unwrap());
            }
        }
        for i in 0..2 {
            m.add_constraint(LinConstraint::new(
                format!("row{i}"),
                vec![(x[2 * i], 1.0), (x[2 * i + 1], 1.0)],
                Sense::Eq,
                1.0,
            ))
            .unwrap();
            m.add_constraint(LinConstraint::new(
                format!("col{i}"),
                vec![(x[i], 1.0), (x[i + 2], 1.0)],
                Sense::Eq,
                1.0,
            ))
            .unwrap();
        }
        m.set_objective(vec![(x[0], 1.0), (x[1], 2.0), (x[2], 2.0), (x[3], 1.0)]).unwrap();
        let sol = solve_milp(&m, Limits::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.objective - 2.0).abs() < 1e-9);
        assert!((sol.value(x[0]) - 1.0).abs() < 1e-9);
        assert!((sol.value(x[3]) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn knapsack_with_fractional_relaxation() {
        // max 10a + 6b + 4c  s.t. a + b + c <= 2 (binary): min form
        let mut m = MilpInstance::new();
        let a = m.add_variable(VarDef::binary("a")).unwrap();
        let b = m.add_variable(VarDef::binary("b")).unwrap();
        let c = m.add_variable(VarDef::binary("c")).unwrap();
        m.add_constraint(LinConstraint::new(
            "w",
            vec![(a, 5.0), (b, 4.0), (c, 3.0)],
            Sense::Le,
            9.0,
        ))
        .unwrap();
        m.set_objective(vec![(a, -10.0), (b, -6.0), (c, -4.0)]).unwrap();
        let sol = solve_milp(&m, Limits::default()).unwrap();
        // best: a + b (weight 9, value 16)
        assert!((sol.objective + 16.0).abs() < 1e-9, "{}", sol.objective);
    }

    #[test]
    fn integer_infeasible_detected() {
        // 2a + 2b = 1 has fractional LP solutions but no binary ones
        let mut m = MilpInstance::new();
        let a = m.add_variable(VarDef::binary("a")).unwrap();
        let b = m.add_variable(VarDef::binary("b")).unwrap();
        m.add_constraint(LinConstraint::new("odd", vec![(a, 2.0), (b, 2.0)], Sense::Eq, 1.0))
            .unwrap();
        m.set_objective(vec![(a, 1.0), (b, 1.0)]).unwrap();
        let sol = solve_milp(&m, Limits::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
    }

    #[test]
    fn warm_start_prunes_to_same_objective() {
        let mut m = MilpInstance::new();
        let a = m.add_variable(VarDef::binary("a")).unwrap();
        let b = m.add_variable(VarDef::binary("b")).unwrap();
        let c = m.add_variable(VarDef::binary("c")).unwrap();
        m.add_constraint(LinConstraint::new(
            "w",
            vec![(a, 5.0), (b, 4.0), (c, 3.0)],
            Sense::Le,
            9.0,
        ))
        .unwrap();
        m.set_objective(vec![(a, -10.0), (b, -6.0), (c, -4.0)]).unwrap();
        // warm candidate: a + b, which is the optimum
        let warm = vec![1.0, 1.0, 0.0];
        let sol = solve_milp_warm(&m, Limits::default(), Some(&warm)).unwrap();
        assert!((sol.objective + 16.0).abs() < 1e-9);
        // infeasible warm candidate is ignored
        let bad = vec![1.0, 1.0, 1.0];
        let sol = solve_milp_warm(&m, Limits::default(), Some(&bad)).unwrap();
        assert!((sol.objective + 16.0).abs() < 1e-9);
    }

    #[test]
    fn node_limit_reports_limit_reached() {
        // infeasible-by-parity instance large enough to need many nodes
        let mut m = MilpInstance::new();
        let vars: Vec<_> =
            (0..10).map(|i| m.add_variable(VarDef::binary(format!("b{i}"))).unwrap()).collect();
        let terms: Vec<_> = vars.iter().map(|v| (*v, 2.0)).collect();
        m.add_constraint(LinConstraint::new("odd", terms, Sense::Eq, 9.0)).unwrap();
        m.set_objective(vec![(vars[0], 1.0)]).unwrap();
        let sol =
            solve_milp(&m, Limits { max_nodes: Some(3), max_time_s: None }).unwrap();
        assert_eq!(sol.status, SolveStatus::LimitReached);
    }
}
