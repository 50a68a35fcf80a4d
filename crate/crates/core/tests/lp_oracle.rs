//! Randomized cross-check of the bounded-variable revised simplex against
//! a deliberately naive, structurally different LP oracle: a full-tableau
//! two-phase simplex over nonnegative variables with explicit upper-bound
//! rows and Bland's rule throughout.

#![allow(clippy::needless_range_loop)]

use efleet_core::milp::{LinConstraint, MilpInstance, Sense, SolveStatus, VarDef};
use efleet_core::simplex::solve_lp;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-6;

/// Outcome of the oracle.
#[derive(Debug, PartialEq)]
enum OracleStatus {
    Optimal(f64),
    Infeasible,
}

/// Full-tableau two-phase simplex for `min c x, A x (sense) b, 0 <= x <= u`
/// with finite `u`. Upper bounds become explicit rows, so only classic
/// nonnegative simplex machinery is needed.
fn naive_solve(
    n: usize,
    a_rows: &[(Vec<f64>, Sense, f64)],
    c: &[f64],
    upper: &[f64],
) -> OracleStatus {
    // assemble rows: originals then upper bounds
    let mut rows: Vec<(Vec<f64>, Sense, f64)> = a_rows.to_vec();
    for (j, &u) in upper.iter().enumerate() {
        let mut r = vec![0.0; n];
        r[j] = 1.0;
        rows.push((r, Sense::Le, u));
    }
    let m = rows.len();

    // normalize rhs >= 0
    for (coefs, sense, rhs) in rows.iter_mut() {
        if *rhs < 0.0 {
            for v in coefs.iter_mut() {
                *v = -*v;
            }
            *rhs = -*rhs;
            *sense = match *sense {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
                Sense::Eq => Sense::Eq,
            };
        }
    }

    // columns: n structural + slacks/surpluses + artificials + rhs
    let mut slack_cols = 0;
    for (_, sense, _) in &rows {
        if !matches!(sense, Sense::Eq) {
            slack_cols += 1;
        }
    }
    let mut art_cols = 0;
    for (_, sense, _) in &rows {
        if !matches!(sense, Sense::Le) {
            art_cols += 1;
        }
    }
    let total = n + slack_cols + art_cols;
    let mut t = vec![vec![0.0; total + 1]; m + 1];
    let mut basis = vec![0usize; m];
    let mut next_slack = n;
    let mut next_art = n + slack_cols;
    let art_start = n + slack_cols;
    for (i, (coefs, sense, rhs)) in rows.iter().enumerate() {
        t[i][..n].copy_from_slice(coefs);
        t[i][total] = *rhs;
        match sense {
            Sense::Le => {
                t[i][next_slack] = 1.0;
                basis[i] = next_slack;
                next_slack += 1;
            }
            Sense::Ge => {
                t[i][next_slack] = -1.0;
                next_slack += 1;
                t[i][next_art] = 1.0;
                basis[i] = next_art;
                next_art += 1;
            }
            Sense::Eq => {
                t[i][next_art] = 1.0;
                basis[i] = next_art;
                next_art += 1;
            }
        }
    }

    // phase 1: minimize sum of artificials; objective row holds z_j - c_j
    for i in 0..m {
        if basis[i] >= art_start {
            for j in 0..=total {
                let v = t[i][j];
                t[m][j] += v;
            }
        }
    }
    for j in art_start..total {
        t[m][j] = 0.0;
    }
    let eps = 1e-9;
    let pivot = |t: &mut Vec<Vec<f64>>, basis: &mut Vec<usize>, r: usize, col: usize| {
        let p = t[r][col];
        for v in t[r].iter_mut() {
            *v /= p;
        }
        for i in 0..t.len() {
            if i == r {
                continue;
            }
            let f = t[i][col];
            if f != 0.0 {
                for j in 0..t[i].len() {
                    let delta = f * t[r][j];
                    t[i][j] -= delta;
                }
            }
        }
        basis[r] = col;
    };
    let iterate = |t: &mut Vec<Vec<f64>>, basis: &mut Vec<usize>, allowed: &dyn Fn(usize) -> bool| -> bool {
        // Bland's rule; returns false if unbounded
        for _ in 0..100_000 {
            let mut entering = None;
            for j in 0..total {
                if allowed(j) && t[m][j] > eps {
                    entering = Some(j);
                    break;
                }
            }
            let Some(col) = entering else {
                return true;
            };
            let mut row = None;
            let mut best = f64::INFINITY;
            for i in 0..m {
                if t[i][col] > eps {
                    let ratio = t[i][total] / t[i][col];
                    if ratio < best - eps
                        || (ratio < best + eps
                            && row.is_some_and(|r: usize| basis[i] < basis[r]))
                    {
                        best = ratio;
                        row = Some(i);
                    }
                }
            }
            let Some(r) = row else {
                return false;
            };
            pivot(t, basis, r, col);
        }
        panic!("oracle did not terminate");
    };

    assert!(iterate(&mut t, &mut basis, &|j| j < art_start), "phase 1 unbounded");
    if t[m][total] > 1e-7 {
        return OracleStatus::Infeasible;
    }

    // drive any basic artificial (necessarily at value ~0) out of the basis
    // with a degenerate pivot; a row with no eligible column is redundant
    // and its artificial stays parked at zero, unreachable by phase 2
    for i in 0..m {
        if basis[i] >= art_start {
            if let Some(col) = (0..art_start).find(|&j| t[i][j].abs() > 1e-9) {
                pivot(&mut t, &mut basis, i, col);
            }
        }
    }

    // phase 2: replace objective row with -c, eliminate basic columns
    for j in 0..=total {
        t[m][j] = 0.0;
    }
    for (j, &cj) in c.iter().enumerate() {
        t[m][j] = -cj;
    }
    for i in 0..m {
        let b = basis[i];
        let f = t[m][b];
        if f != 0.0 {
            for j in 0..=total {
                let delta = f * t[i][j];
                t[m][j] -= delta;
            }
        }
    }
    assert!(iterate(&mut t, &mut basis, &|j| j < art_start), "phase 2 unbounded");

    let mut x = vec![0.0; n];
    for i in 0..m {
        if basis[i] < n {
            x[basis[i]] = t[i][total];
        }
    }
    OracleStatus::Optimal(x.iter().zip(c).map(|(xi, ci)| xi * ci).sum())
}

#[test]
fn random_bounded_lps_match_naive_tableau() {
    let mut rng = ChaCha8Rng::seed_from_u64(991);
    let mut feasible = 0;
    let mut infeasible = 0;
    for case in 0..400 {
        let n = rng.gen_range(1..=6);
        let m = rng.gen_range(0..=5);
        let lo: Vec<f64> = (0..n).map(|_| rng.gen_range(-3..=3) as f64).collect();
        let span: Vec<f64> = (0..n).map(|_| rng.gen_range(0..=4) as f64).collect();
        let hi: Vec<f64> = lo.iter().zip(&span).map(|(l, s)| l + s).collect();
        let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-5..=5) as f64).collect();
        let rows: Vec<(Vec<f64>, Sense, f64)> = (0..m)
            .map(|_| {
                let coefs: Vec<f64> = (0..n).map(|_| rng.gen_range(-4..=4) as f64).collect();
                let sense = match rng.gen_range(0..3) {
                    0 => Sense::Le,
                    1 => Sense::Ge,
                    _ => Sense::Eq,
                };
                let rhs = rng.gen_range(-6..=6) as f64;
                (coefs, sense, rhs)
            })
            .collect();

        // instance under test
        let mut inst = MilpInstance::new();
        let vars: Vec<_> = (0..n)
            .map(|j| inst.add_variable(VarDef::continuous(format!("x{j}"), lo[j], hi[j])).unwrap())
            .collect();
        for (i, (coefs, sense, rhs)) in rows.iter().enumerate() {
            let terms: Vec<_> =
                vars.iter().zip(coefs).filter(|(_, c)| **c != 0.0).map(|(v, c)| (*v, *c)).collect();
            if terms.is_empty() {
                continue;
            }
            inst.add_constraint(LinConstraint::new(format!("r{i}"), terms, *sense, *rhs)).unwrap();
        }
        inst.set_objective(vars.iter().zip(&c).map(|(v, c)| (*v, *c)).collect()).unwrap();

        // oracle works on shifted variables u = x - lo in [0, hi - lo]
        let kept_rows: Vec<(Vec<f64>, Sense, f64)> = rows
            .iter()
            .filter(|(coefs, _, _)| coefs.iter().any(|c| *c != 0.0))
            .map(|(coefs, sense, rhs)| {
                let shift: f64 = coefs.iter().zip(&lo).map(|(a, l)| a * l).sum();
                (coefs.clone(), *sense, rhs - shift)
            })
            .collect();
        let const_term: f64 = c.iter().zip(&lo).map(|(ci, li)| ci * li).sum();
        let oracle = naive_solve(n, &kept_rows, &c, &span);

        let got = solve_lp(&inst).unwrap_or_else(|e| panic!("case {case}: {e}"));
        match oracle {
            OracleStatus::Infeasible => {
                assert_eq!(
                    got.status,
                    SolveStatus::Infeasible,
                    "case {case}: oracle infeasible, solver found {}",
                    got.objective
                );
                infeasible += 1;
            }
            OracleStatus::Optimal(obj_u) => {
                let expect = obj_u + const_term;
                assert_eq!(got.status, SolveStatus::Optimal, "case {case}: oracle {expect}");
                assert!(
                    (got.objective - expect).abs() <= TOL * (1.0 + expect.abs()),
                    "case {case}: solver {} vs oracle {expect}",
                    got.objective
                );
                feasible += 1;
            }
        }
    }
    assert!(feasible > 100, "want a healthy mix, got {feasible} feasible");
    assert!(infeasible > 20, "want a healthy mix, got {infeasible} infeasible");
}

#[test]
fn equality_heavy_lps_match_naive_tableau() {
    // many equality rows with nonzero right-hand sides start the composite
    // phase 1 with a crowd of violated slacks, the regime where false
    // ratio-test blocks used to corrupt the basis
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_810);
    let mut feasible = 0;
    for case in 0..200 {
        let n = rng.gen_range(3..=8);
        let m = rng.gen_range(2..=7);
        let lo: Vec<f64> = (0..n).map(|_| rng.gen_range(-2..=2) as f64).collect();
        let span: Vec<f64> = (0..n).map(|_| rng.gen_range(1..=6) as f64).collect();
        let hi: Vec<f64> = lo.iter().zip(&span).map(|(l, s)| l + s).collect();
        let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-4..=4) as f64).collect();
        let rows: Vec<(Vec<f64>, Sense, f64)> = (0..m)
            .map(|_| {
                let coefs: Vec<f64> = (0..n).map(|_| rng.gen_range(-3..=3) as f64).collect();
                // bias hard toward equalities
                let sense = if rng.gen_range(0..4) == 0 { Sense::Ge } else { Sense::Eq };
                let rhs = rng.gen_range(-8..=8) as f64;
                (coefs, sense, rhs)
            })
            .collect();

        let mut inst = MilpInstance::new();
        let vars: Vec<_> = (0..n)
            .map(|j| inst.add_variable(VarDef::continuous(format!("x{j}"), lo[j], hi[j])).unwrap())
            .collect();
        for (i, (coefs, sense, rhs)) in rows.iter().enumerate() {
            let terms: Vec<_> =
                vars.iter().zip(coefs).filter(|(_, c)| **c != 0.0).map(|(v, c)| (*v, *c)).collect();
            if terms.is_empty() {
                continue;
            }
            inst.add_constraint(LinConstraint::new(format!("r{i}"), terms, *sense, *rhs)).unwrap();
        }
        inst.set_objective(vars.iter().zip(&c).map(|(v, c)| (*v, *c)).collect()).unwrap();

        let kept_rows: Vec<(Vec<f64>, Sense, f64)> = rows
            .iter()
            .filter(|(coefs, _, _)| coefs.iter().any(|c| *c != 0.0))
            .map(|(coefs, sense, rhs)| {
                let shift: f64 = coefs.iter().zip(&lo).map(|(a, l)| a * l).sum();
                (coefs.clone(), *sense, rhs - shift)
            })
            .collect();
        let const_term: f64 = c.iter().zip(&lo).map(|(ci, li)| ci * li).sum();
        let oracle = naive_solve(n, &kept_rows, &c, &span);
        let got = solve_lp(&inst).unwrap_or_else(|e| panic!("case {case}: {e}"));
        match oracle {
            OracleStatus::Infeasible => {
                assert_eq!(got.status, SolveStatus::Infeasible, "case {case}");
            }
            OracleStatus::Optimal(obj_u) => {
                let expect = obj_u + const_term;
                assert_eq!(got.status, SolveStatus::Optimal, "case {case}: oracle {expect}");
                assert!(
                    (got.objective - expect).abs() <= TOL * (1.0 + expect.abs()),
                    "case {case}: solver {} vs oracle {expect}",
                    got.objective
                );
                feasible += 1;
            }
        }
    }
    assert!(feasible > 30, "want some feasible equality systems, got {feasible}");
}
