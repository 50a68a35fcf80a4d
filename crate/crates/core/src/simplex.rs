//! Bounded-variable primal simplex over a [`MilpInstance`] with
//! integrality relaxed.
//!
//! Revised simplex with an explicitly maintained dense basis inverse.
//! Feasibility is restored by a composite phase 1 that minimizes the total
//! bound violation of the basic variables, so no artificial columns are
//! ever added; nonbasic variables may sit at either bound (or at an
//! interior starting value until first touched). Dantzig pricing with a
//! permanent switch to Bland's rule once stalling is detected.
//!
//! The solver is reusable: branch-and-bound tightens variable bounds via
//! [`SimplexSolver::set_var_bounds`] and re-optimizes from the current
//! basis.

// dense kernels walk several arrays in lockstep; indexed loops stay
#![allow(clippy::needless_range_loop)]

use thiserror::Error;

use crate::milp::{
    evaluate, MilpInstance, MilpSolution, Sense, SolveStats, SolveStatus, VarKind,
};

/// Primal feasibility tolerance on variable bounds.
const FEAS_EPS: f64 = 1e-9;
/// Reduced-cost tolerance.
const COST_EPS: f64 = 1e-9;
/// Minimum acceptable pivot magnitude.
const PIVOT_EPS: f64 = 1e-10;
/// Ratio-test tie window.
const RATIO_EPS: f64 = 1e-10;
/// Non-improving iterations before switching to Bland's rule.
const STALL_LIMIT: u64 = 500;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("problem is unbounded below")]
    Unbounded,
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("invalid instance: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Pivot cap reached without convergence.
    Stalled,
}

/// Outcome of one LP solve on the relaxation.
#[derive(Debug, Clone)]
pub struct LpOutcome {
    pub status: LpStatus,
    pub objective: f64,
    pub pivots: u64,
    pub bland_engaged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pos {
    Basic(usize),
    AtLower,
    AtUpper,
    /// Nonbasic at an interior (or free) value; used as a starting state.
    Interior,
}

/// Reusable bounded-variable primal simplex state.
pub struct SimplexSolver {
    n_struct: usize,
    m: usize,
    /// Total variables including one slack per row.
    n_total: usize,
    /// Sparse structural columns (row, coefficient).
    cols: Vec<Vec<(usize, f64)>>,
    obj: Vec<f64>,
    rhs: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    base_lo: Vec<f64>,
    base_hi: Vec<f64>,
    basis: Vec<usize>,
    pos: Vec<Pos>,
    x: Vec<f64>,
    /// Dense row-major basis inverse.
    binv: Vec<f64>,
    pub pivots: u64,
    bland: bool,
    has_state: bool,
}

impl SimplexSolver {
    /// Builds the standard equality form `Ax + s = b` with bounded slacks;
    /// binary variables are relaxed to their box.
    pub fn new(instance: &MilpInstance) -> Result<Self, SolveError> {
        let n_struct = instance.num_vars();
        let m = instance.num_constraints();
        let n_total = n_struct + m;
        let mut cols = vec![Vec::new(); n_struct];
        let mut rhs = vec![0.0; m];
        let mut lo = Vec::with_capacity(n_total);
        let mut hi = Vec::with_capacity(n_total);
        for def in &instance.vars {
            if def.lo > def.hi {
                return Err(SolveError::Invalid(format!("variable {:?} has lo > hi", def.name)));
            }
            if def.lo.is_nan() || def.hi.is_nan() {
                return Err(SolveError::Invalid(format!("variable {:?} has NaN bound", def.name)));
            }
            debug_assert!(def.kind != VarKind::Binary || (def.lo >= 0.0 && def.hi <= 1.0));
            lo.push(def.lo);
            hi.push(def.hi);
        }
        for (i, c) in instance.constraints.iter().enumerate() {
            for &(v, coef) in &c.terms {
                if coef != 0.0 {
                    cols[v.0].push((i, coef));
                }
            }
            rhs[i] = c.rhs;
            let (slo, shi) = match c.sense {
                Sense::Le => (0.0, f64::INFINITY),
                Sense::Ge => (f64::NEG_INFINITY, 0.0),
                Sense::Eq => (0.0, 0.0),
            };
            lo.push(slo);
            hi.push(shi);
        }
        let mut obj = vec![0.0; n_struct];
        for &(v, c) in &instance.objective {
            obj[v.0] += c;
        }
        Ok(Self {
            n_struct,
            m,
            n_total,
            cols,
            obj,
            rhs,
            base_lo: lo.clone(),
            base_hi: hi.clone(),
            lo,
            hi,
            basis: Vec::new(),
            pos: Vec::new(),
            x: Vec::new(),
            binv: Vec::new(),
            pivots: 0,
            bland: false,
            has_state: false,
        })
    }

    pub fn num_structural(&self) -> usize {
        self.n_struct
    }

    /// Current value of structural variable `v`.
    pub fn value(&self, v: usize) -> f64 {
        self.x[v]
    }

    pub fn values(&self) -> &[f64] {
        &self.x[..self.n_struct]
    }

    pub fn bland_engaged(&self) -> bool {
        self.bland
    }

    /// Overrides the bounds of structural variable `v` (used by
    /// branch-and-bound); takes effect on the next [`Self::resolve`].
    pub fn set_var_bounds(&mut self, v: usize, lo: f64, hi: f64) {
        assert!(lo <= hi, "lo {lo} > hi {hi} for var {v}");
        self.lo[v] = lo;
        self.hi[v] = hi;
    }

    /// Restores the bounds of structural variable `v` from the instance.
    pub fn reset_var_bounds(&mut self, v: usize) {
        self.lo[v] = self.base_lo[v];
        self.hi[v] = self.base_hi[v];
    }

    /// Discards any warm state: all-slack basis, structural variables at
    /// the finite bound nearest zero, or parked at an interior zero for
    /// two-sided/free variables straddling it.
    fn crash_start(&mut self) {
        self.basis = (self.n_struct..self.n_total).collect();
        self.pos = vec![Pos::AtLower; self.n_total];
        self.x = vec![0.0; self.n_total];
        for v in 0..self.n_struct {
            let (lo, hi) = (self.lo[v], self.hi[v]);
            let (p, val) = if lo == hi {
                (Pos::AtLower, lo)
            } else if lo <= 0.0 && hi >= 0.0 {
                if lo == 0.0 {
                    (Pos::AtLower, 0.0)
                } else if hi == 0.0 {
                    (Pos::AtUpper, 0.0)
                } else {
                    (Pos::Interior, 0.0)
                }
            } else if lo.is_finite() && (lo.abs() <= hi.abs() || !hi.is_finite()) {
                (Pos::AtLower, lo)
            } else {
                (Pos::AtUpper, hi)
            };
            self.pos[v] = p;
            self.x[v] = val;
        }
        for (r, s) in (self.n_struct..self.n_total).enumerate() {
            self.pos[s] = Pos::Basic(r);
        }
        self.binv = vec![0.0; self.m * self.m];
        for i in 0..self.m {
            self.binv[i * self.m + i] = 1.0;
        }
        self.recompute_basics();
        self.has_state = true;
    }

    /// Re-snaps nonbasic variables onto their (possibly changed) bounds and
    /// recomputes basic values through the basis inverse.
    fn refresh_state(&mut self) {
        for v in 0..self.n_total {
            match self.pos[v] {
                Pos::AtLower => {
                    self.x[v] = if self.lo[v].is_finite() { self.lo[v] } else { self.hi[v] }
                }
                Pos::AtUpper => {
                    self.x[v] = if self.hi[v].is_finite() { self.hi[v] } else { self.lo[v] }
                }
                Pos::Interior => self.x[v] = self.x[v].clamp(self.lo[v], self.hi[v]),
                Pos::Basic(_) => {}
            }
        }
        self.recompute_basics();
    }

    fn recompute_basics(&mut self) {
        // w = b - N x_N
        let mut w = self.rhs.clone();
        for v in 0..self.n_total {
            if matches!(self.pos[v], Pos::Basic(_)) {
                continue;
            }
            let xv = self.x[v];
            if xv == 0.0 {
                continue;
            }
            if v < self.n_struct {
                for &(r, coef) in &self.cols[v] {
                    w[r] -= coef * xv;
                }
            } else {
                w[v - self.n_struct] -= xv;
            }
        }
        // x_B = Binv w
        for i in 0..self.m {
            let row = &self.binv[i * self.m..(i + 1) * self.m];
            let mut acc = 0.0;
            for (j, &wj) in w.iter().enumerate() {
                acc += row[j] * wj;
            }
            self.x[self.basis[i]] = acc;
        }
    }

    /// Rebuilds the basis inverse from scratch (Gauss-Jordan with partial
    /// pivoting on the gathered basis matrix).
    fn refactor(&mut self) -> Result<(), SolveError> {
        let m = self.m;
        let mut a = vec![0.0; m * m];
        for (col, &var) in self.basis.iter().enumerate() {
            if var < self.n_struct {
                for &(row, coef) in &self.cols[var] {
                    a[row * m + col] = coef;
                }
            } else {
                a[(var - self.n_struct) * m + col] = 1.0;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for col in 0..m {
            let mut best = col;
            let mut best_abs = a[col * m + col].abs();
            for r in col + 1..m {
                let v = a[r * m + col].abs();
                if v > best_abs {
                    best_abs = v;
                    best = r;
                }
            }
            if best_abs < 1e-12 {
                return Err(SolveError::Numerical("singular basis during refactor".into()));
            }
            if best != col {
                for j in 0..m {
                    a.swap(col * m + j, best * m + j);
                    inv.swap(col * m + j, best * m + j);
                }
            }
            let piv = a[col * m + col];
            for j in 0..m {
                a[col * m + j] /= piv;
                inv[col * m + j] /= piv;
            }
            for r in 0..m {
                if r == col {
                    continue;
                }
                let f = a[r * m + col];
                if f == 0.0 {
                    continue;
                }
                for j in 0..m {
                    a[r * m + j] -= f * a[col * m + j];
                    inv[r * m + j] -= f * inv[col * m + j];
                }
            }
        }
        self.binv = inv;
        Ok(())
    }

    fn total_infeasibility(&self) -> f64 {
        self.basis
            .iter()
            .map(|&v| {
                let x = self.x[v];
                (self.lo[v] - x).max(0.0) + (x - self.hi[v]).max(0.0)
            })
            .sum()
    }

    /// Solves from a cold (all-slack) start.
    pub fn solve_from_scratch(&mut self) -> Result<LpOutcome, SolveError> {
        self.crash_start();
        self.optimize()
    }

    /// Re-optimizes from the current basis after bound changes; falls back
    /// to a cold start when no state exists yet.
    pub fn resolve(&mut self) -> Result<LpOutcome, SolveError> {
        if !self.has_state {
            return self.solve_from_scratch();
        }
        self.refresh_state();
        self.optimize()
    }

    fn optimize(&mut self) -> Result<LpOutcome, SolveError> {
        let mut pivots_here = 0u64;
        let max_pivots = 20_000 + 200 * (self.m as u64 + self.n_total as u64);
        let mut stall = 0u64;
        let mut last_measure = f64::INFINITY;
        let mut cb = vec![0.0; self.m];
        let mut y = vec![0.0; self.m];
        let mut ycol = vec![0.0; self.m];
        loop {
            if pivots_here >= max_pivots {
                return Ok(LpOutcome {
                    status: LpStatus::Stalled,
                    objective: self.objective_value(),
                    pivots: pivots_here,
                    bland_engaged: self.bland,
                });
            }
            let infeas = self.total_infeasibility();
            let phase1 = infeas > FEAS_EPS * (1.0 + self.m as f64);

            cb.iter_mut().for_each(|c| *c = 0.0);
            if phase1 {
                for (i, &v) in self.basis.iter().enumerate() {
                    let x = self.x[v];
                    if x < self.lo[v] - FEAS_EPS {
                        cb[i] = -1.0;
                    } else if x > self.hi[v] + FEAS_EPS {
                        cb[i] = 1.0;
                    }
                }
            } else {
                for (i, &v) in self.basis.iter().enumerate() {
                    if v < self.n_struct {
                        cb[i] = self.obj[v];
                    }
                }
            }

            // stall detector drives the Bland switch
            let measure = if phase1 { infeas } else { self.objective_value() };
            if measure < last_measure - 1e-12 * (1.0 + last_measure.abs()) {
                stall = 0;
            } else {
                stall += 1;
                if stall > STALL_LIMIT && !self.bland {
                    self.bland = true;
                }
            }
            last_measure = measure;

            // y = cb^T Binv
            y.iter_mut().for_each(|v| *v = 0.0);
            for (i, &c) in cb.iter().enumerate() {
                if c == 0.0 {
                    continue;
                }
                let row = &self.binv[i * self.m..(i + 1) * self.m];
                for (yj, &rj) in y.iter_mut().zip(row) {
                    *yj += c * rj;
                }
            }

            // price nonbasic columns: pick entering var and its direction
            let mut entering: Option<(usize, f64, f64)> = None;
            for v in 0..self.n_total {
                let pos = self.pos[v];
                if matches!(pos, Pos::Basic(_)) || self.lo[v] == self.hi[v] {
                    continue;
                }
                let cost = if !phase1 && v < self.n_struct { self.obj[v] } else { 0.0 };
                let mut d = cost;
                if v < self.n_struct {
                    for &(r, coef) in &self.cols[v] {
                        d -= y[r] * coef;
                    }
                } else {
                    d -= y[v - self.n_struct];
                }
                let dir = match pos {
                    Pos::AtLower if d < -COST_EPS => 1.0,
                    Pos::AtUpper if d > COST_EPS => -1.0,
                    Pos::Interior if d < -COST_EPS => 1.0,
                    Pos::Interior if d > COST_EPS => -1.0,
                    _ => continue,
                };
                if self.bland {
                    entering = Some((v, d.abs(), dir));
                    break;
                }
                match entering {
                    Some((_, best, _)) if d.abs() <= best => {}
                    _ => entering = Some((v, d.abs(), dir)),
                }
            }

            let Some((q, _, dir)) = entering else {
                if phase1 {
                    return Ok(LpOutcome {
                        status: LpStatus::Infeasible,
                        objective: f64::INFINITY,
                        pivots: pivots_here,
                        bland_engaged: self.bland,
                    });
                }
                return Ok(LpOutcome {
                    status: LpStatus::Optimal,
                    objective: self.objective_value(),
                    pivots: pivots_here,
                    bland_engaged: self.bland,
                });
            };

            // ycol = Binv a_q
            ycol.iter_mut().for_each(|v| *v = 0.0);
            if q < self.n_struct {
                for &(r, coef) in &self.cols[q] {
                    for i in 0..self.m {
                        ycol[i] += coef * self.binv[i * self.m + r];
                    }
                }
            } else {
                let r = q - self.n_struct;
                for i in 0..self.m {
                    ycol[i] = self.binv[i * self.m + r];
                }
            }

            // ratio test: entering moves t >= 0 in direction `dir`. A basic
            // blocks at the first bound it crosses MOVING TOWARD it: a
            // feasible basic at its nearer bound, an out-of-bounds basic at
            // its violated bound when heading inward. One drifting further
            // out never blocks (the pricing already accounted for its
            // growing violation in the phase-1 costs).
            let mut t_best = f64::INFINITY;
            let mut blocking: Option<(usize, f64, f64)> = None;
            for i in 0..self.m {
                let rate = -dir * ycol[i];
                if rate.abs() < PIVOT_EPS {
                    continue;
                }
                let v = self.basis[i];
                let xv = self.x[v];
                let target = if rate > 0.0 {
                    if xv < self.lo[v] - FEAS_EPS {
                        self.lo[v]
                    } else if xv <= self.hi[v] + FEAS_EPS {
                        self.hi[v]
                    } else {
                        continue; // above the upper bound, moving out
                    }
                } else if xv > self.hi[v] + FEAS_EPS {
                    self.hi[v]
                } else if xv >= self.lo[v] - FEAS_EPS {
                    self.lo[v]
                } else {
                    continue; // below the lower bound, moving out
                };
                if !target.is_finite() {
                    continue;
                }
                let t = ((target - xv) / rate).max(0.0);
                let take = match blocking {
                    None => t < f64::INFINITY,
                    Some((brow, _, bpiv)) => {
                        if t < t_best - RATIO_EPS {
                            true
                        } else if t > t_best + RATIO_EPS {
                            false
                        } else if self.bland {
                            self.basis[i] < self.basis[brow]
                        } else {
                            ycol[i].abs() > bpiv
                        }
                    }
                };
                if take {
                    t_best = t.min(t_best);
                    blocking = Some((i, target, ycol[i].abs()));
                }
            }
            let t_own = if dir > 0.0 { self.hi[q] - self.x[q] } else { self.x[q] - self.lo[q] };

            if t_own <= t_best + RATIO_EPS {
                if !t_own.is_finite() {
                    if phase1 {
                        return Err(SolveError::Numerical("phase-1 direction unbounded".into()));
                    }
                    return Ok(LpOutcome {
                        status: LpStatus::Unbounded,
                        objective: f64::NEG_INFINITY,
                        pivots: pivots_here,
                        bland_engaged: self.bland,
                    });
                }
                // bound flip, no basis change
                for i in 0..self.m {
                    let rate = -dir * ycol[i];
                    if rate != 0.0 {
                        self.x[self.basis[i]] += rate * t_own;
                    }
                }
                self.pos[q] = if dir > 0.0 { Pos::AtUpper } else { Pos::AtLower };
                self.x[q] = if dir > 0.0 { self.hi[q] } else { self.lo[q] };
                pivots_here += 1;
                self.pivots += 1;
                continue;
            }

            let Some((r, target, _)) = blocking else {
                if phase1 {
                    return Err(SolveError::Numerical("phase-1 direction unbounded".into()));
                }
                return Ok(LpOutcome {
                    status: LpStatus::Unbounded,
                    objective: f64::NEG_INFINITY,
                    pivots: pivots_here,
                    bland_engaged: self.bland,
                });
            };
            let t = t_best.max(0.0);

            for i in 0..self.m {
                let rate = -dir * ycol[i];
                if rate != 0.0 {
                    self.x[self.basis[i]] += rate * t;
                }
            }
            let entering_val = self.x[q] + dir * t;
            let leaving = self.basis[r];
            self.x[leaving] = target; // snap exactly onto the blocking bound
            self.pos[leaving] =
                if target == self.lo[leaving] { Pos::AtLower } else { Pos::AtUpper };
            self.basis[r] = q;
            self.pos[q] = Pos::Basic(r);
            self.x[q] = entering_val;

            // eta update of Binv: row r is the pivot row
            let piv = ycol[r];
            if piv.abs() < PIVOT_EPS {
                return Err(SolveError::Numerical(format!("tiny pivot {piv}")));
            }
            let (head, tail) = self.binv.split_at_mut(r * self.m);
            let (rrow, rest) = tail.split_at_mut(self.m);
            for v in rrow.iter_mut() {
                *v /= piv;
            }
            for (i, chunk) in head.chunks_exact_mut(self.m).enumerate() {
                let f = ycol[i];
                if f != 0.0 {
                    for (c, &rv) in chunk.iter_mut().zip(rrow.iter()) {
                        *c -= f * rv;
                    }
                }
            }
            for (k, chunk) in rest.chunks_exact_mut(self.m).enumerate() {
                let f = ycol[r + 1 + k];
                if f != 0.0 {
                    for (c, &rv) in chunk.iter_mut().zip(rrow.iter()) {
                        *c -= f * rv;
                    }
                }
            }

            pivots_here += 1;
            self.pivots += 1;
            if self.pivots.is_multiple_of(4096) {
                self.refactor()?;
                self.recompute_basics();
            }
        }
    }

    pub fn objective_value(&self) -> f64 {
        (0..self.n_struct).map(|v| self.obj[v] * self.x[v]).sum()
    }

    /// Verifies the current point against the instance and repairs via a
    /// refactor + re-optimization when drift is detected.
    pub fn verify_and_repair(&mut self, instance: &MilpInstance) -> Result<LpOutcome, SolveError> {
        let eval = evaluate(instance, self.values());
        if eval.max_constraint_violation <= 1e-7 && eval.max_bound_violation <= 1e-7 {
            return Ok(LpOutcome {
                status: LpStatus::Optimal,
                objective: self.objective_value(),
                pivots: 0,
                bland_engaged: self.bland,
            });
        }
        self.refactor()?;
        self.recompute_basics();
        self.optimize()
    }
}

/// Solves the LP relaxation of `instance` to optimality.
///
/// Returns an optimal basic solution or an infeasible-status solution;
/// unboundedness and numerical breakdown surface as errors.
pub fn solve_lp(instance: &MilpInstance) -> Result<MilpSolution, SolveError> {
    let start = std::time::Instant::now();
    let mut solver = SimplexSolver::new(instance)?;
    let mut outcome = solver.solve_from_scratch()?;
    if outcome.status == LpStatus::Optimal {
        let repaired = solver.verify_and_repair(instance)?;
        if repaired.status != LpStatus::Optimal {
            outcome = repaired;
        } else {
            outcome.objective = repaired.objective;
        }
    }
    let stats = SolveStats {
        simplex_pivots: solver.pivots,
        nodes: 0,
        solve_time_s: start.elapsed().as_secs_f64(),
        bland_fallback: solver.bland_engaged(),
        best_bound: outcome.objective,
        ..Default::default()
    };
    match outcome.status {
        LpStatus::Optimal => Ok(MilpSolution {
            status: SolveStatus::Optimal,
            values: solver.values().to_vec(),
            objective: outcome.objective,
            stats,
        }),
        LpStatus::Infeasible => Ok(MilpSolution::infeasible(stats)),
        LpStatus::Unbounded => Err(SolveError::Unbounded),
        LpStatus::Stalled => Err(SolveError::Numerical("pivot limit exceeded".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{LinConstraint, VarDef};

    fn c(name: &str, lo: f64, hi: f64) -> VarDef {
        VarDef::continuous(name, lo, hi)
    }

    #[test]
    fn min_x_with_floor() {
        // min x s.t. x >= 3, x in [0, 10]
        let mut m = MilpInstance::new();
        let x = m.add_variable(c("x", 0.0, 10.0)).unwrap();
        m.add_constraint(LinConstraint::new("floor", vec![(x, 1.0)], Sense::Ge, 3.0)).unwrap();
        m.set_objective(vec![(x, 1.0)]).unwrap();
        let sol = solve_lp(&m).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.value(x) - 3.0).abs() < 1e-9);
        assert!((sol.objective - 3.0).abs() < 1e-9);
    }

    #[test]
    fn maximization_through_negated_costs() {
        // min -x - 2y s.t. x + y <= 4, x - y >= -2, x,y in [0, 3]
        let mut m = MilpInstance::new();
        let x = m.add_variable(c("x", 0.0, 3.0)).unwrap();
        let y = m.add_variable(c("y", 0.0, 3.0)).unwrap();
        m.add_constraint(LinConstraint::new("c1", vec![(x, 1.0), (y, 1.0)], Sense::Le, 4.0))
            .unwrap();
        m.add_constraint(LinConstraint::new("c2", vec![(x, 1.0), (y, -1.0)], Sense::Ge, -2.0))
            .unwrap();
        m.set_objective(vec![(x, -1.0), (y, -2.0)]).unwrap();
        let sol = solve_lp(&m).unwrap();
        // optimum at x = 1, y = 3
        assert!((sol.value(x) - 1.0).abs() < 1e-9, "{:?}", sol.values);
        assert!((sol.value(y) - 3.0).abs() < 1e-9);
        assert!((sol.objective + 7.0).abs() < 1e-9);
    }

    #[test]
    fn equality_rows_and_negative_bounds() {
        // min 2a + b s.t. a + b = 1, a - b = -3 => a = -1, b = 2
        let mut m = MilpInstance::new();
        let a = m.add_variable(c("a", -5.0, 5.0)).unwrap();
        let b = m.add_variable(c("b", -5.0, 5.0)).unwrap();
        m.add_constraint(LinConstraint::new("e1", vec![(a, 1.0), (b, 1.0)], Sense::Eq, 1.0))
            .unwrap();
        m.add_constraint(LinConstraint::new("e2", vec![(a, 1.0), (b, -1.0)], Sense::Eq, -3.0))
            .unwrap();
        m.set_objective(vec![(a, 2.0), (b, 1.0)]).unwrap();
        let sol = solve_lp(&m).unwrap();
        assert!((sol.value(a) + 1.0).abs() < 1e-9);
        assert!((sol.value(b) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_detected() {
        let mut m = MilpInstance::new();
        let x = m.add_variable(c("x", 0.0, 1.0)).unwrap();
        m.add_constraint(LinConstraint::new("hi", vec![(x, 1.0)], Sense::Ge, 2.0)).unwrap();
        m.set_objective(vec![(x, 1.0)]).unwrap();
        let sol = solve_lp(&m).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
    }

    #[test]
    fn unbounded_detected() {
        let mut m = MilpInstance::new();
        let x = m.add_variable(c("x", 0.0, f64::INFINITY)).unwrap();
        m.add_constraint(LinConstraint::new("lo", vec![(x, 1.0)], Sense::Ge, 1.0)).unwrap();
        m.set_objective(vec![(x, -1.0)]).unwrap();
        assert!(matches!(solve_lp(&m), Err(SolveError::Unbounded)));
    }

    #[test]
    fn free_variable_handled() {
        let mut m = MilpInstance::new();
        let x = m.add_variable(c("x", f64::NEG_INFINITY, f64::INFINITY)).unwrap();
        let y = m.add_variable(c("y", 0.0, 1.0)).unwrap();
        m.add_constraint(LinConstraint::new("c", vec![(x, 1.0), (y, 1.0)], Sense::Ge, 2.0))
            .unwrap();
        m.set_objective(vec![(x, 1.0), (y, 1.0)]).unwrap();
        let sol = solve_lp(&m).unwrap();
        assert!((sol.objective - 2.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_redundant_equalities_no_cycling() {
        let mut m = MilpInstance::new();
        let x = m.add_variable(c("x", 0.0, 10.0)).unwrap();
        let y = m.add_variable(c("y", 0.0, 10.0)).unwrap();
        let z = m.add_variable(c("z", 0.0, 10.0)).unwrap();
        for i in 0..3 {
            m.add_constraint(LinConstraint::new(
                format!("dup{i}"),
                vec![(x, 1.0), (y, 1.0), (z, 1.0)],
                Sense::Eq,
                6.0,
            ))
            .unwrap();
        }
        m.add_constraint(LinConstraint::new(
            "red",
            vec![(x, 2.0), (y, 2.0), (z, 2.0)],
            Sense::Le,
            12.0,
        ))
        .unwrap();
        m.add_constraint(LinConstraint::new("mix", vec![(x, 1.0), (y, -1.0)], Sense::Le, 0.0))
            .unwrap();
        m.set_objective(vec![(x, 1.0), (y, 2.0), (z, 3.0)]).unwrap();
        let sol = solve_lp(&m).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        // hand solution: z = 0; minimize x + 2y with x + y = 6, x <= y => x = y = 3
        assert!((sol.objective - 9.0).abs() < 1e-9, "{}", sol.objective);
    }

    #[test]
    fn beale_stalling_instance_terminates() {
        // classic degenerate instance; optimum -0.05 at x1 = 0.04, x3 = 1
        // (derivable by hand: bind the second row, keep x2 = x4 = 0)
        let mut m = MilpInstance::new();
        let x1 = m.add_variable(c("x1", 0.0, f64::INFINITY)).unwrap();
        let x2 = m.add_variable(c("x2", 0.0, f64::INFINITY)).unwrap();
        let x3 = m.add_variable(c("x3", 0.0, f64::INFINITY)).unwrap();
        let x4 = m.add_variable(c("x4", 0.0, f64::INFINITY)).unwrap();
        m.add_constraint(LinConstraint::new(
            "r1",
            vec![(x1, 0.25), (x2, -60.0), (x3, -1.0 / 25.0), (x4, 9.0)],
            Sense::Le,
            0.0,
        ))
        .unwrap();
        m.add_constraint(LinConstraint::new(
            "r2",
            vec![(x1, 0.5), (x2, -90.0), (x3, -1.0 / 50.0), (x4, 3.0)],
            Sense::Le,
            0.0,
        ))
        .unwrap();
        m.add_constraint(LinConstraint::new("r3", vec![(x3, 1.0)], Sense::Le, 1.0)).unwrap();
        m.set_objective(vec![(x1, -0.75), (x2, 150.0), (x3, -0.02), (x4, 6.0)]).unwrap();
        let sol = solve_lp(&m).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.objective + 0.05).abs() < 1e-9, "{}", sol.objective);
    }

    #[test]
    fn fixed_variables_respected() {
        let mut m = MilpInstance::new();
        let x = m.add_variable(c("x", 2.0, 2.0)).unwrap();
        let y = m.add_variable(c("y", 0.0, 10.0)).unwrap();
        m.add_constraint(LinConstraint::new("c", vec![(x, 1.0), (y, 1.0)], Sense::Ge, 5.0))
            .unwrap();
        m.set_objective(vec![(y, 1.0)]).unwrap();
        let sol = solve_lp(&m).unwrap();
        assert!((sol.value(x) - 2.0).abs() < 1e-12);
        assert!((sol.value(y) - 3.0).abs() < 1e-9);
    }

    #[test]
    fn warm_resolve_after_bound_change() {
        let mut m = MilpInstance::new();
        let x = m.add_variable(c("x", 0.0, 4.0)).unwrap();
        let y = m.add_variable(c("y", 0.0, 4.0)).unwrap();
        m.add_constraint(LinConstraint::new("c", vec![(x, 1.0), (y, 1.0)], Sense::Ge, 4.0))
            .unwrap();
        m.set_objective(vec![(x, 1.0), (y, 3.0)]).unwrap();
        let mut solver = SimplexSolver::new(&m).unwrap();
        let out = solver.solve_from_scratch().unwrap();
        assert!((out.objective - 4.0).abs() < 1e-9); // x = 4
        solver.set_var_bounds(x.0, 0.0, 1.0);
        let out = solver.resolve().unwrap();
        assert!((out.objective - 10.0).abs() < 1e-9); // x = 1, y = 3
        solver.reset_var_bounds(x.0);
        let out = solver.resolve().unwrap();
        assert!((out.objective - 4.0).abs() < 1e-9);
    }

    #[test]
    fn negative_upper_bound_variables() {
        // vars confined strictly negative: crash must start at a bound
        let mut m = MilpInstance::new();
        let x = m.add_variable(c("x", -8.0, -2.0)).unwrap();
        m.add_constraint(LinConstraint::new("c", vec![(x, -1.0)], Sense::Le, 5.0)).unwrap();
        m.set_objective(vec![(x, 1.0)]).unwrap();
        let sol = solve_lp(&m).unwrap();
        assert!((sol.value(x) + 5.0).abs() < 1e-9, "{:?}", sol.values); // -x <= 5 => x >= -5
    }
}
