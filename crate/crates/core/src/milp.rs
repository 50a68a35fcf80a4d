//! Solver-agnostic sparse MILP representation: variables, linear
//! constraints, objective (minimize), plus LP-format file exchange and a
//! solution container.

use std::collections::BTreeMap;

use thiserror::Error;

pub mod lp_file;

pub use lp_file::{read_lp_file, read_solution_file, write_lp_file, write_solution_file};

/// Relative feasibility tolerance used everywhere a solution is checked.
pub const FEAS_TOL: f64 = 1e-6;
/// Integrality tolerance for binary variables.
pub const INT_TOL: f64 = 1e-6;

/// Dense handle of a variable within one instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

/// Variable definition: kind, bounds and a human-readable name.
#[derive(Debug, Clone)]
pub struct VarDef {
    pub name: String,
    pub kind: VarKind,
    pub lo: f64,
    pub hi: f64,
}

impl VarDef {
    pub fn continuous(name: impl Into<String>, lo: f64, hi: f64) -> Self {
        Self { name: name.into(), kind: VarKind::Continuous, lo, hi }
    }

    pub fn binary(name: impl Into<String>) -> Self {
        Self { name: name.into(), kind: VarKind::Binary, lo: 0.0, hi: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

/// Sparse linear constraint `sum coef * var  sense  rhs`.
#[derive(Debug, Clone)]
pub struct LinConstraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl LinConstraint {
    pub fn new(name: impl Into<String>, terms: Vec<(VarId, f64)>, sense: Sense, rhs: f64) -> Self {
        Self { name: name.into(), terms, sense, rhs }
    }
}

#[derive(Debug, Error)]
pub enum MilpError {
    #[error("duplicate variable name {0:?}")]
    DuplicateName(String),
    #[error("unknown variable id {0:?} in {1}")]
    UnknownVar(VarId, String),
    #[error("duplicate variable {0:?} within constraint {1:?}")]
    DuplicateTerm(VarId, String),
    #[error("invalid bounds [{lo}, {hi}] for {name:?}")]
    InvalidBounds { name: String, lo: f64, hi: f64 },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{path}:{line}: {message}")]
    Malformed { path: String, line: usize, message: String },
    #[error("unknown variable name {0:?} in solution file")]
    UnknownName(String),
}

/// A mixed-integer linear program, built incrementally.
#[derive(Debug, Clone, Default)]
pub struct MilpInstance {
    pub vars: Vec<VarDef>,
    pub constraints: Vec<LinConstraint>,
    /// Sparse minimize objective.
    pub objective: Vec<(VarId, f64)>,
    names: BTreeMap<String, VarId>,
}

impl MilpInstance {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn num_binaries(&self) -> usize {
        self.vars.iter().filter(|v| v.kind == VarKind::Binary).count()
    }

    pub fn add_variable(&mut self, def: VarDef) -> Result<VarId, MilpError> {
        if def.lo > def.hi {
            return Err(MilpError::InvalidBounds { name: def.name, lo: def.lo, hi: def.hi });
        }
        if def.kind == VarKind::Binary && (def.lo < 0.0 || def.hi > 1.0) {
            return Err(MilpError::InvalidBounds { name: def.name, lo: def.lo, hi: def.hi });
        }
        if self.names.contains_key(&def.name) {
            return Err(MilpError::DuplicateName(def.name));
        }
        let id = VarId(self.vars.len());
        self.names.insert(def.name.clone(), id);
        self.vars.push(def);
        Ok(id)
    }

    pub fn add_constraint(&mut self, c: LinConstraint) -> Result<(), MilpError> {
        let mut seen = BTreeMap::new();
        for (v, _) in &c.terms {
            if v.0 >= self.vars.len() {
                return Err(MilpError::UnknownVar(*v, format!("constraint {:?}", c.name)));
            }
            if seen.insert(*v, ()).is_some() {
                return Err(MilpError::DuplicateTerm(*v, c.name));
            }
        }
        self.constraints.push(c);
        Ok(())
    }

    pub fn set_objective(&mut self, expr: Vec<(VarId, f64)>) -> Result<(), MilpError> {
        for (v, _) in &expr {
            if v.0 >= self.vars.len() {
                return Err(MilpError::UnknownVar(*v, "objective".into()));
            }
        }
        self.objective = expr;
        Ok(())
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.names.get(name).copied()
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.iter().map(|(v, c)| c * values[v.0]).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    /// Node or time limit hit; values hold the best incumbent if any.
    LimitReached,
}

/// Solver statistics attached to every solution.
#[derive(Debug, Clone, Default)]
pub struct SolveStats {
    pub simplex_pivots: u64,
    pub nodes: u64,
    pub solve_time_s: f64,
    /// Whether the anti-cycling fallback pivot rule engaged.
    pub bland_fallback: bool,
    pub best_bound: f64,
    /// Global best bound after each processed node (diagnostic).
    pub bound_history: Vec<f64>,
    /// Incumbent objective after each processed node (diagnostic).
    pub incumbent_history: Vec<f64>,
}

/// Result of solving a [`MilpInstance`].
#[derive(Debug, Clone)]
pub struct MilpSolution {
    pub status: SolveStatus,
    /// One value per variable; meaningful when status is not Infeasible.
    pub values: Vec<f64>,
    pub objective: f64,
    pub stats: SolveStats,
}

impl MilpSolution {
    pub fn infeasible(stats: SolveStats) -> Self {
        Self { status: SolveStatus::Infeasible, values: Vec::new(), objective: f64::INFINITY, stats }
    }

    pub fn value(&self, v: VarId) -> f64 {
        self.values[v.0]
    }
}

/// Independent recomputation of objective and worst violations.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub objective: f64,
    /// max over constraints of violation / (1 + |rhs|).
    pub max_constraint_violation: f64,
    pub max_bound_violation: f64,
    /// max over binaries of distance to the nearest of {0, 1}.
    pub max_integrality_violation: f64,
}

impl Evaluation {
    pub fn is_feasible(&self, tol: f64) -> bool {
        self.max_constraint_violation <= tol
            && self.max_bound_violation <= tol
            && self.max_integrality_violation <= tol
    }
}

/// Recomputes the objective and the maximum constraint/bound/integrality
/// violation of `values` against `instance`.
pub fn evaluate(instance: &MilpInstance, values: &[f64]) -> Evaluation {
    assert_eq!(values.len(), instance.num_vars(), "value vector length");
    let mut max_c = 0.0f64;
    for c in &instance.constraints {
        let lhs: f64 = c.terms.iter().map(|(v, coef)| coef * values[v.0]).sum();
        let raw = match c.sense {
            Sense::Le => lhs - c.rhs,
            Sense::Ge => c.rhs - lhs,
            Sense::Eq => (lhs - c.rhs).abs(),
        };
        max_c = max_c.max(raw / (1.0 + c.rhs.abs()));
    }
    let mut max_b = 0.0f64;
    let mut max_i = 0.0f64;
    for (def, &v) in instance.vars.iter().zip(values) {
        max_b = max_b.max((def.lo - v).max(v - def.hi) / (1.0 + def.lo.abs().max(def.hi.abs())));
        if def.kind == VarKind::Binary {
            max_i = max_i.max((v - v.round()).abs());
        }
    }
    Evaluation {
        objective: instance.objective_value(values),
        max_constraint_violation: max_c,
        max_bound_violation: max_b,
        max_integrality_violation: max_i,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_binary_and_counts() {
        let mut m = MilpInstance::new();
        let x = m.add_variable(VarDef::binary("x")).unwrap();
        let y = m.add_variable(VarDef::continuous("y", 0.0, 10.0)).unwrap();
        let z = m.add_variable(VarDef::continuous("z", -1.0, 1.0)).unwrap();
        m.add_constraint(LinConstraint::new("c0", vec![(x, 1.0), (y, 1.0)], Sense::Le, 5.0))
            .unwrap();
        m.add_constraint(LinConstraint::new("c1", vec![(z, 2.0)], Sense::Ge, -1.0)).unwrap();
        assert_eq!(m.num_vars(), 3);
        assert_eq!(m.num_constraints(), 2);
        assert_eq!(m.num_binaries(), 1);
    }

    #[test]
    fn duplicate_name_rejected() {
        let mut m = MilpInstance::new();
        m.add_variable(VarDef::binary("x")).unwrap();
        assert!(matches!(m.add_variable(VarDef::binary("x")), Err(MilpError::DuplicateName(_))));
    }

    #[test]
    fn unknown_var_in_constraint_rejected() {
        let mut m = MilpInstance::new();
        m.add_variable(VarDef::binary("x")).unwrap();
        let bogus = VarId(7);
        let err = m.add_constraint(LinConstraint::new("c", vec![(bogus, 1.0)], Sense::Eq, 0.0));
        assert!(matches!(err, Err(MilpError::UnknownVar(VarId(7), _))));
    }

    #[test]
    fn duplicate_term_rejected() {
        let mut m = MilpInstance::new();
        let x = m.add_variable(VarDef::binary("x")).unwrap();
        let err =
            m.add_constraint(LinConstraint::new("c", vec![(x, 1.0), (x, 2.0)], Sense::Le, 1.0));
        assert!(matches!(err, Err(MilpError::DuplicateTerm(_, _))));
    }

    #[test]
    fn binary_bounds_enforced() {
        let mut m = MilpInstance::new();
        let def = VarDef { name: "b".into(), kind: VarKind::Binary, lo: -0.5, hi: 1.0 };
        assert!(matches!(m.add_variable(def), Err(MilpError::InvalidBounds { .. })));
    }

    #[test]
    fn evaluate_reports_violations() {
        let mut m = MilpInstance::new();
        let x = m.add_variable(VarDef::continuous("x", 0.0, 1.0)).unwrap();
        let b = m.add_variable(VarDef::binary("b")).unwrap();
        m.add_constraint(LinConstraint::new("c", vec![(x, 1.0), (b, 1.0)], Sense::Le, 1.0))
            .unwrap();
        m.set_objective(vec![(x, 2.0)]).unwrap();
        let eval = evaluate(&m, &[1.5, 0.5]);
        assert_eq!(eval.objective, 3.0);
        assert!(eval.max_constraint_violation > 0.0);
        assert!(eval.max_bound_violation > 0.0);
        assert_eq!(eval.max_integrality_violation, 0.5);
        let ok = evaluate(&m, &[0.5, 0.0]);
        assert!(ok.is_feasible(1e-9));
    }
}
