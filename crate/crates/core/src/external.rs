//! External MILP solving over LP-file exchange.
//!
//! Contract: `<command> <lp-file> <solution-file>`, exit code 0 = solved
//! (solution file in `var value` format), 2 = infeasible. Returned points
//! are re-checked against the instance before acceptance.

use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use thiserror::Error;

use crate::milp::{
    evaluate, read_solution_file, write_lp_file, MilpInstance, MilpSolution, SolveStats,
    SolveStatus, FEAS_TOL,
};

#[derive(Debug, Error)]
pub enum ExternalError {
    #[error("empty solver command")]
    EmptyCommand,
    #[error("failed to run {command:?}: {source}")]
    Spawn {
        command: String,
        #[source]
        source: std::io::Error,
    },
    #[error("solver exited with code {code:?}; stderr:\n{stderr}")]
    BadExit { code: Option<i32>, stderr: String },
    #[error("solution rejected: {reason} (objective {objective}, max violation {violation:.3e})")]
    Rejected { reason: String, objective: f64, violation: f64 },
    #[error("file exchange: {0}")]
    Milp(#[from] crate::milp::MilpError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// Solves `instance` by invoking `solver_command` on an LP file.
///
/// The command string may carry leading arguments (`"mysolve --fast"`); the
/// LP path and the solution path are appended.
pub fn solve_external(
    instance: &MilpInstance,
    solver_command: &str,
) -> Result<MilpSolution, ExternalError> {
    let start = Instant::now();
    let mut parts = solver_command.split_whitespace();
    let program = parts.next().ok_or(ExternalError::EmptyCommand)?;
    let args: Vec<&str> = parts.collect();

    let dir = tempfile::tempdir()?;
    let lp_path: PathBuf = dir.path().join("instance.lp");
    let sol_path: PathBuf = dir.path().join("solution.txt");
    write_lp_file(instance, &lp_path)?;

    let output = Command::new(program)
        .args(&args)
        .arg(&lp_path)
        .arg(&sol_path)
        .output()
        .map_err(|e| ExternalError::Spawn { command: solver_command.to_string(), source: e })?;

    let stats = |sol_time: f64| SolveStats { solve_time_s: sol_time, ..Default::default() };
    match output.status.code() {
        Some(0) => {
            let mut solution = read_solution_file(&sol_path, instance)?;
            let eval = evaluate(instance, &solution.values);
            if !eval.is_feasible(FEAS_TOL) {
                return Err(ExternalError::Rejected {
                    reason: "solution violates constraints, bounds or integrality".into(),
                    objective: eval.objective,
                    violation: eval
                        .max_constraint_violation
                        .max(eval.max_bound_violation)
                        .max(eval.max_integrality_violation),
                });
            }
            solution.status = SolveStatus::Optimal;
            solution.objective = eval.objective;
            solution.stats = stats(start.elapsed().as_secs_f64());
            Ok(solution)
        }
        Some(2) => Ok(MilpSolution::infeasible(stats(start.elapsed().as_secs_f64()))),
        code => Err(ExternalError::BadExit {
            code,
            stderr: String::from_utf8_lossy(&output.stderr).into_owned(),
        }),
    }
}
