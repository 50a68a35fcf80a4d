//! CPLEX-LP-format writing (and a reader for the emitted subset), plus the
//! `name value` solution-file format. Section ordering and numeral rules
//! are documented in `docs/lp-format.md`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{
    LinConstraint, MilpError, MilpInstance, MilpSolution, Sense, SolveStats, SolveStatus, VarDef,
    VarId, VarKind,
};

/// Characters allowed in emitted names; anything else becomes '_'.
fn sanitize_name(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for ch in raw.chars() {
        match ch {
            'A'..='Z' | 'a'..='z' | '0'..='9' | '_' | '(' | ')' | '[' | ']' | ',' | '=' => {
                out.push(ch)
            }
            _ => out.push('_'),
        }
    }
    if !out.chars().next().is_some_and(|c| c.is_ascii_alphabetic()) {
        out.insert_str(0, "v_");
    }
    out
}

/// Sanitized, uniquified variable names in id order.
fn emitted_names(instance: &MilpInstance) -> Vec<String> {
    let mut seen = std::collections::BTreeMap::new();
    let mut names = Vec::with_capacity(instance.vars.len());
    for def in &instance.vars {
        let mut name = sanitize_name(&def.name);
        if let Some(n) = seen.get(&name).copied() {
            seen.insert(name.clone(), n + 1);
            name = format!("{name}_{n}");
        }
        seen.entry(name.clone()).or_insert(1usize);
        names.push(name);
    }
    names
}

fn fmt_num(v: f64) -> String {
    // 13 significant digits, exponent form; round-trips every coefficient
    // the builders produce
    format!("{v:.12e}")
}

fn push_terms(out: &mut String, terms: &[(VarId, f64)], names: &[String]) {
    let mut first = true;
    for (v, c) in terms {
        if *c == 0.0 {
            continue;
        }
        if first {
            if *c < 0.0 {
                out.push_str("- ");
            }
            first = false;
        } else if *c < 0.0 {
            out.push_str(" - ");
        } else {
            out.push_str(" + ");
        }
        let _ = write!(out, "{} {}", fmt_num(c.abs()), names[v.0]);
    }
    if first {
        // a termless row still needs a token to stay parseable
        out.push('0');
    }
}

/// Renders the instance in CPLEX LP format.
pub fn lp_to_string(instance: &MilpInstance) -> String {
    let names = emitted_names(instance);
    let mut out = String::new();
    out.push_str("Minimize\n obj: ");
    push_terms(&mut out, &instance.objective, &names);
    out.push_str("\nSubject To\n");
    let mut cnames = std::collections::BTreeMap::new();
    for (i, c) in instance.constraints.iter().enumerate() {
        let mut cname = sanitize_name(&c.name);
        if cnames.insert(cname.clone(), ()).is_some() {
            cname = format!("{cname}_{i}");
        }
        let _ = write!(out, " {cname}: ");
        push_terms(&mut out, &c.terms, &names);
        let sense = match c.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        let _ = writeln!(out, " {sense} {}", fmt_num(c.rhs));
    }
    out.push_str("Bounds\n");
    for (def, name) in instance.vars.iter().zip(&names) {
        if def.lo == def.hi {
            let _ = writeln!(out, " {name} = {}", fmt_num(def.lo));
        } else if def.lo == f64::NEG_INFINITY && def.hi == f64::INFINITY {
            let _ = writeln!(out, " {name} free");
        } else if def.hi == f64::INFINITY {
            let _ = writeln!(out, " {name} >= {}", fmt_num(def.lo));
        } else if def.lo == f64::NEG_INFINITY {
            let _ = writeln!(out, " {name} <= {}", fmt_num(def.hi));
        } else {
            let _ = writeln!(out, " {} <= {name} <= {}", fmt_num(def.lo), fmt_num(def.hi));
        }
    }
    out.push_str("Binaries\n");
    for (def, name) in instance.vars.iter().zip(&names) {
        if def.kind == VarKind::Binary {
            let _ = writeln!(out, " {name}");
        }
    }
    out.push_str("End\n");
    out
}

/// Writes the instance to `path` in CPLEX LP format with deterministic
/// ordering.
pub fn write_lp_file(instance: &MilpInstance, path: &Path) -> Result<(), MilpError> {
    fs::write(path, lp_to_string(instance))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Preamble,
    Objective,
    Constraints,
    Bounds,
    Binaries,
    Done,
}

/// Parses the LP subset this module emits (used for round-trip checks and
/// to let the binary act as an external solver).
pub fn read_lp_file(path: &Path) -> Result<MilpInstance, MilpError> {
    let text = fs::read_to_string(path)?;
    parse_lp(&text, &path.display().to_string())
}

pub fn parse_lp(text: &str, origin: &str) -> Result<MilpInstance, MilpError> {
    let err = |line: usize, message: String| MilpError::Malformed {
        path: origin.to_string(),
        line: line + 1,
        message,
    };

    // First pass: collect section bodies with line numbers.
    let mut section = Section::Preamble;
    let mut objective_text: Vec<(usize, String)> = Vec::new();
    let mut constraint_text: Vec<(usize, String)> = Vec::new();
    let mut bounds_text: Vec<(usize, String)> = Vec::new();
    let mut binary_names: Vec<String> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('\\').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let lower = line.to_ascii_lowercase();
        section = match lower.as_str() {
            "minimize" | "minimise" | "min" => Section::Objective,
            "subject to" | "st" | "s.t." | "such that" => Section::Constraints,
            "bounds" => Section::Bounds,
            "binaries" | "binary" | "bin" => Section::Binaries,
            "end" => Section::Done,
            "maximize" | "maximise" | "max" => {
                return Err(err(i, "only minimization is supported".into()))
            }
            _ => {
                match section {
                    Section::Preamble => return Err(err(i, format!("unexpected text {line:?}"))),
                    Section::Objective => objective_text.push((i, line.to_string())),
                    Section::Constraints => constraint_text.push((i, line.to_string())),
                    Section::Bounds => bounds_text.push((i, line.to_string())),
                    Section::Binaries => {
                        binary_names.extend(line.split_whitespace().map(String::from))
                    }
                    Section::Done => return Err(err(i, "content after End".into())),
                }
                section
            }
        };
    }

    // Terms appear before bounds; collect names in first-seen order.
    let mut instance = MilpInstance::new();
    let mut ensure_var = |instance: &mut MilpInstance, name: &str| -> VarId {
        match instance.var_by_name(name) {
            Some(v) => v,
            None => instance
                .add_variable(VarDef::continuous(name, f64::NEG_INFINITY, f64::INFINITY))
                .expect("fresh name"),
        }
    };

    // objective: optional "obj:" label then terms
    let obj_joined: Vec<(usize, String)> = objective_text;
    let mut obj_terms = Vec::new();
    {
        let mut body = String::new();
        let mut line_no = 0;
        for (i, l) in &obj_joined {
            line_no = *i;
            body.push(' ');
            body.push_str(l);
        }
        let body = match body.find(':') {
            Some(pos) => body[pos + 1..].to_string(),
            None => body,
        };
        if !body.trim().is_empty() {
            let toks: Vec<&str> = body.split_whitespace().collect();
            obj_terms = parse_terms(&toks, &mut instance, &mut ensure_var)
                .map_err(|m| err(line_no, m))?;
        }
    }

    // constraints: "name:" then terms, sense, rhs — may span lines until a
    // sense token shows up
    let mut pending: Vec<(usize, String)> = Vec::new();
    let mut parsed_constraints: Vec<LinConstraint> = Vec::new();
    let flush = |pending: &mut Vec<(usize, String)>,
                 instance: &mut MilpInstance,
                 ensure_var: &mut dyn FnMut(&mut MilpInstance, &str) -> VarId,
                 parsed: &mut Vec<LinConstraint>|
     -> Result<(), (usize, String)> {
        if pending.is_empty() {
            return Ok(());
        }
        let line_no = pending[0].0;
        let body: String =
            pending.drain(..).map(|(_, l)| l).collect::<Vec<_>>().join(" ");
        let (name, rest) = match body.find(':') {
            Some(pos) => (body[..pos].trim().to_string(), body[pos + 1..].to_string()),
            None => (format!("c{}", parsed.len()), body),
        };
        let toks: Vec<&str> = rest.split_whitespace().collect();
        let (sense, pos) = find_sense(&toks).ok_or((line_no, "missing sense".to_string()))?;
        if pos + 1 != toks.len() - 1 {
            return Err((line_no, "expected a single rhs value after the sense".to_string()));
        }
        let rhs_text = toks[toks.len() - 1];
        let rhs: f64 =
            rhs_text.parse().map_err(|_| (line_no, format!("bad rhs {rhs_text:?}")))?;
        let terms =
            parse_terms(&toks[..pos], instance, ensure_var).map_err(|m| (line_no, m))?;
        parsed.push(LinConstraint::new(name, terms, sense, rhs));
        Ok(())
    };
    for (i, line) in constraint_text {
        let toks: Vec<&str> = line.split_whitespace().collect();
        let has_sense = find_sense(&toks).is_some();
        pending.push((i, line));
        if has_sense {
            flush(&mut pending, &mut instance, &mut ensure_var, &mut parsed_constraints)
                .map_err(|(l, m)| err(l, m))?;
        }
    }
    if !pending.is_empty() {
        let l = pending[0].0;
        return Err(err(l, "constraint without sense/rhs".into()));
    }

    // bounds
    let mut bounded = std::collections::BTreeSet::new();
    for (i, line) in bounds_text {
        let v = parse_bound(&line, &mut instance, &mut ensure_var).map_err(|m| err(i, m))?;
        bounded.insert(v.0);
    }

    for name in binary_names {
        let v = ensure_var(&mut instance, &name);
        bounded.insert(v.0);
        let def = &mut instance.vars[v.0];
        def.kind = VarKind::Binary;
        if def.lo == f64::NEG_INFINITY {
            def.lo = 0.0;
        }
        if def.hi == f64::INFINITY {
            def.hi = 1.0;
        }
    }

    // LP convention: variables absent from Bounds default to [0, +inf)
    for (i, def) in instance.vars.iter_mut().enumerate() {
        if !bounded.contains(&i) {
            def.lo = 0.0;
        }
    }

    for c in parsed_constraints {
        instance.add_constraint(c)?;
    }
    instance.set_objective(obj_terms)?;
    Ok(instance)
}

/// Finds a standalone sense token (never part of a variable name, since
/// emitted names keep `=` unspaced as in `x[k=0,e=1]`).
fn find_sense(toks: &[&str]) -> Option<(Sense, usize)> {
    for (i, tok) in toks.iter().enumerate() {
        let sense = match *tok {
            "<=" | "<" | "=<" => Sense::Le,
            ">=" | ">" | "=>" => Sense::Ge,
            "=" => Sense::Eq,
            _ => continue,
        };
        return Some((sense, i));
    }
    None
}

fn parse_terms(
    toks: &[&str],
    instance: &mut MilpInstance,
    ensure_var: &mut dyn FnMut(&mut MilpInstance, &str) -> VarId,
) -> Result<Vec<(VarId, f64)>, String> {
    let mut terms: Vec<(VarId, f64)> = Vec::new();
    let mut sign = 1.0;
    let mut coef: Option<f64> = None;
    for tok in toks.iter().copied() {
        match tok {
            "+" => {}
            "-" => sign = -sign,
            _ => {
                if let Ok(v) = tok.parse::<f64>() {
                    if coef.is_some() {
                        return Err(format!("two numbers in a row near {tok:?}"));
                    }
                    coef = Some(v);
                } else {
                    let id = ensure_var(instance, tok);
                    let c = sign * coef.take().unwrap_or(1.0);
                    match terms.iter_mut().find(|(v, _)| *v == id) {
                        Some((_, existing)) => *existing += c,
                        None => terms.push((id, c)),
                    }
                    sign = 1.0;
                }
            }
        }
    }
    if let Some(c) = coef {
        if c != 0.0 {
            return Err(format!("dangling coefficient {c}"));
        }
    }
    Ok(terms)
}

fn parse_bound(
    line: &str,
    instance: &mut MilpInstance,
    ensure_var: &mut dyn FnMut(&mut MilpInstance, &str) -> VarId,
) -> Result<VarId, String> {
    let toks: Vec<&str> = line.split_whitespace().collect();
    let num = |t: &str| -> Result<f64, String> {
        match t {
            "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
            "+inf" | "inf" | "+infinity" | "infinity" => Ok(f64::INFINITY),
            _ => t.parse().map_err(|_| format!("bad number {t:?}")),
        }
    };
    let v = match toks.as_slice() {
        [name, "free"] => {
            let v = ensure_var(instance, name);
            instance.vars[v.0].lo = f64::NEG_INFINITY;
            instance.vars[v.0].hi = f64::INFINITY;
            v
        }
        [name, "=", value] => {
            let v = ensure_var(instance, name);
            let value = num(value)?;
            instance.vars[v.0].lo = value;
            instance.vars[v.0].hi = value;
            v
        }
        [name, "<=", hi] => {
            let v = ensure_var(instance, name);
            instance.vars[v.0].hi = num(hi)?;
            instance.vars[v.0].lo = 0.0;
            v
        }
        [name, ">=", lo] => {
            let v = ensure_var(instance, name);
            instance.vars[v.0].lo = num(lo)?;
            v
        }
        [lo, "<=", name, "<=", hi] => {
            let v = ensure_var(instance, name);
            instance.vars[v.0].lo = num(lo)?;
            instance.vars[v.0].hi = num(hi)?;
            v
        }
        _ => return Err(format!("unrecognized bound line {line:?}")),
    };
    Ok(v)
}

/// Writes a solution in the `var value` line format.
pub fn write_solution_file(
    instance: &MilpInstance,
    solution: &MilpSolution,
    path: &Path,
) -> Result<(), MilpError> {
    let names = emitted_names(instance);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# status {}",
        match solution.status {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::LimitReached => "limit-reached",
        }
    );
    let _ = writeln!(out, "# objective {}", fmt_num(solution.objective));
    if solution.status != SolveStatus::Infeasible {
        for (name, v) in names.iter().zip(&solution.values) {
            let _ = writeln!(out, "{name} {}", fmt_num(*v));
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads a `var value` solution file against `instance`.
///
/// Variables missing from the file default to 0; unknown names and
/// malformed lines are errors. The returned status is `Optimal` as a
/// placeholder — callers that obtained the file from an external process
/// must set the status from the exit code and re-check feasibility.
pub fn read_solution_file(path: &Path, instance: &MilpInstance) -> Result<MilpSolution, MilpError> {
    let text = fs::read_to_string(path)?;
    let names = emitted_names(instance);
    let lookup: std::collections::BTreeMap<&str, usize> =
        names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let mut values = vec![0.0; instance.num_vars()];
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(name), Some(value), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(MilpError::Malformed {
                path: path.display().to_string(),
                line: i + 1,
                message: format!("expected `var value`, got {line:?}"),
            });
        };
        let idx = *lookup.get(name).ok_or_else(|| MilpError::UnknownName(name.to_string()))?;
        values[idx] = value.parse().map_err(|_| MilpError::Malformed {
            path: path.display().to_string(),
            line: i + 1,
            message: format!("bad value {value:?}"),
        })?;
    }
    let objective = instance.objective_value(&values);
    Ok(MilpSolution {
        status: SolveStatus::Optimal,
        values,
        objective,
        stats: SolveStats::default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::evaluate;

    fn sample_instance() -> MilpInstance {
        let mut m = MilpInstance::new();
        let x = m.add_variable(VarDef::binary("x[k=0,e=1]")).unwrap();
        let y = m.add_variable(VarDef::continuous("P b(AL FA)", 0.0, 250.0)).unwrap();
        let z = m.add_variable(VarDef::continuous("E", f64::NEG_INFINITY, f64::INFINITY)).unwrap();
        m.add_constraint(LinConstraint::new("cap", vec![(x, 3.0), (y, 1.0)], Sense::Le, 100.0))
            .unwrap();
        m.add_constraint(LinConstraint::new("bal", vec![(y, 1.0), (z, -0.5)], Sense::Eq, 10.0))
            .unwrap();
        m.add_constraint(LinConstraint::new("floor", vec![(z, 1.0)], Sense::Ge, -5.0)).unwrap();
        m.set_objective(vec![(y, 1.0), (z, 2.5)]).unwrap();
        m
    }

    #[test]
    fn names_sanitized() {
        let m = sample_instance();
        let text = lp_to_string(&m);
        assert!(text.contains("x[k=0,e=1]"));
        assert!(text.contains("P_b(AL_FA)"));
        assert!(!text.contains("P b(AL FA)"));
    }

    #[test]
    fn round_trip_through_own_reader() {
        let m = sample_instance();
        let text = lp_to_string(&m);
        let parsed = parse_lp(&text, "mem").unwrap();
        assert_eq!(parsed.num_vars(), m.num_vars());
        assert_eq!(parsed.num_constraints(), m.num_constraints());
        // same objective/constraint evaluation on a test point, aligned by
        // emitted name (reader may discover variables in another order)
        let point = [1.0, 7.5, 3.0];
        let names = emitted_names(&m);
        let mut parsed_point = vec![0.0; parsed.num_vars()];
        for (i, name) in names.iter().enumerate() {
            parsed_point[parsed.var_by_name(name).unwrap().0] = point[i];
        }
        let e1 = evaluate(&m, &point);
        let e2 = evaluate(&parsed, &parsed_point);
        assert!((e1.objective - e2.objective).abs() < 1e-12);
        assert!((e1.max_constraint_violation - e2.max_constraint_violation).abs() < 1e-12);
        // kinds and bounds preserved
        let x = parsed.var_by_name("x[k=0,e=1]").unwrap();
        let y = parsed.var_by_name("P_b(AL_FA)").unwrap();
        let z = parsed.var_by_name("E").unwrap();
        assert_eq!(parsed.vars[x.0].kind, VarKind::Binary);
        assert_eq!(parsed.vars[y.0].lo, 0.0);
        assert_eq!(parsed.vars[y.0].hi, 250.0);
        assert_eq!(parsed.vars[z.0].lo, f64::NEG_INFINITY);
    }

    #[test]
    fn empty_instance_round_trips() {
        let m = MilpInstance::new();
        let text = lp_to_string(&m);
        for section in ["Minimize", "Subject To", "Bounds", "Binaries", "End"] {
            assert!(text.contains(section), "{text}");
        }
        let parsed = parse_lp(&text, "mem").unwrap();
        assert_eq!(parsed.num_vars(), 0);
        assert_eq!(parsed.num_constraints(), 0);
    }

    #[test]
    fn twelve_significant_digits() {
        let mut m = MilpInstance::new();
        let x = m.add_variable(VarDef::continuous("x", 0.0, 1.0)).unwrap();
        m.set_objective(vec![(x, 1.0 / 3.0)]).unwrap();
        let text = lp_to_string(&m);
        assert!(text.contains("3.333333333333e-1"), "{text}");
    }

    #[test]
    fn solution_file_round_trip_and_defaults() {
        let m = sample_instance();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sol.txt");
        let sol = MilpSolution {
            status: SolveStatus::Optimal,
            values: vec![1.0, 0.25, -3.5],
            objective: 0.25 - 8.75,
            stats: SolveStats::default(),
        };
        write_solution_file(&m, &sol, &path).unwrap();
        let read = read_solution_file(&path, &m).unwrap();
        assert_eq!(read.values, sol.values);

        // missing variable defaults to zero
        fs::write(&path, "x[k=0,e=1] 1\n").unwrap();
        let read = read_solution_file(&path, &m).unwrap();
        assert_eq!(read.values, vec![1.0, 0.0, 0.0]);

        // unknown name is an error
        fs::write(&path, "nope 1\n").unwrap();
        assert!(matches!(read_solution_file(&path, &m), Err(MilpError::UnknownName(_))));

        // malformed line is an error
        fs::write(&path, "x[k=0,e=1]\n").unwrap();
        assert!(matches!(read_solution_file(&path, &m), Err(MilpError::Malformed { .. })));
    }
}
