//! LP-format parse-back.
//!
//! Reads the canonical dialect produced by [`super::writer`] (and reasonable
//! hand-written variants of it) back into a [`MilpModel`]. Used by the
//! round-trip tests and by external-backend plumbing.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use super::{LinExpr, MilpModel, Sense, VarKind};

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown variable {name:?} referenced on line {line}")]
    UnknownVariable { name: String, line: usize },
    #[error("model construction failed: {0}")]
    Model(#[from] super::ModelError),
}

fn syntax(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax { line, message: message.into() }
}

fn parse_number(tok: &str) -> Option<f64> {
    match tok.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" | "+infinity" => Some(f64::INFINITY),
        "-inf" | "-infinity" => Some(f64::NEG_INFINITY),
        _ => tok.parse::<f64>().ok(),
    }
}

fn is_sense(tok: &str) -> Option<Sense> {
    match tok {
        "<=" | "<" | "=<" => Some(Sense::Le),
        ">=" | ">" | "=>" => Some(Sense::Ge),
        "=" | "==" => Some(Sense::Eq),
        _ => None,
    }
}

#[derive(Debug, PartialEq, Eq, Clone, Copy)]
enum Section {
    Preamble,
    Objective,
    Constraints,
    Bounds,
    Binaries,
    End,
}

fn section_of(line: &str) -> Option<Section> {
    match line.trim().to_ascii_lowercase().as_str() {
        "maximize" | "max" => Some(Section::Objective),
        "subject to" | "st" | "s.t." | "such that" => Some(Section::Constraints),
        "bounds" | "bound" => Some(Section::Bounds),
        "binaries" | "binary" | "bin" => Some(Section::Binaries),
        "end" => Some(Section::End),
        _ => None,
    }
}

/// One `tag: expr sense rhs` row, token form.
struct RawRow {
    tag: String,
    tokens: Vec<String>,
    line: usize,
}

/// Parses expression tokens terminated by an optional `sense rhs` tail.
fn parse_expr(
    tokens: &[String],
    line: usize,
) -> Result<(Vec<(String, f64)>, Option<(Sense, f64)>), ParseError> {
    let mut terms: Vec<(String, f64)> = Vec::new();
    let mut i = 0;
    let mut sign = 1.0;
    let mut pending_coeff: Option<f64> = None;
    while i < tokens.len() {
        let tok = tokens[i].as_str();
        if let Some(sense) = is_sense(tok) {
            if pending_coeff.is_some() {
                return Err(syntax(line, "dangling coefficient before relational operator"));
            }
            if i + 1 != tokens.len() - 1 {
                return Err(syntax(line, "expected exactly one value after relational operator"));
            }
            let rhs = parse_number(&tokens[i + 1])
                .ok_or_else(|| syntax(line, format!("bad right-hand side {:?}", tokens[i + 1])))?;
            return Ok((terms, Some((sense, rhs))));
        }
        match tok {
            "+" => {
                if pending_coeff.is_some() {
                    return Err(syntax(line, "unexpected sign after coefficient"));
                }
                sign = 1.0;
            }
            "-" => {
                if pending_coeff.is_some() {
                    return Err(syntax(line, "unexpected sign after coefficient"));
                }
                sign = -sign;
            }
            _ => {
                if let Some(v) = parse_number(tok) {
                    if pending_coeff.is_some() {
                        return Err(syntax(line, "two consecutive numbers in expression"));
                    }
                    pending_coeff = Some(v);
                } else {
                    let coeff = sign * pending_coeff.take().unwrap_or(1.0);
                    terms.push((tok.to_owned(), coeff));
                    sign = 1.0;
                }
            }
        }
        i += 1;
    }
    if pending_coeff.is_some() {
        return Err(syntax(line, "expression ends with a dangling coefficient"));
    }
    Ok((terms, None))
}

/// Parses canonical LP text into a fresh model. Variables are registered in
/// the order of their Bounds lines, which matches the original registration
/// order for writer-produced files.
pub fn parse_lp(text: &str) -> Result<MilpModel, ParseError> {
    let mut section = Section::Preamble;
    let mut objective_constant = 0.0;
    let mut objective_tokens: Vec<String> = Vec::new();
    let mut objective_line = 0usize;
    let mut rows: Vec<RawRow> = Vec::new();
    let mut bounds: Vec<(String, f64, f64, usize)> = Vec::new();
    let mut binaries: BTreeSet<String> = BTreeSet::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('\\') {
            let rest = rest.trim();
            if let Some(v) = rest.strip_prefix("objective_constant:") {
                objective_constant = parse_number(v.trim())
                    .ok_or_else(|| syntax(lineno, "bad objective_constant comment"))?;
            }
            continue;
        }
        if let Some(s) = section_of(line) {
            section = s;
            continue;
        }
        let tokens: Vec<String> = line.split_whitespace().map(str::to_owned).collect();
        match section {
            Section::Preamble => {
                return Err(syntax(lineno, "content before the objective section"));
            }
            Section::Objective => {
                for t in tokens {
                    if let Some(stripped) = t.strip_suffix(':') {
                        if !objective_tokens.is_empty() {
                            return Err(syntax(lineno, "second label in objective section"));
                        }
                        let _ = stripped; // objective label is ignored
                        objective_line = lineno;
                    } else {
                        if objective_line == 0 {
                            objective_line = lineno;
                        }
                        objective_tokens.push(t);
                    }
                }
            }
            Section::Constraints => {
                for t in tokens {
                    if let Some(tag) = t.strip_suffix(':') {
                        rows.push(RawRow { tag: tag.to_owned(), tokens: Vec::new(), line: lineno });
                    } else {
                        let row = rows
                            .last_mut()
                            .ok_or_else(|| syntax(lineno, "constraint body before any row label"))?;
                        row.tokens.push(t);
                    }
                }
            }
            Section::Bounds => {
                let parsed = parse_bound_line(&tokens, lineno)?;
                bounds.push(parsed);
            }
            Section::Binaries => {
                for t in tokens {
                    binaries.insert(t);
                }
            }
            Section::End => {
                return Err(syntax(lineno, "content after End"));
            }
        }
    }

    let mut model = MilpModel::new();
    let mut refs = HashMap::new();
    for (name, lower, upper, line) in bounds {
        let kind = if binaries.contains(&name) { VarKind::Binary } else { VarKind::Continuous };
        let (lower, upper) = if kind == VarKind::Binary {
            (lower.max(0.0), upper.min(1.0))
        } else {
            (lower, upper)
        };
        let var = model
            .add_var(kind, lower, upper, name.clone())
            .map_err(|e| syntax(line, e.to_string()))?;
        refs.insert(name, var);
    }

    let (obj_terms, tail) = parse_expr(&objective_tokens, objective_line)?;
    if tail.is_some() {
        return Err(syntax(objective_line, "objective must not carry a relational operator"));
    }
    let mut obj = LinExpr::new();
    for (name, coeff) in obj_terms {
        let var = *refs
            .get(&name)
            .ok_or_else(|| ParseError::UnknownVariable { name: name.clone(), line: objective_line })?;
        obj.add(var, coeff);
    }
    obj.add_constant(objective_constant);
    model.set_objective(obj)?;

    for row in rows {
        let (terms, tail) = parse_expr(&row.tokens, row.line)?;
        let (sense, rhs) =
            tail.ok_or_else(|| syntax(row.line, "constraint without relational operator"))?;
        let mut expr = LinExpr::new();
        for (name, coeff) in terms {
            let var = *refs
                .get(&name)
                .ok_or_else(|| ParseError::UnknownVariable { name: name.clone(), line: row.line })?;
            expr.add(var, coeff);
        }
        model.add_constraint(expr, sense, rhs, row.tag)?;
    }

    Ok(model)
}

fn parse_bound_line(
    tokens: &[String],
    line: usize,
) -> Result<(String, f64, f64, usize), ParseError> {
    match tokens {
        [name, kw] if kw.eq_ignore_ascii_case("free") => {
            Ok((name.clone(), f64::NEG_INFINITY, f64::INFINITY, line))
        }
        [lo, le1, name, le2, hi] if is_sense(le1) == Some(Sense::Le) && is_sense(le2) == Some(Sense::Le) => {
            let lo = parse_number(lo).ok_or_else(|| syntax(line, "bad lower bound"))?;
            let hi = parse_number(hi).ok_or_else(|| syntax(line, "bad upper bound"))?;
            Ok((name.clone(), lo, hi, line))
        }
        [name, op, value] => {
            let v = parse_number(value).ok_or_else(|| syntax(line, "bad bound value"))?;
            match is_sense(op) {
                Some(Sense::Le) => Ok((name.clone(), 0.0, v, line)),
                Some(Sense::Ge) => Ok((name.clone(), v, f64::INFINITY, line)),
                Some(Sense::Eq) => Ok((name.clone(), v, v, line)),
                None => Err(syntax(line, "unrecognized bound operator")),
            }
        }
        _ => Err(syntax(line, "unrecognized bound line")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::writer::lp_string;
    use crate::milp::{LinExpr, MilpModel, Sense};

    #[test]
    fn round_trip_preserves_structure() {
        let mut m = MilpModel::new();
        let x = m.continuous(0.0, 4.0, "x").unwrap();
        let y = m.free("y").unwrap();
        let b = m.binary("pick").unwrap();
        let mut c1 = LinExpr::new();
        c1.add(x, 1.5).add(y, -2.0);
        m.add_constraint(c1, Sense::Le, 7.25, "row.a").unwrap();
        let mut c2 = LinExpr::new();
        c2.add(b, 3.0).add(x, 1.0);
        m.add_constraint(c2, Sense::Eq, 2.0, "row.b").unwrap();
        let mut obj = LinExpr::new();
        obj.add(x, 0.1).add(y, 0.2).add(b, -0.3);
        obj.add_constant(5.5);
        m.set_objective(obj).unwrap();

        let parsed = parse_lp(&lp_string(&m).unwrap()).unwrap();
        assert_eq!(parsed.num_vars(), m.num_vars());
        assert_eq!(parsed.num_constraints(), m.num_constraints());
        assert_eq!(parsed.objective().constant, m.objective().constant);
        let orig: Vec<f64> = m.objective().terms().map(|(_, c)| c).collect();
        let back: Vec<f64> = parsed.objective().terms().map(|(_, c)| c).collect();
        assert_eq!(orig, back);
        assert_eq!(parsed.var_info(parsed.var_by_name("pick").unwrap()).kind, VarKind::Binary);
    }

    #[test]
    fn hand_written_lp_parses() {
        let text = "Maximize\n obj: x + 2 y\nSubject To\n c1: x + y <= 3\nBounds\n x >= 0\n 0 <= y <= 2\nEnd\n";
        let m = parse_lp(text).unwrap();
        assert_eq!(m.num_vars(), 2);
        assert_eq!(m.num_constraints(), 1);
        assert_eq!(m.constraints()[0].rhs, 3.0);
    }

    #[test]
    fn unknown_variable_is_reported() {
        let text = "Maximize\n obj: x\nSubject To\n c1: z <= 3\nBounds\n x free\nEnd\n";
        let err = parse_lp(text).unwrap_err();
        assert!(matches!(err, ParseError::UnknownVariable { .. }));
    }
}
