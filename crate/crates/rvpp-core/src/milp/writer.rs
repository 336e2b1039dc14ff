//! Canonical LP-format emission.
//!
//! The writer produces a deterministic byte stream: variables appear in
//! registration order, constraints in insertion order, and every coefficient
//! is printed with 17 significant digits so values round-trip exactly through
//! text. Identical models always produce identical bytes.

use std::io::{self, Write};

use thiserror::Error;

use super::{LinExpr, MilpModel, Sense, VarKind};

const WRAP_COLUMN: usize = 240;

#[derive(Debug, Error)]
pub enum WriteError {
    #[error("cannot write a model with no variables")]
    NoVariables,
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Formats a float with 17 significant digits in scientific notation, which
/// is enough for exact f64 round-trips.
pub fn format_coeff(v: f64) -> String {
    if v == 0.0 {
        // normalize -0.0
        return "0.0000000000000000e0".to_owned();
    }
    format!("{v:.16e}")
}

struct LineWriter<'a, W: Write> {
    sink: &'a mut W,
    column: usize,
}

impl<'a, W: Write> LineWriter<'a, W> {
    fn new(sink: &'a mut W) -> Self {
        LineWriter { sink, column: 0 }
    }

    /// Writes a token, breaking the line first when it would overflow.
    fn token(&mut self, tok: &str) -> io::Result<()> {
        if self.column > 1 && self.column + tok.len() + 1 > WRAP_COLUMN {
            writeln!(self.sink)?;
            write!(self.sink, "  ")?;
            self.column = 2;
        } else if self.column > 0 {
            write!(self.sink, " ")?;
            self.column += 1;
        } else {
            write!(self.sink, " ")?;
            self.column = 1;
        }
        write!(self.sink, "{tok}")?;
        self.column += tok.len();
        Ok(())
    }

    fn end_line(&mut self) -> io::Result<()> {
        writeln!(self.sink)?;
        self.column = 0;
        Ok(())
    }
}

fn write_expr<W: Write>(
    lw: &mut LineWriter<'_, W>,
    model: &MilpModel,
    expr: &LinExpr,
) -> io::Result<()> {
    if expr.is_empty() {
        // keep the row parseable; a zero coefficient on the first variable
        // normalizes back to an empty expression on read
        lw.token("0")?;
        lw.token(&model.vars()[0].name)?;
        return Ok(());
    }
    for (i, (var, coeff)) in expr.terms().enumerate() {
        if i == 0 {
            if coeff < 0.0 {
                lw.token("-")?;
            }
        } else if coeff < 0.0 {
            lw.token("-")?;
        } else {
            lw.token("+")?;
        }
        lw.token(&format_coeff(coeff.abs()))?;
        lw.token(&model.var_info(var).name)?;
    }
    Ok(())
}

fn bound_token(v: f64) -> String {
    if v == f64::INFINITY {
        "+infinity".to_owned()
    } else if v == f64::NEG_INFINITY {
        "-infinity".to_owned()
    } else {
        format_coeff(v)
    }
}

/// Writes the model as canonical LP text. The objective constant, which the
/// LP format cannot carry, is recorded in a structured comment that the
/// bundled reader understands; external solvers report the linear part only.
pub fn write_lp<W: Write>(model: &MilpModel, sink: &mut W) -> Result<(), WriteError> {
    if model.num_vars() == 0 {
        return Err(WriteError::NoVariables);
    }
    writeln!(sink, "\\ canonical lp, {} vars, {} rows", model.num_vars(), model.num_constraints())?;
    if model.objective().constant != 0.0 {
        writeln!(sink, "\\ objective_constant: {}", format_coeff(model.objective().constant))?;
    }
    writeln!(sink, "Maximize")?;
    {
        let mut lw = LineWriter::new(sink);
        lw.token("obj:")?;
        write_expr(&mut lw, model, model.objective())?;
        lw.end_line()?;
    }
    writeln!(sink, "Subject To")?;
    for c in model.constraints() {
        let mut lw = LineWriter::new(sink);
        lw.token(&format!("{}:", c.tag))?;
        write_expr(&mut lw, model, &c.expr)?;
        let sense = match c.sense {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        };
        lw.token(sense)?;
        // constraint constants fold into the right-hand side
        lw.token(&format_coeff(c.rhs - c.expr.constant))?;
        lw.end_line()?;
    }
    writeln!(sink, "Bounds")?;
    for v in model.vars() {
        if v.lower == f64::NEG_INFINITY && v.upper == f64::INFINITY {
            writeln!(sink, " {} free", v.name)?;
        } else {
            writeln!(sink, " {} <= {} <= {}", bound_token(v.lower), v.name, bound_token(v.upper))?;
        }
    }
    if model.has_integrality() {
        writeln!(sink, "Binaries")?;
        for v in model.vars() {
            if v.kind == VarKind::Binary {
                writeln!(sink, " {}", v.name)?;
            }
        }
    }
    writeln!(sink, "End")?;
    Ok(())
}

/// Convenience wrapper returning the LP text as a string.
pub fn lp_string(model: &MilpModel) -> Result<String, WriteError> {
    let mut buf = Vec::new();
    write_lp(model, &mut buf)?;
    Ok(String::from_utf8(buf).expect("LP text is always ASCII"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{LinExpr, MilpModel, Sense};

    fn one_var_model() -> MilpModel {
        let mut m = MilpModel::new();
        let x = m.nonneg("x").unwrap();
        m.add_constraint(LinExpr::term(x, 1.0), Sense::Le, 1.0, "cap").unwrap();
        m.set_objective(LinExpr::term(x, 1.0)).unwrap();
        m
    }

    #[test]
    fn one_var_model_has_all_sections() {
        let text = lp_string(&one_var_model()).unwrap();
        assert!(text.contains("Maximize"));
        assert!(text.contains("obj:"));
        assert!(text.contains("cap:"));
        assert!(text.contains("Bounds"));
        assert!(text.ends_with("End\n"));
        assert!(!text.contains("Binaries"));
    }

    #[test]
    fn binary_vars_land_in_the_integrality_section() {
        let mut m = MilpModel::new();
        let b = m.binary("v.hydro.t5").unwrap();
        m.set_objective(LinExpr::term(b, 1.0)).unwrap();
        let text = lp_string(&m).unwrap();
        let pos = text.find("Binaries").expect("missing Binaries section");
        assert!(text[pos..].contains("v.hydro.t5"));
    }

    #[test]
    fn emission_is_deterministic() {
        let m = one_var_model();
        assert_eq!(lp_string(&m).unwrap(), lp_string(&m).unwrap());
    }

    #[test]
    fn coefficients_carry_17_significant_digits() {
        assert_eq!(format_coeff(0.25), "2.5000000000000000e-1");
        assert_eq!(format_coeff(0.0), "0.0000000000000000e0");
        let tricky = 0.1 + 0.2;
        assert_eq!(format_coeff(tricky).parse::<f64>().unwrap(), tricky);
    }
}
