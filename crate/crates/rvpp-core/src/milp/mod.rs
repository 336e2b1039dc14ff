//! Solver-agnostic MILP representation.
//!
//! A [`MilpModel`] is a registry of bounded variables plus tagged linear
//! constraints and a maximization objective. Completed models are immutable
//! value types: they can be written to canonical LP text ([`writer`]), read
//! back ([`reader`]) and handed to any [`solver::SolveBackend`].

pub mod reader;
pub mod solver;
pub mod writer;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

static NEXT_MODEL_ID: AtomicU64 = AtomicU64::new(1);

/// Variable kind. Binary variables must keep their bounds within [0,1].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

/// Opaque handle to a registered variable. Handles are only valid for the
/// model that created them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarRef {
    model_id: u64,
    index: u32,
}

impl VarRef {
    /// Position of the variable in registration order.
    pub fn index(&self) -> usize {
        self.index as usize
    }
}

#[derive(Debug, Clone)]
pub struct VarInfo {
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
    pub name: String,
}

/// Linear expression: a term map plus a constant.
///
/// Zero-coefficient entries are dropped as they appear, so two expressions
/// built along different routes compare equal term-for-term.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    terms: BTreeMap<VarRef, f64>,
    pub constant: f64,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    /// Single-term expression.
    pub fn term(var: VarRef, coeff: f64) -> Self {
        let mut e = Self::new();
        e.add(var, coeff);
        e
    }

    /// Accumulates `coeff * var` into the expression.
    pub fn add(&mut self, var: VarRef, coeff: f64) -> &mut Self {
        let entry = self.terms.entry(var).or_insert(0.0);
        *entry += coeff;
        if *entry == 0.0 {
            self.terms.remove(&var);
        }
        self
    }

    pub fn add_constant(&mut self, c: f64) -> &mut Self {
        self.constant += c;
        self
    }

    pub fn terms(&self) -> impl Iterator<Item = (VarRef, f64)> + '_ {
        self.terms.iter().map(|(v, c)| (*v, *c))
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    /// Evaluates the expression against a dense value vector indexed in
    /// registration order.
    pub fn eval(&self, values: &[f64]) -> f64 {
        self.constant
            + self
                .terms
                .iter()
                .map(|(v, c)| c * values[v.index as usize])
                .sum::<f64>()
    }
}

/// Constraint sense.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl std::fmt::Display for Sense {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Sense::Le => write!(f, "<="),
            Sense::Eq => write!(f, "="),
            Sense::Ge => write!(f, ">="),
        }
    }
}

/// A tagged linear constraint. The tag names the formulation equation the row
/// encodes (e.g. `eq2.up.t17`) and doubles as the LP row name, so it must be
/// unique within the model.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub expr: LinExpr,
    pub sense: Sense,
    pub rhs: f64,
    pub tag: String,
}

/// Identifier of a constraint within its model (insertion order).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConstraintId(pub usize);

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("duplicate variable name {0:?}")]
    DuplicateName(String),
    #[error("invalid variable {name:?}: {reason}")]
    InvalidVariable { name: String, reason: String },
    #[error("constraint {tag:?} references a variable from another model")]
    ForeignVariable { tag: String },
    #[error("constraint {tag:?} has a non-finite coefficient or right-hand side")]
    NonFinite { tag: String },
    #[error("duplicate constraint tag {0:?}")]
    DuplicateTag(String),
    #[error("constraint tag must be non-empty")]
    EmptyTag,
    #[error("objective references a variable from another model")]
    ForeignObjectiveVariable,
    #[error("objective has a non-finite coefficient")]
    NonFiniteObjective,
}

/// Findings from [`MilpModel::lint`].
#[derive(Debug, Clone, PartialEq)]
pub enum LintFinding {
    /// Constraint whose normalized expression has no terms.
    Vacuous { index: usize, tag: String },
    /// Vacuous constraint whose constant sides cannot hold (e.g. 0 <= -1).
    VacuousInfeasible { index: usize, tag: String },
}

/// Mutable MILP under construction; immutable once handed to a backend.
/// The objective sense is always maximize.
#[derive(Debug, Clone, Default)]
pub struct MilpModel {
    id: u64,
    vars: Vec<VarInfo>,
    names: BTreeMap<String, VarRef>,
    tags: BTreeMap<String, ConstraintId>,
    constraints: Vec<Constraint>,
    objective: LinExpr,
}

impl MilpModel {
    pub fn new() -> Self {
        MilpModel {
            id: NEXT_MODEL_ID.fetch_add(1, Ordering::Relaxed),
            ..Default::default()
        }
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn vars(&self) -> &[VarInfo] {
        &self.vars
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &LinExpr {
        &self.objective
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarRef> {
        self.names.get(name).copied()
    }

    pub fn var_info(&self, var: VarRef) -> &VarInfo {
        &self.vars[var.index as usize]
    }

    /// Registers a variable and returns its handle.
    pub fn add_var(
        &mut self,
        kind: VarKind,
        lower: f64,
        upper: f64,
        name: impl Into<String>,
    ) -> Result<VarRef, ModelError> {
        let name = name.into();
        if self.names.contains_key(&name) {
            return Err(ModelError::DuplicateName(name));
        }
        if name.is_empty() {
            return Err(ModelError::InvalidVariable {
                name,
                reason: "name must be non-empty".into(),
            });
        }
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(ModelError::InvalidVariable {
                name,
                reason: format!("requires lower <= upper, got [{lower}, {upper}]"),
            });
        }
        if kind == VarKind::Binary && !(lower >= 0.0 && upper <= 1.0) {
            return Err(ModelError::InvalidVariable {
                name,
                reason: format!("binary bounds must lie within [0,1], got [{lower}, {upper}]"),
            });
        }
        let var = VarRef {
            model_id: self.id,
            index: u32::try_from(self.vars.len()).expect("variable count exceeds u32"),
        };
        self.vars.push(VarInfo { kind, lower, upper, name: name.clone() });
        self.names.insert(name, var);
        Ok(var)
    }

    /// Convenience wrappers used heavily by the formulation builders.
    pub fn continuous(
        &mut self,
        lower: f64,
        upper: f64,
        name: impl Into<String>,
    ) -> Result<VarRef, ModelError> {
        self.add_var(VarKind::Continuous, lower, upper, name)
    }

    pub fn nonneg(&mut self, name: impl Into<String>) -> Result<VarRef, ModelError> {
        self.add_var(VarKind::Continuous, 0.0, f64::INFINITY, name)
    }

    pub fn free(&mut self, name: impl Into<String>) -> Result<VarRef, ModelError> {
        self.add_var(VarKind::Continuous, f64::NEG_INFINITY, f64::INFINITY, name)
    }

    pub fn binary(&mut self, name: impl Into<String>) -> Result<VarRef, ModelError> {
        self.add_var(VarKind::Binary, 0.0, 1.0, name)
    }

    fn check_expr(&self, expr: &LinExpr, tag: &str) -> Result<(), ModelError> {
        for (v, c) in expr.terms() {
            if v.model_id != self.id || v.index as usize >= self.vars.len() {
                return Err(ModelError::ForeignVariable { tag: tag.to_owned() });
            }
            if !c.is_finite() {
                return Err(ModelError::NonFinite { tag: tag.to_owned() });
            }
        }
        Ok(())
    }

    /// Records `expr (sense) rhs` under a unique tag. Empty expressions are
    /// accepted and surface as vacuous findings in [`Self::lint`].
    pub fn add_constraint(
        &mut self,
        expr: LinExpr,
        sense: Sense,
        rhs: f64,
        tag: impl Into<String>,
    ) -> Result<ConstraintId, ModelError> {
        let tag = tag.into();
        if tag.is_empty() {
            return Err(ModelError::EmptyTag);
        }
        if self.tags.contains_key(&tag) {
            return Err(ModelError::DuplicateTag(tag));
        }
        self.check_expr(&expr, &tag)?;
        if !rhs.is_finite() || !expr.constant.is_finite() {
            return Err(ModelError::NonFinite { tag });
        }
        let id = ConstraintId(self.constraints.len());
        self.tags.insert(tag.clone(), id);
        self.constraints.push(Constraint { expr, sense, rhs, tag });
        Ok(id)
    }

    /// Replaces the maximization objective.
    pub fn set_objective(&mut self, expr: LinExpr) -> Result<(), ModelError> {
        self.check_expr(&expr, "")
            .map_err(|_| ModelError::ForeignObjectiveVariable)?;
        if !expr.constant.is_finite() {
            return Err(ModelError::NonFiniteObjective);
        }
        self.objective = expr;
        Ok(())
    }

    /// Adds `expr` to the current objective.
    pub fn add_objective(&mut self, expr: &LinExpr) -> Result<(), ModelError> {
        self.check_expr(expr, "")
            .map_err(|_| ModelError::ForeignObjectiveVariable)?;
        for (v, c) in expr.terms() {
            self.objective.add(v, c);
        }
        self.objective.add_constant(expr.constant);
        Ok(())
    }

    /// Reports structural oddities that are legal but usually unintended.
    pub fn lint(&self) -> Vec<LintFinding> {
        let mut out = Vec::new();
        for (i, c) in self.constraints.iter().enumerate() {
            if c.expr.is_empty() {
                let holds = match c.sense {
                    Sense::Le => c.expr.constant <= c.rhs,
                    Sense::Eq => c.expr.constant == c.rhs,
                    Sense::Ge => c.expr.constant >= c.rhs,
                };
                if holds {
                    out.push(LintFinding::Vacuous { index: i, tag: c.tag.clone() });
                } else {
                    out.push(LintFinding::VacuousInfeasible { index: i, tag: c.tag.clone() });
                }
            }
        }
        out
    }

    /// True if any registered variable is binary.
    pub fn has_integrality(&self) -> bool {
        self.vars.iter().any(|v| v.kind == VarKind::Binary)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_var_returns_fresh_handles() {
        let mut m = MilpModel::new();
        let x = m.continuous(0.0, f64::INFINITY, "p.DA.t0").unwrap();
        let v = m.binary("v.hydro.t5").unwrap();
        assert_ne!(x, v);
        assert_eq!(m.var_info(x).name, "p.DA.t0");
        assert_eq!(m.var_info(v).kind, VarKind::Binary);
    }

    #[test]
    fn duplicate_names_are_rejected() {
        let mut m = MilpModel::new();
        m.nonneg("p.DA.t0").unwrap();
        let err = m.nonneg("p.DA.t0").unwrap_err();
        assert!(matches!(err, ModelError::DuplicateName(_)));
    }

    #[test]
    fn constraints_record_tags() {
        let mut m = MilpModel::new();
        let x = m.nonneg("x").unwrap();
        let y = m.nonneg("y").unwrap();
        let mut e = LinExpr::new();
        e.add(x, 1.0).add(y, 2.0);
        let id = m.add_constraint(e, Sense::Le, 3.0, "eq2.noact.t0").unwrap();
        assert_eq!(id, ConstraintId(0));
        assert_eq!(m.constraints()[0].tag, "eq2.noact.t0");
    }

    #[test]
    fn foreign_variables_are_rejected() {
        let mut a = MilpModel::new();
        let mut b = MilpModel::new();
        let xa = a.nonneg("x").unwrap();
        let err = b
            .add_constraint(LinExpr::term(xa, 1.0), Sense::Le, 1.0, "c")
            .unwrap_err();
        assert!(matches!(err, ModelError::ForeignVariable { .. }));
    }

    #[test]
    fn empty_constraint_is_accepted_and_flagged_vacuous() {
        let mut m = MilpModel::new();
        m.nonneg("x").unwrap();
        m.add_constraint(LinExpr::new(), Sense::Le, 0.0, "noop").unwrap();
        let findings = m.lint();
        assert_eq!(findings.len(), 1);
        assert!(matches!(findings[0], LintFinding::Vacuous { .. }));
    }

    #[test]
    fn zero_coefficients_are_normalized_away() {
        let mut m = MilpModel::new();
        let x = m.nonneg("x").unwrap();
        let mut e = LinExpr::new();
        e.add(x, 2.0).add(x, -2.0);
        assert!(e.is_empty());
    }
}
