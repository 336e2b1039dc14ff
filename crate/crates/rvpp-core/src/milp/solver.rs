//! Pluggable solve contract and the bundled backends.
//!
//! A backend takes either the in-memory model or its LP byte stream and
//! returns a [`SolveOutcome`]. The default backend embeds HiGHS; an external
//! backend shells out to any executable honouring the simple
//! `<cmd> <model.lp> <solution.out>` protocol described in the README.

use std::io::Write as _;
use std::path::PathBuf;
use std::process::Command;

use highs::{HighsModelStatus, HighsSolutionStatus, RowProblem, Sense as HighsSense};

use super::writer::write_lp;
use super::{MilpModel, Sense, VarKind, VarRef};

/// Terminal state of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Terminated by a limit with a feasible incumbent.
    GapLimit,
    Error,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::GapLimit => "gap_limit",
            SolveStatus::Error => "error",
        };
        write!(f, "{s}")
    }
}

/// Result of a solve. `values` is dense, indexed in variable registration
/// order; it is empty unless the status carries a usable primal point.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub objective_value: f64,
    pub values: Vec<f64>,
    pub mip_gap: f64,
    pub message: String,
}

impl SolveOutcome {
    pub fn error(message: impl Into<String>) -> Self {
        SolveOutcome {
            status: SolveStatus::Error,
            objective_value: f64::NAN,
            values: Vec::new(),
            mip_gap: f64::NAN,
            message: message.into(),
        }
    }

    pub fn has_solution(&self) -> bool {
        matches!(self.status, SolveStatus::Optimal | SolveStatus::GapLimit)
    }

    /// Value of a variable in this outcome.
    pub fn value(&self, var: VarRef) -> f64 {
        self.values[var.index()]
    }
}

/// Backend-independent solve options.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Relative MIP gap tolerance.
    pub rel_gap: f64,
    /// Wall-clock limit in seconds.
    pub time_limit_secs: Option<f64>,
    /// Solver threads; 1 keeps runs bit-reproducible.
    pub threads: u32,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { rel_gap: 1e-6, time_limit_secs: None, threads: 1 }
    }
}

impl SolveOptions {
    pub fn with_gap(rel_gap: f64) -> Self {
        SolveOptions { rel_gap, ..Default::default() }
    }
}

/// Process-or-library agnostic solve contract. Implementations must be safe
/// to call concurrently on distinct models.
pub trait SolveBackend: Send + Sync {
    fn name(&self) -> &str;
    fn solve(&self, model: &MilpModel, opts: &SolveOptions) -> SolveOutcome;
}

/// In-process HiGHS backend.
#[derive(Debug, Default, Clone, Copy)]
pub struct HighsBackend;

impl SolveBackend for HighsBackend {
    fn name(&self) -> &str {
        "highs"
    }

    fn solve(&self, model: &MilpModel, opts: &SolveOptions) -> SolveOutcome {
        let mut problem = RowProblem::default();
        let mut obj = vec![0.0; model.num_vars()];
        for (v, c) in model.objective().terms() {
            obj[v.index()] = c;
        }
        let mut cols = Vec::with_capacity(model.num_vars());
        for (i, info) in model.vars().iter().enumerate() {
            let col = match info.kind {
                VarKind::Continuous => problem.add_column(obj[i], info.lower..=info.upper),
                VarKind::Binary => problem.add_integer_column(obj[i], info.lower..=info.upper),
            };
            cols.push(col);
        }
        for c in model.constraints() {
            let factors: Vec<_> = c.expr.terms().map(|(v, coeff)| (cols[v.index()], coeff)).collect();
            let rhs = c.rhs - c.expr.constant;
            match c.sense {
                Sense::Le => problem.add_row(..=rhs, &factors),
                Sense::Ge => problem.add_row(rhs.., &factors),
                Sense::Eq => problem.add_row(rhs..=rhs, &factors),
            }
        }

        let mut highs_model = problem.optimise(HighsSense::Maximise);
        highs_model.make_quiet();
        highs_model.set_option("mip_rel_gap", opts.rel_gap);
        highs_model.set_option("threads", opts.threads as i32);
        if let Some(limit) = opts.time_limit_secs {
            highs_model.set_option("time_limit", limit);
        }

        let solved = match highs_model.try_solve() {
            Ok(s) => s,
            Err(status) => return SolveOutcome::error(format!("HiGHS failed: {status:?}")),
        };
        let constant = model.objective().constant;
        let is_mip = model.has_integrality();
        let gap = if is_mip { solved.mip_gap() } else { 0.0 };
        let feasible = solved.primal_solution_status() == HighsSolutionStatus::Feasible;
        let mut outcome = match solved.status() {
            HighsModelStatus::Optimal | HighsModelStatus::ModelEmpty => SolveOutcome {
                status: SolveStatus::Optimal,
                objective_value: solved.objective_value() + constant,
                values: Vec::new(),
                mip_gap: gap.max(0.0),
                message: String::new(),
            },
            HighsModelStatus::Infeasible => SolveOutcome {
                status: SolveStatus::Infeasible,
                objective_value: f64::NAN,
                values: Vec::new(),
                mip_gap: f64::NAN,
                message: "model is infeasible".into(),
            },
            HighsModelStatus::Unbounded | HighsModelStatus::UnboundedOrInfeasible => SolveOutcome {
                status: SolveStatus::Unbounded,
                objective_value: f64::INFINITY,
                values: Vec::new(),
                mip_gap: f64::NAN,
                message: "objective is unbounded".into(),
            },
            HighsModelStatus::ReachedTimeLimit
            | HighsModelStatus::ReachedIterationLimit
            | HighsModelStatus::ObjectiveBound
                if feasible =>
            {
                SolveOutcome {
                    status: SolveStatus::GapLimit,
                    objective_value: solved.objective_value() + constant,
                    values: Vec::new(),
                    mip_gap: gap.max(0.0),
                    message: "terminated at limit with incumbent".into(),
                }
            }
            other => SolveOutcome::error(format!("HiGHS terminated with status {other:?}")),
        };
        if outcome.has_solution() {
            outcome.values = solved.get_solution().columns().to_vec();
        }
        outcome
    }
}

/// Backend that shells out to an external executable.
///
/// The executable is invoked as `command [args...] <lp_path> <out_path>` and
/// must write a solution file of the form:
///
/// ```text
/// status optimal
/// objective 42.5
/// gap 0
/// x 1
/// y 2.5
/// ```
#[derive(Debug, Clone)]
pub struct ExternalBackend {
    pub command: PathBuf,
    pub args: Vec<String>,
}

impl ExternalBackend {
    pub fn new(command: impl Into<PathBuf>) -> Self {
        ExternalBackend { command: command.into(), args: Vec::new() }
    }
}

impl SolveBackend for ExternalBackend {
    fn name(&self) -> &str {
        "external"
    }

    fn solve(&self, model: &MilpModel, opts: &SolveOptions) -> SolveOutcome {
        let dir = match tempfile::tempdir() {
            Ok(d) => d,
            Err(e) => return SolveOutcome::error(format!("tempdir: {e}")),
        };
        let lp_path = dir.path().join("model.lp");
        let out_path = dir.path().join("solution.out");
        let mut lp_file = match std::fs::File::create(&lp_path) {
            Ok(f) => f,
            Err(e) => return SolveOutcome::error(format!("create {}: {e}", lp_path.display())),
        };
        if let Err(e) = write_lp(model, &mut lp_file) {
            return SolveOutcome::error(format!("write lp: {e}"));
        }
        if let Err(e) = lp_file.flush() {
            return SolveOutcome::error(format!("flush lp: {e}"));
        }
        drop(lp_file);

        let output = Command::new(&self.command)
            .args(&self.args)
            .arg(&lp_path)
            .arg(&out_path)
            .env("MILP_REL_GAP", format!("{:e}", opts.rel_gap))
            .env(
                "MILP_TIME_LIMIT",
                opts.time_limit_secs.map(|t| format!("{t}")).unwrap_or_default(),
            )
            .output();
        let output = match output {
            Ok(o) => o,
            Err(e) => {
                return SolveOutcome::error(format!("launch {}: {e}", self.command.display()))
            }
        };
        if !output.status.success() {
            return SolveOutcome::error(format!(
                "{} exited with {}: {}",
                self.command.display(),
                output.status,
                String::from_utf8_lossy(&output.stderr)
            ));
        }
        let text = match std::fs::read_to_string(&out_path) {
            Ok(t) => t,
            Err(e) => return SolveOutcome::error(format!("read solution: {e}")),
        };
        parse_solution_file(&text, model)
    }
}

fn parse_solution_file(text: &str, model: &MilpModel) -> SolveOutcome {
    let mut status = None;
    let mut objective = f64::NAN;
    let mut gap = 0.0;
    let mut values = vec![f64::NAN; model.num_vars()];
    let mut seen = vec![false; model.num_vars()];
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let (Some(key), Some(value)) = (it.next(), it.next()) else {
            return SolveOutcome::error(format!("solution line {} malformed: {line:?}", idx + 1));
        };
        match key {
            "status" => {
                status = Some(match value {
                    "optimal" => SolveStatus::Optimal,
                    "infeasible" => SolveStatus::Infeasible,
                    "unbounded" => SolveStatus::Unbounded,
                    "gap_limit" => SolveStatus::GapLimit,
                    other => {
                        return SolveOutcome::error(format!("unknown solver status {other:?}"))
                    }
                });
            }
            "objective" => match value.parse::<f64>() {
                Ok(v) => objective = v,
                Err(e) => return SolveOutcome::error(format!("bad objective: {e}")),
            },
            "gap" => gap = value.parse::<f64>().unwrap_or(f64::NAN),
            name => match model.var_by_name(name) {
                Some(var) => match value.parse::<f64>() {
                    Ok(v) => {
                        values[var.index()] = v;
                        seen[var.index()] = true;
                    }
                    Err(e) => {
                        return SolveOutcome::error(format!("bad value for {name}: {e}"))
                    }
                },
                None => return SolveOutcome::error(format!("unknown variable {name:?}")),
            },
        }
    }
    let Some(status) = status else {
        return SolveOutcome::error("solution file missing status line");
    };
    if matches!(status, SolveStatus::Optimal | SolveStatus::GapLimit) {
        if let Some(missing) = seen.iter().position(|s| !s) {
            return SolveOutcome::error(format!(
                "solution file missing value for variable {:?}",
                model.vars()[missing].name
            ));
        }
        // external objectives ignore the constant carried in the comment
        SolveOutcome {
            status,
            objective_value: objective + model.objective().constant,
            values,
            mip_gap: gap,
            message: String::new(),
        }
    } else {
        SolveOutcome {
            status,
            objective_value: f64::NAN,
            values: Vec::new(),
            mip_gap: f64::NAN,
            message: String::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{LinExpr, MilpModel, Sense};

    fn solve(model: &MilpModel) -> SolveOutcome {
        HighsBackend.solve(model, &SolveOptions::default())
    }

    #[test]
    fn bounded_lp_is_optimal() {
        let mut m = MilpModel::new();
        let x = m.nonneg("x").unwrap();
        m.add_constraint(LinExpr::term(x, 1.0), Sense::Le, 1.0, "cap").unwrap();
        m.set_objective(LinExpr::term(x, 1.0)).unwrap();
        let out = solve(&m);
        assert_eq!(out.status, SolveStatus::Optimal);
        assert!((out.objective_value - 1.0).abs() < 1e-9);
        assert!((out.value(x) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        let mut m = MilpModel::new();
        let x = m.free("x").unwrap();
        m.add_constraint(LinExpr::term(x, 1.0), Sense::Ge, 2.0, "lo").unwrap();
        m.add_constraint(LinExpr::term(x, 1.0), Sense::Le, 1.0, "hi").unwrap();
        m.set_objective(LinExpr::term(x, 1.0)).unwrap();
        assert_eq!(solve(&m).status, SolveStatus::Infeasible);
    }

    #[test]
    fn free_maximization_is_unbounded() {
        let mut m = MilpModel::new();
        let x = m.free("x").unwrap();
        m.set_objective(LinExpr::term(x, 1.0)).unwrap();
        assert_eq!(solve(&m).status, SolveStatus::Unbounded);
    }

    #[test]
    fn milp_respects_integrality() {
        let mut m = MilpModel::new();
        let x = m.binary("pick").unwrap();
        let y = m.continuous(0.0, 10.0, "y").unwrap();
        let mut c = LinExpr::new();
        c.add(y, 1.0).add(x, -4.0);
        m.add_constraint(c, Sense::Le, 0.0, "link").unwrap();
        let mut obj = LinExpr::new();
        obj.add(y, 1.0).add(x, -3.0);
        m.set_objective(obj).unwrap();
        let out = solve(&m);
        assert_eq!(out.status, SolveStatus::Optimal);
        // picking costs 3 and unlocks 4 units of y
        assert!((out.objective_value - 1.0).abs() < 1e-6);
        assert!((out.value(x) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn objective_constant_is_included() {
        let mut m = MilpModel::new();
        let x = m.continuous(0.0, 2.0, "x").unwrap();
        let mut obj = LinExpr::term(x, 1.0);
        obj.add_constant(10.0);
        m.set_objective(obj).unwrap();
        let out = solve(&m);
        assert!((out.objective_value - 12.0).abs() < 1e-9);
    }

    #[test]
    fn solution_values_respect_bounds() {
        let mut m = MilpModel::new();
        let x = m.continuous(0.25, 0.75, "x").unwrap();
        m.set_objective(LinExpr::term(x, -1.0)).unwrap();
        let out = solve(&m);
        let v = out.value(x);
        assert!(v >= 0.25 - 1e-6 && v <= 0.75 + 1e-6);
    }
}
