//! Brute-force certification of the worst-case reformulation.
//!
//! The enumerators walk every admissible deviation assignment (each period
//! carries at most one bound; bound `k` is assigned to exactly its budget of
//! periods) and are deliberately independent of the MILP machinery: no duals,
//! no indicator algebra, just exhaustive search behind a combinatorial guard.
//! [`certify_duality`] compares a solved robust schedule against them.

use thiserror::Error;

use crate::domain::Portfolio;
use crate::robust::UncertaintyModel;
use crate::solution::{ScheduleSolution, UnitKind};

/// Hard limits keeping enumeration affordable.
pub const GUARD_MAX_PERIODS: usize = 14;
pub const GUARD_MAX_ASSIGNMENTS: u128 = 10_000_000;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("instance exceeds the enumeration guard: {0}")]
    GuardExceeded(String),
    #[error("solution carries no robust detail to certify")]
    NotRobust,
    #[error("budget vector does not match the bound count")]
    ShapeMismatch,
}

/// One admissible worst-case selection: for each period, the bound it is
/// assigned to (if any). Counts per bound always equal the budgets exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeviationAssignment {
    pub bound_of_period: Vec<Option<usize>>,
    pub counts: Vec<usize>,
}

impl DeviationAssignment {
    fn empty(t_count: usize, k_count: usize) -> Self {
        DeviationAssignment {
            bound_of_period: vec![None; t_count],
            counts: vec![0; k_count],
        }
    }
}

/// Number of admissible assignments: the multinomial
/// `T! / (G_1! ... G_K! (T - sum G)!)`.
pub fn assignment_count(t_count: usize, budgets: &[usize]) -> Option<u128> {
    let used: usize = budgets.iter().sum();
    if used > t_count {
        return Some(0);
    }
    let mut result: u128 = 1;
    let mut remaining = t_count;
    for &g in budgets {
        // multiply by C(remaining, g)
        let mut c: u128 = 1;
        for i in 0..g {
            c = c.checked_mul((remaining - i) as u128)?;
            c /= (i + 1) as u128;
        }
        result = result.checked_mul(c)?;
        remaining -= g;
    }
    Some(result)
}

fn check_guard(t_count: usize, budgets: &[usize]) -> Result<(), OracleError> {
    if t_count > GUARD_MAX_PERIODS {
        return Err(OracleError::GuardExceeded(format!(
            "{t_count} periods exceed the {GUARD_MAX_PERIODS}-period cap"
        )));
    }
    match assignment_count(t_count, budgets) {
        Some(n) if n <= GUARD_MAX_ASSIGNMENTS => Ok(()),
        Some(n) => Err(OracleError::GuardExceeded(format!(
            "{n} assignments exceed the {GUARD_MAX_ASSIGNMENTS} cap"
        ))),
        None => Err(OracleError::GuardExceeded("assignment count overflows".into())),
    }
}

/// Exhaustive maximization of `sum coeff[k][t]` over admissible assignments.
///
/// The search visits periods in order and, per period, tries bounds in
/// ascending order before leaving the period unassigned; combined with
/// strict-improvement acceptance this breaks value ties toward the earliest
/// period and lowest bound.
fn best_assignment(
    coeff: &[Vec<f64>],
    budgets: &[usize],
) -> Result<(f64, DeviationAssignment), OracleError> {
    let k_count = coeff.len();
    if budgets.len() != k_count {
        return Err(OracleError::ShapeMismatch);
    }
    let t_count = coeff.first().map_or(0, Vec::len);
    check_guard(t_count, budgets)?;

    let total_needed: usize = budgets.iter().sum();
    if total_needed > t_count {
        return Err(OracleError::GuardExceeded(format!(
            "budgets need {total_needed} periods, horizon has {t_count}"
        )));
    }

    let mut best_value = f64::NEG_INFINITY;
    let mut best: Option<DeviationAssignment> = None;
    let mut current = DeviationAssignment::empty(t_count, k_count);
    let mut remaining: Vec<usize> = budgets.to_vec();

    fn recurse(
        t: usize,
        value: f64,
        coeff: &[Vec<f64>],
        t_count: usize,
        remaining: &mut Vec<usize>,
        current: &mut DeviationAssignment,
        best_value: &mut f64,
        best: &mut Option<DeviationAssignment>,
    ) {
        let needed: usize = remaining.iter().sum();
        if needed > t_count - t {
            return; // cannot place the remaining budget
        }
        if t == t_count {
            if value > *best_value {
                *best_value = value;
                *best = Some(current.clone());
            }
            return;
        }
        for k in 0..coeff.len() {
            if remaining[k] == 0 {
                continue;
            }
            remaining[k] -= 1;
            current.bound_of_period[t] = Some(k);
            current.counts[k] += 1;
            recurse(t + 1, value + coeff[k][t], coeff, t_count, remaining, current, best_value, best);
            current.counts[k] -= 1;
            current.bound_of_period[t] = None;
            remaining[k] += 1;
        }
        recurse(t + 1, value, coeff, t_count, remaining, current, best_value, best);
    }

    recurse(0, 0.0, coeff, t_count, &mut remaining, &mut current, &mut best_value, &mut best);
    let assignment = best.expect("at least one admissible assignment exists");
    Ok((best_value, assignment))
}

/// Fixed first-level values entering the price protection functions.
#[derive(Debug, Clone)]
pub struct FirstLevelValues {
    /// Day-ahead exposure `[bound k][period t]`.
    pub y_da: Vec<Vec<f64>>,
    pub r_sr_up: Vec<f64>,
    pub r_sr_dn: Vec<f64>,
}

impl FirstLevelValues {
    /// Pulls the first-level values out of a solved robust schedule.
    pub fn from_solution(sol: &ScheduleSolution) -> Result<Self, OracleError> {
        let robust = sol.robust.as_ref().ok_or(OracleError::NotRobust)?;
        Ok(FirstLevelValues {
            y_da: robust.y_da.clone(),
            r_sr_up: sol.r_sr_up.clone(),
            r_sr_dn: sol.r_sr_dn.clone(),
        })
    }
}

fn family_value(
    deviations: &[Vec<f64>],
    weights: impl Fn(usize, usize) -> f64,
    budgets: &[usize],
) -> Result<f64, OracleError> {
    let coeff: Vec<Vec<f64>> = deviations
        .iter()
        .enumerate()
        .map(|(k, row)| row.iter().enumerate().map(|(t, d)| d * weights(k, t)).collect())
        .collect();
    Ok(best_assignment(&coeff, budgets)?.0)
}

/// Exact worst-case revenue loss for fixed first-level decisions: the three
/// price families are maximized independently over admissible assignments and
/// summed.
pub fn protection_value_bruteforce(
    fixed: &FirstLevelValues,
    u: &UncertaintyModel,
) -> Result<f64, OracleError> {
    let da = family_value(
        &u.deviations.da_down,
        |k, t| fixed.y_da[k][t],
        &u.budgets.da,
    )?;
    let up = family_value(&u.deviations.sr_up_down, |_, t| fixed.r_sr_up[t], &u.budgets.sr_up)?;
    let dn = family_value(&u.deviations.sr_dn_down, |_, t| fixed.r_sr_dn[t], &u.budgets.sr_dn)?;
    Ok(da + up + dn)
}

/// Which uncertain unit a query refers to (index into the portfolio order).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitFamily {
    NdRes(usize),
    Demand(usize),
}

/// Worst-case per-period tightening for one unit: the assignment maximizing
/// total deviation mass, reported as the applied deviation per period.
/// Ties break toward the earliest period and lowest bound.
pub fn unit_worstcase_bruteforce(
    u: &UncertaintyModel,
    family: UnitFamily,
) -> Result<Vec<f64>, OracleError> {
    let (dev, budgets) = match family {
        UnitFamily::NdRes(i) => (&u.deviations.ndres_down[i].by_bound, &u.budgets.ndres[i].1),
        UnitFamily::Demand(i) => (&u.deviations.demand_up[i].by_bound, &u.budgets.demand[i].1),
    };
    let (_, assignment) = best_assignment(dev, budgets)?;
    let t_count = dev.first().map_or(0, Vec::len);
    Ok((0..t_count)
        .map(|t| assignment.bound_of_period[t].map_or(0.0, |k| dev[k][t]))
        .collect())
}

/// Per-family comparison between the MILP's realized tightening and the
/// enumeration oracle.
#[derive(Debug, Clone)]
pub struct FamilyMass {
    pub unit: String,
    pub kind: UnitKind,
    pub milp_mass: f64,
    pub oracle_mass: f64,
    pub residual: f64,
}

/// Certification report; `pass` requires both the objective identity and
/// every per-family mass comparison to hold.
#[derive(Debug, Clone)]
pub struct CertifyReport {
    pub objective: f64,
    pub deterministic_profit: f64,
    pub protection_value: f64,
    pub objective_residual_rel: f64,
    pub objective_pass: bool,
    pub families: Vec<FamilyMass>,
    pub pass: bool,
}

impl CertifyReport {
    /// Largest relative discrepancy observed anywhere in the report.
    pub fn max_discrepancy(&self) -> f64 {
        let fam = self
            .families
            .iter()
            .map(|f| f.residual)
            .fold(0.0_f64, f64::max);
        fam.max(self.objective_residual_rel)
    }

    /// Structured block consumed by the test harness and the CLI.
    pub fn to_csv_block(&self) -> String {
        let mut s = String::new();
        s.push_str("record,unit,milp_value,oracle_value,residual,pass\n");
        s.push_str(&format!(
            "objective,-,{:.9},{:.9},{:.3e},{}\n",
            self.objective,
            self.deterministic_profit - self.protection_value,
            self.objective_residual_rel,
            self.objective_pass
        ));
        for f in &self.families {
            s.push_str(&format!(
                "tightening,{},{:.9},{:.9},{:.3e},{}\n",
                f.unit,
                f.milp_mass,
                f.oracle_mass,
                f.residual,
                f.residual <= MASS_TOLERANCE
            ));
        }
        s
    }
}

const OBJECTIVE_TOLERANCE: f64 = 1e-5;
const MASS_TOLERANCE: f64 = 1e-6;

/// Certifies a solved robust schedule against the enumeration oracles:
///
/// 1. the solver objective equals the recomputed deterministic profit minus
///    the brute-force protection value, within 1e-5 relative;
/// 2. for every uncertain unit, the total realized tightening mass equals
///    the enumeration's worst-case mass within 1e-6 relative (placement may
///    differ at ties, totals may not).
pub fn certify_duality(
    _p: &Portfolio,
    u: &UncertaintyModel,
    sol: &ScheduleSolution,
) -> Result<CertifyReport, OracleError> {
    let fixed = FirstLevelValues::from_solution(sol)?;
    let protection = protection_value_bruteforce(&fixed, u)?;
    let det_profit = sol.breakdown.deterministic_profit();
    let objective_residual =
        (sol.objective_value - (det_profit - protection)).abs() / (1.0 + sol.objective_value.abs());
    let objective_pass = objective_residual <= OBJECTIVE_TOLERANCE;

    let robust = sol.robust.as_ref().ok_or(OracleError::NotRobust)?;
    let mut families = Vec::new();
    let mut mass_pass = true;
    for (i, detail) in robust.units.iter().enumerate() {
        let family = match detail.kind {
            UnitKind::NonDispatchable => {
                UnitFamily::NdRes(robust.units[..i].iter().filter(|d| d.kind == UnitKind::NonDispatchable).count())
            }
            UnitKind::Demand => {
                UnitFamily::Demand(robust.units[..i].iter().filter(|d| d.kind == UnitKind::Demand).count())
            }
            _ => continue,
        };
        let oracle = unit_worstcase_bruteforce(u, family)?;
        let oracle_mass: f64 = oracle.iter().sum();
        let milp_mass: f64 = detail.tightening.iter().sum();
        let residual = (milp_mass - oracle_mass).abs() / (1.0 + oracle_mass.abs());
        if residual > MASS_TOLERANCE {
            mass_pass = false;
        }
        families.push(FamilyMass {
            unit: detail.unit.clone(),
            kind: detail.kind,
            milp_mass,
            oracle_mass,
            residual,
        });
    }

    Ok(CertifyReport {
        objective: sol.objective_value,
        deterministic_profit: det_profit,
        protection_value: protection,
        objective_residual_rel: objective_residual,
        objective_pass,
        pass: objective_pass && mass_pass,
        families,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::{table2_portfolio, zero_uncertainty};
    use crate::TimeGrid;

    #[test]
    fn zero_budgets_select_nothing() {
        let coeff = vec![vec![2.0, 5.0, 3.0]];
        let (value, a) = best_assignment(&coeff, &[0]).unwrap();
        assert_eq!(value, 0.0);
        assert!(a.bound_of_period.iter().all(Option::is_none));
    }

    #[test]
    fn single_budget_takes_the_argmax() {
        let coeff = vec![vec![2.0, 5.0, 3.0]];
        let (value, a) = best_assignment(&coeff, &[1]).unwrap();
        assert_eq!(value, 5.0);
        assert_eq!(a.bound_of_period, vec![None, Some(0), None]);
    }

    #[test]
    fn bound_competition_respects_exclusivity() {
        // exclusivity forbids stacking both bounds on period 0
        let coeff = vec![vec![4.0, 3.0, 2.0, 1.0], vec![10.0, 1.0, 1.0, 1.0]];
        let (value, a) = best_assignment(&coeff, &[1, 1]).unwrap();
        assert_eq!(value, 13.0);
        assert_eq!(a.bound_of_period, vec![Some(1), Some(0), None, None]);
    }

    #[test]
    fn unit_worstcase_picks_the_two_largest() {
        let p = table2_portfolio(TimeGrid::new(4, 6.0));
        let mut u = zero_uncertainty(&p, 1);
        u.deviations.ndres_down[0].by_bound[0] = vec![5.0, 1.0, 4.0, 2.0];
        u.budgets.ndres[0].1 = vec![2];
        let tightening = unit_worstcase_bruteforce(&u, UnitFamily::NdRes(0)).unwrap();
        assert_eq!(tightening, vec![5.0, 0.0, 4.0, 0.0]);
    }

    #[test]
    fn nested_bounds_split_by_exchange() {
        let p = table2_portfolio(TimeGrid::new(4, 6.0));
        let mut u = zero_uncertainty(&p, 2);
        u.deviations.ndres_down[0].by_bound[0] = vec![3.0, 2.0, 1.0, 0.5];
        u.deviations.ndres_down[0].by_bound[1] = vec![6.0, 5.0, 4.0, 2.0];
        u.budgets.ndres[0].1 = vec![1, 1];
        let tightening = unit_worstcase_bruteforce(&u, UnitFamily::NdRes(0)).unwrap();
        // outer bound takes the largest-gain period, inner bound the next
        assert_eq!(tightening, vec![6.0, 2.0, 0.0, 0.0]);
    }

    #[test]
    fn earliest_period_lowest_bound_wins_ties() {
        let coeff = vec![vec![3.0, 3.0], vec![3.0, 3.0]];
        let (value, a) = best_assignment(&coeff, &[1, 1]).unwrap();
        assert_eq!(value, 6.0);
        assert_eq!(a.bound_of_period, vec![Some(0), Some(1)]);
    }

    #[test]
    fn guard_rejects_oversized_instances() {
        let coeff = vec![vec![1.0; 20]];
        assert!(matches!(
            best_assignment(&coeff, &[3]),
            Err(OracleError::GuardExceeded(_))
        ));
    }

    #[test]
    fn assignment_count_matches_multinomial() {
        assert_eq!(assignment_count(4, &[1]), Some(4));
        assert_eq!(assignment_count(4, &[1, 1]), Some(12));
        assert_eq!(assignment_count(8, &[2, 2, 2]), Some(2520 * 28 / 28)); // 8!/(2!2!2!2!)
        assert_eq!(assignment_count(3, &[4]), Some(0));
    }
}
