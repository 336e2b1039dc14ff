//! Schedule extraction and physics checks.
//!
//! Extraction turns a raw [`SolveOutcome`] into dense per-period arrays and a
//! [`ProfitBreakdown`] recomputed from first principles (never read back from
//! the solver objective). [`check_physics`] verifies an extracted schedule
//! against the formulation's structural invariants.

use thiserror::Error;

use crate::deterministic::{SigmaVar, VarIndex};
use crate::domain::{Portfolio, SigmaMode, TimeGrid};
use crate::milp::solver::{SolveOutcome, SolveStatus};
use crate::milp::VarRef;
use crate::robust::{RobustVarIndex, UncertaintyModel};

/// Euro-valued decomposition of the objective. `profit` must reproduce the
/// solver objective to first order; the extraction tests pin the tolerance.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProfitBreakdown {
    pub da_revenue: f64,
    pub sr_up_revenue: f64,
    pub sr_dn_revenue: f64,
    pub op_cost_dispatchable: f64,
    pub op_cost_ndres: f64,
    pub op_cost_storage: f64,
    /// Worst-case revenue-loss penalty; zero for deterministic runs.
    pub robust_cost: f64,
}

impl ProfitBreakdown {
    pub fn revenue(&self) -> f64 {
        self.da_revenue + self.sr_up_revenue + self.sr_dn_revenue
    }

    pub fn operation_cost(&self) -> f64 {
        self.op_cost_dispatchable + self.op_cost_ndres + self.op_cost_storage
    }

    pub fn profit(&self) -> f64 {
        self.revenue() - self.operation_cost() - self.robust_cost
    }

    /// Revenue minus operating cost, before the robust penalty.
    pub fn deterministic_profit(&self) -> f64 {
        self.revenue() - self.operation_cost()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitKind {
    Dispatchable,
    NonDispatchable,
    Demand,
    Storage,
}

impl UnitKind {
    pub fn label(&self) -> &'static str {
        match self {
            UnitKind::Dispatchable => "dres",
            UnitKind::NonDispatchable => "ndres",
            UnitKind::Demand => "demand",
            UnitKind::Storage => "storage",
        }
    }
}

/// Extracted per-unit trajectories. Storage carries its internal split and
/// state of charge; dispatchable units carry their commitment pattern.
#[derive(Debug, Clone)]
pub struct UnitSchedule {
    pub name: String,
    pub kind: UnitKind,
    /// Net power for storage, dispatch otherwise (MW).
    pub p: Vec<f64>,
    pub r_up: Vec<f64>,
    pub r_dn: Vec<f64>,
    pub commit: Option<Vec<f64>>,
    pub soc: Option<Vec<f64>>,
    pub charge: Option<Vec<f64>>,
    pub discharge: Option<Vec<f64>>,
    /// Reserve-energy allocation fractions actually in force.
    pub sigma: Option<(f64, f64)>,
}

/// Values of the dual variables of one price family.
#[derive(Debug, Clone)]
pub struct PriceDualValues {
    pub phi: Vec<f64>,
    pub zeta: Vec<f64>,
}

/// Robust-block values of one uncertain unit.
#[derive(Debug, Clone)]
pub struct RobustUnitDetail {
    pub unit: String,
    pub kind: UnitKind,
    /// `[bound][period]`, 0/1.
    pub chi: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
    pub phi: Vec<f64>,
    pub zeta: Vec<f64>,
    /// Capacity tightening applied per period: `sum_k y[k][t] + zeta[t]`.
    pub tightening: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RobustDetail {
    pub y_da: Vec<Vec<f64>>,
    pub da: PriceDualValues,
    pub sr_up: PriceDualValues,
    pub sr_dn: PriceDualValues,
    pub units: Vec<RobustUnitDetail>,
}

/// Optimal bids, per-unit trajectories, worst-case indicators and the profit
/// decomposition of one solved model.
#[derive(Debug, Clone)]
pub struct ScheduleSolution {
    pub grid: TimeGrid,
    pub status: SolveStatus,
    pub objective_value: f64,
    pub mip_gap: f64,
    pub p_da: Vec<f64>,
    pub r_sr_up: Vec<f64>,
    pub r_sr_dn: Vec<f64>,
    pub units: Vec<UnitSchedule>,
    pub robust: Option<RobustDetail>,
    pub breakdown: ProfitBreakdown,
    pub solve_seconds: f64,
}

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("no solution to extract: solver status is {0}")]
    NoSolution(SolveStatus),
    #[error("solve outcome carries {got} values but the model registered {expected}")]
    MissingValues { got: usize, expected: usize },
}

fn series(outcome: &SolveOutcome, vars: &[VarRef]) -> Vec<f64> {
    vars.iter().map(|v| outcome.value(*v)).collect()
}

fn matrix(outcome: &SolveOutcome, vars: &[Vec<VarRef>]) -> Vec<Vec<f64>> {
    vars.iter().map(|row| series(outcome, row)).collect()
}

fn unit_schedules(p: &Portfolio, ix: &VarIndex, outcome: &SolveOutcome) -> Vec<UnitSchedule> {
    let mut units = Vec::new();
    for (u, vars) in p.dispatchable.iter().zip(&ix.dispatchable) {
        units.push(UnitSchedule {
            name: u.name.clone(),
            kind: UnitKind::Dispatchable,
            p: series(outcome, &vars.unit.p),
            r_up: series(outcome, &vars.unit.r_up),
            r_dn: series(outcome, &vars.unit.r_dn),
            commit: Some(series(outcome, &vars.commit)),
            soc: None,
            charge: None,
            discharge: None,
            sigma: None,
        });
    }
    for (u, vars) in p.non_dispatchable.iter().zip(&ix.non_dispatchable) {
        units.push(UnitSchedule {
            name: u.name.clone(),
            kind: UnitKind::NonDispatchable,
            p: series(outcome, &vars.p),
            r_up: series(outcome, &vars.r_up),
            r_dn: series(outcome, &vars.r_dn),
            commit: None,
            soc: None,
            charge: None,
            discharge: None,
            sigma: None,
        });
    }
    for (u, vars) in p.demands.iter().zip(&ix.demands) {
        units.push(UnitSchedule {
            name: u.name.clone(),
            kind: UnitKind::Demand,
            p: series(outcome, &vars.p),
            r_up: series(outcome, &vars.r_up),
            r_dn: series(outcome, &vars.r_dn),
            commit: None,
            soc: None,
            charge: None,
            discharge: None,
            sigma: None,
        });
    }
    for (u, vars) in p.storage.iter().zip(&ix.storage) {
        let sigma_of = |s: SigmaVar| match s {
            SigmaVar::Decision(v) => outcome.value(v),
            SigmaVar::Fixed(f) => f,
        };
        units.push(UnitSchedule {
            name: u.name.clone(),
            kind: UnitKind::Storage,
            p: series(outcome, &vars.net),
            r_up: series(outcome, &vars.r_up),
            r_dn: series(outcome, &vars.r_dn),
            commit: Some(series(outcome, &vars.commit)),
            soc: Some(series(outcome, &vars.soc)),
            charge: Some(series(outcome, &vars.charge)),
            discharge: Some(series(outcome, &vars.discharge)),
            sigma: Some((sigma_of(vars.sigma_up), sigma_of(vars.sigma_dn))),
        });
    }
    units
}

fn base_breakdown(p: &Portfolio, units: &[UnitSchedule], p_da: &[f64], r_up: &[f64], r_dn: &[f64]) -> ProfitBreakdown {
    let dt = p.grid.dt_hours;
    let mut b = ProfitBreakdown::default();
    for t in p.grid.periods() {
        b.da_revenue += p.prices.da_median[t] * p_da[t] * dt;
        b.sr_up_revenue += p.prices.sr_up_bar[t] * r_up[t];
        b.sr_dn_revenue += p.prices.sr_down_bar[t] * r_dn[t];
    }
    for u in units {
        match u.kind {
            UnitKind::Dispatchable => {
                let cost = p.dispatchable.iter().find(|x| x.name == u.name).unwrap().cost;
                b.op_cost_dispatchable += cost * dt * u.p.iter().sum::<f64>();
            }
            UnitKind::NonDispatchable => {
                let cost = p.non_dispatchable.iter().find(|x| x.name == u.name).unwrap().cost;
                b.op_cost_ndres += cost * dt * u.p.iter().sum::<f64>();
            }
            UnitKind::Storage => {
                let cost = p.storage.iter().find(|x| x.name == u.name).unwrap().cost;
                let throughput: f64 = u.charge.as_ref().unwrap().iter().sum::<f64>()
                    + u.discharge.as_ref().unwrap().iter().sum::<f64>();
                b.op_cost_storage += cost * dt * throughput;
            }
            UnitKind::Demand => {}
        }
    }
    b
}

fn check_extractable(outcome: &SolveOutcome, num_vars: usize) -> Result<(), ExtractError> {
    if !outcome.has_solution() {
        return Err(ExtractError::NoSolution(outcome.status));
    }
    if outcome.values.len() != num_vars {
        return Err(ExtractError::MissingValues { got: outcome.values.len(), expected: num_vars });
    }
    Ok(())
}

/// Extracts a deterministic solution. `num_vars` is the solved model's
/// variable count, used to detect truncated value vectors.
pub fn extract_solution(
    p: &Portfolio,
    ix: &VarIndex,
    outcome: &SolveOutcome,
    num_vars: usize,
    solve_seconds: f64,
) -> Result<ScheduleSolution, ExtractError> {
    check_extractable(outcome, num_vars)?;
    let p_da = series(outcome, &ix.p_da);
    let r_sr_up = series(outcome, &ix.r_sr_up);
    let r_sr_dn = series(outcome, &ix.r_sr_dn);
    let units = unit_schedules(p, ix, outcome);
    let breakdown = base_breakdown(p, &units, &p_da, &r_sr_up, &r_sr_dn);
    Ok(ScheduleSolution {
        grid: p.grid,
        status: outcome.status,
        objective_value: outcome.objective_value,
        mip_gap: outcome.mip_gap,
        p_da,
        r_sr_up,
        r_sr_dn,
        units,
        robust: None,
        breakdown,
        solve_seconds,
    })
}

/// Extracts a robust solution including every dual and indicator value. The
/// robust cost is recomputed from the budgets and extracted duals, not read
/// from the solver objective.
pub fn extract_robust_solution(
    p: &Portfolio,
    u: &UncertaintyModel,
    ix: &RobustVarIndex,
    outcome: &SolveOutcome,
    num_vars: usize,
    solve_seconds: f64,
) -> Result<ScheduleSolution, ExtractError> {
    let mut sol = extract_solution(p, &ix.base, outcome, num_vars, solve_seconds)?;

    let price = |duals: &crate::robust::PriceDuals| PriceDualValues {
        phi: series(outcome, &duals.phi),
        zeta: series(outcome, &duals.zeta),
    };
    let da = price(&ix.da);
    let sr_up = price(&ix.sr_up);
    let sr_dn = price(&ix.sr_dn);

    let mut robust_cost = 0.0;
    for (budgets, duals) in [
        (&u.budgets.da, &da),
        (&u.budgets.sr_up, &sr_up),
        (&u.budgets.sr_dn, &sr_dn),
    ] {
        for (k, gamma) in budgets.iter().enumerate() {
            robust_cost += *gamma as f64 * duals.phi[k];
        }
        robust_cost += duals.zeta.iter().sum::<f64>();
    }
    sol.breakdown.robust_cost = robust_cost;

    let unit_detail = |rvars: &crate::robust::RobustUnitVars, name: &str, kind: UnitKind| {
        let chi = matrix(outcome, &rvars.chi);
        let y = matrix(outcome, &rvars.y);
        let zeta = series(outcome, &rvars.zeta);
        let tightening: Vec<f64> = (0..p.grid.period_count)
            .map(|t| y.iter().map(|row| row[t]).sum::<f64>() + zeta[t])
            .collect();
        RobustUnitDetail {
            unit: name.to_owned(),
            kind,
            chi,
            y,
            phi: series(outcome, &rvars.phi),
            zeta,
            tightening,
        }
    };
    let mut units = Vec::new();
    for (i, unit) in p.non_dispatchable.iter().enumerate() {
        units.push(unit_detail(&ix.ndres[i], &unit.name, UnitKind::NonDispatchable));
    }
    for (i, unit) in p.demands.iter().enumerate() {
        units.push(unit_detail(&ix.demand[i], &unit.name, UnitKind::Demand));
    }

    sol.robust = Some(RobustDetail { y_da: matrix(outcome, &ix.y_da), da, sr_up, sr_dn, units });
    Ok(sol)
}

fn close(residual: f64, scale: f64, tol: f64) -> bool {
    residual.abs() <= tol * (1.0 + scale.abs())
}

/// Verifies an extracted schedule against the structural invariants: the
/// three balance equalities, storage exclusivity and state-of-charge replay
/// with daily cyclicity, reserve caps, and (for robust runs) indicator
/// exclusivity with exact budget equalities. Returns human-readable
/// violation descriptions; empty means the solution is physically sound.
pub fn check_physics(
    p: &Portfolio,
    u: Option<&UncertaintyModel>,
    sol: &ScheduleSolution,
) -> Vec<String> {
    let mut out = Vec::new();
    let tol = 1e-6;
    let dt = p.grid.dt_hours;

    let by_kind = |kind: UnitKind| sol.units.iter().filter(move |x| x.kind == kind);

    for t in p.grid.periods() {
        let gen_none: f64 = by_kind(UnitKind::Dispatchable)
            .chain(by_kind(UnitKind::NonDispatchable))
            .chain(by_kind(UnitKind::Storage))
            .map(|x| x.p[t])
            .sum::<f64>()
            - by_kind(UnitKind::Demand).map(|x| x.p[t]).sum::<f64>();
        let up_adj: f64 = sol.units.iter().map(|x| x.r_up[t]).sum();
        let dn_adj: f64 = sol.units.iter().map(|x| x.r_dn[t]).sum();
        let scale = sol.p_da[t].abs().max(gen_none.abs());
        if !close(gen_none - sol.p_da[t], scale, tol) {
            out.push(format!(
                "balance (no activation) violated at t{t}: lhs {gen_none} vs p_DA {}",
                sol.p_da[t]
            ));
        }
        if !close(gen_none + up_adj - sol.p_da[t] - sol.r_sr_up[t], scale, tol) {
            out.push(format!("balance (full up) violated at t{t}"));
        }
        if !close(gen_none - dn_adj - sol.p_da[t] + sol.r_sr_dn[t], scale, tol) {
            out.push(format!("balance (full down) violated at t{t}"));
        }
    }

    for unit in by_kind(UnitKind::Storage) {
        let s = p.storage.iter().find(|x| x.name == unit.name).unwrap();
        let ch = unit.charge.as_ref().unwrap();
        let dis = unit.discharge.as_ref().unwrap();
        let soc = unit.soc.as_ref().unwrap();
        for t in p.grid.periods() {
            if ch[t].min(dis[t]) > tol * (1.0 + s.rated_power()) {
                out.push(format!(
                    "storage {} charges {} and discharges {} simultaneously at t{t}",
                    unit.name, ch[t], dis[t]
                ));
            }
        }
        let mut replay = soc[0];
        for t in 1..p.grid.period_count {
            replay += ch[t] * s.eta_ch * dt - dis[t] * dt / s.eta_dis;
            if !close(replay - soc[t], s.e_max, tol) {
                out.push(format!(
                    "storage {} SoC replay diverges at t{t}: {replay} vs {}",
                    unit.name, soc[t]
                ));
                replay = soc[t];
            }
        }
        if !close(soc[0] - soc[p.grid.period_count - 1], s.e_max, tol) {
            out.push(format!("storage {} daily cycle broken: soc[0] {} vs soc[T-1] {}",
                unit.name, soc[0], soc[p.grid.period_count - 1]));
        }
        if let SigmaMode::Fixed { down, .. } = s.sigma_mode {
            let e_init = s.e_min + down * (s.e_max - s.e_min);
            let first = e_init + ch[0] * s.eta_ch * dt - dis[0] * dt / s.eta_dis;
            if !close(first - soc[0], s.e_max, tol) {
                out.push(format!("storage {} first-period SoC inconsistent with fixed start", unit.name));
            }
        }
    }

    // Reserve caps: ramp-based and rating-based.
    let t_sr = p.system.t_sr_minutes;
    let mut cap_check = |name: &str, r_up: &[f64], r_dn: &[f64], ramp_up: f64, ramp_down: f64, beta_up: f64, beta_down: f64, rated: &dyn Fn(usize) -> f64| {
        for t in p.grid.periods() {
            let caps = [
                (r_up[t], t_sr * ramp_up, "ramp-up"),
                (r_dn[t], t_sr * ramp_down, "ramp-down"),
                (r_up[t], beta_up * rated(t), "rating-up"),
                (r_dn[t], beta_down * rated(t), "rating-down"),
            ];
            for (v, cap, label) in caps {
                if v > cap + tol * (1.0 + cap) {
                    out.push(format!("{name} {label} reserve cap violated at t{t}: {v} > {cap}"));
                }
            }
        }
    };
    for u2 in &p.dispatchable {
        let s = sol.units.iter().find(|x| x.name == u2.name).unwrap();
        cap_check(&u2.name, &s.r_up, &s.r_dn, u2.ramp_up, u2.ramp_down, u2.beta_up, u2.beta_down, &|_| u2.p_max);
    }
    for u2 in &p.non_dispatchable {
        let s = sol.units.iter().find(|x| x.name == u2.name).unwrap();
        cap_check(&u2.name, &s.r_up, &s.r_dn, u2.ramp_up, u2.ramp_down, u2.beta_up, u2.beta_down, &|t| u2.forecast_upper[t]);
    }
    for u2 in &p.demands {
        let s = sol.units.iter().find(|x| x.name == u2.name).unwrap();
        cap_check(&u2.name, &s.r_up, &s.r_dn, u2.ramp_up, u2.ramp_down, u2.beta_up, u2.beta_down, &|_| u2.p_max);
    }
    for u2 in &p.storage {
        let s = sol.units.iter().find(|x| x.name == u2.name).unwrap();
        cap_check(&u2.name, &s.r_up, &s.r_dn, u2.ramp_up, u2.ramp_down, u2.beta_up, u2.beta_down, &|_| u2.rated_power());
    }

    // Robust indicator structure.
    if let (Some(model), Some(detail)) = (u, sol.robust.as_ref()) {
        for unit in &detail.units {
            let budgets = match unit.kind {
                UnitKind::NonDispatchable => {
                    &model.budgets.ndres.iter().find(|(n, _)| n == &unit.unit).unwrap().1
                }
                UnitKind::Demand => {
                    &model.budgets.demand.iter().find(|(n, _)| n == &unit.unit).unwrap().1
                }
                _ => unreachable!("robust detail only covers uncertain units"),
            };
            for t in p.grid.periods() {
                let mut active = 0usize;
                for row in &unit.chi {
                    let v = row[t];
                    if (v - v.round()).abs() > 1e-6 {
                        out.push(format!(
                            "chi of {} not integral at t{t}: {v}",
                            unit.unit
                        ));
                    }
                    if v.round() == 1.0 {
                        active += 1;
                    }
                }
                if active > 1 {
                    out.push(format!("{}: {active} bounds active at t{t}", unit.unit));
                }
            }
            for (k, row) in unit.chi.iter().enumerate() {
                let count: f64 = row.iter().map(|v| v.round()).sum();
                if count as usize != budgets[k] {
                    out.push(format!(
                        "{} bound k{} selects {count} periods, budget is {}",
                        unit.unit,
                        k + 1,
                        budgets[k]
                    ));
                }
            }
        }
    }

    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deterministic::{build_deterministic, BuildOptions};
    use crate::milp::solver::{HighsBackend, SolveBackend, SolveOptions};
    use crate::robust::build_mbro;
    use crate::testkit::*;
    use crate::TimeGrid;

    #[test]
    fn deterministic_extraction_has_zero_robust_cost() {
        let p = table2_portfolio(TimeGrid::new(24, 1.0));
        let (model, ix) = build_deterministic(&p, &BuildOptions::default()).unwrap();
        let out = HighsBackend.solve(&model, &SolveOptions::default());
        let sol = extract_solution(&p, &ix, &out, model.num_vars(), 0.0).unwrap();
        assert_eq!(sol.breakdown.robust_cost, 0.0);
        assert!(
            (sol.breakdown.profit() - sol.objective_value).abs()
                <= 1e-6 * (1.0 + sol.objective_value.abs()),
            "recomputed {} vs objective {}",
            sol.breakdown.profit(),
            sol.objective_value
        );
        assert!(check_physics(&p, None, &sol).is_empty());
    }

    #[test]
    fn infeasible_outcome_cannot_be_extracted() {
        let p = table2_portfolio(TimeGrid::hourly());
        let (model, ix) = build_deterministic(&p, &BuildOptions::default()).unwrap();
        let bogus = crate::milp::solver::SolveOutcome {
            status: crate::milp::solver::SolveStatus::Infeasible,
            objective_value: f64::NAN,
            values: Vec::new(),
            mip_gap: f64::NAN,
            message: String::new(),
        };
        let err = extract_solution(&p, &ix, &bogus, model.num_vars(), 0.0).unwrap_err();
        assert!(matches!(err, ExtractError::NoSolution(_)));
    }

    #[test]
    fn robust_extraction_decomposes_the_objective() {
        let p = table2_portfolio(TimeGrid::new(24, 1.0));
        let u = proportional_uncertainty(&p, &[0.1, 0.2], &[4, 2]);
        let (model, ix) = build_mbro(&p, &u, &BuildOptions::default()).unwrap();
        let out = HighsBackend.solve(&model, &SolveOptions::with_gap(1e-8));
        let sol = extract_robust_solution(&p, &u, &ix, &out, model.num_vars(), 0.0).unwrap();
        assert!(sol.breakdown.robust_cost > 0.0);
        assert!(
            (sol.breakdown.profit() - sol.objective_value).abs()
                <= 1e-6 * (1.0 + sol.objective_value.abs()),
            "recomputed {} vs objective {}",
            sol.breakdown.profit(),
            sol.objective_value
        );
        let violations = check_physics(&p, Some(&u), &sol);
        assert!(violations.is_empty(), "{violations:?}");
    }
}
