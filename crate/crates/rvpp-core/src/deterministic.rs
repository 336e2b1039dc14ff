//! Perfect-foresight scheduling MILP.
//!
//! [`build_deterministic`] turns a validated [`Portfolio`] into a maximization
//! model: market revenues minus unit operating costs, subject to the
//! three-state supply-demand balance, per-technology operating envelopes,
//! storage dynamics and reserve provision caps. The returned [`VarIndex`]
//! maps every (role, unit, period) to its variable handle for extraction.

use thiserror::Error;

use crate::domain::{Portfolio, SigmaMode, Violation};
use crate::milp::{LinExpr, MilpModel, ModelError, Sense, VarRef};

/// Build-time switches.
#[derive(Debug, Clone, Copy)]
pub struct BuildOptions {
    /// Scale the reserve terms inside the daily energy limits by the time
    /// step, curing their dimensional asymmetry. Off by default: the limits
    /// then add reserve power (MW) to an energy sum (MWh) verbatim.
    pub dimensional_fix: bool,
}

#[allow(clippy::derivable_impls)]
impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { dimensional_fix: false }
    }
}

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("portfolio failed validation with {} violation(s): {}", .0.len(), format_violations(.0))]
    InvalidPortfolio(Vec<Violation>),
    #[error("uncertainty model failed validation with {} violation(s): {}", .0.len(), format_violations(.0))]
    InvalidUncertainty(Vec<Violation>),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

/// Per-unit schedule variables shared by every technology.
#[derive(Debug, Clone)]
pub struct UnitVars {
    pub p: Vec<VarRef>,
    pub r_up: Vec<VarRef>,
    pub r_dn: Vec<VarRef>,
}

#[derive(Debug, Clone)]
pub struct DispatchableVars {
    pub unit: UnitVars,
    pub commit: Vec<VarRef>,
}

/// Reserve-energy allocation fraction: either optimized or fixed data.
#[derive(Debug, Clone, Copy)]
pub enum SigmaVar {
    Decision(VarRef),
    Fixed(f64),
}

#[derive(Debug, Clone)]
pub struct StorageVars {
    pub charge: Vec<VarRef>,
    pub discharge: Vec<VarRef>,
    pub net: Vec<VarRef>,
    pub r_up_ch: Vec<VarRef>,
    pub r_up_dis: Vec<VarRef>,
    pub r_dn_ch: Vec<VarRef>,
    pub r_dn_dis: Vec<VarRef>,
    pub r_up: Vec<VarRef>,
    pub r_dn: Vec<VarRef>,
    pub soc: Vec<VarRef>,
    pub commit: Vec<VarRef>,
    pub sigma_up: SigmaVar,
    pub sigma_dn: SigmaVar,
}

/// Map from (role, unit, period) to variable handles, in the builder's
/// canonical registration order.
#[derive(Debug, Clone)]
pub struct VarIndex {
    pub p_da: Vec<VarRef>,
    pub r_sr_up: Vec<VarRef>,
    pub r_sr_dn: Vec<VarRef>,
    pub dispatchable: Vec<DispatchableVars>,
    pub non_dispatchable: Vec<UnitVars>,
    pub demands: Vec<UnitVars>,
    pub storage: Vec<StorageVars>,
}

impl VarIndex {
    /// Closed-form variable count implied by portfolio sizes; the builders
    /// debug-assert against it.
    pub fn expected_var_count(p: &Portfolio) -> usize {
        let t = p.grid.period_count;
        let sigma_vars: usize = p
            .storage
            .iter()
            .map(|s| if matches!(s.sigma_mode, SigmaMode::Decision) { 2 } else { 0 })
            .sum();
        3 * t
            + p.dispatchable.len() * 4 * t
            + p.non_dispatchable.len() * 3 * t
            + p.demands.len() * 3 * t
            + p.storage.len() * 11 * t
            + sigma_vars
    }
}

pub(crate) fn sigma_term(expr: &mut LinExpr, sigma: SigmaVar, coeff: f64, rhs: &mut f64) {
    match sigma {
        SigmaVar::Decision(v) => {
            expr.add(v, coeff);
        }
        SigmaVar::Fixed(value) => *rhs -= coeff * value,
    }
}

/// Registers the deterministic variable block in canonical order.
fn register_vars(model: &mut MilpModel, p: &Portfolio) -> Result<VarIndex, ModelError> {
    let t_count = p.grid.period_count;
    let series = |model: &mut MilpModel, prefix: &str, lo: f64, hi: f64| -> Result<Vec<VarRef>, ModelError> {
        (0..t_count).map(|t| model.continuous(lo, hi, format!("{prefix}.t{t}"))).collect()
    };
    let inf = f64::INFINITY;

    let p_da = series(model, "p.DA", f64::NEG_INFINITY, inf)?;
    let r_sr_up = series(model, "r.SRup", 0.0, inf)?;
    let r_sr_dn = series(model, "r.SRdn", 0.0, inf)?;

    let mut dispatchable = Vec::with_capacity(p.dispatchable.len());
    for u in &p.dispatchable {
        let unit = UnitVars {
            p: series(model, &format!("p.{}", u.name), 0.0, u.p_max)?,
            r_up: series(model, &format!("r_up.{}", u.name), 0.0, inf)?,
            r_dn: series(model, &format!("r_dn.{}", u.name), 0.0, inf)?,
        };
        let commit = (0..t_count)
            .map(|t| model.binary(format!("v.{}.t{t}", u.name)))
            .collect::<Result<_, _>>()?;
        dispatchable.push(DispatchableVars { unit, commit });
    }

    let mut non_dispatchable = Vec::with_capacity(p.non_dispatchable.len());
    for u in &p.non_dispatchable {
        non_dispatchable.push(UnitVars {
            p: series(model, &format!("p.{}", u.name), 0.0, inf)?,
            r_up: series(model, &format!("r_up.{}", u.name), 0.0, inf)?,
            r_dn: series(model, &format!("r_dn.{}", u.name), 0.0, inf)?,
        });
    }

    let mut demands = Vec::with_capacity(p.demands.len());
    for u in &p.demands {
        demands.push(UnitVars {
            p: series(model, &format!("p.{}", u.name), 0.0, u.p_max)?,
            r_up: series(model, &format!("r_up.{}", u.name), 0.0, inf)?,
            r_dn: series(model, &format!("r_dn.{}", u.name), 0.0, inf)?,
        });
    }

    let mut storage = Vec::with_capacity(p.storage.len());
    for u in &p.storage {
        let charge = series(model, &format!("p_ch.{}", u.name), 0.0, u.p_ch_max)?;
        let discharge = series(model, &format!("p_dis.{}", u.name), 0.0, u.p_dis_max)?;
        let net = series(model, &format!("p_net.{}", u.name), -u.p_ch_max, u.p_dis_max)?;
        let r_up_ch = series(model, &format!("r_up_ch.{}", u.name), 0.0, inf)?;
        let r_up_dis = series(model, &format!("r_up_dis.{}", u.name), 0.0, inf)?;
        let r_dn_ch = series(model, &format!("r_dn_ch.{}", u.name), 0.0, inf)?;
        let r_dn_dis = series(model, &format!("r_dn_dis.{}", u.name), 0.0, inf)?;
        let r_up = series(model, &format!("r_up.{}", u.name), 0.0, inf)?;
        let r_dn = series(model, &format!("r_dn.{}", u.name), 0.0, inf)?;
        let soc = series(model, &format!("soc.{}", u.name), u.e_min, u.e_max)?;
        let commit = (0..t_count)
            .map(|t| model.binary(format!("v.{}.t{t}", u.name)))
            .collect::<Result<_, _>>()?;
        let (sigma_up, sigma_dn) = match u.sigma_mode {
            SigmaMode::Decision => (
                SigmaVar::Decision(model.continuous(0.0, 1.0, format!("sigma_up.{}", u.name))?),
                SigmaVar::Decision(model.continuous(0.0, 1.0, format!("sigma_dn.{}", u.name))?),
            ),
            SigmaMode::Fixed { up, down } => (SigmaVar::Fixed(up), SigmaVar::Fixed(down)),
        };
        storage.push(StorageVars {
            charge,
            discharge,
            net,
            r_up_ch,
            r_up_dis,
            r_dn_ch,
            r_dn_dis,
            r_up,
            r_dn,
            soc,
            commit,
            sigma_up,
            sigma_dn,
        });
    }

    Ok(VarIndex { p_da, r_sr_up, r_sr_dn, dispatchable, non_dispatchable, demands, storage })
}

/// Adds the maximization objective: day-ahead energy revenue plus reserve
/// capacity revenue minus marginal operating costs. Storage cost is charged
/// on throughput (charge plus discharge) so that charging is never rewarded.
fn set_base_objective(model: &mut MilpModel, p: &Portfolio, ix: &VarIndex) -> Result<(), ModelError> {
    let dt = p.grid.dt_hours;
    let mut obj = LinExpr::new();
    for t in p.grid.periods() {
        obj.add(ix.p_da[t], p.prices.da_median[t] * dt);
        obj.add(ix.r_sr_up[t], p.prices.sr_up_bar[t]);
        obj.add(ix.r_sr_dn[t], p.prices.sr_down_bar[t]);
    }
    for (u, vars) in p.dispatchable.iter().zip(&ix.dispatchable) {
        for t in p.grid.periods() {
            obj.add(vars.unit.p[t], -u.cost * dt);
        }
    }
    for (u, vars) in p.non_dispatchable.iter().zip(&ix.non_dispatchable) {
        for t in p.grid.periods() {
            obj.add(vars.p[t], -u.cost * dt);
        }
    }
    for (u, vars) in p.storage.iter().zip(&ix.storage) {
        for t in p.grid.periods() {
            obj.add(vars.charge[t], -u.cost * dt);
            obj.add(vars.discharge[t], -u.cost * dt);
        }
    }
    model.set_objective(obj)
}

/// Emits the deterministic constraint system. When `robust_unit_bounds` is
/// set, the uncertainty-affected rows (production upper bound of
/// non-dispatchable units, consumption lower bound of demands) are left out
/// for the robust builder to replace.
pub(crate) fn add_deterministic_constraints(
    model: &mut MilpModel,
    p: &Portfolio,
    ix: &VarIndex,
    opts: &BuildOptions,
    robust_unit_bounds: bool,
) -> Result<(), ModelError> {
    let dt = p.grid.dt_hours;
    let t_sr = p.system.t_sr_minutes;
    let reserve_energy_scale = if opts.dimensional_fix { dt } else { 1.0 };

    // Balance under the three reserve-activation states.
    for t in p.grid.periods() {
        let mut none = LinExpr::new();
        let mut up = LinExpr::new();
        let mut down = LinExpr::new();
        for vars in &ix.non_dispatchable {
            none.add(vars.p[t], 1.0);
            up.add(vars.p[t], 1.0).add(vars.r_up[t], 1.0);
            down.add(vars.p[t], 1.0).add(vars.r_dn[t], -1.0);
        }
        for vars in &ix.storage {
            none.add(vars.net[t], 1.0);
            up.add(vars.net[t], 1.0).add(vars.r_up[t], 1.0);
            down.add(vars.net[t], 1.0).add(vars.r_dn[t], -1.0);
        }
        for vars in &ix.dispatchable {
            none.add(vars.unit.p[t], 1.0);
            up.add(vars.unit.p[t], 1.0).add(vars.unit.r_up[t], 1.0);
            down.add(vars.unit.p[t], 1.0).add(vars.unit.r_dn[t], -1.0);
        }
        for vars in &ix.demands {
            none.add(vars.p[t], -1.0);
            up.add(vars.p[t], -1.0).add(vars.r_up[t], 1.0);
            down.add(vars.p[t], -1.0).add(vars.r_dn[t], -1.0);
        }
        none.add(ix.p_da[t], -1.0);
        up.add(ix.p_da[t], -1.0).add(ix.r_sr_up[t], -1.0);
        down.add(ix.p_da[t], -1.0).add(ix.r_sr_dn[t], 1.0);
        model.add_constraint(none, Sense::Eq, 0.0, format!("eq2.noact.t{t}"))?;
        model.add_constraint(up, Sense::Eq, 0.0, format!("eq2.up.t{t}"))?;
        model.add_constraint(down, Sense::Eq, 0.0, format!("eq2.dn.t{t}"))?;
    }

    // Dispatchable units: commitment-gated envelopes and a daily energy cap.
    for (u, vars) in p.dispatchable.iter().zip(&ix.dispatchable) {
        for t in p.grid.periods() {
            let mut hi = LinExpr::new();
            hi.add(vars.unit.p[t], 1.0).add(vars.unit.r_up[t], 1.0).add(vars.commit[t], -u.p_max);
            model.add_constraint(hi, Sense::Le, 0.0, format!("eq3a.{}.t{t}", u.name))?;
            let mut lo = LinExpr::new();
            lo.add(vars.unit.p[t], 1.0).add(vars.unit.r_dn[t], -1.0).add(vars.commit[t], -u.p_min);
            model.add_constraint(lo, Sense::Ge, 0.0, format!("eq3b.{}.t{t}", u.name))?;
        }
        let mut daily = LinExpr::new();
        for t in p.grid.periods() {
            daily.add(vars.unit.p[t], dt);
            daily.add(vars.unit.r_up[t], reserve_energy_scale);
        }
        model.add_constraint(daily, Sense::Le, u.e_max_daily, format!("eq3c.{}", u.name))?;
    }

    // Non-dispatchable units: forecast-capped output, curtailment floor.
    for (u, vars) in p.non_dispatchable.iter().zip(&ix.non_dispatchable) {
        for t in p.grid.periods() {
            if !robust_unit_bounds {
                let mut hi = LinExpr::new();
                hi.add(vars.p[t], 1.0).add(vars.r_up[t], 1.0);
                model.add_constraint(hi, Sense::Le, u.forecast_upper[t], format!("eq4a.{}.t{t}", u.name))?;
            }
            let mut lo = LinExpr::new();
            lo.add(vars.p[t], 1.0).add(vars.r_dn[t], -1.0);
            model.add_constraint(lo, Sense::Ge, u.p_min, format!("eq4b.{}.t{t}", u.name))?;
        }
    }

    // Demands: consumption window and daily minimum energy.
    for (u, vars) in p.demands.iter().zip(&ix.demands) {
        for t in p.grid.periods() {
            if !robust_unit_bounds {
                let mut lo = LinExpr::new();
                lo.add(vars.p[t], 1.0).add(vars.r_up[t], -1.0);
                model.add_constraint(lo, Sense::Ge, u.forecast_lower[t], format!("eq5a.{}.t{t}", u.name))?;
            }
            let mut hi = LinExpr::new();
            hi.add(vars.p[t], 1.0).add(vars.r_dn[t], 1.0);
            model.add_constraint(hi, Sense::Le, u.p_max, format!("eq5b.{}.t{t}", u.name))?;
        }
        let mut daily = LinExpr::new();
        for t in p.grid.periods() {
            daily.add(vars.p[t], dt);
            daily.add(vars.r_up[t], -reserve_energy_scale);
        }
        model.add_constraint(daily, Sense::Ge, u.e_min_daily, format!("eq5c.{}", u.name))?;
    }

    // Storage: charge/discharge exclusivity, reserve split, SoC dynamics,
    // daily cycle and sigma-budgeted reserve energy.
    for (u, vars) in p.storage.iter().zip(&ix.storage) {
        let t_count = p.grid.period_count;
        for t in p.grid.periods() {
            let mut a = LinExpr::new();
            a.add(vars.charge[t], 1.0).add(vars.r_up_ch[t], -1.0).add(vars.commit[t], -u.p_ch_min);
            model.add_constraint(a, Sense::Ge, 0.0, format!("eq6a.{}.t{t}", u.name))?;
            let mut b = LinExpr::new();
            b.add(vars.charge[t], 1.0).add(vars.r_dn_ch[t], 1.0).add(vars.commit[t], -u.p_ch_max);
            model.add_constraint(b, Sense::Le, 0.0, format!("eq6b.{}.t{t}", u.name))?;
            let mut c = LinExpr::new();
            c.add(vars.discharge[t], 1.0).add(vars.r_up_dis[t], 1.0).add(vars.commit[t], u.p_dis_max);
            model.add_constraint(c, Sense::Le, u.p_dis_max, format!("eq6c.{}.t{t}", u.name))?;
            let mut d = LinExpr::new();
            d.add(vars.discharge[t], 1.0).add(vars.r_dn_dis[t], -1.0).add(vars.commit[t], u.p_dis_min);
            model.add_constraint(d, Sense::Ge, u.p_dis_min, format!("eq6d.{}.t{t}", u.name))?;
            let mut e = LinExpr::new();
            e.add(vars.net[t], 1.0).add(vars.discharge[t], -1.0).add(vars.charge[t], 1.0);
            model.add_constraint(e, Sense::Eq, 0.0, format!("eq6e.{}.t{t}", u.name))?;
            let mut f = LinExpr::new();
            f.add(vars.r_up[t], 1.0).add(vars.r_up_ch[t], -1.0).add(vars.r_up_dis[t], -1.0);
            model.add_constraint(f, Sense::Eq, 0.0, format!("eq6f.{}.t{t}", u.name))?;
            let mut g = LinExpr::new();
            g.add(vars.r_dn[t], 1.0).add(vars.r_dn_ch[t], -1.0).add(vars.r_dn_dis[t], -1.0);
            model.add_constraint(g, Sense::Eq, 0.0, format!("eq6g.{}.t{t}", u.name))?;
        }
        for t in 1..t_count {
            let mut h = LinExpr::new();
            h.add(vars.soc[t], 1.0)
                .add(vars.soc[t - 1], -1.0)
                .add(vars.charge[t], -u.eta_ch * dt)
                .add(vars.discharge[t], dt / u.eta_dis);
            model.add_constraint(h, Sense::Eq, 0.0, format!("eq6h.{}.t{t}", u.name))?;
        }
        // With operator-fixed fractions the pre-horizon level is pinned to
        // the lower corridor edge and the recursion covers the first period
        // too; in decision mode the first level is tied only through the
        // daily cycle.
        if let SigmaMode::Fixed { down, .. } = u.sigma_mode {
            let e_init = u.e_min + down * (u.e_max - u.e_min);
            let mut h0 = LinExpr::new();
            h0.add(vars.soc[0], 1.0)
                .add(vars.charge[0], -u.eta_ch * dt)
                .add(vars.discharge[0], dt / u.eta_dis);
            model.add_constraint(h0, Sense::Eq, e_init, format!("eq6h.{}.t0", u.name))?;
        }
        if t_count > 1 {
            let mut cyc = LinExpr::new();
            cyc.add(vars.soc[0], 1.0).add(vars.soc[t_count - 1], -1.0);
            model.add_constraint(cyc, Sense::Eq, 0.0, format!("eq6i.{}", u.name))?;
        }
        let span = u.e_max - u.e_min;
        {
            let mut k = LinExpr::new();
            let mut rhs = 0.0;
            for t in p.grid.periods() {
                k.add(vars.r_up[t], dt / u.eta_dis);
            }
            sigma_term(&mut k, vars.sigma_up, -span, &mut rhs);
            model.add_constraint(k, Sense::Le, rhs, format!("eq6k.{}", u.name))?;
        }
        {
            let mut l = LinExpr::new();
            let mut rhs = 0.0;
            for t in p.grid.periods() {
                l.add(vars.r_dn[t], u.eta_ch * dt);
            }
            sigma_term(&mut l, vars.sigma_dn, -span, &mut rhs);
            model.add_constraint(l, Sense::Le, rhs, format!("eq6l.{}", u.name))?;
        }
        // SoC corridor, shrunk on both sides by the downward fraction.
        for t in p.grid.periods() {
            let mut lo = LinExpr::new();
            let mut lo_rhs = u.e_min;
            lo.add(vars.soc[t], 1.0);
            sigma_term(&mut lo, vars.sigma_dn, -span, &mut lo_rhs);
            model.add_constraint(lo, Sense::Ge, lo_rhs, format!("eq6m.lo.{}.t{t}", u.name))?;
            let mut hi = LinExpr::new();
            let mut hi_rhs = u.e_max;
            hi.add(vars.soc[t], 1.0);
            sigma_term(&mut hi, vars.sigma_dn, span, &mut hi_rhs);
            model.add_constraint(hi, Sense::Le, hi_rhs, format!("eq6m.hi.{}.t{t}", u.name))?;
        }
    }

    // Reserve provision caps: ramp-based and rating-based, for every asset.
    let mut cap = |model: &mut MilpModel,
                   name: &str,
                   r_up: &[VarRef],
                   r_dn: &[VarRef],
                   ramp_up: f64,
                   ramp_down: f64,
                   beta_up: f64,
                   beta_down: f64,
                   rated: &dyn Fn(usize) -> f64|
     -> Result<(), ModelError> {
        for t in p.grid.periods() {
            model.add_constraint(
                LinExpr::term(r_up[t], 1.0),
                Sense::Le,
                t_sr * ramp_up,
                format!("eq7a.{name}.t{t}"),
            )?;
            model.add_constraint(
                LinExpr::term(r_dn[t], 1.0),
                Sense::Le,
                t_sr * ramp_down,
                format!("eq7b.{name}.t{t}"),
            )?;
            model.add_constraint(
                LinExpr::term(r_up[t], 1.0),
                Sense::Le,
                beta_up * rated(t),
                format!("eq7c.{name}.t{t}"),
            )?;
            model.add_constraint(
                LinExpr::term(r_dn[t], 1.0),
                Sense::Le,
                beta_down * rated(t),
                format!("eq7d.{name}.t{t}"),
            )?;
        }
        Ok(())
    };
    for (u, vars) in p.dispatchable.iter().zip(&ix.dispatchable) {
        cap(
            model,
            &u.name,
            &vars.unit.r_up,
            &vars.unit.r_dn,
            u.ramp_up,
            u.ramp_down,
            u.beta_up,
            u.beta_down,
            &|_| u.p_max,
        )?;
    }
    for (u, vars) in p.non_dispatchable.iter().zip(&ix.non_dispatchable) {
        cap(
            model,
            &u.name,
            &vars.r_up,
            &vars.r_dn,
            u.ramp_up,
            u.ramp_down,
            u.beta_up,
            u.beta_down,
            &|t| u.forecast_upper[t],
        )?;
    }
    for (u, vars) in p.demands.iter().zip(&ix.demands) {
        cap(
            model,
            &u.name,
            &vars.r_up,
            &vars.r_dn,
            u.ramp_up,
            u.ramp_down,
            u.beta_up,
            u.beta_down,
            &|_| u.p_max,
        )?;
    }
    for (u, vars) in p.storage.iter().zip(&ix.storage) {
        cap(
            model,
            &u.name,
            &vars.r_up,
            &vars.r_dn,
            u.ramp_up,
            u.ramp_down,
            u.beta_up,
            u.beta_down,
            &|_| u.rated_power(),
        )?;
    }

    Ok(())
}

pub(crate) fn build_skeleton(
    p: &Portfolio,
    opts: &BuildOptions,
    robust_unit_bounds: bool,
) -> Result<(MilpModel, VarIndex), BuildError> {
    let violations = crate::domain::validate_portfolio(p);
    if !violations.is_empty() {
        return Err(BuildError::InvalidPortfolio(violations));
    }
    let mut model = MilpModel::new();
    let ix = register_vars(&mut model, p)?;
    debug_assert_eq!(model.num_vars(), VarIndex::expected_var_count(p));
    set_base_objective(&mut model, p, &ix)?;
    add_deterministic_constraints(&mut model, p, &ix, opts, robust_unit_bounds)?;
    Ok((model, ix))
}

/// Builds the perfect-foresight model for a validated portfolio.
pub fn build_deterministic(p: &Portfolio, opts: &BuildOptions) -> Result<(MilpModel, VarIndex), BuildError> {
    build_skeleton(p, opts, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::solver::{HighsBackend, SolveBackend, SolveOptions, SolveStatus};
    use crate::testkit::{empty_portfolio, flat, single_ndres_portfolio, table2_portfolio};
    use crate::TimeGrid;

    fn solve(model: &MilpModel) -> crate::milp::solver::SolveOutcome {
        HighsBackend.solve(model, &SolveOptions::default())
    }

    #[test]
    fn variable_count_matches_closed_form() {
        let p = table2_portfolio(TimeGrid::quarter_hourly());
        let (model, _) = build_deterministic(&p, &BuildOptions::default()).unwrap();
        assert_eq!(model.num_vars(), VarIndex::expected_var_count(&p));
    }

    #[test]
    fn hydro_up_reserve_is_capped_by_ramp_and_beta() {
        let p = table2_portfolio(TimeGrid::quarter_hourly());
        let (model, _) = build_deterministic(&p, &BuildOptions::default()).unwrap();
        // ramp cap: T_sr * R_up = 15 * 10 = 150; rating cap: 0.5 * 50 = 25
        let ramp = model.constraints().iter().find(|c| c.tag == "eq7a.hydro.t0").unwrap();
        assert_eq!(ramp.rhs, 150.0);
        let beta = model.constraints().iter().find(|c| c.tag == "eq7c.hydro.t0").unwrap();
        assert_eq!(beta.rhs, 25.0);
    }

    #[test]
    fn zero_asset_portfolio_forces_flat_zero_bids() {
        let p = empty_portfolio(TimeGrid::hourly());
        let (model, ix) = build_deterministic(&p, &BuildOptions::default()).unwrap();
        let out = solve(&model);
        assert_eq!(out.status, SolveStatus::Optimal);
        for t in p.grid.periods() {
            assert!(out.value(ix.p_da[t]).abs() < 1e-9);
            assert!(out.value(ix.r_sr_up[t]).abs() < 1e-9);
            assert!(out.value(ix.r_sr_dn[t]).abs() < 1e-9);
        }
    }

    #[test]
    fn single_ndres_sells_full_forecast_when_profitable() {
        let grid = TimeGrid::hourly();
        let p = single_ndres_portfolio(grid, flat(24, 10.0), 50.0, 5.0);
        let (model, ix) = build_deterministic(&p, &BuildOptions::default()).unwrap();
        let out = solve(&model);
        assert_eq!(out.status, SolveStatus::Optimal);
        for t in p.grid.periods() {
            assert!((out.value(ix.p_da[t]) - 10.0).abs() < 1e-6, "period {t}");
        }
        // 24h * 10 MW * (50 - 5) €/MWh
        assert!((out.objective_value - 24.0 * 10.0 * 45.0).abs() < 1e-4);
    }

    #[test]
    fn invalid_portfolio_is_rejected() {
        let mut p = table2_portfolio(TimeGrid::quarter_hourly());
        p.storage[0].eta_ch = 0.0;
        assert!(matches!(
            build_deterministic(&p, &BuildOptions::default()),
            Err(BuildError::InvalidPortfolio(_))
        ));
    }

    #[test]
    fn dimensional_fix_scales_reserve_terms_in_daily_limits() {
        let p = table2_portfolio(TimeGrid::quarter_hourly());
        let build = |fix: bool| {
            let (model, ix) =
                build_deterministic(&p, &BuildOptions { dimensional_fix: fix }).unwrap();
            let row = model
                .constraints()
                .iter()
                .find(|c| c.tag == "eq3c.hydro")
                .unwrap()
                .clone();
            let r_up0 = ix.dispatchable[0].unit.r_up[0];
            row.expr.terms().find(|(v, _)| *v == r_up0).unwrap().1
        };
        assert_eq!(build(false), 1.0);
        assert_eq!(build(true), 0.25);
    }
}
