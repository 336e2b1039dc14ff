//! Multi-bound budgeted-uncertainty MILP.
//!
//! [`build_mbro`] extends the deterministic skeleton with worst-case price
//! penalties and per-unit capacity tightening derived from the dual of the
//! inner worst-case selection problems. Uncertainty is described by K nested
//! deviation bounds per parameter, each with an integer period budget; the
//! single-bound classic model is the K = 1 special case.
//!
//! For the unit blocks the capacity reduction at period `t` is the dual term
//! `sum_k chi[k][t] * phi[k] + zeta[t]`, with the products linearized through
//! the non-negative `y` variables and a per-unit big-M. Charging `zeta` at
//! every period (not only at indicator-selected ones) is what makes the
//! realized total tightening equal the worst-case enumeration value, which
//! the oracle suite certifies.

use thiserror::Error;

use crate::deterministic::{
    build_skeleton, BuildError, BuildOptions, VarIndex,
};
use crate::domain::{Portfolio, Violation};
use crate::milp::{LinExpr, MilpModel, Sense, VarRef};

/// Per-bound, per-period deviation magnitudes for every uncertain parameter
/// family. All matrices are indexed `[bound k][period t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundedDeviation {
    /// Downward day-ahead price deviation (worst case when selling), €/MWh.
    pub da_down: Vec<Vec<f64>>,
    /// Upward day-ahead price deviation (worst case when buying), €/MWh.
    pub da_up: Vec<Vec<f64>>,
    /// Downward deviation of the upward-reserve price, €/MW.
    pub sr_up_down: Vec<Vec<f64>>,
    /// Downward deviation of the downward-reserve price, €/MW.
    pub sr_dn_down: Vec<Vec<f64>>,
    /// Production shortfall per non-dispatchable unit, MW.
    pub ndres_down: Vec<UnitDeviation>,
    /// Consumption excess per demand, MW.
    pub demand_up: Vec<UnitDeviation>,
}

/// Deviation matrix of one uncertain unit.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitDeviation {
    pub unit: String,
    /// `[bound k][period t]` magnitudes, MW.
    pub by_bound: Vec<Vec<f64>>,
}

/// Integer period budgets per uncertain-parameter family and bound.
#[derive(Debug, Clone, PartialEq)]
pub struct Budgets {
    pub da: Vec<usize>,
    pub sr_up: Vec<usize>,
    pub sr_dn: Vec<usize>,
    /// Per non-dispatchable unit, aligned with the portfolio.
    pub ndres: Vec<(String, Vec<usize>)>,
    /// Per demand, aligned with the portfolio.
    pub demand: Vec<(String, Vec<usize>)>,
}

impl Budgets {
    /// The same per-bound budget vector applied to every family.
    pub fn uniform(p: &Portfolio, per_k: &[usize]) -> Self {
        Budgets {
            da: per_k.to_vec(),
            sr_up: per_k.to_vec(),
            sr_dn: per_k.to_vec(),
            ndres: p
                .non_dispatchable
                .iter()
                .map(|u| (u.name.clone(), per_k.to_vec()))
                .collect(),
            demand: p.demands.iter().map(|u| (u.name.clone(), per_k.to_vec())).collect(),
        }
    }

    /// Collapses each family to a single bound carrying the summed budget.
    pub fn summed_single_bound(&self) -> Self {
        let sum = |v: &[usize]| vec![v.iter().sum::<usize>()];
        Budgets {
            da: sum(&self.da),
            sr_up: sum(&self.sr_up),
            sr_dn: sum(&self.sr_dn),
            ndres: self.ndres.iter().map(|(n, v)| (n.clone(), sum(v))).collect(),
            demand: self.demand.iter().map(|(n, v)| (n.clone(), sum(v))).collect(),
        }
    }
}

/// Full uncertainty description: K nested bounds, their magnitudes and
/// budgets.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyModel {
    pub k_count: usize,
    pub deviations: BoundedDeviation,
    pub budgets: Budgets,
}

impl UncertaintyModel {
    /// Single-bound model keeping only the outermost (most extreme) bound of
    /// every deviation family.
    pub fn outermost_single_bound(&self) -> BoundedDeviation {
        let last = |m: &Vec<Vec<f64>>| vec![m[self.k_count - 1].clone()];
        BoundedDeviation {
            da_down: last(&self.deviations.da_down),
            da_up: last(&self.deviations.da_up),
            sr_up_down: last(&self.deviations.sr_up_down),
            sr_dn_down: last(&self.deviations.sr_dn_down),
            ndres_down: self
                .deviations
                .ndres_down
                .iter()
                .map(|u| UnitDeviation { unit: u.unit.clone(), by_bound: last(&u.by_bound) })
                .collect(),
            demand_up: self
                .deviations
                .demand_up
                .iter()
                .map(|u| UnitDeviation { unit: u.unit.clone(), by_bound: last(&u.by_bound) })
                .collect(),
        }
    }

    /// Raises each bound to at least the previous one, guaranteeing the
    /// nested-bound invariant.
    pub fn with_enforced_nesting(mut self) -> Self {
        let fix = |m: &mut Vec<Vec<f64>>| {
            for k in 1..m.len() {
                for t in 0..m[k].len() {
                    if m[k][t] < m[k - 1][t] {
                        m[k][t] = m[k - 1][t];
                    }
                }
            }
        };
        fix(&mut self.deviations.da_down);
        fix(&mut self.deviations.da_up);
        fix(&mut self.deviations.sr_up_down);
        fix(&mut self.deviations.sr_dn_down);
        for u in &mut self.deviations.ndres_down {
            fix(&mut u.by_bound);
        }
        for u in &mut self.deviations.demand_up {
            fix(&mut u.by_bound);
        }
        self
    }

    /// Largest unit-block deviation magnitude across all families.
    pub fn max_unit_deviation(&self) -> f64 {
        let mut m: f64 = 0.0;
        for u in self.deviations.ndres_down.iter().chain(&self.deviations.demand_up) {
            for row in &u.by_bound {
                for v in row {
                    m = m.max(*v);
                }
            }
        }
        m
    }
}

/// Default indicator-linearization constant: twice the largest unit-block
/// deviation, with a floor of 1 for degenerate all-zero models. The dual
/// values the constant must dominate never exceed the largest deviation, so
/// the factor of two leaves headroom without hurting the relaxation. Price
/// blocks carry no indicator and need no constant at all.
pub fn default_big_m(u: &UncertaintyModel) -> f64 {
    let m = 2.0 * u.max_unit_deviation();
    if m > 0.0 {
        m
    } else {
        1.0
    }
}

fn family_big_m(by_bound: &[Vec<f64>], override_m: Option<f64>) -> f64 {
    if let Some(m) = override_m {
        return m;
    }
    let max_dev = by_bound
        .iter()
        .flat_map(|row| row.iter().copied())
        .fold(0.0_f64, f64::max);
    if max_dev > 0.0 {
        2.0 * max_dev
    } else {
        1.0
    }
}

/// Dual variables of one price family.
#[derive(Debug, Clone)]
pub struct PriceDuals {
    /// Per bound.
    pub phi: Vec<VarRef>,
    /// Per period.
    pub zeta: Vec<VarRef>,
}

/// Robust variable block of one uncertain unit.
#[derive(Debug, Clone)]
pub struct RobustUnitVars {
    /// Worst-case indicator, `[bound k][period t]`.
    pub chi: Vec<Vec<VarRef>>,
    /// Linearized `chi * phi` product, `[bound k][period t]`.
    pub y: Vec<Vec<VarRef>>,
    /// Per bound.
    pub phi: Vec<VarRef>,
    /// Per period.
    pub zeta: Vec<VarRef>,
    /// Constant used by this unit's indicator linearization.
    pub big_m: f64,
}

/// Extends [`VarIndex`] with every robust-block symbol.
#[derive(Debug, Clone)]
pub struct RobustVarIndex {
    pub base: VarIndex,
    /// Day-ahead auxiliary exposure, `[bound k][period t]`.
    pub y_da: Vec<Vec<VarRef>>,
    pub da: PriceDuals,
    pub sr_up: PriceDuals,
    pub sr_dn: PriceDuals,
    /// Aligned with the portfolio's non-dispatchable units.
    pub ndres: Vec<RobustUnitVars>,
    /// Aligned with the portfolio's demands.
    pub demand: Vec<RobustUnitVars>,
}

#[derive(Debug, Error)]
#[error("unknown strategy/variant combination")]
pub struct StrategyError;

/// Operator conservatism presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Deterministic,
    Optimistic,
    Balanced,
    Pessimistic,
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Deterministic => "deterministic",
            Strategy::Optimistic => "optimistic",
            Strategy::Balanced => "balanced",
            Strategy::Pessimistic => "pessimistic",
        }
    }
}

/// Which robust family a budget preset belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RobustVariant {
    Mbro,
    Ro15,
    RoHourly,
}

/// Per-bound budget presets for the three operator strategies.
pub fn table3_budget_values(
    strategy: Strategy,
    variant: RobustVariant,
) -> Result<Vec<usize>, StrategyError> {
    let v = match (strategy, variant) {
        (Strategy::Optimistic, RobustVariant::Mbro) => vec![16, 4, 2],
        (Strategy::Balanced, RobustVariant::Mbro) => vec![32, 8, 4],
        (Strategy::Pessimistic, RobustVariant::Mbro) => vec![48, 12, 6],
        (Strategy::Optimistic, RobustVariant::Ro15) => vec![16],
        (Strategy::Balanced, RobustVariant::Ro15) => vec![32],
        (Strategy::Pessimistic, RobustVariant::Ro15) => vec![48],
        (Strategy::Optimistic, RobustVariant::RoHourly) => vec![4],
        (Strategy::Balanced, RobustVariant::RoHourly) => vec![8],
        (Strategy::Pessimistic, RobustVariant::RoHourly) => vec![12],
        (Strategy::Deterministic, _) => return Err(StrategyError),
    };
    Ok(v)
}

/// The preset budgets applied uniformly to every uncertain-parameter family.
pub fn strategy_budgets(
    strategy: Strategy,
    variant: RobustVariant,
    p: &Portfolio,
) -> Result<Budgets, StrategyError> {
    Ok(Budgets::uniform(p, &table3_budget_values(strategy, variant)?))
}

fn check_matrix(
    out: &mut Vec<Violation>,
    path: &str,
    m: &[Vec<f64>],
    k_count: usize,
    t_count: usize,
) {
    if m.len() != k_count {
        out.push(Violation {
            path: path.into(),
            message: format!("expected {k_count} bounds, got {}", m.len()),
        });
        return;
    }
    for (k, row) in m.iter().enumerate() {
        if row.len() != t_count {
            out.push(Violation {
                path: format!("{path}[k{}]", k + 1),
                message: format!("expected {t_count} periods, got {}", row.len()),
            });
            continue;
        }
        for (t, v) in row.iter().enumerate() {
            if !(v.is_finite() && *v >= 0.0) {
                out.push(Violation {
                    path: format!("{path}[k{}][{t}]", k + 1),
                    message: format!("deviation must be finite and >= 0, got {v}"),
                });
            }
            if k > 0 && m[k - 1].len() == t_count && *v < m[k - 1][t] {
                out.push(Violation {
                    path: format!("{path}[k{}][{t}]", k + 1),
                    message: format!(
                        "bounds must be nested: {v} is below bound k{} value {}",
                        k,
                        m[k - 1][t]
                    ),
                });
            }
        }
    }
}

fn check_budget_vec(out: &mut Vec<Violation>, path: &str, v: &[usize], k_count: usize, t_count: usize) {
    if v.len() != k_count {
        out.push(Violation {
            path: path.into(),
            message: format!("expected {k_count} bound budgets, got {}", v.len()),
        });
        return;
    }
    let total: usize = v.iter().sum();
    if total > t_count {
        out.push(Violation {
            path: path.into(),
            message: format!("budgets sum to {total}, exceeding the {t_count}-period horizon"),
        });
    }
}

fn check_unit_alignment<T>(
    out: &mut Vec<Violation>,
    path: &str,
    entries: &[T],
    names: &[String],
    name_of: impl Fn(&T) -> &str,
) {
    if entries.len() != names.len() {
        out.push(Violation {
            path: path.into(),
            message: format!("expected {} unit entries, got {}", names.len(), entries.len()),
        });
        return;
    }
    for (e, expected) in entries.iter().zip(names) {
        if name_of(e) != expected {
            out.push(Violation {
                path: path.into(),
                message: format!("unit order mismatch: expected {expected:?}, got {:?}", name_of(e)),
            });
        }
    }
}

/// Checks shapes, signs, nesting, budget feasibility and the day-ahead
/// asymmetric-interval requirement (a positive downward deviation needs a
/// positive upward one for the exposure ratio to exist).
pub fn validate_uncertainty(p: &Portfolio, u: &UncertaintyModel) -> Vec<Violation> {
    let mut out = Vec::new();
    let (k, t) = (u.k_count, p.grid.period_count);
    if k == 0 {
        out.push(Violation { path: "k_count".into(), message: "must be at least 1".into() });
        return out;
    }
    check_matrix(&mut out, "deviations.da_down", &u.deviations.da_down, k, t);
    check_matrix(&mut out, "deviations.da_up", &u.deviations.da_up, k, t);
    check_matrix(&mut out, "deviations.sr_up_down", &u.deviations.sr_up_down, k, t);
    check_matrix(&mut out, "deviations.sr_dn_down", &u.deviations.sr_dn_down, k, t);

    if u.deviations.da_down.len() == k && u.deviations.da_up.len() == k {
        for ki in 0..k {
            if u.deviations.da_down[ki].len() != t || u.deviations.da_up[ki].len() != t {
                continue;
            }
            for ti in 0..t {
                if u.deviations.da_down[ki][ti] > 0.0 && u.deviations.da_up[ki][ti] <= 0.0 {
                    out.push(Violation {
                        path: format!("deviations.da_up[k{}][{ti}]", ki + 1),
                        message: "must be positive wherever da_down is positive".into(),
                    });
                }
            }
        }
    }

    let ndres_names: Vec<String> = p.non_dispatchable.iter().map(|x| x.name.clone()).collect();
    let demand_names: Vec<String> = p.demands.iter().map(|x| x.name.clone()).collect();
    check_unit_alignment(&mut out, "deviations.ndres_down", &u.deviations.ndres_down, &ndres_names, |e| &e.unit);
    check_unit_alignment(&mut out, "deviations.demand_up", &u.deviations.demand_up, &demand_names, |e| &e.unit);
    for unit in &u.deviations.ndres_down {
        check_matrix(&mut out, &format!("deviations.ndres_down({})", unit.unit), &unit.by_bound, k, t);
    }
    for unit in &u.deviations.demand_up {
        check_matrix(&mut out, &format!("deviations.demand_up({})", unit.unit), &unit.by_bound, k, t);
    }

    check_budget_vec(&mut out, "budgets.da", &u.budgets.da, k, t);
    check_budget_vec(&mut out, "budgets.sr_up", &u.budgets.sr_up, k, t);
    check_budget_vec(&mut out, "budgets.sr_dn", &u.budgets.sr_dn, k, t);
    check_unit_alignment(&mut out, "budgets.ndres", &u.budgets.ndres, &ndres_names, |e| &e.0);
    check_unit_alignment(&mut out, "budgets.demand", &u.budgets.demand, &demand_names, |e| &e.0);
    for (name, v) in &u.budgets.ndres {
        check_budget_vec(&mut out, &format!("budgets.ndres({name})"), v, k, t);
    }
    for (name, v) in &u.budgets.demand {
        check_budget_vec(&mut out, &format!("budgets.demand({name})"), v, k, t);
    }
    out
}

fn register_price_duals(
    model: &mut MilpModel,
    label: &str,
    k_count: usize,
    t_count: usize,
) -> Result<PriceDuals, crate::milp::ModelError> {
    let phi = (0..k_count)
        .map(|k| model.nonneg(format!("phi.{label}.k{}", k + 1)))
        .collect::<Result<Vec<_>, _>>()?;
    let zeta = (0..t_count)
        .map(|t| model.nonneg(format!("zeta.{label}.t{t}")))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PriceDuals { phi, zeta })
}

/// Builds the single-level multi-bound robust model. The deterministic
/// skeleton is kept intact except for the uncertainty-affected unit bounds,
/// which are replaced by their tightened robust counterparts.
pub fn build_mbro(
    p: &Portfolio,
    u: &UncertaintyModel,
    opts: &BuildOptions,
) -> Result<(MilpModel, RobustVarIndex), BuildError> {
    let uv = validate_uncertainty(p, u);
    if !uv.is_empty() {
        return Err(BuildError::InvalidUncertainty(uv));
    }
    let (mut model, base) = build_skeleton(p, opts, true)?;
    let k_count = u.k_count;
    let t_count = p.grid.period_count;
    let dt = p.grid.dt_hours;

    // Robust variable block, registered after the deterministic variables.
    let y_da: Vec<Vec<VarRef>> = (0..k_count)
        .map(|k| {
            (0..t_count)
                .map(|t| model.nonneg(format!("y.DA.k{}.t{t}", k + 1)))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;
    let da = register_price_duals(&mut model, "DA", k_count, t_count)?;
    let sr_up = register_price_duals(&mut model, "SRup", k_count, t_count)?;
    let sr_dn = register_price_duals(&mut model, "SRdn", k_count, t_count)?;

    let mut register_unit = |model: &mut MilpModel, unit: &UnitDeviation| -> Result<RobustUnitVars, crate::milp::ModelError> {
        let name = &unit.unit;
        let chi = (0..k_count)
            .map(|k| {
                (0..t_count)
                    .map(|t| model.binary(format!("chi.{name}.k{}.t{t}", k + 1)))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        let y = (0..k_count)
            .map(|k| {
                (0..t_count)
                    .map(|t| model.nonneg(format!("y.{name}.k{}.t{t}", k + 1)))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        let phi = (0..k_count)
            .map(|k| model.nonneg(format!("phi.{name}.k{}", k + 1)))
            .collect::<Result<Vec<_>, _>>()?;
        let zeta = (0..t_count)
            .map(|t| model.nonneg(format!("zeta.{name}.t{t}")))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(RobustUnitVars {
            chi,
            y,
            phi,
            zeta,
            big_m: family_big_m(&unit.by_bound, p.system.big_m),
        })
    };
    let ndres: Vec<RobustUnitVars> = u
        .deviations
        .ndres_down
        .iter()
        .map(|unit| register_unit(&mut model, unit))
        .collect::<Result<_, _>>()?;
    let demand: Vec<RobustUnitVars> = u
        .deviations
        .demand_up
        .iter()
        .map(|unit| register_unit(&mut model, unit))
        .collect::<Result<_, _>>()?;

    // Worst-case revenue-loss penalty.
    let mut penalty = LinExpr::new();
    for (fam, duals) in [
        (&u.budgets.da, &da),
        (&u.budgets.sr_up, &sr_up),
        (&u.budgets.sr_dn, &sr_dn),
    ] {
        for k in 0..k_count {
            penalty.add(duals.phi[k], -(fam[k] as f64));
        }
        for t in 0..t_count {
            penalty.add(duals.zeta[t], -1.0);
        }
    }
    model.add_objective(&penalty)?;

    // Day-ahead exposure window: y bounds the traded energy above, and the
    // deviation ratio bounds it below so that buying exposure is priced at
    // the upward deviation.
    for k in 0..k_count {
        for t in 0..t_count {
            let down = u.deviations.da_down[k][t];
            let up = u.deviations.da_up[k][t];
            if down > 0.0 {
                let mut lo = LinExpr::new();
                lo.add(y_da[k][t], down / up).add(base.p_da[t], dt);
                model.add_constraint(lo, Sense::Ge, 0.0, format!("eq12b.lo.k{}.t{t}", k + 1))?;
            }
            let mut hi = LinExpr::new();
            hi.add(base.p_da[t], dt).add(y_da[k][t], -1.0);
            model.add_constraint(hi, Sense::Le, 0.0, format!("eq12b.hi.k{}.t{t}", k + 1))?;
        }
    }
    // Dual feasibility of the price protection problems.
    for k in 0..k_count {
        for t in 0..t_count {
            let mut c = LinExpr::new();
            c.add(da.phi[k], 1.0)
                .add(da.zeta[t], 1.0)
                .add(y_da[k][t], -u.deviations.da_down[k][t]);
            model.add_constraint(c, Sense::Ge, 0.0, format!("eq12c.k{}.t{t}", k + 1))?;
            let mut d = LinExpr::new();
            d.add(sr_up.phi[k], 1.0)
                .add(sr_up.zeta[t], 1.0)
                .add(base.r_sr_up[t], -u.deviations.sr_up_down[k][t]);
            model.add_constraint(d, Sense::Ge, 0.0, format!("eq12d.k{}.t{t}", k + 1))?;
            let mut e = LinExpr::new();
            e.add(sr_dn.phi[k], 1.0)
                .add(sr_dn.zeta[t], 1.0)
                .add(base.r_sr_dn[t], -u.deviations.sr_dn_down[k][t]);
            model.add_constraint(e, Sense::Ge, 0.0, format!("eq12e.k{}.t{t}", k + 1))?;
        }
    }

    // Robust capacity blocks. `dir` is +1 for production upper bounds
    // (tightening subtracts capacity) and -1 for consumption lower bounds
    // (tightening adds required consumption).
    let mut unit_block = |model: &mut MilpModel,
                          tag_cap: &str,
                          tags: [&str; 5],
                          unit_name: &str,
                          rvars: &RobustUnitVars,
                          budgets: &[usize],
                          dev: &UnitDeviation,
                          cap_expr: &mut dyn FnMut(usize) -> LinExpr,
                          cap_rhs: &dyn Fn(usize) -> f64,
                          sense: Sense|
     -> Result<(), BuildError> {
        for t in 0..t_count {
            // capacity row with dual-term tightening chi*phi + zeta
            let mut row = cap_expr(t);
            let sgn = if sense == Sense::Le { 1.0 } else { -1.0 };
            for k in 0..k_count {
                row.add(rvars.y[k][t], sgn);
            }
            row.add(rvars.zeta[t], sgn);
            model.add_constraint(row, sense, cap_rhs(t), format!("{tag_cap}.{unit_name}.t{t}"))?;
        }
        let m = rvars.big_m;
        for k in 0..k_count {
            for t in 0..t_count {
                let mut lo = LinExpr::new();
                lo.add(rvars.y[k][t], 1.0).add(rvars.phi[k], -1.0).add(rvars.chi[k][t], -m);
                model.add_constraint(
                    lo,
                    Sense::Ge,
                    -m,
                    format!("{}.{unit_name}.k{}.t{t}", tags[0], k + 1),
                )?;
                let mut hi = LinExpr::new();
                hi.add(rvars.y[k][t], 1.0).add(rvars.chi[k][t], -m);
                model.add_constraint(
                    hi,
                    Sense::Le,
                    0.0,
                    format!("{}.{unit_name}.k{}.t{t}", tags[1], k + 1),
                )?;
            }
        }
        for t in 0..t_count {
            let mut excl = LinExpr::new();
            for k in 0..k_count {
                excl.add(rvars.chi[k][t], 1.0);
            }
            model.add_constraint(excl, Sense::Le, 1.0, format!("{}.{unit_name}.t{t}", tags[2]))?;
        }
        for k in 0..k_count {
            let mut budget = LinExpr::new();
            for t in 0..t_count {
                budget.add(rvars.chi[k][t], 1.0);
            }
            model.add_constraint(
                budget,
                Sense::Eq,
                budgets[k] as f64,
                format!("{}.{unit_name}.k{}", tags[3], k + 1),
            )?;
        }
        for k in 0..k_count {
            for t in 0..t_count {
                let mut dom = LinExpr::new();
                dom.add(rvars.phi[k], 1.0).add(rvars.zeta[t], 1.0);
                model.add_constraint(
                    dom,
                    Sense::Ge,
                    dev.by_bound[k][t],
                    format!("{}.{unit_name}.k{}.t{t}", tags[4], k + 1),
                )?;
            }
        }
        Ok(())
    };

    for (i, unit) in p.non_dispatchable.iter().enumerate() {
        let vars = base.non_dispatchable[i].clone();
        let budgets = &u.budgets.ndres[i].1;
        unit_block(
            &mut model,
            "eq12f",
            ["eq12g.lo", "eq12g.hi", "eq12h", "eq12i", "eq12j"],
            &unit.name,
            &ndres[i],
            budgets,
            &u.deviations.ndres_down[i],
            &mut |t| {
                let mut e = LinExpr::new();
                e.add(vars.p[t], 1.0).add(vars.r_up[t], 1.0);
                e
            },
            &|t| unit.forecast_upper[t],
            Sense::Le,
        )?;
    }
    for (i, unit) in p.demands.iter().enumerate() {
        let vars = base.demands[i].clone();
        let budgets = &u.budgets.demand[i].1;
        unit_block(
            &mut model,
            "eq12k",
            ["eq12l.lo", "eq12l.hi", "eq12m", "eq12n", "eq12o"],
            &unit.name,
            &demand[i],
            budgets,
            &u.deviations.demand_up[i],
            &mut |t| {
                let mut e = LinExpr::new();
                e.add(vars.p[t], 1.0).add(vars.r_up[t], -1.0);
                e
            },
            &|t| unit.forecast_lower[t],
            Sense::Ge,
        )?;
    }

    let index = RobustVarIndex { base, y_da, da, sr_up, sr_dn, ndres, demand };
    Ok((model, index))
}

/// Classic single-bound robust model: [`build_mbro`] with K = 1.
///
/// `single_bound_deviation` must carry exactly one bound per family;
/// `budgets` must be single-bound as well.
pub fn build_classic_ro(
    p: &Portfolio,
    single_bound_deviation: &BoundedDeviation,
    budgets: &Budgets,
    opts: &BuildOptions,
) -> Result<(MilpModel, RobustVarIndex), BuildError> {
    let u = UncertaintyModel {
        k_count: 1,
        deviations: single_bound_deviation.clone(),
        budgets: budgets.clone(),
    };
    build_mbro(p, &u, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deterministic::build_deterministic;
    use crate::milp::solver::{HighsBackend, SolveBackend, SolveOptions, SolveStatus};
    use crate::milp::writer::lp_string;
    use crate::testkit::*;
    use crate::TimeGrid;

    fn solve(model: &MilpModel) -> crate::milp::solver::SolveOutcome {
        HighsBackend.solve(model, &SolveOptions::with_gap(1e-9))
    }

    #[test]
    fn table3_presets() {
        assert_eq!(table3_budget_values(Strategy::Optimistic, RobustVariant::Mbro).unwrap(), vec![16, 4, 2]);
        assert_eq!(table3_budget_values(Strategy::Pessimistic, RobustVariant::RoHourly).unwrap(), vec![12]);
        assert_eq!(table3_budget_values(Strategy::Balanced, RobustVariant::Ro15).unwrap(), vec![32]);
        assert!(table3_budget_values(Strategy::Deterministic, RobustVariant::Mbro).is_err());
    }

    #[test]
    fn zero_budgets_recover_the_deterministic_optimum() {
        let p = table2_portfolio(TimeGrid::new(12, 2.0));
        let u = proportional_uncertainty(&p, &[0.1, 0.2, 0.3], &[0, 0, 0]);
        let (det_model, _) = build_deterministic(&p, &BuildOptions::default()).unwrap();
        let (rob_model, _) = build_mbro(&p, &u, &BuildOptions::default()).unwrap();
        let det = solve(&det_model);
        let rob = solve(&rob_model);
        assert_eq!(det.status, SolveStatus::Optimal);
        assert_eq!(rob.status, SolveStatus::Optimal);
        let diff = (det.objective_value - rob.objective_value).abs();
        assert!(
            diff <= 1e-6 * (1.0 + det.objective_value.abs()),
            "det {} vs robust {}",
            det.objective_value,
            rob.objective_value
        );
    }

    #[test]
    fn budget_rows_are_equalities_per_bound() {
        let p = table2_portfolio(TimeGrid::quarter_hourly());
        let u = proportional_uncertainty(&p, &[0.1, 0.2, 0.3], &[16, 4, 2]);
        let (model, _) = build_mbro(&p, &u, &BuildOptions::default()).unwrap();
        for unit in ["pv", "wind"] {
            for k in 1..=3 {
                let tag = format!("eq12i.{unit}.k{k}");
                let row = model.constraints().iter().find(|c| c.tag == tag).expect("budget row");
                assert_eq!(row.sense, Sense::Eq);
                let expected = [16.0, 4.0, 2.0][k - 1];
                assert_eq!(row.rhs, expected);
            }
        }
        let row = model.constraints().iter().find(|c| c.tag == "eq12n.load.k1").unwrap();
        assert_eq!(row.sense, Sense::Eq);
    }

    #[test]
    fn classic_ro_is_byte_identical_to_k1_mbro() {
        let p = table2_portfolio(TimeGrid::hourly());
        let u3 = proportional_uncertainty(&p, &[0.1, 0.2, 0.3], &[4, 2, 1]);
        let dev = u3.outermost_single_bound();
        let budgets = Budgets::uniform(&p, &[4]);
        let u1 = UncertaintyModel { k_count: 1, deviations: dev.clone(), budgets: budgets.clone() };
        let (a, _) = build_classic_ro(&p, &dev, &budgets, &BuildOptions::default()).unwrap();
        let (b, _) = build_mbro(&p, &u1, &BuildOptions::default()).unwrap();
        assert_eq!(lp_string(&a).unwrap(), lp_string(&b).unwrap());
    }

    #[test]
    fn full_budget_equals_worst_case_tightened_deterministic() {
        // All-selling instance: one unit, flat prices above cost, K = 1,
        // budget = horizon. The robust optimum must match a deterministic
        // model with forecast and prices shifted to their worst bounds.
        let grid = TimeGrid::new(6, 4.0);
        let n = grid.period_count;
        let p = single_ndres_portfolio(grid, flat(n, 10.0), 50.0, 5.0);
        let mut u = zero_uncertainty(&p, 1);
        u.deviations.da_down[0] = flat(n, 8.0);
        u.deviations.da_up[0] = flat(n, 10.0);
        u.deviations.ndres_down[0].by_bound[0] = flat(n, 3.0);
        u.budgets = Budgets::uniform(&p, &[n]);
        let (model, _) = build_mbro(&p, &u, &BuildOptions::default()).unwrap();
        let rob = solve(&model);
        assert_eq!(rob.status, SolveStatus::Optimal);

        let mut tightened = single_ndres_portfolio(grid, flat(n, 7.0), 42.0, 5.0);
        tightened.prices.sr_up_bar = flat(n, 0.0);
        let (det_model, _) = build_deterministic(&tightened, &BuildOptions::default()).unwrap();
        let det = solve(&det_model);
        assert!(
            (rob.objective_value - det.objective_value).abs()
                <= 1e-6 * (1.0 + det.objective_value.abs()),
            "robust {} vs tightened deterministic {}",
            rob.objective_value,
            det.objective_value
        );
    }

    #[test]
    fn default_big_m_doubles_the_largest_unit_deviation() {
        let p = table2_portfolio(TimeGrid::hourly());
        let mut u = zero_uncertainty(&p, 2);
        u.deviations.ndres_down[0].by_bound[1][5] = 25.0;
        u.deviations.da_down[0][0] = 30.0; // price deviations never need M
        u.deviations.da_up[0][0] = 30.0;
        assert_eq!(default_big_m(&u), 50.0);
        let zero = zero_uncertainty(&p, 2);
        assert_eq!(default_big_m(&zero), 1.0);
    }

    #[test]
    fn per_unit_big_m_is_blockwise() {
        let p = table2_portfolio(TimeGrid::hourly());
        let mut u = zero_uncertainty(&p, 1);
        u.deviations.ndres_down[0].by_bound[0][0] = 25.0; // pv
        u.deviations.ndres_down[1].by_bound[0][0] = 4.0; // wind
        u.deviations.demand_up[0].by_bound[0][0] = 9.0; // load
        let (_, ix) = build_mbro(&p, &u, &BuildOptions::default()).unwrap();
        assert_eq!(ix.ndres[0].big_m, 50.0);
        assert_eq!(ix.ndres[1].big_m, 8.0);
        assert_eq!(ix.demand[0].big_m, 18.0);
    }

    #[test]
    fn budget_sum_beyond_horizon_is_rejected() {
        let p = table2_portfolio(TimeGrid::hourly());
        let mut u = proportional_uncertainty(&p, &[0.1], &[20]);
        u.budgets.ndres[0].1 = vec![25];
        let err = build_mbro(&p, &u, &BuildOptions::default()).unwrap_err();
        assert!(matches!(err, BuildError::InvalidUncertainty(_)));
    }

    #[test]
    fn zero_up_deviation_with_positive_down_is_rejected() {
        let p = table2_portfolio(TimeGrid::hourly());
        let mut u = zero_uncertainty(&p, 1);
        u.deviations.da_down[0][3] = 5.0;
        let err = build_mbro(&p, &u, &BuildOptions::default()).unwrap_err();
        assert!(matches!(err, BuildError::InvalidUncertainty(_)));
    }

    #[test]
    fn nesting_violations_are_rejected() {
        let p = table2_portfolio(TimeGrid::hourly());
        let mut u = zero_uncertainty(&p, 2);
        u.deviations.ndres_down[0].by_bound[0][0] = 5.0;
        u.deviations.ndres_down[0].by_bound[1][0] = 2.0; // outer below inner
        let err = build_mbro(&p, &u, &BuildOptions::default()).unwrap_err();
        assert!(matches!(err, BuildError::InvalidUncertainty(_)));
    }
}
