//! Physical and market data types shared by every formulation.
//!
//! All values are immutable after construction. Powers are MW, energies MWh,
//! energy prices €/MWh and reserve capacity prices €/MW; no unit conversion
//! happens anywhere downstream.

use std::collections::HashSet;

/// Scheduling horizon: number of periods and step length in hours.
///
/// The product `period_count * dt_hours` must equal 24 (one-day horizon).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub period_count: usize,
    pub dt_hours: f64,
}

impl TimeGrid {
    pub fn quarter_hourly() -> Self {
        TimeGrid { period_count: 96, dt_hours: 0.25 }
    }

    pub fn hourly() -> Self {
        TimeGrid { period_count: 24, dt_hours: 1.0 }
    }

    pub fn new(period_count: usize, dt_hours: f64) -> Self {
        TimeGrid { period_count, dt_hours }
    }

    pub fn periods(&self) -> std::ops::Range<usize> {
        0..self.period_count
    }
}

/// Controllable renewable unit (e.g. hydro) with commitment, daily energy cap
/// and reserve capability.
#[derive(Debug, Clone, PartialEq)]
pub struct DispatchableUnit {
    pub name: String,
    pub p_max: f64,
    pub p_min: f64,
    /// Daily energy production limit in MWh.
    pub e_max_daily: f64,
    /// Marginal cost in €/MWh.
    pub cost: f64,
    /// Ramp rates in MW/min.
    pub ramp_up: f64,
    pub ramp_down: f64,
    /// Reserve provision limit factors in [0,1].
    pub beta_up: f64,
    pub beta_down: f64,
}

/// Stochastic renewable unit (wind, PV). Output is capped by a per-period
/// forecast; reserve comes from modulating curtailment.
#[derive(Debug, Clone, PartialEq)]
pub struct NonDispatchableUnit {
    pub name: String,
    pub p_min: f64,
    pub cost: f64,
    pub ramp_up: f64,
    pub ramp_down: f64,
    pub beta_up: f64,
    pub beta_down: f64,
    /// Per-period production upper bound, length = period_count.
    pub forecast_upper: Vec<f64>,
}

/// Flexible demand with a per-period consumption floor and a daily minimum
/// energy requirement.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandUnit {
    pub name: String,
    pub p_max: f64,
    /// Daily minimum consumed energy in MWh.
    pub e_min_daily: f64,
    pub ramp_up: f64,
    pub ramp_down: f64,
    pub beta_up: f64,
    pub beta_down: f64,
    /// Per-period consumption lower bound, length = period_count.
    pub forecast_lower: Vec<f64>,
}

/// How the storage reserve-energy allocation fractions are set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaMode {
    /// Fractions chosen by the optimizer.
    Decision,
    /// Operator-chosen fixed fractions in [0,1].
    Fixed { up: f64, down: f64 },
}

/// Battery storage with split charge/discharge power limits, state of charge
/// corridor and reserve-energy allocation fractions.
#[derive(Debug, Clone, PartialEq)]
pub struct StorageUnit {
    pub name: String,
    pub p_ch_max: f64,
    pub p_ch_min: f64,
    pub p_dis_max: f64,
    pub p_dis_min: f64,
    pub e_max: f64,
    pub e_min: f64,
    /// Charge / discharge efficiencies in (0,1].
    pub eta_ch: f64,
    pub eta_dis: f64,
    /// Marginal cost in €/MWh, charged on throughput.
    pub cost: f64,
    pub ramp_up: f64,
    pub ramp_down: f64,
    pub beta_up: f64,
    pub beta_down: f64,
    pub sigma_mode: SigmaMode,
}

impl StorageUnit {
    /// Power rating used by the reserve provision cap.
    pub fn rated_power(&self) -> f64 {
        self.p_ch_max.max(self.p_dis_max)
    }
}

/// Forecast price series: day-ahead median and secondary-reserve capacity
/// price upper references.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceForecast {
    /// Day-ahead median price, €/MWh, per period.
    pub da_median: Vec<f64>,
    /// Upward reserve capacity price reference, €/MW, per period.
    pub sr_up_bar: Vec<f64>,
    /// Downward reserve capacity price reference, €/MW, per period.
    pub sr_down_bar: Vec<f64>,
}

/// System-wide scheduling parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Secondary reserve activation time in minutes.
    pub t_sr_minutes: f64,
    /// Indicator linearization constant; overrides the per-family default
    /// when positive and finite.
    pub big_m: Option<f64>,
}

/// The full asset set the plant bids with.
#[derive(Debug, Clone, PartialEq)]
pub struct Portfolio {
    pub dispatchable: Vec<DispatchableUnit>,
    pub non_dispatchable: Vec<NonDispatchableUnit>,
    pub demands: Vec<DemandUnit>,
    pub storage: Vec<StorageUnit>,
    pub prices: PriceForecast,
    pub system: SystemParams,
    pub grid: TimeGrid,
}

/// A single invariant violation with a path-like locator into the portfolio.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Violation { path: path.into(), message: message.into() }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

fn name_ok(name: &str) -> bool {
    !name.is_empty()
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

fn check_series(out: &mut Vec<Violation>, path: &str, series: &[f64], expected_len: usize) {
    if series.len() != expected_len {
        out.push(Violation::new(
            path,
            format!("length {} does not match grid period_count {}", series.len(), expected_len),
        ));
    }
    for (t, v) in series.iter().enumerate() {
        if !v.is_finite() {
            out.push(Violation::new(format!("{path}[{t}]"), "value is not finite"));
        }
    }
}

fn check_nonneg(out: &mut Vec<Violation>, path: &str, v: f64) {
    if !(v.is_finite() && v >= 0.0) {
        out.push(Violation::new(path, format!("must be finite and >= 0, got {v}")));
    }
}

fn check_fraction(out: &mut Vec<Violation>, path: &str, v: f64) {
    if !(v.is_finite() && (0.0..=1.0).contains(&v)) {
        out.push(Violation::new(path, format!("must lie in [0,1], got {v}")));
    }
}

/// Checks every structural invariant of a portfolio and returns the full list
/// of violations. An empty list means the portfolio is safe to hand to any
/// model builder. Pure and idempotent.
pub fn validate_portfolio(p: &Portfolio) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = p.grid.period_count;

    if p.grid.period_count == 0 {
        out.push(Violation::new("grid.period_count", "must be positive"));
    }
    if !(p.grid.dt_hours.is_finite() && p.grid.dt_hours > 0.0) {
        out.push(Violation::new("grid.dt_hours", "must be positive"));
    } else if (p.grid.period_count as f64 * p.grid.dt_hours - 24.0).abs() > 1e-9 {
        out.push(Violation::new(
            "grid",
            format!(
                "period_count * dt_hours must equal 24, got {} * {} = {}",
                p.grid.period_count,
                p.grid.dt_hours,
                p.grid.period_count as f64 * p.grid.dt_hours
            ),
        ));
    }

    let mut names = HashSet::new();
    let mut check_name = |out: &mut Vec<Violation>, path: String, name: &str| {
        if !name_ok(name) {
            out.push(Violation::new(
                path.clone(),
                format!("unit name {name:?} must be non-empty and use only [A-Za-z0-9_-]"),
            ));
        }
        if !names.insert(name.to_owned()) {
            out.push(Violation::new(path, format!("duplicate unit name {name:?}")));
        }
    };

    for (i, u) in p.dispatchable.iter().enumerate() {
        let base = format!("dispatchable[{i}]({})", u.name);
        check_name(&mut out, format!("{base}.name"), &u.name);
        check_nonneg(&mut out, &format!("{base}.p_min"), u.p_min);
        if !(u.p_max.is_finite() && u.p_max >= u.p_min) {
            out.push(Violation::new(format!("{base}.p_max"), "requires 0 <= p_min <= p_max"));
        }
        check_nonneg(&mut out, &format!("{base}.e_max_daily"), u.e_max_daily);
        check_nonneg(&mut out, &format!("{base}.ramp_up"), u.ramp_up);
        check_nonneg(&mut out, &format!("{base}.ramp_down"), u.ramp_down);
        check_fraction(&mut out, &format!("{base}.beta_up"), u.beta_up);
        check_fraction(&mut out, &format!("{base}.beta_down"), u.beta_down);
        if !u.cost.is_finite() {
            out.push(Violation::new(format!("{base}.cost"), "must be finite"));
        }
    }

    for (i, u) in p.non_dispatchable.iter().enumerate() {
        let base = format!("non_dispatchable[{i}]({})", u.name);
        check_name(&mut out, format!("{base}.name"), &u.name);
        check_nonneg(&mut out, &format!("{base}.p_min"), u.p_min);
        check_series(&mut out, &format!("{base}.forecast_upper"), &u.forecast_upper, n);
        for (t, v) in u.forecast_upper.iter().enumerate() {
            if v.is_finite() && *v < u.p_min {
                out.push(Violation::new(
                    format!("{base}.forecast_upper[{t}]"),
                    format!("forecast {v} is below p_min {}", u.p_min),
                ));
            }
        }
        check_nonneg(&mut out, &format!("{base}.ramp_up"), u.ramp_up);
        check_nonneg(&mut out, &format!("{base}.ramp_down"), u.ramp_down);
        check_fraction(&mut out, &format!("{base}.beta_up"), u.beta_up);
        check_fraction(&mut out, &format!("{base}.beta_down"), u.beta_down);
        if !u.cost.is_finite() {
            out.push(Violation::new(format!("{base}.cost"), "must be finite"));
        }
    }

    for (i, u) in p.demands.iter().enumerate() {
        let base = format!("demands[{i}]({})", u.name);
        check_name(&mut out, format!("{base}.name"), &u.name);
        check_nonneg(&mut out, &format!("{base}.p_max"), u.p_max);
        check_nonneg(&mut out, &format!("{base}.e_min_daily"), u.e_min_daily);
        check_series(&mut out, &format!("{base}.forecast_lower"), &u.forecast_lower, n);
        for (t, v) in u.forecast_lower.iter().enumerate() {
            if v.is_finite() && !(0.0..=u.p_max).contains(v) {
                out.push(Violation::new(
                    format!("{base}.forecast_lower[{t}]"),
                    format!("forecast {v} must lie in [0, p_max={}]", u.p_max),
                ));
            }
        }
        check_nonneg(&mut out, &format!("{base}.ramp_up"), u.ramp_up);
        check_nonneg(&mut out, &format!("{base}.ramp_down"), u.ramp_down);
        check_fraction(&mut out, &format!("{base}.beta_up"), u.beta_up);
        check_fraction(&mut out, &format!("{base}.beta_down"), u.beta_down);
    }

    for (i, u) in p.storage.iter().enumerate() {
        let base = format!("storage[{i}]({})", u.name);
        check_name(&mut out, format!("{base}.name"), &u.name);
        for (field, min, max) in [
            ("p_ch", u.p_ch_min, u.p_ch_max),
            ("p_dis", u.p_dis_min, u.p_dis_max),
        ] {
            check_nonneg(&mut out, &format!("{base}.{field}_min"), min);
            if !(max.is_finite() && max >= min) {
                out.push(Violation::new(
                    format!("{base}.{field}_max"),
                    format!("requires {field}_min <= {field}_max"),
                ));
            }
        }
        check_nonneg(&mut out, &format!("{base}.e_min"), u.e_min);
        if !(u.e_max.is_finite() && u.e_max >= u.e_min) {
            out.push(Violation::new(format!("{base}.e_max"), "requires e_min <= e_max"));
        }
        for (field, eta) in [("eta_ch", u.eta_ch), ("eta_dis", u.eta_dis)] {
            if !(eta.is_finite() && eta > 0.0 && eta <= 1.0) {
                out.push(Violation::new(
                    format!("{base}.{field}"),
                    format!("efficiency must lie in (0,1], got {eta}"),
                ));
            }
        }
        check_nonneg(&mut out, &format!("{base}.ramp_up"), u.ramp_up);
        check_nonneg(&mut out, &format!("{base}.ramp_down"), u.ramp_down);
        check_fraction(&mut out, &format!("{base}.beta_up"), u.beta_up);
        check_fraction(&mut out, &format!("{base}.beta_down"), u.beta_down);
        if let SigmaMode::Fixed { up, down } = u.sigma_mode {
            check_fraction(&mut out, &format!("{base}.sigma_up"), up);
            check_fraction(&mut out, &format!("{base}.sigma_down"), down);
        }
        if !u.cost.is_finite() {
            out.push(Violation::new(format!("{base}.cost"), "must be finite"));
        }
    }

    check_series(&mut out, "prices.da_median", &p.prices.da_median, n);
    check_series(&mut out, "prices.sr_up_bar", &p.prices.sr_up_bar, n);
    check_series(&mut out, "prices.sr_down_bar", &p.prices.sr_down_bar, n);
    for (label, series) in [("sr_up_bar", &p.prices.sr_up_bar), ("sr_down_bar", &p.prices.sr_down_bar)] {
        for (t, v) in series.iter().enumerate() {
            if v.is_finite() && *v < 0.0 {
                out.push(Violation::new(
                    format!("prices.{label}[{t}]"),
                    "reserve capacity price must be >= 0",
                ));
            }
        }
    }

    if !(p.system.t_sr_minutes.is_finite() && p.system.t_sr_minutes > 0.0) {
        out.push(Violation::new("system.t_sr_minutes", "must be positive"));
    }
    if let Some(m) = p.system.big_m {
        if !(m.is_finite() && m > 0.0) {
            out.push(Violation::new("system.big_m", "override must be positive and finite"));
        }
    }

    out
}

/// Non-fatal modelling notes about a portfolio. Unlike [`validate_portfolio`]
/// these do not make the data invalid; they flag formulation quirks worth
/// surfacing in run logs, such as the reserve term entering the daily energy
/// sums in MW against an MWh budget.
pub fn schema_warnings(p: &Portfolio) -> Vec<String> {
    let mut out = Vec::new();
    let has_dres_reserve = p
        .dispatchable
        .iter()
        .any(|u| u.e_max_daily.is_finite() && (u.beta_up > 0.0 || u.ramp_up > 0.0));
    let has_demand_reserve = p
        .demands
        .iter()
        .any(|u| u.e_min_daily > 0.0 && (u.beta_up > 0.0 || u.ramp_up > 0.0));
    if has_dres_reserve || has_demand_reserve {
        out.push(
            "daily energy limits add upward reserve (MW) to an energy sum (MWh) without a time-step \
             factor; set dimensional_fix=true in build options to scale reserve terms by dt"
                .to_owned(),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::table2_portfolio;

    #[test]
    fn table2_portfolio_is_valid() {
        let p = table2_portfolio(TimeGrid::quarter_hourly());
        let violations = validate_portfolio(&p);
        assert!(violations.is_empty(), "unexpected violations: {violations:?}");
    }

    #[test]
    fn zero_charge_efficiency_is_flagged() {
        let mut p = table2_portfolio(TimeGrid::quarter_hourly());
        p.storage[0].eta_ch = 0.0;
        let violations = validate_portfolio(&p);
        assert_eq!(violations.len(), 1);
        assert!(violations[0].path.contains("eta_ch"), "path was {}", violations[0].path);
    }

    #[test]
    fn forecast_length_mismatch_is_flagged() {
        let mut p = table2_portfolio(TimeGrid::quarter_hourly());
        p.non_dispatchable[0].forecast_upper.pop();
        let violations = validate_portfolio(&p);
        assert_eq!(violations.len(), 1);
        assert!(violations[0].message.contains("95"));
        assert!(violations[0].message.contains("96"));
    }

    #[test]
    fn validation_is_idempotent() {
        let mut p = table2_portfolio(TimeGrid::quarter_hourly());
        p.storage[0].eta_dis = 1.5;
        let first = validate_portfolio(&p);
        let second = validate_portfolio(&p);
        assert_eq!(first, second);
    }

    #[test]
    fn duplicate_names_are_flagged() {
        let mut p = table2_portfolio(TimeGrid::quarter_hourly());
        p.non_dispatchable[1].name = p.non_dispatchable[0].name.clone();
        let violations = validate_portfolio(&p);
        assert!(violations.iter().any(|v| v.message.contains("duplicate")));
    }

    #[test]
    fn grid_must_cover_one_day() {
        let mut p = table2_portfolio(TimeGrid::quarter_hourly());
        p.grid = TimeGrid::new(96, 0.5);
        let violations = validate_portfolio(&p);
        assert!(violations.iter().any(|v| v.path == "grid"));
    }

    #[test]
    fn table2_portfolio_carries_the_dimension_note() {
        let p = table2_portfolio(TimeGrid::quarter_hourly());
        assert!(validate_portfolio(&p).is_empty());
        assert_eq!(schema_warnings(&p).len(), 1);
    }
}
