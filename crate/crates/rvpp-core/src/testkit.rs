//! Shared fixtures for tests, benchmarks and the data generator.

use crate::domain::*;
use crate::robust::{BoundedDeviation, Budgets, UncertaintyModel, UnitDeviation};

/// Reference five-asset portfolio (PV, wind, hydro, battery, demand) with the
/// standard unit parameters used across the test suite. Forecast shapes are
/// simple deterministic curves at the requested resolution.
pub fn table2_portfolio(grid: TimeGrid) -> Portfolio {
    let n = grid.period_count;
    let frac = |t: usize| (t as f64 + 0.5) / n as f64; // fraction of day in [0,1]

    // PV: zero outside a 07:00-19:00 window, sine bump inside.
    let pv_forecast: Vec<f64> = (0..n)
        .map(|t| {
            let h = frac(t) * 24.0;
            if (7.0..19.0).contains(&h) {
                let x = (h - 7.0) / 12.0 * std::f64::consts::PI;
                45.0 * x.sin()
            } else {
                0.0
            }
        })
        .collect();
    // Wind: slow swell with a mid-day dip.
    let wind_forecast: Vec<f64> = (0..n)
        .map(|t| {
            let x = frac(t) * std::f64::consts::TAU;
            28.0 + 12.0 * (x + 1.0).sin() - 5.0 * (2.0 * x).cos()
        })
        .collect();
    // Demand floor: morning and evening peaks.
    let demand_floor: Vec<f64> = (0..n)
        .map(|t| {
            let h = frac(t) * 24.0;
            let morning = (-((h - 8.5) / 2.5).powi(2)).exp();
            let evening = (-((h - 20.0) / 2.0).powi(2)).exp();
            12.0 + 14.0 * morning + 18.0 * evening
        })
        .collect();
    // Day-ahead price: base with evening peak; reserve prices lower.
    let da: Vec<f64> = (0..n)
        .map(|t| {
            let h = frac(t) * 24.0;
            let evening = (-((h - 20.0) / 2.5).powi(2)).exp();
            let morning = (-((h - 8.0) / 3.0).powi(2)).exp();
            48.0 + 20.0 * morning + 55.0 * evening
        })
        .collect();
    let sr_up: Vec<f64> = (0..n).map(|t| 18.0 + 8.0 * (frac(t) * std::f64::consts::TAU).sin().abs()).collect();
    let sr_dn: Vec<f64> = (0..n).map(|t| 12.0 + 5.0 * (frac(t) * std::f64::consts::TAU).cos().abs()).collect();

    Portfolio {
        dispatchable: vec![DispatchableUnit {
            name: "hydro".into(),
            p_max: 50.0,
            p_min: 10.0,
            e_max_daily: 480.0,
            cost: 12.5,
            ramp_up: 10.0,
            ramp_down: 10.0,
            beta_up: 0.5,
            beta_down: 0.5,
        }],
        non_dispatchable: vec![
            NonDispatchableUnit {
                name: "pv".into(),
                p_min: 0.0,
                cost: 10.0,
                ramp_up: 20.0,
                ramp_down: 25.0,
                beta_up: 0.05,
                beta_down: 0.05,
                forecast_upper: pv_forecast,
            },
            NonDispatchableUnit {
                name: "wind".into(),
                p_min: 0.0,
                cost: 15.0,
                ramp_up: 15.0,
                ramp_down: 20.0,
                beta_up: 0.05,
                beta_down: 0.05,
                forecast_upper: wind_forecast,
            },
        ],
        demands: vec![DemandUnit {
            name: "load".into(),
            p_max: 50.0,
            e_min_daily: 750.0,
            ramp_up: 3.0,
            ramp_down: 3.0,
            beta_up: 0.0,
            beta_down: 0.0,
            forecast_lower: demand_floor,
        }],
        storage: vec![StorageUnit {
            name: "battery".into(),
            p_ch_max: 10.0,
            p_ch_min: 0.0,
            p_dis_max: 10.0,
            p_dis_min: 0.0,
            e_max: 30.0,
            e_min: 3.0,
            eta_ch: 0.95,
            eta_dis: 0.95,
            cost: 30.0,
            ramp_up: 10.0,
            ramp_down: 10.0,
            beta_up: 1.0,
            beta_down: 1.0,
            sigma_mode: SigmaMode::Decision,
        }],
        prices: PriceForecast { da_median: da, sr_up_bar: sr_up, sr_down_bar: sr_dn },
        system: SystemParams { t_sr_minutes: 15.0, big_m: None },
        grid,
    }
}

/// Minimal portfolio with a single non-dispatchable unit and no other assets.
pub fn single_ndres_portfolio(grid: TimeGrid, forecast: Vec<f64>, price: f64, cost: f64) -> Portfolio {
    let n = grid.period_count;
    Portfolio {
        dispatchable: vec![],
        non_dispatchable: vec![NonDispatchableUnit {
            name: "res".into(),
            p_min: 0.0,
            cost,
            ramp_up: 100.0,
            ramp_down: 100.0,
            beta_up: 1.0,
            beta_down: 1.0,
            forecast_upper: forecast,
        }],
        demands: vec![],
        storage: vec![],
        prices: PriceForecast {
            da_median: vec![price; n],
            sr_up_bar: vec![0.0; n],
            sr_down_bar: vec![0.0; n],
        },
        system: SystemParams { t_sr_minutes: 15.0, big_m: None },
        grid,
    }
}

/// Portfolio with no assets at all; useful for degenerate-balance tests.
pub fn empty_portfolio(grid: TimeGrid) -> Portfolio {
    let n = grid.period_count;
    Portfolio {
        dispatchable: vec![],
        non_dispatchable: vec![],
        demands: vec![],
        storage: vec![],
        prices: PriceForecast {
            da_median: vec![50.0; n],
            sr_up_bar: vec![10.0; n],
            sr_down_bar: vec![10.0; n],
        },
        system: SystemParams { t_sr_minutes: 15.0, big_m: None },
        grid,
    }
}

/// All-zero deviations and budgets, shaped for the given portfolio.
pub fn zero_uncertainty(p: &Portfolio, k_count: usize) -> UncertaintyModel {
    let n = p.grid.period_count;
    let zeros = || vec![vec![0.0; n]; k_count];
    UncertaintyModel {
        k_count,
        deviations: BoundedDeviation {
            da_down: zeros(),
            da_up: zeros(),
            sr_up_down: zeros(),
            sr_dn_down: zeros(),
            ndres_down: p
                .non_dispatchable
                .iter()
                .map(|u| UnitDeviation { unit: u.name.clone(), by_bound: zeros() })
                .collect(),
            demand_up: p
                .demands
                .iter()
                .map(|u| UnitDeviation { unit: u.name.clone(), by_bound: zeros() })
                .collect(),
        },
        budgets: Budgets::uniform(p, &vec![0; k_count]),
    }
}

/// Proportional deviations: bound `k` deviates by `fractions[k]` of the
/// underlying forecast value, nested by construction when fractions increase.
/// Day-ahead upward deviations are 1.25x the downward ones.
pub fn proportional_uncertainty(
    p: &Portfolio,
    fractions: &[f64],
    budgets_per_k: &[usize],
) -> UncertaintyModel {
    let n = p.grid.period_count;
    let k_count = fractions.len();
    assert_eq!(budgets_per_k.len(), k_count);
    let scaled = |series: &[f64], f: f64| -> Vec<f64> { series.iter().map(|v| v * f).collect() };
    UncertaintyModel {
        k_count,
        deviations: BoundedDeviation {
            da_down: fractions.iter().map(|f| scaled(&p.prices.da_median, *f)).collect(),
            da_up: fractions.iter().map(|f| scaled(&p.prices.da_median, 1.25 * *f)).collect(),
            sr_up_down: fractions.iter().map(|f| scaled(&p.prices.sr_up_bar, *f)).collect(),
            sr_dn_down: fractions.iter().map(|f| scaled(&p.prices.sr_down_bar, *f)).collect(),
            ndres_down: p
                .non_dispatchable
                .iter()
                .map(|u| UnitDeviation {
                    unit: u.name.clone(),
                    by_bound: fractions.iter().map(|f| scaled(&u.forecast_upper, *f)).collect(),
                })
                .collect(),
            demand_up: p
                .demands
                .iter()
                .map(|u| UnitDeviation {
                    unit: u.name.clone(),
                    by_bound: fractions
                        .iter()
                        .map(|f| {
                            // keep floor + deviation within the rated power
                            u.forecast_lower
                                .iter()
                                .map(|v| (v * f).min((u.p_max - v).max(0.0)))
                                .collect()
                        })
                        .collect(),
                })
                .collect(),
        },
        budgets: Budgets::uniform(p, &budgets_per_k.to_vec()),
    }
    .with_enforced_nesting()
}

/// Flat series helper.
pub fn flat(n: usize, v: f64) -> Vec<f64> {
    vec![v; n]
}
