//! Replays forecast-driven plans against realized prices and summarizes the
//! daily payoffs.

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::forecast::{ForecastDay, ForecastSet};
use crate::optimizer::{
    optimize, validate_plan, ConfigError, ConstraintViolation, Direction, TradeConfig, TradePlan, Valuation,
    PAYOFF_TOLERANCE,
};
use crate::spreads::{compute_spreads, HourlyPriceDay, SpreadId};

#[derive(Debug, Error)]
pub enum BacktestError {
    #[error("forecast and price days misaligned at position {index}: forecast {forecast}, prices {prices}")]
    Misaligned {
        index: usize,
        forecast: NaiveDate,
        prices: NaiveDate,
    },
    #[error("{forecasts} forecast days but {prices} price days")]
    LengthMismatch { forecasts: usize, prices: usize },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{date}: plan violates {}", .violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Constraint {
        date: NaiveDate,
        violations: Vec<ConstraintViolation>,
    },
    #[error("cannot summarize an empty payoff vector")]
    Empty,
}

/// Net payoff of one leg once the spread `y` is known. The direction was
/// fixed before the auction, so a wrong-signed `y` loses money.
pub fn realized_leg_payoff(y: f64, config: &TradeConfig, direction: Direction, available_charge: f64) -> f64 {
    (config.eta * direction.directional(y) - config.cost) * direction.charge_multiplier(available_charge)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealizedLeg {
    pub spread: SpreadId,
    pub direction: Direction,
    pub expected_payoff: f64,
    pub realized_spread: f64,
    pub realized_payoff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DayOutcome {
    pub date: NaiveDate,
    pub plan: TradePlan,
    pub legs: Vec<RealizedLeg>,
    pub payoff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BacktestRun {
    pub days: Vec<DayOutcome>,
}

impl BacktestRun {
    pub fn payoff_vector(&self) -> PayoffVector {
        PayoffVector {
            payoffs: self.days.iter().map(|d| d.payoff).collect(),
            leg_counts: self.days.iter().map(|d| d.plan.leg_count()).collect(),
        }
    }
}

/// Realized daily payoffs in date order with the number of legs traded.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PayoffVector {
    pub payoffs: Vec<f64>,
    pub leg_counts: Vec<usize>,
}

impl PayoffVector {
    /// Payoffs without leg information; every day is counted as a no-trade day.
    pub fn from_payoffs(payoffs: Vec<f64>) -> Self {
        let leg_counts = vec![0; payoffs.len()];
        Self { payoffs, leg_counts }
    }

    pub fn len(&self) -> usize {
        self.payoffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.payoffs.is_empty()
    }
}

fn replay_day(forecast: &ForecastDay, prices: &HourlyPriceDay, config: &TradeConfig) -> Result<DayOutcome, BacktestError> {
    let date = forecast.date();
    let plan = optimize(forecast, config)?;
    let spreads = compute_spreads(prices);

    let mut violations = validate_plan(&plan, Valuation::Expected(forecast), config).violations;
    let realized_report = validate_plan(&plan, Valuation::Realized(&spreads), config);
    violations.extend(realized_report.violations);
    if !violations.is_empty() {
        violations.dedup();
        return Err(BacktestError::Constraint { date, violations });
    }
    let path = plan
        .soc_trajectory()
        .expect("a plan passing validation has a feasible SoC path");

    let legs: Vec<RealizedLeg> = plan
        .legs
        .iter()
        .map(|leg| {
            let y = spreads.get(leg.spread);
            RealizedLeg {
                spread: leg.spread,
                direction: leg.direction,
                expected_payoff: leg.expected_payoff,
                realized_spread: y,
                realized_payoff: realized_leg_payoff(y, config, leg.direction, path.before(leg.spread.i())),
            }
        })
        .collect();
    let payoff = legs.iter().map(|l| l.realized_payoff).sum::<f64>();
    debug_assert!((payoff - realized_report.objective).abs() <= PAYOFF_TOLERANCE * (1.0 + payoff.abs()));
    Ok(DayOutcome {
        date,
        plan,
        legs,
        payoff,
    })
}

/// Plans every day from its forecast alone, then scores the plan at the
/// realized spreads. Forecast and price days must match one to one.
pub fn run_backtest(
    forecasts: &ForecastSet,
    prices: &[HourlyPriceDay],
    config: &TradeConfig,
) -> Result<BacktestRun, BacktestError> {
    config.validate()?;
    if forecasts.len() != prices.len() {
        return Err(BacktestError::LengthMismatch {
            forecasts: forecasts.len(),
            prices: prices.len(),
        });
    }
    for (index, (f, p)) in forecasts.days().iter().zip(prices).enumerate() {
        if f.date() != p.date() {
            return Err(BacktestError::Misaligned {
                index,
                forecast: f.date(),
                prices: p.date(),
            });
        }
    }
    let days = forecasts
        .days()
        .par_iter()
        .zip(prices.par_iter())
        .map(|(f, p)| replay_day(f, p, config))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BacktestRun { days })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryStats {
    pub days: usize,
    pub pi_total: f64,
    pub pi_mean: f64,
    /// n−1 sample standard deviation of the daily payoffs.
    pub sd: f64,
    pub std_error: f64,
    pub n_loss: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss_total: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss_mean: Option<f64>,
    pub n_one_trade: usize,
    pub n_two_trade: usize,
    pub n_no_trade: usize,
}

/// Totals, mean, standard error and loss statistics of a payoff vector.
///
/// Sums run left to right over the days. A single day has no spread, so its
/// standard error is reported as 0.
pub fn summarize(payoffs: &PayoffVector) -> Result<SummaryStats, BacktestError> {
    let pi = &payoffs.payoffs;
    if pi.is_empty() {
        return Err(BacktestError::Empty);
    }
    let t = pi.len() as f64;
    let pi_total = pi.iter().sum::<f64>();
    let pi_mean = pi_total / t;
    let sd = if pi.len() > 1 {
        (pi.iter().map(|p| (p - pi_mean).powi(2)).sum::<f64>() / (t - 1.0)).sqrt()
    } else {
        log::warn!("single backtest day: standard error set to 0");
        0.0
    };
    let std_error = sd / t.sqrt();

    let losses: Vec<f64> = pi.iter().copied().filter(|&p| p < 0.0).collect();
    let n_loss = losses.len();
    let loss_total = (n_loss > 0).then(|| losses.iter().sum::<f64>());
    let loss_mean = loss_total.map(|l| l / n_loss as f64);

    let count = |n: usize| payoffs.leg_counts.iter().filter(|&&k| k == n).count();
    Ok(SummaryStats {
        days: pi.len(),
        pi_total,
        pi_mean,
        sd,
        std_error,
        n_loss,
        loss_total,
        loss_mean,
        n_one_trade: count(1),
        n_two_trade: count(2),
        n_no_trade: count(0),
    })
}
