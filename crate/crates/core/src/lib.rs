//! Risk-constrained battery arbitrage on day-ahead hourly price spreads.
//!
//! Each day the 276 hour-pair spreads carry a forecast density. A spread is
//! traded as one full charge/discharge cycle only if its unfavourable tail
//! quantile still clears the roundtrip cost, and the best one or two such
//! legs that keep the battery within its limits are chosen. Plans are then
//! scored against realized prices.

pub mod backtest;
pub mod cli;
pub mod densities;
pub mod forecast;
pub mod optimizer;
pub mod prices;
pub mod special;
pub mod spreads;
pub mod synth;

pub use backtest::{realized_leg_payoff, run_backtest, summarize, BacktestRun, PayoffVector, SummaryStats};
pub use densities::{DensityParams, Family};
pub use forecast::{ForecastDay, ForecastSet};
pub use optimizer::{
    brute_force_oracle, optimize, optimize_single, optimize_two, var_feasible, Direction, Mode, TradeConfig,
    TradeLeg, TradePlan,
};
pub use spreads::{compute_spreads, HourlyPriceDay, SpreadId, SpreadVector};
