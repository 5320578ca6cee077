//! Daily trade selection under a value-at-risk filter.
//!
//! A leg is one full charge/discharge cycle of the 1 MWh battery over a spread
//! `(i, j)`. A spread whose expected value is negative (later hour dearer) is
//! traded buy-then-sell; a positive one sell-then-buy. A leg is admitted only
//! if the tail quantile on the unfavourable side still clears the roundtrip
//! cost after efficiency losses, and lies on the same side of zero as the
//! expectation.

mod oracle;
mod soc;
mod turning;
mod validate;

use serde::Serialize;
use thiserror::Error;

use crate::densities::DensityParams;
use crate::forecast::ForecastDay;
use crate::spreads::{SpreadId, SpreadVector};

pub use oracle::{brute_force_oracle, OracleInput};
pub use soc::{soc_trajectory, PlanVector, SocError, SocTrajectory, SOC_MAX, SOC_MIN};
pub use turning::{turning_point_candidates, turning_points, PointKind, TurningCandidate, TurningPoint};
pub use validate::{validate_plan, ConstraintViolation, PlanReport, Valuation};

/// Tolerance for comparing a recomputed payoff with a recorded one.
pub const PAYOFF_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("efficiency eta must lie in (0, 1], got {0}")]
    Efficiency(f64),
    #[error("roundtrip cost must be finite and >= 0, got {0}")]
    Cost(f64),
    #[error("start SoC must be 0 or 1, got {0}")]
    StartSoc(u8),
    #[error("VaR level must lie in (0, 0.5), got {0}")]
    VarLevel(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Charge at the earlier hour, discharge at the later one (spread < 0 expected).
    BuyThenSell,
    /// Discharge at the earlier hour, recharge at the later one (spread > 0 expected).
    SellThenBuy,
}

impl Direction {
    /// Direction implied by the sign of an expected spread; `None` at zero.
    pub fn from_expected(expected: f64) -> Option<Self> {
        if expected > 0.0 {
            Some(Direction::SellThenBuy)
        } else if expected < 0.0 {
            Some(Direction::BuyThenSell)
        } else {
            None
        }
    }

    /// (buy hour, sell hour) of a leg over `spread`.
    pub fn buy_sell_hours(self, spread: SpreadId) -> (usize, usize) {
        match self {
            Direction::BuyThenSell => (spread.i(), spread.j()),
            Direction::SellThenBuy => (spread.j(), spread.i()),
        }
    }

    /// Gross value per MWh of a realized or expected spread `y` traded this way.
    pub fn directional(self, y: f64) -> f64 {
        match self {
            Direction::BuyThenSell => -y,
            Direction::SellThenBuy => y,
        }
    }

    /// Fraction of the cycle that can be executed given the state of charge
    /// just before the opening hour: room to charge, or energy to sell.
    pub fn charge_multiplier(self, available_charge: f64) -> f64 {
        match self {
            Direction::BuyThenSell => 1.0 - available_charge,
            Direction::SellThenBuy => available_charge,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::BuyThenSell => "buy_then_sell",
            Direction::SellThenBuy => "sell_then_buy",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Single,
    Double,
}

/// How a second leg may be placed relative to the first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SecondLegRule {
    /// Any hour-disjoint leg whose joint state-of-charge path stays in [0, 1].
    SocSimulation,
    /// Additionally require the two legs' hour intervals not to overlap
    /// (no embedded legs).
    SequentialOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TradeConfig {
    /// Roundtrip efficiency η.
    pub eta: f64,
    /// Roundtrip transaction cost c, EUR/MWh.
    pub cost: f64,
    /// Opening (and closing) state of charge, 0 or 1.
    pub start_soc: u8,
    /// Tail probability of the VaR filter.
    pub var_level: f64,
    pub mode: Mode,
    pub second_leg_rule: SecondLegRule,
}

impl Default for TradeConfig {
    fn default() -> Self {
        Self {
            eta: 0.8,
            cost: 5.0,
            start_soc: 0,
            var_level: 0.05,
            mode: Mode::Single,
            second_leg_rule: SecondLegRule::SocSimulation,
        }
    }
}

impl TradeConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(ConfigError::Efficiency(self.eta));
        }
        if !(self.cost.is_finite() && self.cost >= 0.0) {
            return Err(ConfigError::Cost(self.cost));
        }
        if self.start_soc > 1 {
            return Err(ConfigError::StartSoc(self.start_soc));
        }
        if !(self.var_level > 0.0 && self.var_level < 0.5) {
            return Err(ConfigError::VarLevel(self.var_level));
        }
        Ok(())
    }

    pub fn start_charge(&self) -> f64 {
        f64::from(self.start_soc)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TradeLeg {
    pub spread: SpreadId,
    pub direction: Direction,
    /// MWh; always a full cycle.
    pub volume: f64,
    pub expected_payoff: f64,
}

impl TradeLeg {
    pub fn new(spread: SpreadId, direction: Direction, expected_payoff: f64) -> Self {
        Self {
            spread,
            direction,
            volume: 1.0,
            expected_payoff,
        }
    }

    pub fn buy_hour(&self) -> usize {
        self.direction.buy_sell_hours(self.spread).0
    }

    pub fn sell_hour(&self) -> usize {
        self.direction.buy_sell_hours(self.spread).1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TradePlan {
    pub legs: Vec<TradeLeg>,
    pub start_soc: u8,
    pub expected_total: f64,
}

impl TradePlan {
    pub fn no_trade(start_soc: u8) -> Self {
        Self {
            legs: Vec::new(),
            start_soc,
            expected_total: 0.0,
        }
    }

    pub fn is_no_trade(&self) -> bool {
        self.legs.is_empty()
    }

    pub fn leg_count(&self) -> usize {
        self.legs.len()
    }

    pub fn soc_trajectory(&self) -> Result<SocTrajectory, SocError> {
        soc_trajectory(&self.legs, self.start_soc)
    }

    pub fn spreads(&self) -> Vec<SpreadId> {
        self.legs.iter().map(|l| l.spread).collect()
    }
}

/// Outcome of the VaR screen for one spread.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Feasibility {
    pub expected: f64,
    pub direction: Option<Direction>,
    /// Lower tail quantile for positive expectations, upper for negative.
    pub quantile: Option<f64>,
    pub feasible: bool,
}

/// VaR screen: the unfavourable tail quantile must share the sign of the
/// expectation and clear the cost after efficiency, `η·|q| > c`.
///
/// Assumes a validated `config`.
pub fn var_feasible(params: &DensityParams, config: &TradeConfig) -> Feasibility {
    let expected = params.mean();
    let direction = Direction::from_expected(expected);
    let quantile = direction.and_then(|d| {
        let p = match d {
            Direction::SellThenBuy => config.var_level,
            Direction::BuyThenSell => 1.0 - config.var_level,
        };
        params.quantile(p).ok()
    });
    let feasible = match (direction, quantile) {
        (Some(Direction::SellThenBuy), Some(q)) => q > 0.0 && config.eta * q > config.cost,
        (Some(Direction::BuyThenSell), Some(q)) => q < 0.0 && config.eta * q.abs() > config.cost,
        _ => false,
    };
    Feasibility {
        expected,
        direction,
        quantile,
        feasible,
    }
}

/// Expected payoff of a single leg over `params`:
/// `(ηE − c)·b` when `ηE > 0`, `(η|E| − c)·(1 − b)` when `ηE < 0`, with `b`
/// the charge available at the opening hour.
pub fn expected_leg_payoff(params: &DensityParams, config: &TradeConfig, available_charge: f64) -> f64 {
    let e = params.mean();
    let scaled = config.eta * e;
    if scaled > 0.0 {
        (scaled - config.cost) * available_charge
    } else if scaled < 0.0 {
        (config.eta * e.abs() - config.cost) * (1.0 - available_charge)
    } else {
        0.0
    }
}

/// A leg that passed the screen, valued at full availability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LegCandidate {
    pub spread: SpreadId,
    pub direction: Direction,
    pub expected_spread: f64,
    pub var_quantile: Option<f64>,
    /// η|E(Y)| − c.
    pub unit_payoff: f64,
}

impl LegCandidate {
    fn payoff_given(&self, available_charge: f64) -> f64 {
        self.unit_payoff * self.direction.charge_multiplier(available_charge)
    }

    fn leg(&self, payoff: f64) -> TradeLeg {
        TradeLeg::new(self.spread, self.direction, payoff)
    }
}

/// Every forecast leg passing the VaR screen with a positive expected margin,
/// in spread-ordinal order. Missing slots are skipped.
pub fn feasible_legs(day: &ForecastDay, config: &TradeConfig) -> Vec<LegCandidate> {
    day.populated()
        .filter_map(|(spread, params)| {
            let f = var_feasible(params, config);
            let direction = f.direction.filter(|_| f.feasible)?;
            let unit_payoff = config.eta * f.expected.abs() - config.cost;
            (unit_payoff > 0.0).then_some(LegCandidate {
                spread,
                direction,
                expected_spread: f.expected,
                var_quantile: f.quantile,
                unit_payoff,
            })
        })
        .collect()
}

/// Legs of a day whose spreads are known exactly (perfect foresight): the
/// screen degenerates to `η|y| > c`.
pub fn deterministic_legs(spreads: &SpreadVector, config: &TradeConfig) -> Vec<LegCandidate> {
    spreads
        .iter()
        .filter_map(|(spread, y)| {
            let direction = Direction::from_expected(y)?;
            let unit_payoff = config.eta * y.abs() - config.cost;
            (unit_payoff > 0.0).then_some(LegCandidate {
                spread,
                direction,
                expected_spread: y,
                var_quantile: Some(y),
                unit_payoff,
            })
        })
        .collect()
}

/// Best single leg; ties go to the smaller spread ordinal.
pub fn best_single(legs: &[LegCandidate], config: &TradeConfig) -> TradePlan {
    let start = config.start_charge();
    let mut best = TradePlan::no_trade(config.start_soc);
    for cand in legs {
        let payoff = cand.payoff_given(start);
        if payoff > best.expected_total {
            best = TradePlan {
                legs: vec![cand.leg(payoff)],
                start_soc: config.start_soc,
                expected_total: payoff,
            };
        }
    }
    best
}

/// Best plan with at most two legs. Falls back to the best single leg when no
/// pair beats it; on equal totals the plan with fewer legs wins, then the
/// lexicographically smaller ordinal pair.
pub fn best_double(legs: &[LegCandidate], config: &TradeConfig) -> TradePlan {
    let single = best_single(legs, config);
    let mut best_pair: Option<TradePlan> = None;
    let mut best_total = single.expected_total;

    for (k, a) in legs.iter().enumerate() {
        for b in &legs[k + 1..] {
            let (ai, aj) = a.spread.hours();
            let (bi, bj) = b.spread.hours();
            if b.spread.contains_hour(ai) || b.spread.contains_hour(aj) {
                continue;
            }
            if config.second_leg_rule == SecondLegRule::SequentialOnly && !(aj < bi || bj < ai) {
                continue;
            }
            let mut pair = [a.leg(0.0), b.leg(0.0)];
            let Ok(path) = soc_trajectory(&pair, config.start_soc) else {
                continue;
            };
            let pa = a.payoff_given(path.before(ai));
            let pb = b.payoff_given(path.before(bi));
            let total = pa + pb;
            if total > best_total {
                pair[0].expected_payoff = pa;
                pair[1].expected_payoff = pb;
                best_total = total;
                best_pair = Some(TradePlan {
                    legs: pair.to_vec(),
                    start_soc: config.start_soc,
                    expected_total: total,
                });
            }
        }
    }
    best_pair.unwrap_or(single)
}

/// Best single leg for a forecast day.
pub fn optimize_single(day: &ForecastDay, config: &TradeConfig) -> Result<TradePlan, ConfigError> {
    config.validate()?;
    Ok(best_single(&feasible_legs(day, config), config))
}

/// Best plan of up to two legs for a forecast day.
pub fn optimize_two(day: &ForecastDay, config: &TradeConfig) -> Result<TradePlan, ConfigError> {
    config.validate()?;
    Ok(best_double(&feasible_legs(day, config), config))
}

/// Dispatches on `config.mode`.
pub fn optimize(day: &ForecastDay, config: &TradeConfig) -> Result<TradePlan, ConfigError> {
    match config.mode {
        Mode::Single => optimize_single(day, config),
        Mode::Double => optimize_two(day, config),
    }
}

/// Perfect-foresight plan over known spreads, honouring `config.mode`.
pub fn optimize_deterministic(spreads: &SpreadVector, config: &TradeConfig) -> Result<TradePlan, ConfigError> {
    config.validate()?;
    let legs = deterministic_legs(spreads, config);
    Ok(match config.mode {
        Mode::Single => best_single(&legs, config),
        Mode::Double => best_double(&legs, config),
    })
}
