//! Checks a plan against the formal daily program: indicator constraints,
//! buy/sell counts, the state-of-charge recursion and bounds, and the VaR
//! screen, and values it.

use std::fmt;

use serde::Serialize;

use super::{var_feasible, PlanVector, TradeConfig, TradePlan, PAYOFF_TOLERANCE, SOC_MAX, SOC_MIN};
use crate::forecast::ForecastDay;
use crate::spreads::{SpreadId, SpreadVector, HOURS};

/// What a plan is valued against.
#[derive(Debug, Clone, Copy)]
pub enum Valuation<'a> {
    /// Forecast expectations; also enables the VaR check and the comparison
    /// with the plan's recorded expected payoff.
    Expected(&'a ForecastDay),
    /// Spreads observed after the auction.
    Realized(&'a SpreadVector),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ConstraintViolation {
    /// Buy and sell at the same hour.
    SimultaneousBuySell { hour: usize },
    /// Timing matrix inconsistent with the indicators.
    TimingMatrix { i: usize, j: usize },
    /// Negative timing entry.
    NegativeTiming { i: usize, j: usize },
    /// Buy count differs from the number of trades.
    BuyCount { trades: usize, buys: f64 },
    /// Sell count differs from the number of trades.
    SellCount { trades: usize, sells: f64 },
    /// State of charge out of bounds.
    SocBounds { hour: usize, soc: f64 },
    /// Leg fails the VaR screen (or has no forecast).
    VarScreen { spread: SpreadId },
    /// Leg direction disagrees with the sign of its expected spread.
    Direction { spread: SpreadId },
    /// Leg volume other than one full cycle.
    Volume { spread: SpreadId, volume: f64 },
    /// Closing state of charge differs from the opening one.
    Unbalanced { start: f64, end: f64 },
    /// Recomputed expected payoff differs from the recorded total.
    RecordedPayoff { recorded: f64, computed: f64 },
}

impl ConstraintViolation {
    /// Short name of the violated constraint.
    pub fn constraint(&self) -> &'static str {
        match self {
            ConstraintViolation::SimultaneousBuySell { .. } => "buy-sell-exclusive",
            ConstraintViolation::TimingMatrix { .. } => "timing-matrix",
            ConstraintViolation::NegativeTiming { .. } => "timing-nonnegative",
            ConstraintViolation::BuyCount { .. } => "buy-count",
            ConstraintViolation::SellCount { .. } => "sell-count",
            ConstraintViolation::SocBounds { .. } => "soc-bounds",
            ConstraintViolation::VarScreen { .. } => "value-at-risk",
            ConstraintViolation::Direction { .. } => "direction",
            ConstraintViolation::Volume { .. } => "full-cycle-volume",
            ConstraintViolation::Unbalanced { .. } => "balanced-soc",
            ConstraintViolation::RecordedPayoff { .. } => "recorded-payoff",
        }
    }
}

impl fmt::Display for ConstraintViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {:?}", self.constraint(), self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanReport {
    /// Σ over legs of `η·(directional spread) − c`.
    pub objective: f64,
    /// The literal double-sum objective over the timing matrix,
    /// `Σᵢⱼ (η/2)·Y(i,j)·(bsᵢⱼ − 1)·(bᵢ + sⱼ) − n·c`, with `Y(i,j) = pᵢ − pⱼ`
    /// extended antisymmetrically below the diagonal. Its sign is opposite to
    /// `objective` for profitable legs; reported for inspection only.
    /// `None` when a spread the sum needs has no forecast.
    pub literal_objective: Option<f64>,
    pub soc: Vec<f64>,
    pub violations: Vec<ConstraintViolation>,
}

impl PlanReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_plan(plan: &TradePlan, valuation: Valuation<'_>, config: &TradeConfig) -> PlanReport {
    let mut violations = Vec::new();
    let pv = PlanVector::from_legs(&plan.legs);
    let n = plan.legs.len();

    for h in 0..HOURS {
        if pv.b[h] + pv.s[h] > 1.0 {
            violations.push(ConstraintViolation::SimultaneousBuySell { hour: h });
        }
    }
    for i in 0..HOURS {
        for j in 0..HOURS {
            if pv.bs[i][j] != pv.b[i] + pv.s[j] {
                violations.push(ConstraintViolation::TimingMatrix { i, j });
            }
            if pv.bs[i][j] < 0.0 {
                violations.push(ConstraintViolation::NegativeTiming { i, j });
            }
        }
    }
    let buys = pv.total_bought();
    let sells = pv.total_sold();
    if buys != n as f64 {
        violations.push(ConstraintViolation::BuyCount { trades: n, buys });
    }
    if sells != n as f64 {
        violations.push(ConstraintViolation::SellCount { trades: n, sells });
    }

    // SoC recursion straight from the indicators
    let start = f64::from(plan.start_soc);
    let mut level = start;
    let mut soc = Vec::with_capacity(HOURS);
    for h in 0..HOURS {
        level += pv.b[h] - pv.s[h];
        if !(SOC_MIN..=SOC_MAX).contains(&level) {
            violations.push(ConstraintViolation::SocBounds { hour: h, soc: level });
        }
        soc.push(level);
    }
    if level != start {
        violations.push(ConstraintViolation::Unbalanced { start, end: level });
    }

    for leg in &plan.legs {
        if leg.volume != 1.0 {
            violations.push(ConstraintViolation::Volume {
                spread: leg.spread,
                volume: leg.volume,
            });
        }
    }

    let values: Vec<Option<f64>> = match valuation {
        Valuation::Expected(day) => plan
            .legs
            .iter()
            .map(|leg| {
                let params = day.get(leg.spread);
                match params.map(|p| var_feasible(p, config)) {
                    Some(f) if f.feasible && f.direction == Some(leg.direction) => {}
                    Some(f) if f.direction != Some(leg.direction) => {
                        violations.push(ConstraintViolation::Direction { spread: leg.spread });
                        violations.push(ConstraintViolation::VarScreen { spread: leg.spread });
                    }
                    _ => violations.push(ConstraintViolation::VarScreen { spread: leg.spread }),
                }
                params.map(|p| p.mean())
            })
            .collect(),
        Valuation::Realized(spreads) => plan.legs.iter().map(|l| Some(spreads.get(l.spread))).collect(),
    };

    let objective = plan
        .legs
        .iter()
        .zip(&values)
        .map(|(leg, y)| config.eta * leg.direction.directional(y.unwrap_or(f64::NAN)) - config.cost)
        .sum::<f64>();

    if let Valuation::Expected(_) = valuation {
        let close = (objective - plan.expected_total).abs() <= PAYOFF_TOLERANCE;
        if !close {
            violations.push(ConstraintViolation::RecordedPayoff {
                recorded: plan.expected_total,
                computed: objective,
            });
        }
    }

    let literal_objective = literal_objective(&pv, valuation, config, n);

    PlanReport {
        objective,
        literal_objective,
        soc,
        violations,
    }
}

fn literal_objective(pv: &PlanVector, valuation: Valuation<'_>, config: &TradeConfig, n: usize) -> Option<f64> {
    let spread = |i: usize, j: usize| -> Option<f64> {
        let (lo, hi, sign) = match i.cmp(&j) {
            std::cmp::Ordering::Less => (i, j, 1.0),
            std::cmp::Ordering::Greater => (j, i, -1.0),
            std::cmp::Ordering::Equal => return Some(0.0),
        };
        let id = SpreadId::new(lo, hi).ok()?;
        let y = match valuation {
            Valuation::Expected(day) => day.get(id)?.mean(),
            Valuation::Realized(spreads) => spreads.get(id),
        };
        Some(sign * y)
    };
    let mut total = 0.0;
    for i in 0..HOURS {
        for j in 0..HOURS {
            let weight = (pv.bs[i][j] - 1.0) * (pv.b[i] + pv.s[j]);
            if weight != 0.0 {
                total += 0.5 * config.eta * spread(i, j)? * weight;
            }
        }
    }
    Some(total - n as f64 * config.cost)
}
