//! Exhaustive reference search used to cross-check the optimizers.
//!
//! Deliberately naive: every leg is re-screened from its raw inputs, every
//! unordered pair is tried, and the battery path is re-simulated hour by hour
//! without going through `soc_trajectory`.

use super::{ConfigError, Direction, SecondLegRule, TradeConfig, TradeLeg, TradePlan};
use crate::forecast::ForecastDay;
use crate::spreads::{SpreadId, SpreadVector, HOURS, NUM_SPREADS};

#[derive(Debug, Clone, Copy)]
pub enum OracleInput<'a> {
    Forecast(&'a ForecastDay),
    Spreads(&'a SpreadVector),
}

struct Screened {
    spread: SpreadId,
    direction: Direction,
    /// η|E| − c, before availability.
    margin: f64,
}

fn screen(input: OracleInput<'_>, config: &TradeConfig, ordinal: usize) -> Option<Screened> {
    let spread = SpreadId::from_index(ordinal).ok()?;
    let (expected, tail) = match input {
        OracleInput::Forecast(day) => {
            let params = day.get(spread)?;
            let expected = params.mean();
            let p = if expected > 0.0 {
                config.var_level
            } else {
                1.0 - config.var_level
            };
            (expected, params.quantile(p).ok()?)
        }
        OracleInput::Spreads(spreads) => {
            let y = spreads.get(spread);
            (y, y)
        }
    };
    if expected == 0.0 || tail == 0.0 || expected.signum() != tail.signum() {
        return None;
    }
    if config.eta * tail.abs() <= config.cost {
        return None;
    }
    let margin = config.eta * expected.abs() - config.cost;
    if margin <= 0.0 {
        return None;
    }
    let direction = if expected < 0.0 {
        Direction::BuyThenSell
    } else {
        Direction::SellThenBuy
    };
    Some(Screened {
        spread,
        direction,
        margin,
    })
}

/// Simulates the battery over the day and returns each leg's availability
/// factor at its opening hour, or `None` if the path leaves [0, 1].
fn simulate(legs: &[&Screened], start: f64) -> Option<Vec<f64>> {
    let mut delta = [0i32; HOURS];
    let mut touched = [0u8; HOURS];
    for leg in legs {
        let (i, j) = leg.spread.hours();
        touched[i] += 1;
        touched[j] += 1;
        let (early, late) = match leg.direction {
            Direction::BuyThenSell => (1, -1),
            Direction::SellThenBuy => (-1, 1),
        };
        delta[i] += early;
        delta[j] += late;
    }
    if touched.iter().any(|&t| t > 1) {
        return None;
    }
    let mut level = start;
    let mut before = [0.0; HOURS];
    for h in 0..HOURS {
        before[h] = level;
        level += f64::from(delta[h]);
        if !(0.0..=1.0).contains(&level) {
            return None;
        }
    }
    Some(
        legs.iter()
            .map(|leg| {
                let avail = before[leg.spread.i()];
                match leg.direction {
                    Direction::BuyThenSell => 1.0 - avail,
                    Direction::SellThenBuy => avail,
                }
            })
            .collect(),
    )
}

/// Exact maximizer over all plans of up to `max_legs` (1 or 2) legs.
///
/// Equal totals go to the plan found first: fewer legs, then the smaller
/// ordinal (pair) in lexicographic order.
pub fn brute_force_oracle(
    input: OracleInput<'_>,
    config: &TradeConfig,
    max_legs: usize,
) -> Result<TradePlan, ConfigError> {
    config.validate()?;
    let start = config.start_charge();
    let screened: Vec<Screened> = (0..NUM_SPREADS).filter_map(|k| screen(input, config, k)).collect();

    let mut best_total = 0.0;
    let mut best: Vec<TradeLeg> = Vec::new();

    for a in &screened {
        let Some(factors) = simulate(&[a], start) else {
            continue;
        };
        let total = a.margin * factors[0];
        if total > best_total {
            best_total = total;
            best = vec![TradeLeg::new(a.spread, a.direction, total)];
        }
    }

    if max_legs >= 2 {
        for (k, a) in screened.iter().enumerate() {
            for b in &screened[k + 1..] {
                if config.second_leg_rule == SecondLegRule::SequentialOnly {
                    let (ai, aj) = a.spread.hours();
                    let (bi, bj) = b.spread.hours();
                    if !(aj < bi || bj < ai) {
                        continue;
                    }
                }
                let Some(factors) = simulate(&[a, b], start) else {
                    continue;
                };
                let pa = a.margin * factors[0];
                let pb = b.margin * factors[1];
                let total = pa + pb;
                if total > best_total {
                    best_total = total;
                    best = vec![
                        TradeLeg::new(a.spread, a.direction, pa),
                        TradeLeg::new(b.spread, b.direction, pb),
                    ];
                }
            }
        }
    }

    Ok(TradePlan {
        legs: best,
        start_soc: config.start_soc,
        expected_total: best_total,
    })
}
