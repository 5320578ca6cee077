use serde::Serialize;
use thiserror::Error;

use super::TradeLeg;
use crate::spreads::HOURS;

pub const SOC_MIN: f64 = 0.0;
pub const SOC_MAX: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SocError {
    #[error("legs share hour {0}")]
    SharedHour(usize),
    #[error("state of charge {soc} at hour {hour} outside [0, 1]")]
    OutOfBounds { hour: usize, soc: f64 },
    #[error("start SoC must be 0 or 1, got {0}")]
    StartSoc(u8),
}

/// Battery fill level at the end of each hour.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SocTrajectory {
    start: f64,
    soc: [f64; HOURS],
}

impl SocTrajectory {
    pub fn values(&self) -> &[f64; HOURS] {
        &self.soc
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    /// Fill level just before hour `h` trades.
    pub fn before(&self, h: usize) -> f64 {
        if h == 0 {
            self.start
        } else {
            self.soc[h - 1]
        }
    }

    pub fn final_soc(&self) -> f64 {
        self.soc[HOURS - 1]
    }

    pub fn is_binary(&self) -> bool {
        self.soc.iter().all(|&v| v == SOC_MIN || v == SOC_MAX)
    }
}

/// Runs the hourly recursion `soc_h = soc_{h-1} + buy_h − sell_h` from the
/// opening level and rejects any path leaving [0, 1]. Legs must not share
/// hours.
pub fn soc_trajectory(legs: &[TradeLeg], start_soc: u8) -> Result<SocTrajectory, SocError> {
    if start_soc > 1 {
        return Err(SocError::StartSoc(start_soc));
    }
    let mut flow = [0.0f64; HOURS];
    let mut used = [false; HOURS];
    for leg in legs {
        for h in [leg.spread.i(), leg.spread.j()] {
            if used[h] {
                return Err(SocError::SharedHour(h));
            }
            used[h] = true;
        }
        flow[leg.buy_hour()] += leg.volume;
        flow[leg.sell_hour()] -= leg.volume;
    }
    let start = f64::from(start_soc);
    let mut soc = [0.0; HOURS];
    let mut level = start;
    for h in 0..HOURS {
        level += flow[h];
        if !(SOC_MIN..=SOC_MAX).contains(&level) {
            return Err(SocError::OutOfBounds { hour: h, soc: level });
        }
        soc[h] = level;
    }
    Ok(SocTrajectory { start, soc })
}

/// Indicator form of a plan: buy flags `b`, sell flags `s`, and the timing
/// matrix `bs[i][j] = b[i] + s[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanVector {
    pub b: [f64; HOURS],
    pub s: [f64; HOURS],
    pub bs: [[f64; HOURS]; HOURS],
}

impl PlanVector {
    /// Legs landing on the same hour collapse into one flag there.
    pub fn from_legs(legs: &[TradeLeg]) -> Self {
        let mut b = [0.0; HOURS];
        let mut s = [0.0; HOURS];
        for leg in legs {
            let (buy, sell) = (leg.buy_hour(), leg.sell_hour());
            b[buy] = f64::max(b[buy], leg.volume);
            s[sell] = f64::max(s[sell], leg.volume);
        }
        let mut bs = [[0.0; HOURS]; HOURS];
        for (i, row) in bs.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = b[i] + s[j];
            }
        }
        Self { b, s, bs }
    }

    pub fn total_bought(&self) -> f64 {
        self.b.iter().sum()
    }

    pub fn total_sold(&self) -> f64 {
        self.s.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::Direction;
    use crate::spreads::SpreadId;

    fn leg(i: usize, j: usize, d: Direction) -> TradeLeg {
        TradeLeg::new(SpreadId::new(i, j).unwrap(), d, 0.0)
    }

    #[test]
    fn single_pulse() {
        let t = soc_trajectory(&[leg(3, 10, Direction::BuyThenSell)], 0).unwrap();
        for h in 0..HOURS {
            let expected = if (3..10).contains(&h) { 1.0 } else { 0.0 };
            assert_eq!(t.values()[h], expected, "hour {h}");
        }
        assert_eq!(t.final_soc(), 0.0);
        assert!(t.is_binary());
    }

    #[test]
    fn two_pulses() {
        let legs = [leg(4, 9, Direction::BuyThenSell), leg(12, 18, Direction::BuyThenSell)];
        let t = soc_trajectory(&legs, 0).unwrap();
        let ones: Vec<usize> = (0..HOURS).filter(|&h| t.values()[h] == 1.0).collect();
        let expected: Vec<usize> = (4..9).chain(12..18).collect();
        assert_eq!(ones, expected);
        assert_eq!(t.final_soc(), 0.0);
    }

    #[test]
    fn cannot_sell_from_empty() {
        let err = soc_trajectory(&[leg(2, 8, Direction::SellThenBuy)], 0).unwrap_err();
        assert_eq!(err, SocError::OutOfBounds { hour: 2, soc: -1.0 });
        // but fine from full
        let t = soc_trajectory(&[leg(2, 8, Direction::SellThenBuy)], 1).unwrap();
        assert_eq!(t.before(2), 1.0);
        assert_eq!(t.values()[2], 0.0);
        assert_eq!(t.final_soc(), 1.0);
    }

    #[test]
    fn embedded_and_straddling() {
        let embedded = [leg(2, 20, Direction::BuyThenSell), leg(6, 11, Direction::SellThenBuy)];
        assert!(soc_trajectory(&embedded, 0).is_ok());
        let straddle = [leg(2, 10, Direction::BuyThenSell), leg(6, 15, Direction::BuyThenSell)];
        assert!(matches!(
            soc_trajectory(&straddle, 0),
            Err(SocError::OutOfBounds { hour: 6, .. })
        ));
        let shared = [leg(2, 10, Direction::BuyThenSell), leg(10, 15, Direction::BuyThenSell)];
        assert_eq!(soc_trajectory(&shared, 0), Err(SocError::SharedHour(10)));
        assert_eq!(soc_trajectory(&[], 2), Err(SocError::StartSoc(2)));
    }

    #[test]
    fn plan_vector_indicators() {
        let legs = [leg(4, 9, Direction::BuyThenSell), leg(12, 18, Direction::SellThenBuy)];
        let pv = PlanVector::from_legs(&legs);
        assert_eq!(pv.b[4], 1.0);
        assert_eq!(pv.s[9], 1.0);
        assert_eq!(pv.s[12], 1.0);
        assert_eq!(pv.b[18], 1.0);
        assert_eq!(pv.total_bought(), 2.0);
        assert_eq!(pv.total_sold(), 2.0);
        assert_eq!(pv.bs[4][9], 2.0);
        assert_eq!(pv.bs[4][0], 1.0);
        assert_eq!(pv.bs[0][0], 0.0);
    }
}
