//! Hour-pair spread universe.
//!
//! A spread `(i, j)` with `i < j` is the earlier-hour price minus the
//! later-hour price. The 276 pairs are flattened row-major over the upper
//! triangle: `(0,1), (0,2), …, (0,23), (1,2), …, (22,23)`.

use std::fmt;

use chrono::NaiveDate;
use serde::Serialize;
use thiserror::Error;

pub const HOURS: usize = 24;
pub const NUM_SPREADS: usize = HOURS * (HOURS - 1) / 2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpreadError {
    #[error("invalid hour pair ({0}, {1}): need 0 <= i < j <= 23")]
    HourPair(usize, usize),
    #[error("spread ordinal {0} out of range 0..=275")]
    Ordinal(usize),
    #[error("expected {HOURS} hourly prices, got {0}")]
    PriceCount(usize),
    #[error("non-finite price {value} at hour {hour}")]
    NonFinitePrice { hour: usize, value: f64 },
    #[error("expected {NUM_SPREADS} spread values, got {0}")]
    SpreadCount(usize),
}

/// Identity of one spread: buy/earlier hour `i` and sell/later hour `j`.
///
/// Ordering follows the ordinal (earliest `i`, then earliest `j`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SpreadId {
    i: u8,
    j: u8,
}

impl SpreadId {
    pub fn new(i: usize, j: usize) -> Result<Self, SpreadError> {
        if i < j && j < HOURS {
            Ok(Self {
                i: i as u8,
                j: j as u8,
            })
        } else {
            Err(SpreadError::HourPair(i, j))
        }
    }

    pub fn from_index(s: usize) -> Result<Self, SpreadError> {
        if s >= NUM_SPREADS {
            return Err(SpreadError::Ordinal(s));
        }
        let mut i = 0;
        let mut start = 0;
        loop {
            let row = HOURS - 1 - i;
            if s < start + row {
                return Self::new(i, i + 1 + (s - start));
            }
            start += row;
            i += 1;
        }
    }

    pub fn index(self) -> usize {
        let (i, j) = (self.i as usize, self.j as usize);
        // Σ_{k<i} (23 − k) + (j − i − 1)
        i * (HOURS - 1) - i * (i.saturating_sub(1)) / 2 + (j - i - 1)
    }

    /// Earlier hour.
    pub fn i(self) -> usize {
        self.i as usize
    }

    /// Later hour.
    pub fn j(self) -> usize {
        self.j as usize
    }

    pub fn hours(self) -> (usize, usize) {
        (self.i(), self.j())
    }

    /// All 276 spreads in ordinal order.
    pub fn all() -> impl Iterator<Item = SpreadId> {
        (0..HOURS).flat_map(|i| {
            (i + 1..HOURS).map(move |j| SpreadId {
                i: i as u8,
                j: j as u8,
            })
        })
    }

    pub fn contains_hour(self, h: usize) -> bool {
        self.i() == h || self.j() == h
    }
}

impl fmt::Display for SpreadId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.i, self.j)
    }
}

pub fn spread_index(i: usize, j: usize) -> Result<usize, SpreadError> {
    SpreadId::new(i, j).map(SpreadId::index)
}

pub fn spread_hours(s: usize) -> Result<(usize, usize), SpreadError> {
    SpreadId::from_index(s).map(SpreadId::hours)
}

/// One day of day-ahead prices (EUR/MWh), hour 0 through hour 23.
#[derive(Debug, Clone, PartialEq)]
pub struct HourlyPriceDay {
    date: NaiveDate,
    prices: [f64; HOURS],
}

impl HourlyPriceDay {
    pub fn new(date: NaiveDate, prices: &[f64]) -> Result<Self, SpreadError> {
        let prices: [f64; HOURS] = prices
            .try_into()
            .map_err(|_| SpreadError::PriceCount(prices.len()))?;
        if let Some((hour, &value)) = prices.iter().enumerate().find(|(_, p)| !p.is_finite()) {
            return Err(SpreadError::NonFinitePrice { hour, value });
        }
        Ok(Self { date, prices })
    }

    pub fn date(&self) -> NaiveDate {
        self.date
    }

    pub fn prices(&self) -> &[f64; HOURS] {
        &self.prices
    }
}

/// The 276 spreads of one day, indexed by [`SpreadId::index`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpreadVector {
    values: Vec<f64>,
}

impl SpreadVector {
    pub fn from_values(values: Vec<f64>) -> Result<Self, SpreadError> {
        if values.len() != NUM_SPREADS {
            return Err(SpreadError::SpreadCount(values.len()));
        }
        Ok(Self { values })
    }

    pub fn get(&self, id: SpreadId) -> f64 {
        self.values[id.index()]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (SpreadId, f64)> + '_ {
        SpreadId::all().zip(self.values.iter().copied())
    }

    /// The same vector with every value shifted by `k`.
    pub fn shifted(&self, k: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v + k).collect(),
        }
    }
}

/// Earlier-hour price minus later-hour price for every pair.
pub fn compute_spreads(day: &HourlyPriceDay) -> SpreadVector {
    let p = day.prices();
    SpreadVector {
        values: SpreadId::all().map(|s| p[s.i()] - p[s.j()]).collect(),
    }
}

/// Load-interaction regressor: load spread times the average load of the
/// two hours, which collapses to ½(Lᵢ² − Lⱼ²).
pub fn interaction_load(load_i: f64, load_j: f64) -> f64 {
    0.5 * (load_i * load_i - load_j * load_j)
}
