//! Per-day spread density forecasts and their CSV interchange format.
//!
//! The forecast file has the header `date,hour_i,hour_j,family,mu,sigma,nu,tau`,
//! one row per populated (date, spread) slot. Hours are 0-based. `nu` and `tau`
//! are left empty for the normal family. Numbers are written in the shortest
//! decimal form that parses back to the same `f64`.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::NaiveDate;
use thiserror::Error;

use crate::densities::{DensityError, DensityParams, Family};
use crate::spreads::{HourlyPriceDay, SpreadError, SpreadId, SpreadVector, NUM_SPREADS};
use crate::spreads::compute_spreads;

pub const FORECAST_HEADER: [&str; 8] = ["date", "hour_i", "hour_j", "family", "mu", "sigma", "nu", "tau"];

/// Floor applied to the naive estimator's standard deviation.
pub const SIGMA_FLOOR: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ForecastError {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("line {line}: {source}")]
    Domain {
        line: u64,
        #[source]
        source: DensityError,
    },
    #[error("line {line}: duplicate forecast for {date} spread {spread}")]
    Duplicate {
        line: u64,
        date: NaiveDate,
        spread: SpreadId,
    },
    #[error("forecast dates must be strictly increasing: {0} follows {1}")]
    Unordered(NaiveDate, NaiveDate),
    #[error("insufficient history: window {window} needs at least {window} days, have {have}")]
    InsufficientHistory { window: usize, have: usize },
    #[error("estimator window must be at least 2, got {0}")]
    Window(usize),
    #[error(transparent)]
    Spread(#[from] SpreadError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Forecast densities for the 276 spreads of one trading day; `None` marks a
/// spread that could not be forecast.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastDay {
    date: NaiveDate,
    entries: Vec<Option<DensityParams>>,
}

impl ForecastDay {
    /// A day with every slot missing.
    pub fn empty(date: NaiveDate) -> Self {
        Self {
            date,
            entries: vec![None; NUM_SPREADS],
        }
    }

    pub fn date(&self) -> NaiveDate {
        self.date
    }

    pub fn get(&self, id: SpreadId) -> Option<&DensityParams> {
        self.entries[id.index()].as_ref()
    }

    pub fn set(&mut self, id: SpreadId, params: Option<DensityParams>) {
        self.entries[id.index()] = params;
    }

    pub fn entries(&self) -> &[Option<DensityParams>] {
        &self.entries
    }

    pub fn populated(&self) -> impl Iterator<Item = (SpreadId, &DensityParams)> + '_ {
        SpreadId::all()
            .zip(self.entries.iter())
            .filter_map(|(id, e)| e.as_ref().map(|p| (id, p)))
    }

    pub fn populated_count(&self) -> usize {
        self.entries.iter().filter(|e| e.is_some()).count()
    }

    /// Expected spread of every slot, `None` where missing.
    pub fn expected_spreads(&self) -> Vec<Option<f64>> {
        self.entries.iter().map(|e| e.as_ref().map(expected_spread)).collect()
    }
}

/// Forecasts covering a backtest horizon, ordered by date.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ForecastSet {
    days: Vec<ForecastDay>,
}

impl ForecastSet {
    pub fn new(days: Vec<ForecastDay>) -> Result<Self, ForecastError> {
        for w in days.windows(2) {
            if w[1].date <= w[0].date {
                return Err(ForecastError::Unordered(w[1].date, w[0].date));
            }
        }
        Ok(Self { days })
    }

    pub fn days(&self) -> &[ForecastDay] {
        &self.days
    }

    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    pub fn day(&self, date: NaiveDate) -> Option<&ForecastDay> {
        self.days
            .binary_search_by_key(&date, |d| d.date)
            .ok()
            .map(|k| &self.days[k])
    }

    pub fn into_days(self) -> Vec<ForecastDay> {
        self.days
    }

    /// Reads the CSV forecast format. An empty input yields an empty set.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self, ForecastError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(reader);
        let mut by_date: BTreeMap<NaiveDate, ForecastDay> = BTreeMap::new();
        let mut records = rdr.records();

        match records.next() {
            None => return Ok(Self::default()),
            Some(header) => {
                let header = header?;
                let cols: Vec<&str> = header.iter().map(str::trim).collect();
                if cols != FORECAST_HEADER {
                    return Err(ForecastError::Parse {
                        line: 1,
                        message: format!(
                            "expected header `{}`, got `{}`",
                            FORECAST_HEADER.join(","),
                            cols.join(",")
                        ),
                    });
                }
            }
        }

        for record in records {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line());
            let (date, id, params) = parse_forecast_row(&record, line)?;
            let day = by_date.entry(date).or_insert_with(|| ForecastDay::empty(date));
            if day.get(id).is_some() {
                return Err(ForecastError::Duplicate {
                    line,
                    date,
                    spread: id,
                });
            }
            day.set(id, Some(params));
        }
        Ok(Self {
            days: by_date.into_values().collect(),
        })
    }

    /// Writes populated slots in (date, spread ordinal) order.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), ForecastError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        w.write_record(FORECAST_HEADER)?;
        for day in &self.days {
            let date = day.date.format("%Y-%m-%d").to_string();
            for (id, p) in day.populated() {
                let (nu, tau) = match p.family() {
                    Family::Normal => (String::new(), String::new()),
                    Family::SkewT => (
                        p.nu().map(fmt_num).unwrap_or_default(),
                        p.tau().map(fmt_num).unwrap_or_default(),
                    ),
                };
                w.write_record([
                    date.clone(),
                    id.i().to_string(),
                    id.j().to_string(),
                    p.family().to_string(),
                    fmt_num(p.mu()),
                    fmt_num(p.sigma()),
                    nu,
                    tau,
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Canonical number formatting: shortest round-trip decimal.
pub fn fmt_num(v: f64) -> String {
    format!("{v}")
}

pub(crate) fn parse_date(s: &str, line: u64) -> Result<NaiveDate, ForecastError> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").map_err(|e| ForecastError::Parse {
        line,
        message: format!("bad date `{s}`: {e}"),
    })
}

pub(crate) fn parse_f64(s: &str, what: &str, line: u64) -> Result<f64, ForecastError> {
    s.trim().parse::<f64>().map_err(|_| ForecastError::Parse {
        line,
        message: format!("bad {what} `{s}`"),
    })
}

pub(crate) fn parse_hour(s: &str, what: &str, line: u64) -> Result<usize, ForecastError> {
    s.trim().parse::<usize>().map_err(|_| ForecastError::Parse {
        line,
        message: format!("bad {what} `{s}`"),
    })
}

fn parse_forecast_row(
    record: &csv::StringRecord,
    line: u64,
) -> Result<(NaiveDate, SpreadId, DensityParams), ForecastError> {
    if record.len() != FORECAST_HEADER.len() {
        return Err(ForecastError::Parse {
            line,
            message: format!("expected 8 fields, got {}", record.len()),
        });
    }
    let date = parse_date(&record[0], line)?;
    let i = parse_hour(&record[1], "hour_i", line)?;
    let j = parse_hour(&record[2], "hour_j", line)?;
    let id = SpreadId::new(i, j).map_err(|e| ForecastError::Parse {
        line,
        message: e.to_string(),
    })?;
    let family: Family = record[3].trim().parse().map_err(|message| ForecastError::Parse { line, message })?;
    let mu = parse_f64(&record[4], "mu", line)?;
    let sigma = parse_f64(&record[5], "sigma", line)?;
    let (nu, tau) = match family {
        Family::Normal => (1.0, f64::INFINITY),
        Family::SkewT => (
            parse_f64(&record[6], "nu", line)?,
            parse_f64(&record[7], "tau", line)?,
        ),
    };
    let params =
        DensityParams::new(family, mu, sigma, nu, tau).map_err(|source| ForecastError::Domain { line, source })?;
    Ok((date, id, params))
}

/// Normal density from the sample mean and (n−1) standard deviation of the
/// last `window` realized values of spread `s`.
pub fn estimate_naive(
    history: &[SpreadVector],
    s: SpreadId,
    window: usize,
) -> Result<DensityParams, ForecastError> {
    if window < 2 {
        return Err(ForecastError::Window(window));
    }
    if history.len() < window {
        return Err(ForecastError::InsufficientHistory {
            window,
            have: history.len(),
        });
    }
    let recent = &history[history.len() - window..];
    let n = window as f64;
    let mean = recent.iter().map(|v| v.get(s)).sum::<f64>() / n;
    let var = recent.iter().map(|v| (v.get(s) - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let sd = var.sqrt().max(SIGMA_FLOOR);
    Ok(DensityParams::normal(mean, sd).expect("finite mean and floored sigma"))
}

/// Expected spread of a forecast density.
pub fn expected_spread(params: &DensityParams) -> f64 {
    params.mean()
}

/// Rolling naive forecasts: day `k` (for `k >= window`) is forecast from the
/// realized spreads of days `k-window .. k`.
pub fn naive_forecasts(prices: &[HourlyPriceDay], window: usize) -> Result<ForecastSet, ForecastError> {
    if window < 2 {
        return Err(ForecastError::Window(window));
    }
    if prices.len() <= window {
        return Err(ForecastError::InsufficientHistory {
            window: window + 1,
            have: prices.len(),
        });
    }
    let spreads: Vec<SpreadVector> = prices.iter().map(compute_spreads).collect();
    let mut days = Vec::with_capacity(prices.len() - window);
    for k in window..prices.len() {
        let mut day = ForecastDay::empty(prices[k].date());
        for id in SpreadId::all() {
            day.set(id, Some(estimate_naive(&spreads[k - window..k], id, window)?));
        }
        days.push(day);
    }
    ForecastSet::new(days)
}
