//! Hourly price files: header `date,hour,price_eur_mwh`, 24 rows per date with
//! hours 0..=23. Rows of a date may come in any order but every hour must be
//! present exactly once. Days are returned in date order.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::NaiveDate;
use thiserror::Error;

use crate::forecast::{fmt_num, parse_date, parse_f64, parse_hour, ForecastError};
use crate::spreads::{HourlyPriceDay, SpreadError, HOURS};

pub const PRICE_HEADER: [&str; 3] = ["date", "hour", "price_eur_mwh"];

#[derive(Debug, Error)]
pub enum PriceError {
    #[error("price file contains no days")]
    NoDays,
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("line {line}: duplicate price for {date} hour {hour}")]
    Duplicate { line: u64, date: NaiveDate, hour: usize },
    #[error("{date}: missing price for hour {hour}")]
    MissingHour { date: NaiveDate, hour: usize },
    #[error("{date}: {source}")]
    Invalid {
        date: NaiveDate,
        #[source]
        source: SpreadError,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<ForecastError> for PriceError {
    fn from(e: ForecastError) -> Self {
        match e {
            ForecastError::Parse { line, message } => PriceError::Parse { line, message },
            other => PriceError::Parse {
                line: 0,
                message: other.to_string(),
            },
        }
    }
}

/// Reads a price file; an empty file (or header only) is an error.
pub fn read_prices<R: Read>(reader: R) -> Result<Vec<HourlyPriceDay>, PriceError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        None => return Err(PriceError::NoDays),
        Some(h) => h?,
    };
    let cols: Vec<&str> = header.iter().map(str::trim).collect();
    if cols != PRICE_HEADER {
        return Err(PriceError::Parse {
            line: 1,
            message: format!("expected header `{}`, got `{}`", PRICE_HEADER.join(","), cols.join(",")),
        });
    }

    let mut by_date: BTreeMap<NaiveDate, [Option<f64>; HOURS]> = BTreeMap::new();
    for record in records {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != PRICE_HEADER.len() {
            return Err(PriceError::Parse {
                line,
                message: format!("expected 3 fields, got {}", record.len()),
            });
        }
        let date = parse_date(&record[0], line)?;
        let hour = parse_hour(&record[1], "hour", line)?;
        if hour >= HOURS {
            return Err(PriceError::Parse {
                line,
                message: format!("hour {hour} outside 0..=23"),
            });
        }
        let price = parse_f64(&record[2], "price", line)?;
        let slots = by_date.entry(date).or_insert([None; HOURS]);
        if slots[hour].replace(price).is_some() {
            return Err(PriceError::Duplicate { line, date, hour });
        }
    }
    if by_date.is_empty() {
        return Err(PriceError::NoDays);
    }

    by_date
        .into_iter()
        .map(|(date, slots)| {
            let mut prices = [0.0; HOURS];
            for (hour, slot) in slots.iter().enumerate() {
                prices[hour] = slot.ok_or(PriceError::MissingHour { date, hour })?;
            }
            HourlyPriceDay::new(date, &prices).map_err(|source| PriceError::Invalid { date, source })
        })
        .collect()
}

pub fn write_prices<W: Write>(days: &[HourlyPriceDay], writer: W) -> Result<(), PriceError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    w.write_record(PRICE_HEADER)?;
    for day in days {
        let date = day.date().format("%Y-%m-%d").to_string();
        for (hour, &p) in day.prices().iter().enumerate() {
            w.write_record([date.as_str(), &hour.to_string(), &fmt_num(p)])?;
        }
    }
    w.flush()?;
    Ok(())
}
