//! Seeded synthetic market data.
//!
//! Each day draws a mean price curve from a double-hump template (night dip,
//! morning peak, optional midday solar trough, evening peak) and realizes it
//! with independent Gaussian hourly noise. Because the noise is independent
//! and Gaussian, each spread's true density is normal with mean
//! `mᵢ − mⱼ` and variance `σᵢ² + σⱼ²`; those are the forecasts emitted.

use chrono::{Days, NaiveDate};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::densities::DensityParams;
use crate::forecast::{ForecastDay, ForecastSet, SIGMA_FLOOR};
use crate::spreads::{HourlyPriceDay, SpreadId, HOURS};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub days: usize,
    pub start_date: NaiveDate,
    /// Multiplier on the hourly noise standard deviation; 0 gives prices equal
    /// to the forecast means.
    pub noise: f64,
    pub solar_trough: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            days: 30,
            start_date: NaiveDate::from_ymd_opt(2024, 1, 1).expect("valid date"),
            noise: 1.0,
            solar_trough: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthData {
    pub prices: Vec<HourlyPriceDay>,
    pub forecasts: ForecastSet,
}

fn bump(h: usize, centre: f64, width: f64) -> f64 {
    let x = (h as f64 - centre) / width;
    (-0.5 * x * x).exp()
}

/// Mean price curve for one day from the template with the given amplitudes.
pub fn template_curve(base: f64, night: f64, morning: f64, solar: f64, evening: f64) -> [f64; HOURS] {
    std::array::from_fn(|h| {
        base - night * bump(h, 3.0, 1.8) + morning * bump(h, 8.0, 1.6) - solar * bump(h, 13.0, 1.8)
            + evening * bump(h, 19.0, 1.7)
    })
}

fn hourly_sd(mean: f64) -> f64 {
    4.0 + 0.08 * mean.abs()
}

fn draw_curve(rng: &mut ChaCha8Rng, solar_trough: bool) -> [f64; HOURS] {
    let base = rng.random_range(35.0..65.0);
    let night = rng.random_range(8.0..20.0);
    let morning = rng.random_range(15.0..40.0);
    let solar = if solar_trough {
        rng.random_range(10.0..35.0)
    } else {
        0.0
    };
    let evening = rng.random_range(20.0..50.0);
    template_curve(base, night, morning, solar, evening)
}

/// Generates `config.days` consecutive days. Output depends only on `seed`
/// and `config`.
pub fn generate(config: &SynthConfig, seed: u64) -> SynthData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut prices = Vec::with_capacity(config.days);
    let mut days = Vec::with_capacity(config.days);
    for d in 0..config.days {
        let date = config.start_date + Days::new(d as u64);
        let mean = draw_curve(&mut rng, config.solar_trough);
        let sd: [f64; HOURS] = std::array::from_fn(|h| config.noise * hourly_sd(mean[h]));
        let realized: Vec<f64> = (0..HOURS)
            .map(|h| {
                let z: f64 = rng.sample(StandardNormal);
                mean[h] + sd[h] * z
            })
            .collect();
        prices.push(HourlyPriceDay::new(date, &realized).expect("finite synthetic prices"));

        let mut day = ForecastDay::empty(date);
        for id in SpreadId::all() {
            let (i, j) = id.hours();
            let sigma = sd[i].hypot(sd[j]).max(SIGMA_FLOOR);
            day.set(
                id,
                Some(DensityParams::normal(mean[i] - mean[j], sigma).expect("finite synthetic forecast")),
            );
        }
        days.push(day);
    }
    SynthData {
        prices,
        forecasts: ForecastSet::new(days).expect("consecutive dates"),
    }
}

/// A forecast day with random parameters: about `skew_share` of populated
/// slots are skew-t, and each slot is missing with probability
/// `missing_rate`. Means are drawn wide enough that many legs pass the VaR
/// screen at the default cost.
pub fn random_forecast_day(rng: &mut ChaCha8Rng, date: NaiveDate, missing_rate: f64, skew_share: f64) -> ForecastDay {
    let mut day = ForecastDay::empty(date);
    for id in SpreadId::all() {
        if rng.random::<f64>() < missing_rate {
            continue;
        }
        let mu = rng.random_range(-150.0..150.0);
        let sigma = rng.random_range(1.0..40.0);
        let params = if rng.random::<f64>() < skew_share {
            let nu = rng.random_range(0.5..2.0);
            let tau = rng.random_range(2.5..30.0);
            DensityParams::skew_t(mu, sigma, nu, tau)
        } else {
            DensityParams::normal(mu, sigma)
        };
        day.set(id, Some(params.expect("parameters drawn inside the valid domain")));
    }
    day
}
