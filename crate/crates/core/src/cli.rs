//! Command-line front end: `plan`, `backtest` and `synth`.
//!
//! Every flag can also be set through an environment variable named
//! `SPREADRISK_<FLAG>` (upper case, dashes as underscores).

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::backtest::{run_backtest, summarize, BacktestRun, SummaryStats};
use crate::forecast::{fmt_num, naive_forecasts, ForecastDay, ForecastSet};
use crate::optimizer::{
    optimize, var_feasible, Direction, Mode, SecondLegRule, SocTrajectory, TradeConfig, TradePlan,
};
use crate::prices::{read_prices, write_prices};
use crate::spreads::{HourlyPriceDay, SpreadId};
use crate::synth::{generate, SynthConfig};

#[derive(Debug, Parser)]
#[command(name = "spreadrisk", version, about = "VaR-screened battery spread trading on day-ahead prices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Plan one day from its forecasts and print the plan as JSON.
    Plan(PlanArgs),
    /// Plan every day and score the plans against realized prices.
    Backtest(BacktestArgs),
    /// Write synthetic prices and their generating forecast densities.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Single,
    Double,
}

#[derive(Debug, Clone, Args)]
pub struct TradeArgs {
    /// Roundtrip efficiency.
    #[arg(long, env = "SPREADRISK_ETA", default_value_t = 0.8)]
    pub eta: f64,
    /// Roundtrip transaction cost, EUR/MWh.
    #[arg(long, env = "SPREADRISK_COST", default_value_t = 5.0)]
    pub cost: f64,
    /// Opening and closing state of charge (0 or 1).
    #[arg(long, env = "SPREADRISK_START_SOC", default_value_t = 0)]
    pub start_soc: u8,
    /// Tail probability of the VaR screen.
    #[arg(long, env = "SPREADRISK_VAR_LEVEL", default_value_t = 0.05)]
    pub var_level: f64,
    #[arg(long, env = "SPREADRISK_MODE", value_enum, default_value_t = ModeArg::Single)]
    pub mode: ModeArg,
    /// Only allow a second leg entirely before or after the first.
    #[arg(long, env = "SPREADRISK_SEQUENTIAL_ONLY")]
    pub sequential_only: bool,
}

impl TradeArgs {
    pub fn config(&self) -> Result<TradeConfig> {
        let config = TradeConfig {
            eta: self.eta,
            cost: self.cost,
            start_soc: self.start_soc,
            var_level: self.var_level,
            mode: match self.mode {
                ModeArg::Single => Mode::Single,
                ModeArg::Double => Mode::Double,
            },
            second_leg_rule: if self.sequential_only {
                SecondLegRule::SequentialOnly
            } else {
                SecondLegRule::SocSimulation
            },
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Clone, Args)]
pub struct SourceArgs {
    /// Hourly price CSV (`date,hour,price_eur_mwh`).
    #[arg(long, env = "SPREADRISK_PRICES")]
    pub prices: Option<PathBuf>,
    /// Forecast CSV (`date,hour_i,hour_j,family,mu,sigma,nu,tau`).
    #[arg(long, env = "SPREADRISK_FORECASTS", conflicts_with = "estimator_window")]
    pub forecasts: Option<PathBuf>,
    /// Forecast each day from the sample moments of the preceding N days of prices.
    #[arg(long, env = "SPREADRISK_ESTIMATOR_WINDOW")]
    pub estimator_window: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct PlanArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub trade: TradeArgs,
    /// Day to plan (YYYY-MM-DD); may be omitted when the forecasts hold one day.
    #[arg(long, env = "SPREADRISK_DATE")]
    pub date: Option<NaiveDate>,
    /// Also write the plan JSON here.
    #[arg(long, env = "SPREADRISK_OUT")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BacktestArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub trade: TradeArgs,
    /// Output directory for report.json and plans.csv.
    #[arg(long, env = "SPREADRISK_OUT")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, env = "SPREADRISK_DAYS", default_value_t = 30)]
    pub days: usize,
    #[arg(long, env = "SPREADRISK_SEED")]
    pub seed: u64,
    /// Scale of the hourly price noise; 0 makes prices equal the forecast means.
    #[arg(long, env = "SPREADRISK_NOISE", default_value_t = 1.0)]
    pub noise: f64,
    /// Leave out the midday solar trough.
    #[arg(long, env = "SPREADRISK_NO_SOLAR")]
    pub no_solar: bool,
    #[arg(long, env = "SPREADRISK_START_DATE", default_value = "2024-01-01")]
    pub start_date: NaiveDate,
    /// Output directory for prices.csv and forecasts.csv.
    #[arg(long, env = "SPREADRISK_OUT")]
    pub out: PathBuf,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Plan(args) => cmd_plan(&args),
        Command::Backtest(args) => cmd_backtest(&args),
        Command::Synth(args) => cmd_synth(&args),
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn load_prices(path: &Path) -> Result<Vec<HourlyPriceDay>> {
    read_prices(open(path)?).with_context(|| format!("reading prices from {}", path.display()))
}

fn load_forecasts(path: &Path) -> Result<ForecastSet> {
    ForecastSet::read_csv(open(path)?).with_context(|| format!("reading forecasts from {}", path.display()))
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, write: impl FnOnce(&mut BufWriter<&mut File>) -> Result<()>) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating temp file in {}", dir.display()))?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        write(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Forecasts and prices paired one to one. With a forecast file, a price day
/// without any forecast rows is an all-missing day; a forecast day without
/// prices is an error. The naive estimator starts after its window.
fn aligned_inputs(source: &SourceArgs) -> Result<(ForecastSet, Vec<HourlyPriceDay>)> {
    let Some(prices_path) = &source.prices else {
        bail!("--prices is required");
    };
    let prices = load_prices(prices_path)?;
    match (&source.forecasts, source.estimator_window) {
        (Some(path), None) => {
            let forecasts = load_forecasts(path)?;
            for day in forecasts.days() {
                if prices.binary_search_by_key(&day.date(), |p| p.date()).is_err() {
                    bail!("misaligned dates: forecast for {} has no matching price day", day.date());
                }
            }
            let days = prices
                .iter()
                .map(|p| forecasts.day(p.date()).cloned().unwrap_or_else(|| ForecastDay::empty(p.date())))
                .collect();
            Ok((ForecastSet::new(days)?, prices))
        }
        (None, Some(window)) => {
            let forecasts = naive_forecasts(&prices, window)?;
            let prices = prices[window..].to_vec();
            Ok((forecasts, prices))
        }
        _ => bail!("supply exactly one of --forecasts or --estimator-window"),
    }
}

#[derive(Debug, Serialize)]
struct LegView {
    spread: SpreadId,
    buy_hour: usize,
    sell_hour: usize,
    direction: Direction,
    expected_spread: Option<f64>,
    var_quantile: Option<f64>,
    expected_payoff: f64,
}

#[derive(Debug, Serialize)]
struct PlanView {
    date: NaiveDate,
    no_trade: bool,
    expected_total: f64,
    legs: Vec<LegView>,
    soc: Vec<f64>,
}

fn plan_view(day: &ForecastDay, plan: &TradePlan, config: &TradeConfig, soc: &SocTrajectory) -> PlanView {
    let legs = plan
        .legs
        .iter()
        .map(|leg| {
            let screen = day.get(leg.spread).map(|p| var_feasible(p, config));
            LegView {
                spread: leg.spread,
                buy_hour: leg.buy_hour(),
                sell_hour: leg.sell_hour(),
                direction: leg.direction,
                expected_spread: screen.map(|s| s.expected),
                var_quantile: screen.and_then(|s| s.quantile),
                expected_payoff: leg.expected_payoff,
            }
        })
        .collect();
    PlanView {
        date: day.date(),
        no_trade: plan.is_no_trade(),
        expected_total: plan.expected_total,
        legs,
        soc: soc.values().to_vec(),
    }
}

pub fn cmd_plan(args: &PlanArgs) -> Result<()> {
    let config = args.trade.config()?;
    let forecasts = match (&args.source.forecasts, args.source.estimator_window) {
        (Some(path), None) => load_forecasts(path)?,
        (None, Some(_)) => aligned_inputs(&args.source)?.0,
        _ => bail!("supply exactly one of --forecasts or --estimator-window"),
    };
    // a priced day without forecast rows has every spread missing
    let priced_dates: Vec<NaiveDate> = match (&args.source.prices, args.source.forecasts.is_some()) {
        (Some(path), true) => load_prices(path)?.iter().map(HourlyPriceDay::date).collect(),
        _ => Vec::new(),
    };
    let empty;
    let day = match args.date {
        Some(date) => match forecasts.day(date) {
            Some(day) => day,
            None if priced_dates.contains(&date) => {
                empty = ForecastDay::empty(date);
                &empty
            }
            None => bail!("no forecast for date {date}"),
        },
        None => match forecasts.days() {
            [only] => only,
            [] => bail!("forecast file holds no days"),
            _ => bail!("--date is required when forecasts cover several days"),
        },
    };
    let plan = optimize(day, &config)?;
    let soc = plan.soc_trajectory()?;
    let view = plan_view(day, &plan, &config, &soc);
    let json = serde_json::to_string_pretty(&view)?;
    if let Some(out) = &args.out {
        write_atomic(out, |w| {
            writeln!(w, "{json}")?;
            Ok(())
        })?;
    }
    // a closed pipe (`| head`) is not an error
    match writeln!(std::io::stdout().lock(), "{json}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

#[derive(Debug, Serialize)]
struct DayReport {
    date: NaiveDate,
    legs: usize,
    expected_payoff: f64,
    payoff: f64,
}

#[derive(Debug, Serialize)]
struct Report<'a> {
    config: &'a TradeConfig,
    summary: SummaryStats,
    days: Vec<DayReport>,
}

fn report<'a>(run: &BacktestRun, config: &'a TradeConfig) -> Result<Report<'a>> {
    let summary = summarize(&run.payoff_vector())?;
    let days = run
        .days
        .iter()
        .map(|d| DayReport {
            date: d.date,
            legs: d.plan.leg_count(),
            expected_payoff: d.plan.expected_total,
            payoff: d.payoff,
        })
        .collect();
    Ok(Report {
        config,
        summary,
        days,
    })
}

fn write_plans_csv(run: &BacktestRun, w: impl Write) -> Result<()> {
    let mut csv = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    csv.write_record([
        "date",
        "legs",
        "spreads",
        "directions",
        "expected_payoff",
        "realized_spreads",
        "realized_payoff",
    ])?;
    for d in &run.days {
        let join = |f: &dyn Fn(&crate::backtest::RealizedLeg) -> String| {
            d.legs.iter().map(f).collect::<Vec<_>>().join(";")
        };
        csv.write_record([
            d.date.format("%Y-%m-%d").to_string(),
            d.legs.len().to_string(),
            join(&|l| format!("{}-{}", l.spread.i(), l.spread.j())),
            join(&|l| l.direction.as_str().to_string()),
            fmt_num(d.plan.expected_total),
            join(&|l| fmt_num(l.realized_spread)),
            fmt_num(d.payoff),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

pub fn cmd_backtest(args: &BacktestArgs) -> Result<()> {
    let config = args.trade.config()?;
    let (forecasts, prices) = aligned_inputs(&args.source)?;
    let run = run_backtest(&forecasts, &prices, &config)?;
    let report = report(&run, &config)?;
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write_atomic(&args.out.join("report.json"), |w| {
        serde_json::to_writer_pretty(&mut *w, &report)?;
        writeln!(w)?;
        Ok(())
    })?;
    write_atomic(&args.out.join("plans.csv"), |w| write_plans_csv(&run, w))?;
    let s = &report.summary;
    eprintln!(
        "{} days: total {:.2}, mean {:.4}, std error {:.4}, losses {}",
        s.days, s.pi_total, s.pi_mean, s.std_error, s.n_loss
    );
    Ok(())
}

pub fn cmd_synth(args: &SynthArgs) -> Result<()> {
    if args.days == 0 {
        bail!("--days must be at least 1");
    }
    if !(args.noise.is_finite() && args.noise >= 0.0) {
        bail!("--noise must be finite and >= 0");
    }
    let config = SynthConfig {
        days: args.days,
        start_date: args.start_date,
        noise: args.noise,
        solar_trough: !args.no_solar,
    };
    let data = generate(&config, args.seed);
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write_atomic(&args.out.join("prices.csv"), |w| Ok(write_prices(&data.prices, w)?))?;
    write_atomic(&args.out.join("forecasts.csv"), |w| Ok(data.forecasts.write_csv(w)?))?;
    Ok(())
}
