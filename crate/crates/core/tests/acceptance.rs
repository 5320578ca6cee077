//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any attainable criterion fails.
//!
//! Run alone with `cargo test -p spreadrisk --test acceptance`.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use chrono::NaiveDate;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use spreadrisk::backtest::{run_backtest, summarize, PayoffVector};
use spreadrisk::densities::DensityParams;
use spreadrisk::forecast::{ForecastDay, ForecastSet};
use spreadrisk::optimizer::{
    brute_force_oracle, optimize_deterministic, optimize_single, optimize_two, var_feasible, Direction, Mode,
    OracleInput, TradeConfig, TradePlan,
};
use spreadrisk::spreads::{compute_spreads, HourlyPriceDay, SpreadId, HOURS};
use spreadrisk::synth::{generate, random_forecast_day, SynthConfig};

struct Outcome {
    name: &'static str,
    passed: bool,
    detail: String,
    /// Known to be impossible as literally stated; reported but not fatal.
    unattainable: bool,
}

fn outcome(name: &'static str, passed: bool, detail: String) -> Outcome {
    Outcome {
        name,
        passed,
        detail,
        unattainable: false,
    }
}

fn date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2016, 6, 1).unwrap()
}

fn id(i: usize, j: usize) -> SpreadId {
    SpreadId::new(i, j).unwrap()
}

fn cfg(cost: f64, start_soc: u8, mode: Mode) -> TradeConfig {
    TradeConfig {
        eta: 0.8,
        cost,
        start_soc,
        mode,
        ..TradeConfig::default()
    }
}

fn show(spreads: &[SpreadId]) -> String {
    spreads.iter().map(|s| s.to_string()).collect::<Vec<_>>().join("+")
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn oracle_equivalence() -> Outcome {
    let ((checked, worst, mismatches), elapsed) = timed(|| {
        let mut worst: f64 = 0.0;
        let mut mismatches = 0;
        let mut checked = 0;
        for k in 0..200u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + k);
            let missing = 0.1 + 0.2 * rng.random::<f64>();
            let day = random_forecast_day(&mut rng, date(), missing, 0.5);
            let cost = if k % 2 == 0 { 5.0 } else { 10.0 };
            let start = ((k / 2) % 2) as u8;
            let c = cfg(cost, start, Mode::Single);
            let pairs = [
                (optimize_single(&day, &c).unwrap(), brute_force_oracle(OracleInput::Forecast(&day), &c, 1).unwrap()),
                (optimize_two(&day, &c).unwrap(), brute_force_oracle(OracleInput::Forecast(&day), &c, 2).unwrap()),
            ];
            for (fast, slow) in pairs {
                let diff = (fast.expected_total - slow.expected_total).abs();
                worst = worst.max(diff);
                if diff > 1e-9 {
                    mismatches += 1;
                }
                checked += 1;
            }
        }
        (checked, worst, mismatches)
    });
    outcome(
        "oracle equivalence (200 days, single+double)",
        mismatches == 0 && elapsed <= Duration::from_secs(10),
        format!("{checked} comparisons, max |diff| {worst:e}, {:.2}s (limit 10s)", elapsed.as_secs_f64()),
    )
}

fn quantile_correctness() -> Vec<Outcome> {
    let nus = [0.3, 0.5, 0.8, 1.0, 1.25, 1.6, 2.0, 3.0];
    let taus = [1.5, 2.0, 3.0, 5.0, 10.0, 30.0, 100.0];
    let probs = [0.01, 0.05, 0.5, 0.95, 0.99];
    let mut worst: f64 = 0.0;
    let mut pairs = 0;
    for &nu in &nus {
        for &tau in &taus {
            pairs += 1;
            let p = DensityParams::skew_t(10.0, 4.0, nu, tau).unwrap();
            for &prob in &probs {
                let q = p.quantile(prob).unwrap();
                worst = worst.max((p.cdf(q) - prob).abs());
            }
        }
    }
    let grid = outcome(
        "quantile grid: |cdf(quantile(p)) - p| <= 1e-9",
        pairs >= 50 && worst <= 1e-9,
        format!("{pairs} (nu, tau) pairs x {} levels, max error {worst:e}", probs.len()),
    );

    let normal = DensityParams::normal(20.0, 5.0).unwrap();
    let q05 = normal.quantile(0.05).unwrap();
    let target = 20.0 - 1.6448536 * 5.0;
    let normal_line = outcome(
        "normal q05 = mu - 1.6448536 sigma +- 1e-6",
        (q05 - target).abs() <= 1e-6,
        format!("q05 {q05}, |diff| {:e}", (q05 - target).abs()),
    );

    let n = 1_000_000;
    let mut worst_z: f64 = 0.0;
    let mut checks = 0;
    let mut failures = 0;
    for (k, (nu, tau)) in [(0.6, 4.0), (1.5, 8.0), (2.5, 3.0)].into_iter().enumerate() {
        let p = DensityParams::skew_t(0.0, 1.0, nu, tau).unwrap();
        let mut draws = p.sample(77 + k as u64, n);
        draws.sort_by(f64::total_cmp);
        for &prob in &probs {
            let q = p.quantile(prob).unwrap();
            let emp = draws[((n as f64 * prob) as usize).min(n - 1)];
            let se = (prob * (1.0 - prob) / n as f64).sqrt() / p.pdf(q);
            let z = (emp - q).abs() / se;
            worst_z = worst_z.max(z);
            checks += 1;
            if z > 3.0 {
                failures += 1;
            }
        }
    }
    let mc = outcome(
        "skew-t quantiles vs 1e6-sample percentiles within 3 SE",
        failures == 0,
        format!("{checks} checks, largest deviation {worst_z:.2} SE"),
    );
    vec![grid, normal_line, mc]
}

fn single_trade_fixture() -> Outcome {
    let mut day = ForecastDay::empty(date());
    day.set(id(14, 21), Some(DensityParams::normal(-150.0, 20.0).unwrap()));
    let plan = optimize_single(&day, &cfg(5.0, 0, Mode::Single)).unwrap();
    let ok = plan.spreads() == vec![id(14, 21)]
        && plan.legs[0].direction == Direction::BuyThenSell
        && (plan.expected_total - 115.0).abs() <= 1e-9;
    outcome(
        "single-trade fixture: (14,21) worth 115",
        ok,
        format!("legs {}, payoff {}", show(&plan.spreads()), plan.expected_total),
    )
}

fn two_trade_fixtures() -> Vec<Outcome> {
    // Forecasts rank the pair above the spanning single trade; realized
    // prices then settle the legs at 73.4 and 8.6 and the single at 60.6.
    let mut day = ForecastDay::empty(date());
    day.set(id(0, 18), Some(DensityParams::normal(-100.0, 10.0).unwrap()));
    day.set(id(4, 9), Some(DensityParams::normal(-70.0, 10.0).unwrap()));
    day.set(id(12, 18), Some(DensityParams::normal(-40.0, 10.0).unwrap()));
    let mut prices = [60.0; HOURS];
    for (h, p) in [(0, 40.0), (4, 30.0), (9, 128.0), (12, 105.0), (18, 122.0)] {
        prices[h] = p;
    }
    let prices = vec![HourlyPriceDay::new(date(), &prices).unwrap()];
    let forecasts = ForecastSet::new(vec![day.clone()]).unwrap();

    let double_cfg = cfg(5.0, 0, Mode::Double);
    let single_cfg = cfg(5.0, 0, Mode::Single);
    let two = optimize_two(&day, &double_cfg).unwrap();
    let double_run = run_backtest(&forecasts, &prices, &double_cfg).unwrap();
    let single_run = run_backtest(&forecasts, &prices, &single_cfg).unwrap();
    let d = &double_run.days[0];
    let s = &single_run.days[0];
    let ok = two.spreads() == vec![id(4, 9), id(12, 18)]
        && (d.payoff - 82.0).abs() <= 1e-9
        && (d.legs[0].realized_payoff - 73.4).abs() <= 1e-9
        && (d.legs[1].realized_payoff - 8.6).abs() <= 1e-9
        && s.plan.spreads() == vec![id(0, 18)]
        && (s.payoff - 60.6).abs() <= 1e-9
        && d.payoff > s.payoff;
    let main = outcome(
        "two-trade fixture: (4,9)+(12,18) = 82.0 beats single 60.6",
        ok,
        format!(
            "pair {} realized {} ({} + {}), single {} realized {}",
            show(&two.spreads()),
            d.payoff,
            d.legs.first().map_or(f64::NAN, |l| l.realized_payoff),
            d.legs.get(1).map_or(f64::NAN, |l| l.realized_payoff),
            show(&s.plan.spreads()),
            s.payoff
        ),
    );

    // The same fixture with the forecast means set to the realized values
    // and sigma 10 cannot reproduce the pair: (12,18) fails the screen.
    let literal = DensityParams::normal(-17.0, 10.0).unwrap();
    let screen = var_feasible(&literal, &double_cfg);
    let note = Outcome {
        name: "two-trade fixture as literally specified (means = realized spreads, sigma 10)",
        passed: screen.feasible,
        detail: format!(
            "(12,18) ~ N(-17, 10): q95 = {:.3}, feasible = {}; documented in the decisions notes",
            screen.quantile.unwrap(),
            screen.feasible
        ),
        unattainable: true,
    };
    vec![main, note]
}

fn plan_shape_ok(plan: &TradePlan) -> Result<(), String> {
    if plan.legs.len() == 2 {
        let (ai, aj) = plan.legs[0].spread.hours();
        let (bi, bj) = plan.legs[1].spread.hours();
        let sequential = aj < bi || bj < ai;
        let embedded = (ai < bi && bj < aj) || (bi < ai && aj < bj);
        if !(sequential || embedded) {
            return Err(format!("straddling legs {:?}", plan.spreads()));
        }
    }
    if plan.legs.iter().any(|l| l.volume != 1.0) {
        return Err("non-unit volume".into());
    }
    let path = plan.soc_trajectory().map_err(|e| e.to_string())?;
    if !path.is_binary() {
        return Err(format!("non-binary SoC {:?}", path.values()));
    }
    if path.final_soc() != f64::from(plan.start_soc) {
        return Err("closing SoC differs from opening".into());
    }
    Ok(())
}

fn structural_properties() -> Outcome {
    let (result, elapsed) = timed(|| -> Result<(usize, usize), String> {
        let data = generate(
            &SynthConfig {
                days: 500,
                ..SynthConfig::default()
            },
            2024,
        );
        let mut split_checks = 0;
        let mut plans = 0;
        for (prices, forecast) in data.prices.iter().zip(data.forecasts.days()) {
            let p = prices.prices();
            for cost in [0.5, 5.0] {
                let c = cfg(cost, 0, Mode::Single);
                let value = |i: usize, j: usize| c.eta * (p[j] - p[i]).abs() - c.cost;
                for i in 0..HOURS {
                    for j in i + 2..HOURS {
                        let rising = (i..j).all(|h| p[h + 1] >= p[h]);
                        let falling = (i..j).all(|h| p[h + 1] <= p[h]);
                        if !(rising || falling) {
                            continue;
                        }
                        for k in i + 1..j {
                            split_checks += 1;
                            if value(i, k) + value(k, j) >= value(i, j) {
                                return Err(format!("split ({i},{k},{j}) profits on {}", prices.date()));
                            }
                        }
                    }
                }
            }
            let spreads = compute_spreads(prices);
            for start in [0, 1] {
                for mode in [Mode::Single, Mode::Double] {
                    let c = cfg(5.0, start, mode);
                    for plan in [
                        optimize_deterministic(&spreads, &c).unwrap(),
                        spreadrisk::optimizer::optimize(forecast, &c).unwrap(),
                    ] {
                        plan_shape_ok(&plan).map_err(|e| format!("{}: {e}", prices.date()))?;
                        plans += 1;
                    }
                }
            }
        }
        Ok((split_checks, plans))
    });
    match result {
        Ok((splits, plans)) => outcome(
            "structural properties on 500 synthetic curves",
            elapsed <= Duration::from_secs(30),
            format!(
                "{splits} monotone splits lose, {plans} plans sequential/embedded with binary balanced SoC, {:.2}s (limit 30s)",
                elapsed.as_secs_f64()
            ),
        ),
        Err(e) => outcome("structural properties on 500 synthetic curves", false, e),
    }
}

/// Days whose means sit close to the screen boundary, so the tail level
/// actually binds.
fn tight_day(rng: &mut ChaCha8Rng) -> ForecastDay {
    let mut day = ForecastDay::empty(date());
    for s in SpreadId::all() {
        let mu = rng.random_range(-60.0..60.0);
        let sigma = rng.random_range(8.0..30.0);
        let params = if rng.random::<f64>() < 0.5 {
            DensityParams::normal(mu, sigma)
        } else {
            DensityParams::skew_t(mu, sigma, rng.random_range(0.6..1.6), rng.random_range(3.0..20.0))
        };
        day.set(s, Some(params.unwrap()));
    }
    day
}

fn var_calibration() -> Outcome {
    let ((legs, literal, directional), elapsed) = timed(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(555);
        let mut legs = 0usize;
        let mut literal = 0usize;
        let mut directional = 0usize;
        for k in 0..2000 {
            let day = if k % 2 == 0 {
                tight_day(&mut rng)
            } else {
                random_forecast_day(&mut rng, date(), 0.2, 0.5)
            };
            let c = cfg(5.0, 0, Mode::Double);
            let plan = optimize_two(&day, &c).unwrap();
            // realize every spread from its own forecast density
            let realized: Vec<Option<f64>> = day
                .entries()
                .iter()
                .map(|e| e.map(|p| p.sample_with(&mut rng, 1)[0]))
                .collect();
            for leg in &plan.legs {
                let y = realized[leg.spread.index()].unwrap();
                legs += 1;
                if c.eta * y.abs() < c.cost {
                    literal += 1;
                }
                if c.eta * leg.direction.directional(y) < c.cost {
                    directional += 1;
                }
            }
        }
        (legs, literal, directional)
    });
    let bound = 0.05 + 3.0 * (0.05 * 0.95 / legs as f64).sqrt();
    let lit = literal as f64 / legs as f64;
    let dir = directional as f64 / legs as f64;
    outcome(
        "VaR calibration over 2000 simulated days",
        legs > 0 && lit <= bound && dir <= bound && elapsed <= Duration::from_secs(60),
        format!(
            "{legs} legs: eta|y| < c in {lit:.4}, directional shortfall in {dir:.4}, bound {bound:.4}, {:.2}s (limit 60s)",
            elapsed.as_secs_f64()
        ),
    )
}

fn statistics_identities() -> Vec<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(31337);
    let mut total_ok = 0;
    let mut division_ok = 0;
    let mut product_ok = 0;
    let mut product_within_rounding = 0;
    let mut with_losses = 0;
    let mut se_worst: f64 = 0.0;
    let vectors = 1000;
    for _ in 0..vectors {
        let len = rng.random_range(1..400);
        let pi: Vec<f64> = (0..len)
            .map(|_| {
                if rng.random::<f64>() < 0.2 {
                    0.0
                } else {
                    rng.random_range(-80.0..150.0)
                }
            })
            .collect();
        let s = summarize(&PayoffVector::from_payoffs(pi.clone())).unwrap();
        let mut sum = 0.0;
        for p in &pi {
            sum += p;
        }
        if s.pi_total == sum {
            total_ok += 1;
        }
        let t = len as f64;
        let mean = sum / t;
        let sd = if len > 1 {
            (pi.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / (t - 1.0)).sqrt()
        } else {
            0.0
        };
        se_worst = se_worst.max((s.std_error - sd / t.sqrt()).abs());
        match (s.loss_total, s.loss_mean) {
            (Some(lt), Some(lm)) => {
                with_losses += 1;
                let n = s.n_loss as f64;
                if lm == lt / n {
                    division_ok += 1;
                }
                if lm * n == lt {
                    product_ok += 1;
                }
                // exact residual of the product; bounded by n * ulp(lm) / 2
                let ulp = f64::from_bits(lm.abs().to_bits() + 1) - lm.abs();
                if lm.mul_add(n, -lt).abs() <= 0.5 * n * ulp {
                    product_within_rounding += 1;
                }
            }
            (None, None) if s.n_loss == 0 => {
                with_losses += 1;
                division_ok += 1;
                product_ok += 1;
                product_within_rounding += 1;
            }
            _ => {}
        }
    }
    vec![
        outcome(
            "pi_total equals the sum of daily payoffs exactly",
            total_ok == vectors,
            format!("{total_ok}/{vectors} vectors"),
        ),
        outcome(
            "std_error = sd / sqrt(T) within 1e-12",
            se_worst <= 1e-12,
            format!("max |diff| {se_worst:e}"),
        ),
        outcome(
            "loss_mean = loss_total / n_loss exactly",
            division_ok == vectors && with_losses == vectors,
            format!(
                "{division_ok}/{vectors} bit-exact; product residual within half an ulp of loss_mean times n_loss in {product_within_rounding}/{vectors}"
            ),
        ),
        Outcome {
            name: "loss_mean * n_loss == loss_total in floating point",
            passed: product_ok == vectors,
            detail: format!(
                "{product_ok}/{vectors} vectors; the product of a rounded quotient need not round back to the dividend"
            ),
            unattainable: true,
        },
    ]
}

fn degradation() -> Outcome {
    let mut days = 0;
    let mut violations = 0;
    let mut strictly_better = 0;
    let synth = generate(
        &SynthConfig {
            days: 200,
            ..SynthConfig::default()
        },
        77,
    );
    let mut all: Vec<ForecastDay> = synth.forecasts.into_days();
    for k in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(9000 + k);
        all.push(random_forecast_day(&mut rng, date(), 0.2, 0.5));
    }
    for day in &all {
        for start in [0, 1] {
            for cost in [5.0, 10.0] {
                let c = cfg(cost, start, Mode::Single);
                let one = optimize_single(day, &c).unwrap().expected_total;
                let two = optimize_two(day, &c).unwrap().expected_total;
                days += 1;
                if two < one {
                    violations += 1;
                }
                if two > one {
                    strictly_better += 1;
                }
            }
        }
    }
    outcome(
        "double-mode expected payoff >= single-mode",
        violations == 0,
        format!("{days} day/config cases, {violations} violations, double strictly better in {strictly_better}"),
    )
}

fn run_bin(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_spreadrisk"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(String::from_utf8_lossy(&out.stderr).into_owned())
    }
}

fn pipeline(dir: &Path) -> Result<Vec<u8>, String> {
    let d = dir.to_str().unwrap();
    run_bin(&["synth", "--days", "40", "--seed", "4242", "--out", d])?;
    let prices = dir.join("prices.csv");
    let forecasts = dir.join("forecasts.csv");
    run_bin(&[
        "backtest",
        "--prices",
        prices.to_str().unwrap(),
        "--forecasts",
        forecasts.to_str().unwrap(),
        "--mode",
        "double",
        "--out",
        d,
    ])?;
    std::fs::read(dir.join("report.json")).map_err(|e| e.to_string())
}

fn end_to_end_determinism() -> Outcome {
    let result = (|| -> Result<(usize, bool), String> {
        let a = tempfile::tempdir().map_err(|e| e.to_string())?;
        let b = tempfile::tempdir().map_err(|e| e.to_string())?;
        let ra = pipeline(a.path())?;
        let rb = pipeline(b.path())?;
        let plans_equal = std::fs::read(a.path().join("plans.csv")).ok() == std::fs::read(b.path().join("plans.csv")).ok();
        Ok((ra.len(), ra == rb && plans_equal))
    })();
    match result {
        Ok((len, same)) => outcome(
            "synth -> backtest reports byte-identical across runs",
            same,
            format!("report.json {len} bytes, identical = {same}"),
        ),
        Err(e) => outcome("synth -> backtest reports byte-identical across runs", false, e),
    }
}

fn main() {
    let mut outcomes = Vec::new();
    outcomes.push(oracle_equivalence());
    outcomes.extend(quantile_correctness());
    outcomes.push(single_trade_fixture());
    outcomes.extend(two_trade_fixtures());
    outcomes.push(structural_properties());
    outcomes.push(var_calibration());
    outcomes.extend(statistics_identities());
    outcomes.push(degradation());
    outcomes.push(end_to_end_determinism());

    let substitutes_ok = outcomes.iter().all(|o| o.passed || o.unattainable);
    outcomes.insert(
        0,
        outcome(
            "published tables replaced by the substitute suites below",
            substitutes_ok,
            "fitted models and market data are not available; see README".into(),
        ),
    );

    println!();
    let mut fatal = 0;
    for o in &outcomes {
        let tag = match (o.passed, o.unattainable) {
            (true, _) => "PASS",
            (false, false) => {
                fatal += 1;
                "FAIL"
            }
            (false, true) => "FAIL (unattainable as stated, documented)",
        };
        println!("{tag}  {}: {}", o.name, o.detail);
    }
    let passed = outcomes.iter().filter(|o| o.passed).count();
    println!("\nacceptance: {passed}/{} criteria passed, {fatal} unexpected failures", outcomes.len());
    if fatal > 0 {
        std::process::exit(1);
    }
}

