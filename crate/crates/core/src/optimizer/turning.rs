//! Turning points of an hourly price curve.
//!
//! With a positive roundtrip cost, a leg between two hours on the same
//! monotone stretch of the curve is dominated by the leg spanning the whole
//! stretch, so only local extrema and the two endpoints need considering.

use serde::Serialize;

use super::Direction;
use crate::spreads::{SpreadId, HOURS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PointKind {
    Trough,
    Peak,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TurningPoint {
    pub hour: usize,
    pub kind: PointKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TurningCandidate {
    pub spread: SpreadId,
    pub direction: Direction,
}

/// Endpoints plus interior extrema, in hour order.
///
/// Flat runs are collapsed to their first hour before looking for sign
/// changes, so an extremum on a plateau is reported at the plateau's start.
/// A constant curve has no turning points.
pub fn turning_points(prices: &[f64; HOURS]) -> Vec<TurningPoint> {
    let mut runs: Vec<(usize, f64)> = Vec::with_capacity(HOURS);
    for (h, &p) in prices.iter().enumerate() {
        if runs.last().is_none_or(|&(_, last)| last != p) {
            runs.push((h, p));
        }
    }
    if runs.len() < 2 {
        return Vec::new();
    }
    let m = runs.len();
    let mut points = Vec::new();
    let first_kind = if runs[1].1 > runs[0].1 {
        PointKind::Trough
    } else {
        PointKind::Peak
    };
    points.push(TurningPoint {
        hour: runs[0].0,
        kind: first_kind,
    });
    for k in 1..m - 1 {
        let rise_in = runs[k].1 > runs[k - 1].1;
        let rise_out = runs[k + 1].1 > runs[k].1;
        if rise_in != rise_out {
            let kind = if rise_in { PointKind::Peak } else { PointKind::Trough };
            points.push(TurningPoint {
                hour: runs[k].0,
                kind,
            });
        }
    }
    let last_kind = if runs[m - 1].1 > runs[m - 2].1 {
        PointKind::Peak
    } else {
        PointKind::Trough
    };
    points.push(TurningPoint {
        hour: runs[m - 1].0,
        kind: last_kind,
    });
    points
}

/// Every trough→peak (buy then sell) and peak→trough (sell then buy) pair of
/// turning points, ordered by spread ordinal.
pub fn turning_point_candidates(prices: &[f64; HOURS]) -> Vec<TurningCandidate> {
    let points = turning_points(prices);
    let mut out = Vec::new();
    for (k, a) in points.iter().enumerate() {
        for b in &points[k + 1..] {
            let direction = match (a.kind, b.kind) {
                (PointKind::Trough, PointKind::Peak) => Direction::BuyThenSell,
                (PointKind::Peak, PointKind::Trough) => Direction::SellThenBuy,
                _ => continue,
            };
            let spread = SpreadId::new(a.hour, b.hour).expect("turning points are strictly ordered");
            out.push(TurningCandidate { spread, direction });
        }
    }
    out.sort_by_key(|c| c.spread);
    out
}
