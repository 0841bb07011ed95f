//! Exact comparison of near-rational floats.
//!
//! The classifier rules are strict/non-strict inequalities between quantities
//! that are small rationals for every named prior (halves, 1/k, (2k-1)/2k).
//! Comparisons decided by less than 1e-9 are re-decided exactly by rational
//! reconstruction so that mathematical equality never flips on rounding.

use std::cmp::Ordering;

const MARGIN: f64 = 1e-9;
const MAX_DEN: i128 = 1_000_000;

/// Best rational approximation p/q with q <= MAX_DEN via continued fractions,
/// accepted only when it matches x to ~1 ulp.
fn to_rational(x: f64) -> Option<(i128, i128)> {
    if !x.is_finite() || x.abs() > 1e12 {
        return None;
    }
    let (mut p0, mut q0, mut p1, mut q1) = (1i128, 0i128, x.floor() as i128, 1i128);
    let mut frac = x - x.floor();
    for _ in 0..64 {
        let approx = p1 as f64 / q1 as f64;
        if (approx - x).abs() <= 1e-13 * (1.0 + x.abs()) {
            return Some((p1, q1));
        }
        if frac.abs() < 1e-15 {
            break;
        }
        let r = 1.0 / frac;
        let a = r.floor();
        frac = r - a;
        let a = a as i128;
        let (p2, q2) = (a * p1 + p0, a * q1 + q0);
        if q2 > MAX_DEN {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
    }
    None
}

fn rational_cmp(a: f64, b: f64) -> Option<Ordering> {
    let (pa, qa) = to_rational(a)?;
    let (pb, qb) = to_rational(b)?;
    Some((pa * qb).cmp(&(pb * qa)))
}

/// Outcome of a tolerance-aware comparison.
#[derive(Debug, Clone, Copy)]
pub struct Decision {
    pub holds: bool,
    /// True when the margin was below 1e-9 (boundary case).
    pub boundary: bool,
}

/// lhs > rhs, exact on reconstructible rationals when within the margin.
pub fn strictly_greater(lhs: f64, rhs: f64) -> Decision {
    let d = lhs - rhs;
    if d.abs() >= MARGIN {
        return Decision { holds: d > 0.0, boundary: false };
    }
    let holds = match rational_cmp(lhs, rhs) {
        Some(ord) => ord == Ordering::Greater,
        None => d > 0.0,
    };
    Decision { holds, boundary: true }
}

/// lhs >= rhs, exact on reconstructible rationals when within the margin.
pub fn greater_or_equal(lhs: f64, rhs: f64) -> Decision {
    let d = lhs - rhs;
    if d.abs() >= MARGIN {
        return Decision { holds: d > 0.0, boundary: false };
    }
    let holds = match rational_cmp(lhs, rhs) {
        Some(ord) => ord != Ordering::Less,
        None => d >= 0.0,
    };
    Decision { holds, boundary: true }
}

/// lhs < rhs.
pub fn strictly_less(lhs: f64, rhs: f64) -> Decision {
    strictly_greater(rhs, lhs)
}
