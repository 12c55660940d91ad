//! Pointwise inequalities behind the localized virial estimates, scanned on a
//! uniform grid of `(0, r_max]` in double-double arithmetic.

use serde::{Deserialize, Serialize};

use crate::ddouble::DD;
use crate::error::{invalid, Result};
use crate::hypgeom::SERIES_CUTOFF;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub min_value: f64,
    pub argmin: f64,
    pub max_value: f64,
    pub argmax: f64,
    pub tail_value: f64,
    /// Every sample is no larger than its predecessor.
    pub nonincreasing: bool,
}

fn scan(r_max: f64, points: usize, f: impl Fn(f64) -> f64) -> Result<ScanReport> {
    if !(r_max > 0.0 && r_max.is_finite()) || points < 2 {
        return Err(invalid("scan", "need r_max > 0 and at least two points"));
    }
    let h = r_max / points as f64;
    let mut rep = ScanReport {
        min_value: f64::INFINITY,
        argmin: 0.0,
        max_value: f64::NEG_INFINITY,
        argmax: 0.0,
        tail_value: 0.0,
        nonincreasing: true,
    };
    let mut prev = f64::INFINITY;
    for k in 1..=points {
        let r = k as f64 * h;
        let v = f(r);
        if v < rep.min_value {
            rep.min_value = v;
            rep.argmin = r;
        }
        if v > rep.max_value {
            rep.max_value = v;
            rep.argmax = r;
        }
        if v > prev {
            rep.nonincreasing = false;
        }
        prev = v;
        rep.tail_value = v;
    }
    Ok(rep)
}

/// `F(r) = (2n-2) r^2 cosh^2 r + n r^2 - (3n-4) r cosh r sinh r - 2 sinh^2 r`,
/// which vanishes to sixth order at the origin.
pub fn quartic(n: usize, r: f64) -> f64 {
    let nf = n as f64;
    if r < SERIES_CUTOFF {
        let r2 = r * r;
        let c6 = 4.0 * nf / 15.0 - 2.0 / 9.0;
        let c8 = 16.0 * nf / 315.0 - 2.0 / 45.0;
        let c10 = 4.0 * nf / 945.0 - 2.0 / 525.0;
        return r2 * r2 * r2 * (c6 + r2 * (c8 + r2 * c10));
    }
    let x = DD::new(r);
    let (c, s) = x.cosh_sinh();
    let x2 = x * x;
    let v = DD::new(2.0 * nf - 2.0) * x2 * c * c + DD::new(nf) * x2 - DD::new(3.0 * nf - 4.0) * x * c * s
        - DD::new(2.0) * s * s;
    v.to_f64()
}

/// `(r cosh r - sinh r) / sinh^3 r` in double-double.
pub fn w1_extended(r: f64) -> f64 {
    if r < SERIES_CUTOFF {
        return crate::hypgeom::w1(r);
    }
    let x = DD::new(r);
    let (c, s) = x.cosh_sinh();
    ((x * c - s) / (s * s * s)).to_f64()
}

/// Coefficient multiplying `|u|^{p+1}` in the pointwise bound:
/// `(n-1) r^2/sinh^2 r ((p-1)(n-1) cosh^2 r + 2) + 2(n-1)(p-4) r coth r + p - 5`.
pub fn pm_coefficient(n: usize, p: f64, r: f64) -> f64 {
    let nf = n as f64;
    let m = nf - 1.0;
    if r < SERIES_CUTOFF {
        let r2 = r * r;
        let n2 = nf * nf;
        let c0 = n2 * p - n2 - 4.0 * nf;
        let c2 = 2.0 * n2 * p / 3.0 - 2.0 * n2 / 3.0 - 2.0 * nf * p / 3.0 - 2.0 * nf + 8.0 / 3.0;
        let c4 = n2 * p / 15.0 - n2 / 15.0 - 8.0 * nf * p / 45.0 + 4.0 * nf / 9.0 + p / 9.0 - 17.0 / 45.0;
        let c6 = -2.0 * n2 * p / 189.0 + 2.0 * n2 / 189.0 + 8.0 * nf * p / 315.0 - 8.0 * nf / 135.0 - 2.0 * p / 135.0
            + 46.0 / 945.0;
        return c0 + r2 * (c2 + r2 * (c4 + r2 * c6));
    }
    let x = DD::new(r);
    let (c, s) = x.cosh_sinh();
    let ratio = x / s;
    let v = DD::new(m) * ratio * ratio * (DD::new((p - 1.0) * m) * c * c + DD::new(2.0))
        + DD::new(2.0 * m * (p - 4.0)) * ratio * c
        + DD::new(p - 5.0);
    v.to_f64()
}

pub fn scan_quartic(n: usize, r_max: f64, points: usize) -> Result<ScanReport> {
    scan_quartic_signed(n, r_max, points, 1.0)
}

/// Test hook: `sign = -1` flips `F` so the downstream gate must trip.
pub fn scan_quartic_signed(n: usize, r_max: f64, points: usize, sign: f64) -> Result<ScanReport> {
    scan(r_max, points, |r| sign * quartic(n, r))
}

pub fn scan_w1(r_max: f64, points: usize) -> Result<ScanReport> {
    scan(r_max, points, w1_extended)
}

pub fn scan_pm_coefficient(n: usize, p: f64, r_max: f64, points: usize) -> Result<ScanReport> {
    scan(r_max, points, |r| pm_coefficient(n, p, r))
}
