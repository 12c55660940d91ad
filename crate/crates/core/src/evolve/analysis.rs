use serde::{Deserialize, Serialize};

use super::RunOutcome;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VirialReport {
    /// Largest `|m''(t) - G(u(t))| / |G(u(t))|` over the admitted records.
    pub max_mismatch: f64,
    pub records_used: usize,
    pub records_skipped: usize,
}

/// Compare the centered second difference of `int r^2 |u|^2` with the recorded `G(u)`.
pub fn virial_consistency(outcome: &RunOutcome) -> Result<VirialReport> {
    if !outcome.completed() {
        return Err(Error::RunNotCompleted);
    }
    let s = &outcome.series;
    if s.len() < 5 {
        return Err(Error::TooFewRecords { got: s.len(), need: 5 });
    }
    let floor = 1e-6 * s[0].h1_sq;
    let mut rep = VirialReport { max_mismatch: 0.0, records_used: 0, records_skipped: 0 };
    for k in 1..s.len() - 1 {
        let (a, b, c) = (&s[k - 1], &s[k], &s[k + 1]);
        let h1 = b.t - a.t;
        let h2 = c.t - b.t;
        if (h1 - h2).abs() > 1e-9 * h1 || b.g_value.abs() <= floor {
            rep.records_skipped += 1;
            continue;
        }
        let fd = (c.second_moment - 2.0 * b.second_moment + a.second_moment) / (h1 * h2);
        rep.max_mismatch = rep.max_mismatch.max((fd - b.g_value).abs() / b.g_value.abs());
        rep.records_used += 1;
    }
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ProxyVerdict {
    /// Over the trailing window `||u||_{p+1}^{p+1}` sat at least 30% below its running
    /// maximum, `delta_lambda < 0` and `G > 0`. Never a proof of scattering.
    Consistent,
    Inconclusive { reason: String },
}

impl ProxyVerdict {
    pub fn is_consistent(&self) -> bool {
        matches!(self, ProxyVerdict::Consistent)
    }
}

/// `window` is the trailing fraction of the run that is inspected.
pub fn scattering_proxy(outcome: &RunOutcome, window: f64) -> ProxyVerdict {
    let inconclusive = |r: &str| ProxyVerdict::Inconclusive { reason: r.to_string() };
    if !outcome.completed() {
        return inconclusive("run did not complete");
    }
    let s = &outcome.series;
    let Some(last) = s.last() else {
        return inconclusive("empty series");
    };
    let t_end = last.t.abs();
    if t_end < 1.0 {
        return inconclusive("window too short: horizon below 1");
    }
    if !(window > 0.0 && window <= 1.0) {
        return inconclusive("window fraction outside (0, 1]");
    }
    let start = t_end * (1.0 - window);
    let mut running_max = f64::NEG_INFINITY;
    for r in s {
        running_max = running_max.max(r.lp1);
        if r.t.abs() < start {
            continue;
        }
        if r.lp1 > 0.7 * running_max {
            return inconclusive("L^{p+1} norm has not dropped 30% below its running maximum");
        }
        if !(r.delta_lambda < 0.0) {
            return inconclusive("delta_lambda is not negative");
        }
        if !(r.g_value > 0.0) {
            return inconclusive("G is not positive");
        }
    }
    ProxyVerdict::Consistent
}
