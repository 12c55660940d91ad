//! Time integration of `i u_t + Delta u + |u|^{p-1} u = 0` with diagnostics, blow-up
//! detection, the virial consistency test and the scattering proxy.

mod analysis;
pub mod scheme;

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::RadialField;
use crate::functionals::{h1_sq, CutoffProfile, DiagnosticsRecord};
use crate::groundstate::GroundState;
use crate::hypgeom::RadialGrid;
use crate::spectral::{SpectralConfig, SpectralTransform};
use scheme::{CnStepper, StepFailure, StrangStepper};

pub use analysis::{scattering_proxy, virial_consistency, ProxyVerdict, VirialReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    CnRelaxation,
    /// n = 3 only.
    Strang,
}

#[derive(Debug, Clone)]
pub struct IntegratorConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub horizon: f64,
    /// Diagnostic records per unit time.
    pub diag_stride: usize,
    /// Relative sup-norm change that ends the fixed-point sweeps.
    pub inner_tol: f64,
    pub max_inner: usize,
    /// Blow-up when `||u||_{H^1}` exceeds this multiple of its initial value.
    pub blowup_h1_factor: f64,
    /// Blow-up when adaptive halving pushes `dt` below this.
    pub blowup_dt_min: f64,
    pub virial_radius: f64,
    pub cutoff: CutoffProfile,
    pub spectral: SpectralConfig,
}

impl IntegratorConfig {
    pub fn new(dt: f64, horizon: f64) -> Self {
        Self {
            scheme: Scheme::CnRelaxation,
            dt,
            horizon,
            diag_stride: 100,
            inner_tol: 1e-13,
            max_inner: 40,
            blowup_h1_factor: 50.0,
            blowup_dt_min: dt / 4096.0,
            virial_radius: 5.0,
            cutoff: CutoffProfile::standard(),
            spectral: SpectralConfig::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(invalid("horizon", format!("must be nonnegative, got {}", self.horizon)));
        }
        if self.diag_stride == 0 {
            return Err(invalid("diag_stride", "must be at least 1"));
        }
        let spacing = 1.0 / self.diag_stride as f64;
        if self.dt > spacing * (1.0 + 1e-12) {
            return Err(invalid("dt", "must not exceed the diagnostic spacing"));
        }
        if !(self.blowup_h1_factor > 1.0) {
            return Err(invalid("blowup_h1_factor", "must exceed 1"));
        }
        if !(self.virial_radius > 0.0) {
            return Err(invalid("virial_radius", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Completed { t_end: f64 },
    Blowup { t_star: f64, h1_at_stop: f64 },
    InnerSolveFailure { t: f64 },
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub series: Vec<DiagnosticsRecord>,
    pub final_field: RadialField,
    pub steps: usize,
    pub final_dt: f64,
    /// Largest `||u(t)| - |u_0||` over recorded times, relative to `max |u_0|`.
    pub max_modulus_deviation: f64,
}

impl RunOutcome {
    pub fn completed(&self) -> bool {
        matches!(self.status, RunStatus::Completed { .. })
    }
}

enum Stepper {
    Cn(CnStepper),
    Strang(StrangStepper),
}

impl Stepper {
    fn step(&mut self, grid: &RadialGrid, u: &[Complex64], dt: f64) -> std::result::Result<(Vec<Complex64>, usize), StepFailure> {
        match self {
            Stepper::Cn(s) => s.step(grid, u, dt),
            Stepper::Strang(s) => s.step(u, dt),
        }
    }

    fn reset(&mut self) {
        if let Stepper::Cn(s) = self {
            s.reset();
        }
    }
}

fn make_stepper(grid: &Arc<RadialGrid>, p: f64, cfg: &IntegratorConfig) -> Result<Stepper> {
    Ok(match cfg.scheme {
        Scheme::CnRelaxation => Stepper::Cn(CnStepper::new(p, cfg.inner_tol, cfg.max_inner)),
        Scheme::Strang => Stepper::Strang(StrangStepper::new(p, SpectralTransform::new(grid.clone(), cfg.spectral)?)),
    })
}

/// One step of the configured scheme from a cold start.
pub fn step(u: &RadialField, p: f64, cfg: &IntegratorConfig) -> Result<RadialField> {
    cfg.validate()?;
    let mut s = make_stepper(u.grid(), p, cfg)?;
    match s.step(u.grid(), u.values(), cfg.dt) {
        Ok((v, _)) => RadialField::from_values(u.grid().clone(), v),
        Err(_) => Err(Error::InnerSolveFailure { t: cfg.dt }),
    }
}

/// Forward run from `u0` on `[0, horizon]`.
pub fn evolve_run(u0: &RadialField, cfg: &IntegratorConfig, gs: &GroundState) -> Result<RunOutcome> {
    cfg.validate()?;
    if !u0.grid().same_as(gs.grid()) {
        return Err(Error::GridMismatch);
    }
    let grid = u0.grid().clone();
    let p = gs.p;
    let mut stepper = make_stepper(&grid, p, cfg)?;
    let record = |t: f64, u: &RadialField| DiagnosticsRecord::compute(t, u, gs, cfg.virial_radius, &cfg.cutoff);

    let modulus0 = u0.modulus();
    let sup0 = modulus0.iter().fold(0.0f64, |m, &x| m.max(x)).max(1e-300);
    let mut max_dev = 0.0f64;
    let mut track_dev = |u: &RadialField| {
        let d = u.values().iter().zip(&modulus0).fold(0.0f64, |m, (z, &a)| m.max((z.norm() - a).abs()));
        max_dev = max_dev.max(d / sup0);
    };

    let h1_start = h1_sq(u0).sqrt();
    let threshold = cfg.blowup_h1_factor * h1_start;
    let mut u = u0.clone();
    let mut series = vec![record(0.0, &u)];
    let mut t = 0.0;
    let mut dt = cfg.dt;
    let mut steps = 0;
    let mut streak = 0;
    let mut h1_now = h1_start;
    let mut history = vec![(0.0, h1_start.ln())];
    let spacing = 1.0 / cfg.diag_stride as f64;
    let whole = (cfg.horizon * cfg.diag_stride as f64 + 1e-9).floor() as usize;
    let mut targets: Vec<f64> = (1..=whole).map(|k| k as f64 * spacing).collect();
    if cfg.horizon - whole as f64 * spacing > 1e-9 * spacing {
        targets.push(cfg.horizon);
    }
    let mut status = RunStatus::Completed { t_end: cfg.horizon };

    'records: for &target in &targets {
        while t < target {
            let h = (dt * collapse_scale(&history)).min(target - t);
            let outcome = stepper.step(&grid, u.values(), h);
            let fail = match outcome {
                Ok((v, sweeps)) => {
                    let next = RadialField::from_values(grid.clone(), v)?;
                    let h1_next = h1_sq(&next).sqrt();
                    if h1_next > 1.1 * h1_now {
                        true
                    } else {
                        steps += 1;
                        if h1_next > threshold {
                            history.push((t + h, h1_next.ln()));
                            let t_star = crossing_time(&history, threshold.ln());
                            t += h;
                            track_dev(&next);
                            series.push(record(t, &next));
                            u = next;
                            status = RunStatus::Blowup { t_star, h1_at_stop: h1_next };
                            break 'records;
                        }
                        t = if target - (t + h) < 1e-12 * spacing { target } else { t + h };
                        u = next;
                        h1_now = h1_next;
                        history.push((t, h1_now.ln()));
                        if history.len() > 4 {
                            history.remove(0);
                        }
                        if sweeps * 4 > cfg.max_inner * 3 {
                            dt *= 0.5;
                            streak = 0;
                        } else {
                            streak += 1;
                            if streak >= REGROW_AFTER && dt < cfg.dt {
                                dt = (2.0 * dt).min(cfg.dt);
                                streak = 0;
                            }
                        }
                        false
                    }
                }
                Err(StepFailure::NotConverged) => true,
                Err(StepFailure::NonFinite) => {
                    if dt * 0.5 < cfg.blowup_dt_min {
                        status = RunStatus::InnerSolveFailure { t };
                        break 'records;
                    }
                    true
                }
            };
            if fail {
                stepper.reset();
                dt *= 0.5;
                streak = 0;
                if dt < cfg.blowup_dt_min {
                    series.push(record(t, &u));
                    status = RunStatus::Blowup { t_star: t, h1_at_stop: h1_now };
                    break 'records;
                }
            }
        }
        track_dev(&u);
        series.push(record(t, &u));
    }
    Ok(RunOutcome { status, series, final_field: u, steps, final_dt: dt, max_modulus_deviation: max_dev })
}

/// Accepted steps after which a halved base step is doubled again.
const REGROW_AFTER: usize = 20;

/// Above this growth rate of `ln ||u||_{H^1}` (per unit time) steps shrink in
/// proportion, so every resolution takes the same number of steps per e-fold.
const COLLAPSE_RATE: f64 = 25.0;

fn collapse_scale(history: &[(f64, f64)]) -> f64 {
    match history {
        [.., (t0, f0), (t1, f1)] if t1 > t0 => {
            let rate = (f1 - f0) / (t1 - t0);
            if rate > COLLAPSE_RATE {
                COLLAPSE_RATE / rate
            } else {
                1.0
            }
        }
        _ => 1.0,
    }
}

/// Time at which the interpolated `ln ||u||_{H^1}` crosses `level`, using the cubic
/// through the last four accepted steps (fewer at the start of a run). The last
/// entry of `history` lies above `level`, the one before it below.
fn crossing_time(history: &[(f64, f64)], level: f64) -> f64 {
    let k = history.len().min(4);
    let pts = &history[history.len() - k..];
    let (ta, fa) = pts[k - 2];
    let (tb, fb) = pts[k - 1];
    let eval = |t: f64| {
        let mut acc = 0.0;
        for (i, &(ti, fi)) in pts.iter().enumerate() {
            let mut l = 1.0;
            for (j, &(tj, _)) in pts.iter().enumerate() {
                if i != j {
                    l *= (t - tj) / (ti - tj);
                }
            }
            acc += fi * l;
        }
        acc - level
    };
    if !(fa < level && fb >= level) {
        return tb;
    }
    // bracketed root: Illinois false position
    let (mut lo, mut hi, mut glo, mut ghi) = (ta, tb, eval(ta), eval(tb));
    if glo > 0.0 || ghi < 0.0 {
        let w = (level - fa) / (fb - fa);
        return ta + w * (tb - ta);
    }
    let mut side = 0;
    for _ in 0..100 {
        let t = (lo * ghi - hi * glo) / (ghi - glo);
        let g = eval(t);
        if g.abs() < 1e-15 || hi - lo < 1e-15 * hi.abs().max(1.0) {
            return t;
        }
        if g < 0.0 {
            lo = t;
            glo = g;
            if side == -1 {
                ghi *= 0.5;
            }
            side = -1;
        } else {
            hi = t;
            ghi = g;
            if side == 1 {
                glo *= 0.5;
            }
            side = 1;
        }
    }
    0.5 * (lo + hi)
}

/// Backward run on `[-horizon, 0]`, via `u(-t) = conj(v(t))` where `v` solves the
/// equation from `conj(u0)`. Record times are reported as `-t`.
pub fn evolve_run_backward(u0: &RadialField, cfg: &IntegratorConfig, gs: &GroundState) -> Result<RunOutcome> {
    let mut out = evolve_run(&u0.conj(), cfg, gs)?;
    for r in &mut out.series {
        r.t = -r.t;
    }
    out.final_field = out.final_field.conj();
    match &mut out.status {
        RunStatus::Blowup { t_star, .. } => *t_star = -*t_star,
        RunStatus::InnerSolveFailure { t } => *t = -*t,
        RunStatus::Completed { t_end } => *t_end = -*t_end,
    }
    Ok(out)
}
