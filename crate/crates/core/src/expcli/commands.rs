use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::Arc;

use serde::Serialize;

use super::config::{Command, ExperimentConfig, Format};
use super::output::OutputSet;
use crate::error::{Error, Result};
use crate::evolve::{
    evolve_run, evolve_run_backward, scattering_proxy, virial_consistency, IntegratorConfig, ProxyVerdict, RunOutcome,
    RunStatus, VirialReport,
};
use crate::field::RadialField;
use crate::functionals::inequalities::{scan_pm_coefficient, scan_quartic_signed, scan_w1, ScanReport};
use crate::functionals::{
    bound_residual, delta_lambda, energy_lambda, g_functional, localized_virial, CutoffProfile, DiagnosticsRecord,
    trapping_sign_check, SignHistory,
};
use crate::groundstate::mass_curve::{estimate_alpha0, mass_constrained_minimize, FlowParams};
use crate::groundstate::{certification_rmax, solve_ground_state, GroundState, Residuals, DEFAULT_TOL};
use crate::hypgeom::{build_grid, spectral_gap, RadialGrid};
use crate::spectral::{
    even_bump, pm_bound_factor, random_fields, SpectralConfig, SpectralProfile, SpectralTransform,
};

/// Process exit codes of the `hypnls` binary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitStatus {
    Passed,
    CheckFailed,
    Usage,
    SolverFailure,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Passed => 0,
            ExitStatus::CheckFailed => 1,
            ExitStatus::Usage => 2,
            ExitStatus::SolverFailure => 3,
        }
    }

    fn from_gate(passed: bool) -> Self {
        if passed {
            ExitStatus::Passed
        } else {
            ExitStatus::CheckFailed
        }
    }
}

/// Exit status and a stable machine-readable tag for an error.
pub fn classify_error(err: &Error) -> (ExitStatus, &'static str) {
    match err {
        Error::UnsupportedDimension(_) => (ExitStatus::Usage, "unsupported_dimension"),
        Error::InvalidParameter { .. } => (ExitStatus::Usage, "invalid_parameter"),
        Error::GridMismatch => (ExitStatus::Usage, "grid_mismatch"),
        Error::NoGroundState { .. } => (ExitStatus::Usage, "no_ground_state"),
        Error::MassSupercritical { .. } => (ExitStatus::Usage, "mass_supercritical"),
        Error::SpectralDimension(_) => (ExitStatus::Usage, "spectral_dimension"),
        Error::RunNotCompleted => (ExitStatus::Usage, "run_not_completed"),
        Error::Config(_) => (ExitStatus::Usage, "config"),
        Error::SearchFailure(_) => (ExitStatus::SolverFailure, "search_failure"),
        Error::InnerSolveFailure { .. } => (ExitStatus::SolverFailure, "inner_solve_failure"),
        Error::TooFewRecords { .. } => (ExitStatus::SolverFailure, "too_few_records"),
        Error::CorruptGroundState(_) => (ExitStatus::SolverFailure, "corrupt_ground_state"),
        Error::Io(_) => (ExitStatus::SolverFailure, "io"),
        Error::Json(_) => (ExitStatus::SolverFailure, "json"),
    }
}

#[derive(Debug, Clone)]
pub struct Outcome<R> {
    pub report: R,
    pub status: ExitStatus,
    pub files: Vec<PathBuf>,
}

fn tier_grid(cfg: &ExperimentConfig) -> Result<Arc<RadialGrid>> {
    build_grid(cfg.n, cfg.r_max(), cfg.points())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

// ---------------------------------------------------------------- groundstate

pub const POHOZAEV_GATE: f64 = 1e-5;
pub const ENERGY_RATIO_GATE: f64 = 1e-5;
pub const VIRIAL_GATE: f64 = 1e-4;

pub fn identity_gates_pass(res: &Residuals) -> bool {
    res.pohozaev < POHOZAEV_GATE && res.energy_ratio < ENERGY_RATIO_GATE && res.g_value < VIRIAL_GATE
}

/// Tier grid, widened to [`certification_rmax`] at the tier spacing unless `rmax`
/// was given explicitly.
pub fn groundstate_grid(cfg: &ExperimentConfig) -> Result<Arc<RadialGrid>> {
    if cfg.rmax.is_some() || !(cfg.lambda < spectral_gap(cfg.n)) {
        return tier_grid(cfg);
    }
    let dr = cfg.tier.r_max() / cfg.points() as f64;
    let r_max = certification_rmax(cfg.n, cfg.lambda).max(cfg.tier.r_max());
    build_grid(cfg.n, r_max, (r_max / dr).round() as usize)
}

#[derive(Debug, Clone, Serialize)]
pub struct GroundStateReport {
    pub n: usize,
    pub p: f64,
    pub lambda: f64,
    pub r_max: f64,
    pub num_points: usize,
    pub q0: f64,
    pub residuals: Residuals,
    pub uniqueness_regime: bool,
    pub passed: bool,
}

pub fn cmd_groundstate(cfg: &ExperimentConfig) -> Result<Outcome<GroundStateReport>> {
    let grid = groundstate_grid(cfg)?;
    let gs = solve_ground_state(cfg.n, cfg.p, cfg.lambda, &grid, DEFAULT_TOL)?;
    let passed = identity_gates_pass(&gs.residuals);
    let mut out = OutputSet::new(cfg);
    out.json("groundstate.json", "ground_state", &gs)?;
    out.csv("groundstate_profile.csv", &gs.profile_csv())?;
    let report = GroundStateReport {
        n: gs.n,
        p: gs.p,
        lambda: gs.lambda,
        r_max: gs.r_max,
        num_points: gs.num_points,
        q0: gs.q0,
        residuals: gs.residuals,
        uniqueness_regime: gs.uniqueness_regime,
        passed,
    };
    Ok(Outcome { report, status: ExitStatus::from_gate(passed), files: out.into_files() })
}

// ------------------------------------------------------------------ dichotomy

/// Blow-up threshold (multiple of the initial H^1 norm) used by the dichotomy
/// recipe; small enough that every tier resolves the collapse up to it.
pub const DICHOTOMY_BLOWUP_FACTOR: f64 = 5.0;
/// Trailing fraction of a completed run inspected by the scattering proxy.
pub const PROXY_WINDOW: f64 = 0.25;
/// Allowed excess of `G` over `-16 (E_lambda(Q) - E_lambda(u0))`, relative to `||Q||^2`.
pub const VIRIAL_BOUND_SLACK: f64 = 1e-3;
/// Allowed negative residual of the variational bound, relative to `||Q||^2`.
pub const VARIATIONAL_SLACK: f64 = 1e-6;
/// Modulus deviation allowed for the threshold datum `alpha = 1`.
pub const STATIONARY_DEVIATION: f64 = 1e-3;

pub fn dichotomy_integrator(cfg: &ExperimentConfig) -> IntegratorConfig {
    let mut icfg = IntegratorConfig::new(cfg.dt(), cfg.horizon());
    icfg.blowup_h1_factor = DICHOTOMY_BLOWUP_FACTOR;
    icfg
}

/// `(n = 2, p >= 3)` or `(n = 3, 7/3 <= p < 5)`.
pub fn in_dichotomy_range(n: usize, p: f64) -> bool {
    match n {
        2 => p >= 3.0,
        3 => (7.0 / 3.0..5.0).contains(&p),
        _ => false,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DirectionOutcome {
    pub status: RunStatus,
    pub t_star: Option<f64>,
    pub proxy: ProxyVerdict,
    pub steps: usize,
    pub records: usize,
    pub max_modulus_deviation: f64,
}

impl DirectionOutcome {
    fn from_run(run: &RunOutcome) -> Self {
        let t_star = match run.status {
            RunStatus::Blowup { t_star, .. } => Some(t_star),
            _ => None,
        };
        Self {
            status: run.status,
            t_star,
            proxy: scattering_proxy(run, PROXY_WINDOW),
            steps: run.steps,
            records: run.series.len(),
            max_modulus_deviation: run.max_modulus_deviation,
        }
    }

    fn status_name(&self) -> &'static str {
        match self.status {
            RunStatus::Completed { .. } => "completed",
            RunStatus::Blowup { .. } => "blowup",
            RunStatus::InnerSolveFailure { .. } => "inner_solve_failure",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DichotomyRow {
    pub alpha: f64,
    /// Sign of `delta_lambda(alpha Q)`; 0 within `1e-9 ||Q||^2` of the threshold.
    pub delta_sign: i8,
    /// `E_lambda(alpha Q) / E_lambda(Q)`.
    pub energy_ratio: f64,
    pub forward: Option<DirectionOutcome>,
    pub backward: Option<DirectionOutcome>,
    /// Whether `delta_lambda` kept the sign of `delta_lambda(u0)` at every record of
    /// both runs. `None` when no sign is predicted.
    pub delta_sign_preserved: Option<bool>,
    /// Smallest [`bound_residual`] over the records where it applies.
    pub min_bound_residual: Option<f64>,
    /// Largest `(G - (-16 (E_lambda(Q) - E_lambda(u0)))) / ||Q||^2` over the records of a
    /// supercritical row.
    pub max_virial_excess: Option<f64>,
    pub consistent: bool,
    pub error: Option<String>,
}

impl DichotomyRow {
    pub fn failed(alpha: f64, err: &Error) -> Self {
        Self {
            alpha,
            delta_sign: 0,
            energy_ratio: f64::NAN,
            forward: None,
            backward: None,
            delta_sign_preserved: None,
            min_bound_residual: None,
            max_virial_excess: None,
            consistent: false,
            error: Some(err.to_string()),
        }
    }
}

/// Evolve `alpha Q` in both time directions and classify the pair.
pub fn dichotomy_row(gs: &GroundState, alpha: f64, icfg: &IntegratorConfig) -> Result<(DichotomyRow, RunOutcome, RunOutcome)> {
    let u0 = gs.field().scaled(alpha);
    let e0 = energy_lambda(&u0, gs.lambda, gs.p)?;
    let d0 = delta_lambda(&u0, gs)?;
    let delta_sign = if d0.abs() <= 1e-9 * gs.hlam_sq { 0 } else if d0 > 0.0 { 1 } else { -1 };
    let below = e0 < gs.energy_lambda;
    let forward = evolve_run(&u0, icfg, gs)?;
    let backward = evolve_run_backward(&u0, icfg, gs)?;
    let records = || forward.series.iter().chain(&backward.series);

    let expected = if delta_sign > 0 { SignHistory::ConstantPositive } else { SignHistory::ConstantNegative };
    let delta_sign_preserved = if below && delta_sign != 0 {
        Some(trapping_sign_check(&forward.series)? == expected && trapping_sign_check(&backward.series)? == expected)
    } else {
        None
    };

    let mut min_bound_residual: Option<f64> = None;
    for r in records() {
        if let Some(res) = bound_residual(r.energy_lambda, r.hlam_sq, gs)? {
            min_bound_residual = Some(min_bound_residual.map_or(res, |m| m.min(res)));
        }
    }

    let max_virial_excess = (below && delta_sign > 0).then(|| {
        let bound = -16.0 * (gs.energy_lambda - e0);
        records().map(|r| (r.g_value - bound) / gs.hlam_sq).fold(f64::NEG_INFINITY, f64::max)
    });

    let fwd = DirectionOutcome::from_run(&forward);
    let bwd = DirectionOutcome::from_run(&backward);
    let both = |f: &dyn Fn(&DirectionOutcome) -> bool| f(&fwd) && f(&bwd);
    let bound_ok = min_bound_residual.map_or(true, |m| m >= -VARIATIONAL_SLACK);
    let consistent = match (below, delta_sign) {
        (true, -1) => {
            both(&|d| matches!(d.status, RunStatus::Completed { .. }) && d.proxy.is_consistent())
                && delta_sign_preserved == Some(true)
                && bound_ok
        }
        (true, 1) => {
            both(&|d| matches!(d.status, RunStatus::Blowup { .. }))
                && delta_sign_preserved == Some(true)
                && max_virial_excess.is_some_and(|x| x <= VIRIAL_BOUND_SLACK)
                && bound_ok
        }
        (_, 0) => both(&|d| {
            matches!(d.status, RunStatus::Completed { .. }) && d.max_modulus_deviation < STATIONARY_DEVIATION
        }),
        // above the threshold energy nothing is predicted
        _ => true,
    };

    let row = DichotomyRow {
        alpha,
        delta_sign,
        energy_ratio: e0 / gs.energy_lambda,
        forward: Some(fwd),
        backward: Some(bwd),
        delta_sign_preserved,
        min_bound_residual,
        max_virial_excess,
        consistent,
        error: None,
    };
    Ok((row, forward, backward))
}

#[derive(Debug, Clone, Serialize)]
pub struct DichotomyReport {
    pub config_digest: String,
    pub n: usize,
    pub p: f64,
    pub lambda: f64,
    pub warnings: Vec<String>,
    /// Sorted by alpha.
    pub rows: Vec<DichotomyRow>,
}

impl DichotomyReport {
    pub const CSV_HEADER: &'static str = "alpha,delta_sign,energy_ratio,forward_status,forward_t_star,backward_status,backward_t_star,forward_proxy,backward_proxy,delta_sign_preserved,min_bound_residual,max_virial_excess,consistent,error";

    /// Combine the rows of two reports over the same configuration. A row of `other`
    /// replaces a row of `self` with the same alpha.
    pub fn merge(mut self, other: DichotomyReport) -> Result<DichotomyReport> {
        if self.config_digest != other.config_digest {
            return Err(Error::Config(format!(
                "refusing to merge dichotomy reports with different config digests ({} vs {})",
                self.config_digest, other.config_digest
            )));
        }
        for row in other.rows {
            self.rows.retain(|r| r.alpha != row.alpha);
            self.rows.push(row);
        }
        self.rows.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
        for w in other.warnings {
            if !self.warnings.contains(&w) {
                self.warnings.push(w);
            }
        }
        Ok(self)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let dir = |d: &Option<DirectionOutcome>| match d {
                Some(d) => (d.status_name().to_string(), fmt_opt(d.t_star), proxy_name(&d.proxy).to_string()),
                None => (String::new(), String::new(), String::new()),
            };
            let (fs, ft, fp) = dir(&r.forward);
            let (bs, bt, bp) = dir(&r.backward);
            let error = r.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
            let _ = writeln!(
                s,
                "{},{},{:e},{fs},{ft},{bs},{bt},{fp},{bp},{},{},{},{},{error}",
                r.alpha,
                r.delta_sign,
                r.energy_ratio,
                r.delta_sign_preserved.map(|b| b.to_string()).unwrap_or_default(),
                fmt_opt(r.min_bound_residual),
                fmt_opt(r.max_virial_excess),
                r.consistent,
            );
        }
        s
    }
}

fn proxy_name(v: &ProxyVerdict) -> &'static str {
    match v {
        ProxyVerdict::Consistent => "consistent",
        ProxyVerdict::Inconclusive { .. } => "inconclusive",
    }
}

fn series_csv(series: &[DiagnosticsRecord]) -> String {
    let mut s = String::from(DiagnosticsRecord::CSV_HEADER);
    s.push('\n');
    for r in series {
        s.push_str(&r.to_csv_row());
        s.push('\n');
    }
    s
}

#[derive(Serialize)]
struct RunSummary<'a> {
    alpha: f64,
    direction: &'a str,
    n: usize,
    p: f64,
    lambda: f64,
    r_max: f64,
    num_points: usize,
    dt: f64,
    horizon: f64,
    blowup_h1_factor: f64,
    #[serde(flatten)]
    status: RunStatus,
    steps: usize,
    final_dt: f64,
    max_modulus_deviation: f64,
}

fn write_run(out: &mut OutputSet, gs: &GroundState, icfg: &IntegratorConfig, alpha: f64, direction: &str, run: &RunOutcome) -> Result<()> {
    let stem = format!("dichotomy_alpha{alpha}_{direction}");
    out.csv(&format!("{stem}.csv"), &series_csv(&run.series))?;
    let summary = RunSummary {
        alpha,
        direction,
        n: gs.n,
        p: gs.p,
        lambda: gs.lambda,
        r_max: gs.r_max,
        num_points: gs.num_points,
        dt: icfg.dt,
        horizon: icfg.horizon,
        blowup_h1_factor: icfg.blowup_h1_factor,
        status: run.status,
        steps: run.steps,
        final_dt: run.final_dt,
        max_modulus_deviation: run.max_modulus_deviation,
    };
    out.json(&format!("{stem}.json"), "run", &summary)?;
    Ok(())
}

pub const DEFAULT_DICHOTOMY_ALPHAS: [f64; 4] = [0.5, 0.9, 1.1, 1.5];

pub fn cmd_dichotomy(cfg: &ExperimentConfig) -> Result<Outcome<DichotomyReport>> {
    let mut warnings = Vec::new();
    if !in_dichotomy_range(cfg.n, cfg.p) {
        warnings.push(format!(
            "(n, p) = ({}, {}) is outside the range covered by the dichotomy (n = 2, p >= 3 or n = 3, 7/3 <= p < 5)",
            cfg.n, cfg.p
        ));
    }
    let grid = tier_grid(cfg)?;
    let gs = solve_ground_state(cfg.n, cfg.p, cfg.lambda, &grid, DEFAULT_TOL)?;
    let icfg = dichotomy_integrator(cfg);
    let mut alphas = if cfg.alphas.is_empty() { DEFAULT_DICHOTOMY_ALPHAS.to_vec() } else { cfg.alphas.clone() };
    alphas.sort_by(f64::total_cmp);
    alphas.dedup();

    let mut out = OutputSet::new(cfg);
    let mut rows = Vec::with_capacity(alphas.len());
    let mut status = ExitStatus::Passed;
    for &alpha in &alphas {
        match dichotomy_row(&gs, alpha, &icfg) {
            Ok((row, fwd, bwd)) => {
                write_run(&mut out, &gs, &icfg, alpha, "forward", &fwd)?;
                write_run(&mut out, &gs, &icfg, alpha, "backward", &bwd)?;
                if !row.consistent {
                    status = status.max(ExitStatus::CheckFailed);
                }
                rows.push(row);
            }
            Err(e) => {
                status = status.max(ExitStatus::SolverFailure);
                rows.push(DichotomyRow::failed(alpha, &e));
            }
        }
    }
    let report = DichotomyReport { config_digest: cfg.digest(), n: cfg.n, p: cfg.p, lambda: cfg.lambda, warnings, rows };
    match cfg.format {
        Format::Csv => out.csv("dichotomy_report.csv", &report.to_csv())?,
        Format::Json => out.json("dichotomy_report.json", "report", &report)?,
    };
    Ok(Outcome { report, status, files: out.into_files() })
}

// --------------------------------------------------------------- virial check

pub const VIRIAL_MISMATCH_GATE: f64 = 0.02;
pub const VIRIAL_SWEEP_RADII: [f64; 3] = [4.0, 8.0, 16.0];

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RadiusSweepRow {
    pub radius: f64,
    /// `|V_R(u) - G(u)| / |G(u)|` at the first and last record.
    pub initial: f64,
    pub last: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VirialCheckReport {
    pub datum: String,
    pub horizon: f64,
    pub consistency: VirialReport,
    pub radius_sweep: Vec<RadiusSweepRow>,
    pub sweep_monotone: bool,
    pub passed: bool,
}

fn relative_localization_error(u: &RadialField, radius: f64, cut: &CutoffProfile, p: f64) -> f64 {
    let g = g_functional(u, p);
    (localized_virial(u, radius, cut, p) - g).abs() / g.abs().max(f64::MIN_POSITIVE)
}

/// Differences that shrink with R, up to roundoff once they reach it.
fn shrinking(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] || w[1] <= 1e-12)
}

pub fn cmd_virial_check(cfg: &ExperimentConfig) -> Result<Outcome<VirialCheckReport>> {
    let grid = tier_grid(cfg)?;
    let gs = solve_ground_state(cfg.n, cfg.p, cfg.lambda, &grid, DEFAULT_TOL)?;
    let (u0, datum) = match cfg.alphas.first() {
        Some(&a) => (gs.field().scaled(a), format!("{a} Q")),
        None => (RadialField::from_real_fn(grid.clone(), |r| 0.5 * (-r * r).exp()), "0.5 exp(-r^2)".to_string()),
    };
    let horizon = cfg.horizon.unwrap_or(1.0);
    let mut icfg = IntegratorConfig::new(cfg.dt(), horizon);
    icfg.blowup_h1_factor = DICHOTOMY_BLOWUP_FACTOR;
    let run = evolve_run(&u0, &icfg, &gs)?;
    let consistency = virial_consistency(&run)?;
    let radius_sweep: Vec<RadiusSweepRow> = VIRIAL_SWEEP_RADII
        .iter()
        .map(|&radius| RadiusSweepRow {
            radius,
            initial: relative_localization_error(&u0, radius, &icfg.cutoff, cfg.p),
            last: relative_localization_error(&run.final_field, radius, &icfg.cutoff, cfg.p),
        })
        .collect();
    let sweep_monotone = shrinking(&radius_sweep.iter().map(|r| r.initial).collect::<Vec<_>>())
        && shrinking(&radius_sweep.iter().map(|r| r.last).collect::<Vec<_>>());
    let passed = consistency.max_mismatch < VIRIAL_MISMATCH_GATE && sweep_monotone;

    let mut out = OutputSet::new(cfg);
    out.csv("virial_series.csv", &series_csv(&run.series))?;
    let report = VirialCheckReport { datum, horizon, consistency, radius_sweep, sweep_monotone, passed };
    match cfg.format {
        Format::Csv => {
            let mut s = String::from("radius,initial,last\n");
            for r in &report.radius_sweep {
                let _ = writeln!(s, "{},{:e},{:e}", r.radius, r.initial, r.last);
            }
            out.csv("virial_sweep.csv", &s)?;
            out.json("virial_report.json", "report", &report)?;
        }
        Format::Json => {
            out.json("virial_report.json", "report", &report)?;
        }
    }
    Ok(Outcome { report, status: ExitStatus::from_gate(passed), files: out.into_files() })
}

// --------------------------------------------------------------- inequalities

pub const SCAN_POINTS: usize = 100_000;
pub const SCAN_RMAX: f64 = 20.0;
pub const SCAN_FLOOR: f64 = -1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub check: String,
    pub n: usize,
    pub p: Option<f64>,
    pub expectation: String,
    #[serde(flatten)]
    pub scan: ScanReport,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct InequalityReport {
    pub r_max: f64,
    pub points: usize,
    pub rows: Vec<ScanRow>,
    pub passed: bool,
}

impl InequalityReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("check,n,p,expectation,min_value,argmin,max_value,argmax,tail_value,passed\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{:e},{:e},{:e},{:e},{:e},{}",
                r.check,
                r.n,
                r.p.map(|p| p.to_string()).unwrap_or_default(),
                r.expectation,
                r.scan.min_value,
                r.scan.argmin,
                r.scan.max_value,
                r.scan.argmax,
                r.scan.tail_value,
                r.passed
            );
        }
        s
    }
}

/// Scan rows for dimension `n`; `sign = -1` flips the quartic (test hook).
pub fn inequality_rows(n: usize, r_max: f64, points: usize, sign: f64) -> Result<Vec<ScanRow>> {
    if n != 2 && n != 3 {
        return Err(Error::UnsupportedDimension(n));
    }
    let mut rows = Vec::new();
    let quartic = scan_quartic_signed(n, r_max, points, sign)?;
    rows.push(ScanRow {
        check: "quartic".into(),
        n,
        p: None,
        expectation: "min >= -1e-12".into(),
        passed: quartic.min_value >= SCAN_FLOOR,
        scan: quartic,
    });
    let w1 = scan_w1(r_max, points)?;
    rows.push(ScanRow {
        check: "w1".into(),
        n,
        p: None,
        expectation: "max = 1/3 within 1e-6; tail below 1e-6".into(),
        passed: (w1.max_value - 1.0 / 3.0).abs() <= 1e-6 && w1.tail_value.abs() <= 1e-6 && w1.min_value >= SCAN_FLOOR,
        scan: w1,
    });
    let p_crit = 1.0 + 4.0 / n as f64;
    let pm = scan_pm_coefficient(n, p_crit, r_max, points)?;
    rows.push(ScanRow {
        check: "pm_coefficient".into(),
        n,
        p: Some(p_crit),
        expectation: "min >= -1e-12".into(),
        passed: pm.min_value >= SCAN_FLOOR,
        scan: pm,
    });
    if n == 3 {
        let neg = scan_pm_coefficient(3, 2.0, r_max, points)?;
        rows.push(ScanRow {
            check: "pm_coefficient".into(),
            n,
            p: Some(2.0),
            expectation: "strictly negative somewhere".into(),
            passed: neg.min_value < 0.0,
            scan: neg,
        });
    }
    Ok(rows)
}

pub fn cmd_inequalities(cfg: &ExperimentConfig) -> Result<Outcome<InequalityReport>> {
    let r_max = cfg.rmax.unwrap_or(SCAN_RMAX);
    let points = cfg.points.unwrap_or(SCAN_POINTS);
    let sign = if cfg.inject_sign_flip { -1.0 } else { 1.0 };
    let rows = inequality_rows(cfg.n, r_max, points, sign)?;
    let passed = rows.iter().all(|r| r.passed);
    let report = InequalityReport { r_max, points, rows, passed };
    let mut out = OutputSet::new(cfg);
    match cfg.format {
        Format::Csv => out.csv("inequalities.csv", &report.to_csv())?,
        Format::Json => out.json("inequalities.json", "report", &report)?,
    };
    Ok(Outcome { report, status: ExitStatus::from_gate(passed), files: out.into_files() })
}

// ----------------------------------------------------------------- mass curve

pub const EL_RESIDUAL_GATE: f64 = 1e-4;

/// `count` log-spaced masses in `[lo, hi]`.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp()).collect()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MassCurveRow {
    pub alpha: f64,
    pub e_alpha: f64,
    pub flow_energy: f64,
    pub lagrange_lambda: Option<f64>,
    pub el_residual: Option<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct MassCurveReport {
    pub n: usize,
    pub p: f64,
    pub rows: Vec<MassCurveRow>,
    /// First grid mass with `e(alpha) < 0`.
    pub alpha0: Option<f64>,
    pub nonincreasing: bool,
    pub passed: bool,
}

impl MassCurveReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("alpha,e_alpha,flow_energy,lagrange_lambda,el_residual,iterations\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:e},{:e},{:e},{},{},{}",
                r.alpha,
                r.e_alpha,
                r.flow_energy,
                fmt_opt(r.lagrange_lambda),
                fmt_opt(r.el_residual),
                r.iterations
            );
        }
        s
    }
}

pub fn mass_curve(n: usize, p: f64, alphas: &[f64], grid: &Arc<RadialGrid>) -> Result<MassCurveReport> {
    let params = FlowParams::default();
    let points = alphas
        .iter()
        .map(|&a| mass_constrained_minimize(a, n, p, grid, &params))
        .collect::<Result<Vec<_>>>()?;
    let alpha0 = estimate_alpha0(&points);
    let rows: Vec<MassCurveRow> = points
        .iter()
        .map(|pt| MassCurveRow {
            alpha: pt.alpha,
            e_alpha: pt.e_alpha,
            flow_energy: pt.flow_energy,
            lagrange_lambda: pt.lagrange_lambda,
            el_residual: pt.el_residual,
            iterations: pt.iterations,
        })
        .collect();
    let nonincreasing = rows.windows(2).all(|w| w[1].e_alpha <= w[0].e_alpha + 1e-10 * w[0].e_alpha.abs().max(1.0));
    let gap = spectral_gap(n);
    let minimizers_ok = rows.iter().filter(|r| r.e_alpha < 0.0).all(|r| {
        r.el_residual.is_some_and(|x| x < EL_RESIDUAL_GATE) && r.lagrange_lambda.is_some_and(|l| l < gap)
    });
    let ends_ok = matches!((rows.first(), rows.last()), (Some(a), Some(b)) if a.e_alpha == 0.0 && b.e_alpha < 0.0);
    Ok(MassCurveReport { n, p, rows, alpha0, nonincreasing, passed: nonincreasing && minimizers_ok && ends_ok })
}

pub const DEFAULT_MASS_GRID: (f64, f64, usize) = (0.1, 20.0, 12);

pub fn cmd_mass_curve(cfg: &ExperimentConfig) -> Result<Outcome<MassCurveReport>> {
    if cfg.p >= 1.0 + 4.0 / cfg.n as f64 {
        return Err(Error::MassSupercritical { p: cfg.p, n: cfg.n });
    }
    let mut alphas = if cfg.alphas.is_empty() {
        let (lo, hi, k) = DEFAULT_MASS_GRID;
        log_spaced(lo, hi, k)
    } else {
        cfg.alphas.clone()
    };
    alphas.sort_by(f64::total_cmp);
    alphas.dedup();
    let grid = tier_grid(cfg)?;
    let report = mass_curve(cfg.n, cfg.p, &alphas, &grid)?;
    let mut out = OutputSet::new(cfg);
    match cfg.format {
        Format::Csv => out.csv("mass_curve.csv", &report.to_csv())?,
        Format::Json => out.json("mass_curve.json", "report", &report)?,
    };
    Ok(Outcome { status: ExitStatus::from_gate(report.passed), report, files: out.into_files() })
}

// ------------------------------------------------------------- spectral check

pub const SPECTRAL_RMAX: f64 = 30.0;
pub const SPECTRAL_POINTS: usize = 3000;
pub const PARSEVAL_GATE: f64 = 1e-4;
pub const RECONSTRUCTION_GATE: f64 = 1e-3;
pub const SOBOLEV_SPREAD_GATE: f64 = 10.0;
pub const SUP_BOUND_SCALES: [f64; 5] = [1.0, 2.0, 4.0, 8.0, 16.0];

pub fn spectral_grid(cfg: &ExperimentConfig) -> Result<Arc<RadialGrid>> {
    if cfg.n != 3 {
        return Err(Error::SpectralDimension(cfg.n));
    }
    build_grid(3, cfg.rmax.unwrap_or(SPECTRAL_RMAX), cfg.points.unwrap_or(SPECTRAL_POINTS))
}

/// Single bumps at radii {0.5, 2, 8}, widths {0.2, 1, 3}, amplitudes {0.1, 1, 10},
/// followed by three seeded multi-bump fields.
pub fn sobolev_family(grid: &Arc<RadialGrid>, seed: u64) -> Vec<RadialField> {
    let mut family = Vec::with_capacity(30);
    for c in [0.5, 2.0, 8.0] {
        for w in [0.2, 1.0, 3.0] {
            for a in [0.1, 1.0, 10.0] {
                family.push(RadialField::from_real_fn(grid.clone(), even_bump(c, w, a)));
            }
        }
    }
    family.extend(random_fields(grid, 3, seed));
    family
}

#[derive(Debug, Clone, Serialize)]
pub struct SupBoundFit {
    pub s: f64,
    pub scales: Vec<f64>,
    /// Largest `sup |P_m u| / (bound factor * ||u||_{H^s})` over the fitting family.
    pub fitted_constant: f64,
    /// Same ratio over a held-out seeded family.
    pub validation_max: f64,
    /// Largest ratio at each scale over both families.
    pub per_scale_max: Vec<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SobolevRow {
    pub s: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub spread: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralCheckReport {
    pub parseval_max: f64,
    pub reconstruction: f64,
    pub sup_bound: SupBoundFit,
    pub sobolev: Vec<SobolevRow>,
    pub passed: bool,
}

fn sup_bound_ratios(t: &SpectralTransform, u: &RadialField, s: f64) -> Result<Vec<f64>> {
    let hs = t.hs_norm(u, s)?;
    let sups = t.projector_sups(u, &SUP_BOUND_SCALES)?;
    Ok(SUP_BOUND_SCALES.iter().zip(&sups).map(|(&m, &v)| v / (pm_bound_factor(m, s) * hs)).collect())
}

/// Fit the projector sup-bound constant on `fit`, then require the held-out family
/// to stay within twice the fitted value.
pub fn fit_sup_bound(t: &SpectralTransform, fit: &[RadialField], held_out: &[RadialField], s: f64) -> Result<SupBoundFit> {
    let mut per_scale_max = vec![0.0f64; SUP_BOUND_SCALES.len()];
    let mut fold = |family: &[RadialField]| -> Result<f64> {
        let mut top = 0.0f64;
        for u in family {
            for (k, r) in sup_bound_ratios(t, u, s)?.into_iter().enumerate() {
                per_scale_max[k] = per_scale_max[k].max(r);
                top = top.max(r);
            }
        }
        Ok(top)
    };
    let fitted_constant = fold(fit)?;
    let validation_max = fold(held_out)?;
    let passed = fitted_constant.is_finite() && fitted_constant > 0.0 && validation_max <= 2.0 * fitted_constant;
    Ok(SupBoundFit { s, scales: SUP_BOUND_SCALES.to_vec(), fitted_constant, validation_max, per_scale_max, passed })
}

/// Spread of the refined Sobolev ratio over `family`, one row per `s`.
pub fn sobolev_spread(t: &SpectralTransform, family: &[RadialField], s_values: &[f64]) -> Result<Vec<SobolevRow>> {
    let m_samples = crate::spectral::default_m_samples(64.0);
    let mut lo = vec![f64::INFINITY; s_values.len()];
    let mut hi = vec![0.0f64; s_values.len()];
    for u in family {
        for (k, r) in t.refined_sobolev_ratios(u, s_values, &m_samples)?.into_iter().enumerate() {
            lo[k] = lo[k].min(r);
            hi[k] = hi[k].max(r);
        }
    }
    Ok(s_values
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            let spread = hi[k] / lo[k];
            SobolevRow { s, min_ratio: lo[k], max_ratio: hi[k], spread, passed: spread < SOBOLEV_SPREAD_GATE }
        })
        .collect())
}

pub fn spectral_report(t: &SpectralTransform, seed: u64) -> Result<(SpectralCheckReport, SpectralProfile)> {
    let grid = t.grid().clone();
    let gaussian = RadialField::from_real_fn(grid.clone(), |r| (-r * r).exp());
    let mut reference = vec![gaussian.clone()];
    reference.extend(random_fields(&grid, 5, seed));
    let mut parseval_max = 0.0f64;
    for u in &reference {
        parseval_max = parseval_max.max(t.parseval_residual(u)?);
    }
    let reconstruction = t.reconstruction_residual(&gaussian, None)?;
    let family = sobolev_family(&grid, seed.wrapping_add(1));
    let held_out = random_fields(&grid, 20, seed.wrapping_add(2));
    let sup_bound = fit_sup_bound(t, &family, &held_out, 1.0)?;
    let sobolev = sobolev_spread(t, &family, &[0.5, 1.0])?;
    let passed = parseval_max < PARSEVAL_GATE
        && reconstruction < RECONSTRUCTION_GATE
        && sup_bound.passed
        && sobolev.iter().all(|r| r.passed);
    let spectrum = t.forward(&gaussian)?;
    Ok((SpectralCheckReport { parseval_max, reconstruction, sup_bound, sobolev, passed }, spectrum))
}

pub fn cmd_spectral_check(cfg: &ExperimentConfig) -> Result<Outcome<SpectralCheckReport>> {
    let grid = spectral_grid(cfg)?;
    let t = SpectralTransform::new(grid, SpectralConfig::default())?;
    let (report, spectrum) = spectral_report(&t, cfg.seed)?;
    let mut out = OutputSet::new(cfg);
    out.csv("spectrum.csv", &spectrum.to_csv())?;
    match cfg.format {
        Format::Csv => {
            let mut s = String::from("check,value,gate,passed\n");
            let _ = writeln!(s, "parseval,{:e},{:e},{}", report.parseval_max, PARSEVAL_GATE, report.parseval_max < PARSEVAL_GATE);
            let _ = writeln!(
                s,
                "reconstruction,{:e},{:e},{}",
                report.reconstruction,
                RECONSTRUCTION_GATE,
                report.reconstruction < RECONSTRUCTION_GATE
            );
            let sb = &report.sup_bound;
            let _ = writeln!(s, "sup_bound_validation,{:e},{:e},{}", sb.validation_max, 2.0 * sb.fitted_constant, sb.passed);
            for r in &report.sobolev {
                let _ = writeln!(s, "sobolev_spread_s{},{:e},{:e},{}", r.s, r.spread, SOBOLEV_SPREAD_GATE, r.passed);
            }
            out.csv("spectral_report.csv", &s)?;
        }
        Format::Json => {
            out.json("spectral_report.json", "report", &report)?;
        }
    }
    Ok(Outcome { status: ExitStatus::from_gate(report.passed), report, files: out.into_files() })
}

// -------------------------------------------------------------------- dispatch

/// Run the configured command and summarize it as JSON for the terminal.
pub fn run_command(cfg: &ExperimentConfig) -> (ExitStatus, serde_json::Value) {
    fn pack<R: Serialize>(cfg: &ExperimentConfig, r: Result<Outcome<R>>) -> (ExitStatus, serde_json::Value) {
        match r.and_then(|o| Ok((o.status, o.files, serde_json::to_value(&o.report)?))) {
            Ok((status, files, report)) => (
                status,
                serde_json::json!({
                    "command": cfg.command.name(),
                    "exit_code": status.code(),
                    "config_digest": cfg.digest(),
                    "files": files,
                    "report": report,
                }),
            ),
            Err(e) => {
                let (status, kind) = classify_error(&e);
                (
                    status,
                    serde_json::json!({
                        "command": cfg.command.name(),
                        "exit_code": status.code(),
                        "error": kind,
                        "reason": e.to_string(),
                    }),
                )
            }
        }
    }
    match cfg.command {
        Command::GroundState => pack(cfg, cmd_groundstate(cfg)),
        Command::Dichotomy => pack(cfg, cmd_dichotomy(cfg)),
        Command::VirialCheck => pack(cfg, cmd_virial_check(cfg)),
        Command::Inequalities => pack(cfg, cmd_inequalities(cfg)),
        Command::MassCurve => pack(cfg, cmd_mass_curve(cfg)),
        Command::SpectralCheck => pack(cfg, cmd_spectral_check(cfg)),
        Command::PlotData => pack(cfg, super::plotdata::cmd_plotdata(cfg)),
    }
}
