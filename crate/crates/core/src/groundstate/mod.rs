//! Ground states `Q_lambda` of `-Delta Q - lambda Q = Q^p` and the mass-constrained curve `e(alpha)`.

pub mod mass_curve;
pub mod shooting;

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::RadialField;
use crate::functionals::{self, check_exponent};
use crate::hypgeom::{build_grid, spectral_gap, RadialGrid};
use shooting::{OdeSpec, Shot};

pub use mass_curve::{mass_constrained_minimize, FlowParams, MassCurvePoint};

pub const DEFAULT_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub pohozaev: f64,
    pub energy_ratio: f64,
    pub g_value: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.pohozaev.max(self.energy_ratio).max(self.g_value)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundState {
    pub n: usize,
    pub p: f64,
    pub lambda: f64,
    pub r_max: f64,
    pub num_points: usize,
    /// Shooting amplitude `Q(0+)`.
    pub q0: f64,
    pub hlam_sq: f64,
    pub lp1: f64,
    pub mass: f64,
    pub energy_lambda: f64,
    /// `||Q||_{L^{p+1}}^{1-p}`.
    pub d_lambda: f64,
    pub residuals: Residuals,
    /// Secant slope of `ln Q` over `[r_max/2, 3 r_max/4]` and the linear prediction.
    pub far_field_slope: f64,
    pub far_field_expected: f64,
    /// False for n = 2 when `lambda > 2(p+1)/(p+3)^2`, where uniqueness is not known.
    pub uniqueness_regime: bool,
    #[serde(skip)]
    pub profile: Vec<f64>,
    #[serde(skip)]
    grid: Option<Arc<RadialGrid>>,
}

pub fn far_field_rate(n: usize, lambda: f64) -> f64 {
    let rho = 0.5 * (n as f64 - 1.0);
    rho + (rho * rho - lambda).sqrt()
}

pub fn uniqueness_regime(n: usize, p: f64, lambda: f64) -> bool {
    n != 2 || lambda <= 2.0 * (p + 1.0) / ((p + 3.0) * (p + 3.0))
}

/// Radius at which the far field of `Q_lambda` no longer affects the identity residuals:
/// the virial integrand decays like `exp(-2 k r)`, `k = sqrt(rho^2 - lambda)`, so
/// `k r_max >= 10` is asked for. Never below 20.
pub fn certification_rmax(n: usize, lambda: f64) -> f64 {
    let k = (spectral_gap(n) - lambda).max(0.0).sqrt();
    if k * 300.0 <= 10.0 {
        return 300.0;
    }
    (10.0 / k).ceil().max(20.0)
}

fn check_admissible(n: usize, p: f64, lambda: f64) -> Result<()> {
    if n != 2 && n != 3 {
        return Err(Error::UnsupportedDimension(n));
    }
    check_exponent(n, p)?;
    let gap = spectral_gap(n);
    if !(lambda < gap) {
        return Err(Error::NoGroundState { lambda, threshold: gap });
    }
    Ok(())
}

/// Upper end of the shooting integration: far enough that roundoff in the slow mode
/// has grown to order one, so the classifier always fires.
fn shooting_horizon(n: usize, lambda: f64, r_max: f64) -> f64 {
    let k = (spectral_gap(n) - lambda).sqrt().max(1e-3);
    (r_max + 25.0 / k).min(r_max + 2000.0)
}

pub fn solve_ground_state(n: usize, p: f64, lambda: f64, grid: &Arc<RadialGrid>, tol: f64) -> Result<GroundState> {
    check_admissible(n, p, lambda)?;
    if grid.n() != n {
        return Err(Error::GridMismatch);
    }
    if !(tol > 0.0 && tol < 1e-2) {
        return Err(crate::error::invalid("tol", format!("bisection tolerance must lie in (0, 1e-2), got {tol}")));
    }
    let ode = OdeSpec { n, p, lambda, dr: grid.dr() };
    let r_end = shooting_horizon(n, lambda, grid.r_max());
    let (lo, hi) = bracket(&ode, r_end)?;
    let (lo, hi) = bisect(&ode, r_end, lo, hi, tol);
    let q0 = 0.5 * (lo + hi);

    let guess = matched_profile(&ode, grid, r_end, lo, hi);
    let profile = newton_polish(grid, p, lambda, guess)?;
    finish(n, p, lambda, grid, q0, profile)
}

fn bracket(ode: &OdeSpec, r_end: f64) -> Result<(f64, f64)> {
    let mut a = 1.0;
    let first = ode.shoot(a, r_end, None);
    loop {
        let next = if first == Shot::TooSmall { a * 2.0 } else { a * 0.5 };
        if !(1e-6..=1e6).contains(&next) {
            return Err(Error::SearchFailure("no amplitude bracket in [1e-6, 1e6]".into()));
        }
        if ode.shoot(next, r_end, None) != first {
            return Ok(if first == Shot::TooSmall { (a, next) } else { (next, a) });
        }
        a = next;
    }
}

fn bisect(ode: &OdeSpec, r_end: f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    while hi - lo > tol * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match ode.shoot(mid, r_end, None) {
            Shot::TooSmall => lo = mid,
            Shot::TooLarge => hi = mid,
        }
    }
    (lo, hi)
}

/// Average the two bracketing trajectories while they agree, then continue
/// with the linear decay `e^{-kappa r}`.
fn matched_profile(ode: &OdeSpec, grid: &RadialGrid, r_end: f64, lo: f64, hi: f64) -> Vec<f64> {
    let mut t_lo = Vec::new();
    let mut t_hi = Vec::new();
    ode.shoot(lo, r_end, Some(&mut t_lo));
    ode.shoot(hi, r_end, Some(&mut t_hi));
    let len = grid.num_points().min(t_lo.len()).min(t_hi.len());
    let mut cut = len;
    for j in 0..len {
        if (t_lo[j] - t_hi[j]).abs() > 1e-4 * t_lo[j] {
            cut = j;
            break;
        }
    }
    let cut = cut.max(1);
    let kappa = far_field_rate(ode.n, ode.lambda);
    let nodes = grid.nodes();
    let anchor = 0.5 * (t_lo[cut - 1] + t_hi[cut - 1]);
    (0..grid.num_points())
        .map(|j| {
            if j < cut {
                0.5 * (t_lo[j] + t_hi[j])
            } else {
                anchor * (-kappa * (nodes[j] - nodes[cut - 1])).exp()
            }
        })
        .collect()
}

/// Newton iteration on the discrete equation `-Delta_h Q - lambda Q - Q^p = 0`, so the
/// returned profile is an exact critical point of the discrete functionals.
fn newton_polish(grid: &RadialGrid, p: f64, lambda: f64, mut q: Vec<f64>) -> Result<Vec<f64>> {
    let (lo, di, up) = grid.laplacian_rows();
    let n = q.len();
    let scale = q.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    let mut settled = false;
    for _ in 0..60 {
        let lap = grid.laplacian_real(&q);
        let res: Vec<f64> = (0..n).map(|j| lap[j] + lambda * q[j] + q[j].abs().powf(p - 1.0) * q[j]).collect();
        let jl: Vec<f64> = lo.iter().map(|x| -x).collect();
        let ju: Vec<f64> = up.iter().map(|x| -x).collect();
        let jd: Vec<f64> = (0..n).map(|j| -di[j] - lambda - p * q[j].abs().powf(p - 1.0)).collect();
        let delta = crate::tridiag::solve_real_pivoting(&jl, &jd, &ju, &res)
            .ok_or_else(|| Error::SearchFailure("singular Jacobian in discrete refinement".into()))?;
        let step = delta.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
        for (a, d) in q.iter_mut().zip(&delta) {
            *a += d;
        }
        if !step.is_finite() {
            break;
        }
        // quadratic convergence stalls at roundoff; one extra sweep after a tiny step
        if settled {
            return check_shape(q, scale);
        }
        settled = step <= 1e-10 * scale;
    }
    Err(Error::SearchFailure("discrete refinement did not converge".into()))
}

fn check_shape(q: Vec<f64>, scale: f64) -> Result<Vec<f64>> {
    if q.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::SearchFailure("refined profile is not positive".into()));
    }
    if q.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::SearchFailure("refined profile is not decreasing".into()));
    }
    if (q[0] - scale).abs() > 0.1 * scale {
        return Err(Error::SearchFailure("refinement drifted away from the shooting profile".into()));
    }
    Ok(q)
}

fn finish(n: usize, p: f64, lambda: f64, grid: &Arc<RadialGrid>, q0: f64, profile: Vec<f64>) -> Result<GroundState> {
    let mut gs = GroundState {
        n,
        p,
        lambda,
        r_max: grid.r_max(),
        num_points: grid.num_points(),
        q0,
        hlam_sq: 0.0,
        lp1: 0.0,
        mass: 0.0,
        energy_lambda: 0.0,
        d_lambda: 0.0,
        residuals: Residuals { pohozaev: 0.0, energy_ratio: 0.0, g_value: 0.0 },
        far_field_slope: 0.0,
        far_field_expected: -far_field_rate(n, lambda),
        uniqueness_regime: uniqueness_regime(n, p, lambda),
        profile,
        grid: Some(grid.clone()),
    };
    let u = gs.field();
    gs.hlam_sq = functionals::h_lambda_sq(&u, lambda)?;
    gs.lp1 = functionals::lp1(&u, p);
    gs.mass = functionals::mass(&u);
    gs.energy_lambda = functionals::energy_lambda(&u, lambda, p)?;
    gs.d_lambda = gs.lp1.powf((1.0 - p) / (p + 1.0));
    gs.residuals = verify_identities(&gs)?;
    gs.far_field_slope = far_field_slope(grid, &gs.profile);
    Ok(gs)
}

fn far_field_slope(grid: &RadialGrid, q: &[f64]) -> f64 {
    let nodes = grid.nodes();
    let pick = |r: f64| ((r / grid.dr() - 0.5).round() as usize).min(q.len() - 1);
    let a = pick(0.5 * grid.r_max());
    let b = pick(0.75 * grid.r_max());
    (q[b].ln() - q[a].ln()) / (nodes[b] - nodes[a])
}

/// Recompute the three identity residuals from the profile alone.
pub fn verify_identities(gs: &GroundState) -> Result<Residuals> {
    let u = gs.field();
    let p = gs.p;
    let hl = functionals::h_lambda_sq(&u, gs.lambda)?;
    let l = functionals::lp1(&u, p);
    let el = functionals::energy_lambda(&u, gs.lambda, p)?;
    let g = functionals::g_functional(&u, p);
    Ok(Residuals {
        pohozaev: (hl - l).abs() / hl,
        energy_ratio: (el - (p - 1.0) / (2.0 * (p + 1.0)) * hl).abs() / el.abs(),
        g_value: g.abs() / hl,
    })
}

impl GroundState {
    pub fn grid(&self) -> &Arc<RadialGrid> {
        self.grid.as_ref().expect("ground state carries its grid")
    }

    pub fn field(&self) -> RadialField {
        RadialField::from_real(self.grid().clone(), &self.profile).expect("profile matches its grid")
    }

    /// Copy with the profile replaced (derived quantities are left as they were).
    pub fn with_profile(&self, profile: Vec<f64>) -> Result<GroundState> {
        if profile.len() != self.profile.len() {
            return Err(Error::GridMismatch);
        }
        Ok(GroundState { profile, ..self.clone() })
    }

    pub fn profile_csv(&self) -> String {
        let mut s = String::from("r,Q\n");
        for (r, q) in self.grid().nodes().iter().zip(&self.profile) {
            let _ = writeln!(s, "{r:e},{q:e}");
        }
        s
    }

    /// Load the JSON/CSV pair written by [`GroundState::to_json`] and [`GroundState::profile_csv`].
    pub fn load(json_path: &Path, csv_path: &Path) -> Result<GroundState> {
        let text = std::fs::read_to_string(json_path)?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        let body = value.get("ground_state").cloned().unwrap_or(value);
        let mut gs: GroundState =
            serde_json::from_value(body).map_err(|e| Error::CorruptGroundState(format!("{}: {e}", json_path.display())))?;
        let grid = build_grid(gs.n, gs.r_max, gs.num_points)?;
        let csv = std::fs::read_to_string(csv_path)?;
        gs.profile = parse_profile(&csv, &grid)?;
        gs.grid = Some(grid);
        let hl = functionals::h_lambda_sq(&gs.field(), gs.lambda)?;
        if !((hl - gs.hlam_sq).abs() <= 1e-9 * gs.hlam_sq.abs()) {
            return Err(Error::CorruptGroundState("profile does not reproduce the stored norms".into()));
        }
        Ok(gs)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn parse_profile(csv: &str, grid: &RadialGrid) -> Result<Vec<f64>> {
    let corrupt = |m: &str| Error::CorruptGroundState(m.to_string());
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    if lines.next().map(str::trim) != Some("r,Q") {
        return Err(corrupt("profile csv must start with header `r,Q`"));
    }
    let mut q = Vec::with_capacity(grid.num_points());
    for (j, line) in lines.enumerate() {
        let mut it = line.split(',');
        let (Some(r), Some(v), None) = (it.next(), it.next(), it.next()) else {
            return Err(corrupt(&format!("malformed row {}", j + 2)));
        };
        let r: f64 = r.trim().parse().map_err(|_| corrupt("bad r value"))?;
        let v: f64 = v.trim().parse().map_err(|_| corrupt("bad Q value"))?;
        match grid.nodes().get(j) {
            Some(&node) if (node - r).abs() <= 1e-12 * node.max(1.0) => {}
            _ => return Err(corrupt("profile nodes do not match the declared grid")),
        }
        q.push(v);
    }
    if q.len() != grid.num_points() {
        return Err(corrupt("profile length does not match the declared grid"));
    }
    if q.iter().any(|&x| !(x > 0.0)) {
        return Err(corrupt("profile must be positive"));
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_at_gap_is_rejected() {
        let g = build_grid(3, 20.0, 400).unwrap();
        assert!(matches!(solve_ground_state(3, 3.0, 1.0, &g, 1e-10), Err(Error::NoGroundState { .. })));
        assert!(matches!(solve_ground_state(3, 3.0, 1.7, &g, 1e-10), Err(Error::NoGroundState { .. })));
        assert!(solve_ground_state(3, 5.0, 0.0, &g, 1e-10).is_err());
    }
}
