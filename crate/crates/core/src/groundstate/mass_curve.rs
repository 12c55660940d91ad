//! Mass-constrained minimization `e(alpha) = inf { 1/2 ||u||_H^2 - ||u||_{p+1}^{p+1}/(p+1) : ||u||_2 = alpha }`
//! by a normalized gradient flow.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::RadialField;
use crate::functionals::check_exponent;
use crate::hypgeom::{spectral_gap, RadialGrid};
use crate::tridiag::solve_real_pivoting;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowParams {
    /// Initial pseudo-time step; also the ceiling when it regrows.
    pub tau: f64,
    /// Stop once the Euler-Lagrange residual drops below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Width of the Gaussian starting bump.
    pub init_width: f64,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self { tau: 0.5, tol: 1e-9, max_iter: 200_000, init_width: 2.0 }
    }
}

#[derive(Debug, Clone)]
pub struct MassCurvePoint {
    pub alpha: f64,
    pub e_alpha: f64,
    pub minimizer: Option<RadialField>,
    pub lagrange_lambda: Option<f64>,
    /// Euler-Lagrange residual in the discrete H^{-1} norm, relative to `||u||_{H^1}`.
    pub el_residual: Option<f64>,
    /// Raw flow limit before clamping at zero.
    pub flow_energy: f64,
    pub iterations: usize,
}

/// Energy and the magnitude of its terms (the scale of its roundoff).
fn flow_energy(u: &[f64], grid: &RadialGrid, p: f64) -> (f64, f64) {
    let d = grid.dirichlet_real(u);
    let m = spectral_gap(grid.n()) * grid.integrate(u.iter().map(|x| x * x));
    let l = grid.integrate(u.iter().map(|x| x.abs().powf(p + 1.0))) / (p + 1.0);
    (0.5 * (d - m) - l, d + m + l)
}

fn normalize(u: &mut [f64], grid: &RadialGrid, alpha: f64) {
    let m = grid.integrate(u.iter().map(|x| x * x)).sqrt();
    for x in u.iter_mut() {
        *x *= alpha / m;
    }
}

/// One semi-implicit step of the projected flow `u_t = Delta u + |u|^{p-1} u + lambda(u) u`,
/// renormalized. The multiplier is explicit, so fixed points solve the Euler-Lagrange
/// equation exactly.
fn flow_step(u: &[f64], grid: &RadialGrid, p: f64, tau: f64, alpha: f64) -> Option<Vec<f64>> {
    let (lo, di, up) = grid.laplacian_rows();
    let lambda = fit_lagrange_lambda(u, grid, p);
    let l: Vec<f64> = lo.iter().map(|x| -tau * x).collect();
    let uu: Vec<f64> = up.iter().map(|x| -tau * x).collect();
    let d: Vec<f64> = di.iter().map(|x| 1.0 - tau * x).collect();
    let rhs: Vec<f64> = u.iter().map(|&x| x + tau * (x.abs().powf(p - 1.0) * x + lambda * x)).collect();
    let mut next = solve_real_pivoting(&l, &d, &uu, &rhs)?;
    normalize(&mut next, grid, alpha);
    Some(next)
}

/// `||-Delta u - lambda u - |u|^{p-1} u||_{H^{-1}} / ||u||_{H^1}` with `H^{-1}` from `(-Delta_h + 1)^{-1}`.
pub fn euler_lagrange_residual(u: &[f64], grid: &RadialGrid, p: f64, lambda: f64) -> f64 {
    let lap = grid.laplacian_real(u);
    let r: Vec<f64> = u.iter().zip(&lap).map(|(&x, &l)| -l - lambda * x - x.abs().powf(p - 1.0) * x).collect();
    let (lo, di, up) = grid.laplacian_rows();
    let l: Vec<f64> = lo.iter().map(|x| -x).collect();
    let uu: Vec<f64> = up.iter().map(|x| -x).collect();
    let d: Vec<f64> = di.iter().map(|x| 1.0 - x).collect();
    let z = solve_real_pivoting(&l, &d, &uu, &r).expect("(-Delta_h + 1) is positive definite");
    let dual = grid.integrate(r.iter().zip(&z).map(|(a, b)| a * b)).max(0.0).sqrt();
    let h1 = (grid.dirichlet_real(u) + grid.integrate(u.iter().map(|x| x * x))).sqrt();
    dual / h1
}

/// `lambda = (int |grad u|^2 - int |u|^{p+1}) / int |u|^2`, the multiplier that makes the
/// Euler-Lagrange residual orthogonal to `u`.
pub fn fit_lagrange_lambda(u: &[f64], grid: &RadialGrid, p: f64) -> f64 {
    let d = grid.dirichlet_real(u);
    let m = grid.integrate(u.iter().map(|x| x * x));
    let l = grid.integrate(u.iter().map(|x| x.abs().powf(p + 1.0)));
    (d - l) / m
}

pub fn mass_constrained_minimize(
    alpha: f64,
    n: usize,
    p: f64,
    grid: &Arc<RadialGrid>,
    params: &FlowParams,
) -> Result<MassCurvePoint> {
    check_exponent(n, p)?;
    if p >= 1.0 + 4.0 / n as f64 {
        return Err(Error::MassSupercritical { p, n });
    }
    if grid.n() != n {
        return Err(Error::GridMismatch);
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(invalid("alpha", format!("must be positive, got {alpha}")));
    }
    let w = params.init_width;
    let mut u: Vec<f64> = grid.nodes().iter().map(|r| (-(r / w) * (r / w)).exp()).collect();
    normalize(&mut u, grid, alpha);
    let (mut e, _) = flow_energy(&u, grid, p);
    let mut tau = params.tau;
    let mut iterations = 0;
    let mut stalled = 0;
    while iterations < params.max_iter && tau > 1e-12 {
        iterations += 1;
        let Some(next) = flow_step(&u, grid, p, tau, alpha) else {
            tau *= 0.5;
            continue;
        };
        let (e_next, scale) = flow_energy(&next, grid, p);
        let noise = 1e-13 * scale;
        if e_next > e + noise {
            tau *= 0.5;
            continue;
        }
        let gained = e - e_next;
        u = next;
        e = e_next;
        tau = (tau * 1.25).min(params.tau);
        stalled = if gained <= noise { stalled + 1 } else { 0 };
        if stalled >= 20 || iterations % 25 == 0 {
            let lambda = fit_lagrange_lambda(&u, grid, p);
            if euler_lagrange_residual(&u, grid, p, lambda) < params.tol || stalled >= 20 {
                break;
            }
        }
    }
    if e >= -1e-8 {
        return Ok(MassCurvePoint {
            alpha,
            e_alpha: 0.0,
            minimizer: None,
            lagrange_lambda: None,
            el_residual: None,
            flow_energy: e,
            iterations,
        });
    }
    let lambda = fit_lagrange_lambda(&u, grid, p);
    let res = euler_lagrange_residual(&u, grid, p, lambda);
    Ok(MassCurvePoint {
        alpha,
        e_alpha: e,
        minimizer: Some(RadialField::from_real(grid.clone(), &u)?),
        lagrange_lambda: Some(lambda),
        el_residual: Some(res),
        flow_energy: e,
        iterations,
    })
}

/// First alpha (in the given order) with a strictly negative curve value.
pub fn estimate_alpha0(points: &[MassCurvePoint]) -> Option<f64> {
    points.iter().find(|pt| pt.e_alpha < 0.0).map(|pt| pt.alpha)
}
