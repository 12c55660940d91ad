//! Single-step integrators.
//!
//! `CnStepper` is Crank-Nicolson with a real auxiliary potential `phi`:
//! `(1 - i dt/2 (Delta_h + phi)) u^{n+1} = (1 + i dt/2 (Delta_h + phi)) u^n`.
//! The predictor is the relaxation rule `phi = 2|u^n|^{p-1} - phi^{n-1/2}`; fixed-point
//! sweeps then drive `phi` to the chord quotient of `F(s) = 2 s^{(p+1)/2}/(p+1)` between
//! `|u^n|^2` and `|u^{n+1}|^2`, which conserves the discrete energy. Any real `phi`
//! makes the step unitary, so mass is conserved to roundoff.

use num_complex::Complex64;

use crate::hypgeom::RadialGrid;
use crate::spectral::SpectralTransform;
use crate::tridiag::solve_complex;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepFailure {
    NotConverged,
    NonFinite,
}

/// `(F(a) - F(b)) / (a - b)` with `F' (s) = s^{(p-1)/2}`.
#[inline]
pub(crate) fn chord(a: f64, b: f64, p: f64) -> f64 {
    if p == 3.0 {
        return 0.5 * (a + b);
    }
    let e = 0.5 * (p - 1.0);
    let m = 0.5 * (a + b);
    let d = a - b;
    if d.abs() > 1e-4 * m {
        let f = |s: f64| s.powf(e + 1.0) / (e + 1.0);
        (f(a) - f(b)) / d
    } else if m > 0.0 {
        // midpoint expansion: F'(m) + F'''(m) d^2 / 24
        m.powf(e) + e * (e - 1.0) * m.powf(e - 2.0) * d * d / 24.0
    } else {
        0.0
    }
}

#[inline]
fn pot(z: Complex64, p: f64) -> f64 {
    let m2 = z.norm_sqr();
    if p == 3.0 {
        m2
    } else {
        m2.powf(0.5 * (p - 1.0))
    }
}

pub struct CnStepper {
    p: f64,
    inner_tol: f64,
    max_inner: usize,
    phi_prev: Option<Vec<f64>>,
    lower: Vec<Complex64>,
    upper: Vec<Complex64>,
    diag: Vec<Complex64>,
    scratch: Vec<Complex64>,
    cached_dt: f64,
}

impl CnStepper {
    pub fn new(p: f64, inner_tol: f64, max_inner: usize) -> Self {
        Self {
            p,
            inner_tol,
            max_inner,
            phi_prev: None,
            lower: Vec::new(),
            upper: Vec::new(),
            diag: Vec::new(),
            scratch: Vec::new(),
            cached_dt: f64::NAN,
        }
    }

    fn prepare(&mut self, grid: &RadialGrid, dt: f64) {
        if self.cached_dt == dt && self.lower.len() == grid.num_points() {
            return;
        }
        let (lo, _, up) = grid.laplacian_rows();
        let c = -I * (0.5 * dt);
        self.lower = lo.iter().map(|&x| c * x).collect();
        self.upper = up.iter().map(|&x| c * x).collect();
        self.diag = vec![Complex64::new(0.0, 0.0); grid.num_points()];
        self.cached_dt = dt;
    }

    /// Advance `u` by `dt`; returns the new state and the number of sweeps used.
    pub fn step(&mut self, grid: &RadialGrid, u: &[Complex64], dt: f64) -> Result<(Vec<Complex64>, usize), StepFailure> {
        self.prepare(grid, dt);
        let p = self.p;
        let n = u.len();
        let (_, ldiag, _) = grid.laplacian_rows();
        let mod_old: Vec<f64> = u.iter().map(|z| z.norm_sqr()).collect();
        let mut phi: Vec<f64> = match &self.phi_prev {
            Some(prev) if prev.len() == n => u.iter().zip(prev).map(|(&z, &q)| 2.0 * pot(z, p) - q).collect(),
            _ => u.iter().map(|&z| pot(z, p)).collect(),
        };
        let lap_u = grid.laplacian_complex(u);
        let h = 0.5 * dt;
        let scale = u.iter().fold(0.0f64, |m, z| m.max(z.norm())).max(1e-300);
        let mut prev_iter: Option<Vec<Complex64>> = None;
        for sweep in 1..=self.max_inner {
            for j in 0..n {
                self.diag[j] = Complex64::new(1.0, -h * (ldiag[j] + phi[j]));
            }
            let mut rhs: Vec<Complex64> = (0..n).map(|j| u[j] + I * h * (lap_u[j] + phi[j] * u[j])).collect();
            solve_complex(&self.lower, &self.diag, &self.upper, &mut rhs, &mut self.scratch);
            if rhs.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(StepFailure::NonFinite);
            }
            for j in 0..n {
                phi[j] = chord(rhs[j].norm_sqr(), mod_old[j], p);
            }
            let change = match &prev_iter {
                Some(v) => v.iter().zip(&rhs).fold(0.0f64, |m, (a, b)| m.max((a - b).norm())),
                None => f64::INFINITY,
            };
            if change <= self.inner_tol * scale {
                self.phi_prev = Some(phi);
                return Ok((rhs, sweep));
            }
            prev_iter = Some(rhs);
        }
        Err(StepFailure::NotConverged)
    }

    /// Forget the relaxation history (after a rejected step or a restart).
    pub fn reset(&mut self) {
        self.phi_prev = None;
    }
}

/// Strang splitting: half nonlinear phase, exact linear flow through the spherical
/// transform on `H^3`, half nonlinear phase.
pub struct StrangStepper {
    p: f64,
    transform: SpectralTransform,
}

impl StrangStepper {
    pub fn new(p: f64, transform: SpectralTransform) -> Self {
        Self { p, transform }
    }

    pub fn step(&self, u: &[Complex64], dt: f64) -> Result<(Vec<Complex64>, usize), StepFailure> {
        let p = self.p;
        let half = |v: &mut [Complex64]| {
            for z in v.iter_mut() {
                *z *= Complex64::from_polar(1.0, 0.5 * dt * pot(*z, p));
            }
        };
        let mut v = u.to_vec();
        half(&mut v);
        let mut v = self.transform.apply_multiplier_values(&v, |lam| {
            Complex64::from_polar(1.0, -(lam * lam + 1.0) * dt)
        });
        half(&mut v);
        if v.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(StepFailure::NonFinite);
        }
        Ok((v, 1))
    }
}
