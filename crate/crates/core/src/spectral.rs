//! Radial spherical transform on `H^3` and the multipliers built on it.
//!
//! `f^(lam) = (4 pi / lam) int f(r) sin(lam r) sinh(r) dr`,
//! `f(r) = (1 / (2 pi^2)) int f^(lam) lam^2 phi_lam(r) dlam` with `phi_lam = sin(lam r) / (lam sinh r)`.
//! Both integrals use the midpoint rule; the integrands are even in `r` and `lam`,
//! so the rule converges faster than any power.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::RadialField;
use crate::hypgeom::{build_grid, RadialGrid};

/// Plancherel density is `PLANCHEREL_CONSTANT * lam^2`. Checked against
/// [`calibrate_plancherel_constant`].
pub const PLANCHEREL_CONSTANT: f64 = 1.0 / (2.0 * PI * PI);

const RHO2: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralConfig {
    pub lambda_max: f64,
    pub num_lambda: usize,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self { lambda_max: 64.0, num_lambda: 4096 }
    }
}

#[derive(Debug, Clone)]
pub struct SpectralProfile {
    pub lambda_nodes: Vec<f64>,
    pub values: Vec<Complex64>,
    pub plancherel_density: Vec<f64>,
    pub rho: f64,
    pub dlambda: f64,
}

impl SpectralProfile {
    /// `int |f^|^2 (lam^2 + rho^2)^s density dlam`.
    pub fn weighted_energy(&self, s: f64) -> f64 {
        self.lambda_nodes
            .iter()
            .zip(&self.values)
            .zip(&self.plancherel_density)
            .map(|((&l, v), &d)| (l * l + RHO2).powf(s) * v.norm_sqr() * d)
            .sum::<f64>()
            * self.dlambda
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("lambda,re,im,density\n");
        for ((l, v), d) in self.lambda_nodes.iter().zip(&self.values).zip(&self.plancherel_density) {
            s.push_str(&format!("{l:e},{:e},{:e},{d:e}\n", v.re, v.im));
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct SpectralTransform {
    grid: Arc<RadialGrid>,
    lambdas: Vec<f64>,
    dlambda: f64,
}

/// Re-anchor the rotation recurrence every this many frequencies.
const ANCHOR: usize = 64;

impl SpectralTransform {
    pub fn new(grid: Arc<RadialGrid>, cfg: SpectralConfig) -> Result<Self> {
        if grid.n() != 3 {
            return Err(Error::SpectralDimension(grid.n()));
        }
        if !(cfg.lambda_max > 0.0) || cfg.num_lambda < 16 {
            return Err(invalid("spectral", "need lambda_max > 0 and at least 16 frequency nodes"));
        }
        let dlambda = cfg.lambda_max / cfg.num_lambda as f64;
        if dlambda * grid.r_max() >= PI {
            return Err(invalid("spectral", "frequency spacing too coarse for the radial box (need dlambda * r_max < pi)"));
        }
        let lambdas = (0..cfg.num_lambda).map(|k| (k as f64 + 0.5) * dlambda).collect();
        Ok(Self { grid, lambdas, dlambda })
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn lambda_nodes(&self) -> &[f64] {
        &self.lambdas
    }

    /// `acc[k] += coef * sin(lam_k r)` for every `k`.
    fn accumulate_sines(&self, r: f64, coef: Complex64, acc: &mut [Complex64]) {
        let step = Complex64::from_polar(1.0, self.dlambda * r);
        let mut z = Complex64::new(0.0, 0.0);
        for (k, a) in acc.iter_mut().enumerate() {
            if k % ANCHOR == 0 {
                z = Complex64::from_polar(1.0, self.lambdas[k] * r);
            }
            *a += coef * z.im;
            z *= step;
        }
    }

    pub fn forward_values(&self, u: &[Complex64]) -> Vec<Complex64> {
        let g = &self.grid;
        let mut acc = vec![Complex64::new(0.0, 0.0); self.lambdas.len()];
        let c = 4.0 * PI * g.dr();
        for (&r, &v) in g.nodes().iter().zip(u) {
            if v == Complex64::new(0.0, 0.0) {
                continue;
            }
            self.accumulate_sines(r, v * (c * r.sinh()), &mut acc);
        }
        for (a, &l) in acc.iter_mut().zip(&self.lambdas) {
            *a /= l;
        }
        acc
    }

    pub fn inverse_values(&self, fhat: &[Complex64]) -> Vec<Complex64> {
        let c = PLANCHEREL_CONSTANT * self.dlambda;
        let weighted: Vec<Complex64> = fhat.iter().zip(&self.lambdas).map(|(f, &l)| f * (l * c)).collect();
        self.grid
            .nodes()
            .iter()
            .map(|&r| {
                let mut acc = [Complex64::new(0.0, 0.0)];
                let mut z = Complex64::new(0.0, 0.0);
                let step = Complex64::from_polar(1.0, self.dlambda * r);
                for (k, w) in weighted.iter().enumerate() {
                    if k % ANCHOR == 0 {
                        z = Complex64::from_polar(1.0, self.lambdas[k] * r);
                    }
                    acc[0] += w * z.im;
                    z *= step;
                }
                acc[0] / r.sinh()
            })
            .collect()
    }

    pub fn forward(&self, u: &RadialField) -> Result<SpectralProfile> {
        if !u.grid().same_as(&self.grid) {
            return Err(Error::GridMismatch);
        }
        Ok(SpectralProfile {
            values: self.forward_values(u.values()),
            plancherel_density: self.lambdas.iter().map(|l| PLANCHEREL_CONSTANT * l * l).collect(),
            lambda_nodes: self.lambdas.clone(),
            rho: 1.0,
            dlambda: self.dlambda,
        })
    }

    pub fn inverse(&self, profile: &SpectralProfile) -> Result<RadialField> {
        if profile.values.len() != self.lambdas.len() {
            return Err(invalid("profile", "frequency grid does not match the transform"));
        }
        RadialField::from_values(self.grid.clone(), self.inverse_values(&profile.values))
    }

    pub(crate) fn apply_multiplier_values(&self, u: &[Complex64], m: impl Fn(f64) -> Complex64) -> Vec<Complex64> {
        let mut f = self.forward_values(u);
        for (v, &l) in f.iter_mut().zip(&self.lambdas) {
            *v *= m(l);
        }
        self.inverse_values(&f)
    }

    pub fn apply_multiplier(&self, u: &RadialField, m: impl Fn(f64) -> f64) -> Result<RadialField> {
        if !u.grid().same_as(&self.grid) {
            return Err(Error::GridMismatch);
        }
        let v = self.apply_multiplier_values(u.values(), |l| Complex64::new(m(l), 0.0));
        RadialField::from_values(self.grid.clone(), v)
    }

    /// `P_m = -(1/m^2) Delta e^{Delta/m^2}`.
    pub fn apply_pm(&self, u: &RadialField, m: f64) -> Result<RadialField> {
        if !(m > 0.0) {
            return Err(invalid("m", format!("scale must be positive, got {m}")));
        }
        self.apply_multiplier(u, |l| pm_symbol(l, m))
    }

    pub fn heat_semigroup(&self, u: &RadialField, t: f64) -> Result<RadialField> {
        if !(t >= 0.0) {
            return Err(invalid("t", format!("diffusion time must be nonnegative, got {t}")));
        }
        self.apply_multiplier(u, |l| (-t * (l * l + RHO2)).exp())
    }

    /// `|| ||u||_2^2 - int |u^|^2 density | / ||u||_2^2`.
    pub fn parseval_residual(&self, u: &RadialField) -> Result<f64> {
        let m = l2_sq(u);
        let e = self.forward(u)?.weighted_energy(0.0);
        Ok((m - e).abs() / m)
    }

    /// Relative L^2 error of `2 int_1^A (1/m) P_m u dm` against `u - e^{Delta} u`;
    /// `upper = None` integrates to infinity through `m = 1/s`.
    pub fn reconstruction_residual(&self, u: &RadialField, upper: Option<f64>) -> Result<f64> {
        let (nodes, weights) = match upper {
            Some(a) => {
                if !(a > 1.0) {
                    return Err(invalid("upper", "upper scale must exceed 1"));
                }
                // integrate in ln m, where the integrand is a smooth bump
                let (x, w) = composite_gauss_legendre(0.0, a.ln(), 32, 16);
                (x.iter().map(|t| t.exp()).collect::<Vec<_>>(), w)
            }
            None => {
                // m = 1/s, dm/m = -ds/s, panels refined geometrically towards s = 0
                let mut xs = Vec::new();
                let mut ws = Vec::new();
                let mut hi = 1.0;
                for _ in 0..12 {
                    let lo = hi * 0.5;
                    let (x, w) = gauss_legendre(24);
                    for (xi, wi) in x.iter().zip(&w) {
                        let s = lo + (hi - lo) * 0.5 * (xi + 1.0);
                        xs.push(1.0 / s);
                        ws.push(wi * 0.5 * (hi - lo) / s);
                    }
                    hi = lo;
                }
                (xs, ws)
            }
        };
        if !u.grid().same_as(&self.grid) {
            return Err(Error::GridMismatch);
        }
        let uhat = self.forward_values(u.values());
        // Sum the projector symbols over the m-quadrature, then invert once; by
        // linearity this equals summing the applied projectors.
        let recon_hat: Vec<Complex64> = uhat
            .iter()
            .zip(&self.lambdas)
            .map(|(f, &l)| {
                let sym: f64 = nodes.iter().zip(&weights).map(|(&m, &w)| w * pm_symbol(l, m)).sum();
                f * (2.0 * sym)
            })
            .collect();
        let target_hat: Vec<Complex64> =
            uhat.iter().zip(&self.lambdas).map(|(f, &l)| f * (1.0 - (-(l * l + RHO2)).exp())).collect();
        let recon = self.inverse_values(&recon_hat);
        let target = self.inverse_values(&target_hat);
        let grid = &self.grid;
        let err = grid.integrate(recon.iter().zip(&target).map(|(a, b)| (a - b).norm_sqr()));
        let norm = grid.integrate(target.iter().map(|z| z.norm_sqr()));
        Ok((err / norm).sqrt())
    }

    pub fn hs_norm(&self, u: &RadialField, s: f64) -> Result<f64> {
        Ok(self.forward(u)?.weighted_energy(s).sqrt())
    }

    /// `max_m m^{s - 3/2} sup_r |P_m u(r)|` over the given scales. A lower bound for
    /// the supremum over all `m >= 1`.
    pub fn besov_norm(&self, u: &RadialField, s: f64, m_samples: &[f64]) -> Result<f64> {
        if !(s > 0.0 && s <= 1.5) {
            return Err(invalid("s", format!("need 0 < s <= 3/2, got {s}")));
        }
        let sups = self.projector_sups(u, m_samples)?;
        Ok(m_samples.iter().zip(&sups).map(|(&m, &v)| m.powf(s - 1.5) * v).fold(0.0, f64::max))
    }

    /// `sup_r |P_m u(r)|` for each scale.
    pub fn projector_sups(&self, u: &RadialField, m_samples: &[f64]) -> Result<Vec<f64>> {
        if !u.grid().same_as(&self.grid) {
            return Err(Error::GridMismatch);
        }
        if m_samples.iter().any(|&m| !(m >= 1.0)) {
            return Err(invalid("m_samples", "scales must be >= 1"));
        }
        let uhat = self.forward_values(u.values());
        Ok(m_samples
            .iter()
            .map(|&m| {
                let f: Vec<Complex64> = uhat.iter().zip(&self.lambdas).map(|(v, &l)| v * pm_symbol(l, m)).collect();
                self.inverse_values(&f).iter().fold(0.0f64, |a, z| a.max(z.norm()))
            })
            .collect())
    }

    /// `||u||_{L^a} / (||u||_{H^s}^{2/a} ||u||_{B^s}^{1 - 2/a})` with `1/a = 1/2 - s/3`.
    pub fn refined_sobolev_ratio(&self, u: &RadialField, s: f64, m_samples: &[f64]) -> Result<f64> {
        Ok(self.refined_sobolev_ratios(u, &[s], m_samples)?[0])
    }

    /// [`SpectralTransform::refined_sobolev_ratio`] at several `s`, sharing the projections.
    pub fn refined_sobolev_ratios(&self, u: &RadialField, s_values: &[f64], m_samples: &[f64]) -> Result<Vec<f64>> {
        if let Some(&s) = s_values.iter().find(|&&s| !(s > 0.0 && s < 1.5)) {
            return Err(invalid("s", format!("need 0 < s < 3/2, got {s}")));
        }
        let sups = self.projector_sups(u, m_samples)?;
        let profile = self.forward(u)?;
        Ok(s_values
            .iter()
            .map(|&s| {
                let a = sobolev_exponent(s);
                let hs = profile.weighted_energy(s).sqrt();
                let bs = m_samples.iter().zip(&sups).map(|(&m, &v)| m.powf(s - 1.5) * v).fold(0.0, f64::max);
                lp_norm(u, a) / (hs.powf(2.0 / a) * bs.powf(1.0 - 2.0 / a))
            })
            .collect())
    }
}

/// `((lam^2 + 1)/m^2) e^{-(lam^2 + 1)/m^2}`.
pub fn pm_symbol(lambda: f64, m: f64) -> f64 {
    let x = (lambda * lambda + RHO2) / (m * m);
    x * (-x).exp()
}

/// `a` with `1/a = 1/2 - s/3`.
pub fn sobolev_exponent(s: f64) -> f64 {
    6.0 / (3.0 - 2.0 * s)
}

/// Right-hand side factor of the projector sup bound, `(1/m^2 + m^{3/2 - s}) e^{-1/m^2}`.
pub fn pm_bound_factor(m: f64, s: f64) -> f64 {
    (1.0 / (m * m) + m.powf(1.5 - s)) * (-1.0 / (m * m)).exp()
}

/// Geometric scales `2^{k/4}` from 1 up to `m_max`.
pub fn default_m_samples(m_max: f64) -> Vec<f64> {
    (0..).map(|k| 2f64.powf(k as f64 / 4.0)).take_while(|&m| m <= m_max * (1.0 + 1e-12)).collect()
}

pub fn l2_sq(u: &RadialField) -> f64 {
    u.grid().integrate(u.values().iter().map(|z| z.norm_sqr()))
}

pub fn lp_norm(u: &RadialField, a: f64) -> f64 {
    u.grid().integrate(u.values().iter().map(|z| z.norm().powf(a))).powf(1.0 / a)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; k];
    let mut w = vec![0.0; k];
    for i in 0..k {
        let mut z = (PI * (i as f64 + 0.75) / (k as f64 + 0.5)).cos();
        loop {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=k {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = k as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                let (mut q0, mut q1) = (1.0, z);
                for j in 2..=k {
                    let q2 = ((2 * j - 1) as f64 * z * q1 - (j - 1) as f64 * q0) / j as f64;
                    q0 = q1;
                    q1 = q2;
                }
                let dq = k as f64 * (z * q1 - q0) / (z * z - 1.0);
                x[i] = z;
                w[i] = 2.0 / ((1.0 - z * z) * dq * dq);
                break;
            }
        }
    }
    (x, w)
}

fn composite_gauss_legendre(a: f64, b: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut xs = Vec::with_capacity(panels * order);
    let mut ws = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            xs.push(lo + 0.5 * h * (xi + 1.0));
            ws.push(0.5 * h * wi);
        }
    }
    (xs, ws)
}

/// Ratio `||u||^2 / int |u^|^2 lam^2 dlam` for `u = e^{-r^2}` on a fine grid: the
/// constant in front of `lam^2` in the Plancherel density.
pub fn calibrate_plancherel_constant() -> Result<f64> {
    let grid = build_grid(3, 16.0, 8000)?;
    let t = SpectralTransform::new(grid.clone(), SpectralConfig { lambda_max: 48.0, num_lambda: 6000 })?;
    let u = RadialField::from_real_fn(grid, |r| (-r * r).exp());
    let f = t.forward_values(u.values());
    let raw: f64 = f.iter().zip(&t.lambdas).map(|(v, &l)| v.norm_sqr() * l * l).sum::<f64>() * t.dlambda;
    Ok(l2_sq(&u) / raw)
}

/// Even bump `A (e^{-((r-c)/w)^2} + e^{-((r+c)/w)^2})`.
pub fn even_bump(center: f64, width: f64, amplitude: f64) -> impl Fn(f64) -> f64 {
    move |r: f64| {
        let a = (r - center) / width;
        let b = (r + center) / width;
        amplitude * ((-a * a).exp() + (-b * b).exp())
    }
}

/// Seeded sums of three even bumps, for held-out validation of fitted constants.
pub fn random_fields(grid: &Arc<RadialGrid>, count: usize, seed: u64) -> Vec<RadialField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let bumps: Vec<(f64, f64, f64)> = (0..3)
                .map(|_| (rng.gen_range(0.0..8.0), rng.gen_range(0.3..3.0), rng.gen_range(-1.0..1.0)))
                .collect();
            RadialField::from_real_fn(grid.clone(), move |r| {
                bumps.iter().map(|&(c, w, a)| even_bump(c, w, a)(r)).sum()
            })
        })
        .collect()
}
