//! Conserved quantities, the virial functional `G`, the localized virial and
//! the threshold quantities measured against a ground state.

pub mod inequalities;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::RadialField;
use crate::groundstate::GroundState;
use crate::hypgeom::{coth, spectral_gap, RadialGrid};

/// `|z|^{p+1}` with fast paths for the usual exponents.
#[inline]
pub(crate) fn abs_pow_p1(z: Complex64, p: f64) -> f64 {
    let m2 = z.norm_sqr();
    if p == 3.0 {
        m2 * m2
    } else if p == 2.0 {
        m2 * m2.sqrt()
    } else {
        m2.powf(0.5 * (p + 1.0))
    }
}

pub(crate) fn check_exponent(n: usize, p: f64) -> Result<()> {
    let upper = if n == 3 { 5.0 } else { f64::INFINITY };
    if !(p > 1.0 && p < upper) {
        return Err(invalid("p", format!("need 1 < p < {upper} for n = {n}, got {p}")));
    }
    Ok(())
}

pub(crate) fn check_lambda(n: usize, lambda: f64) -> Result<()> {
    let gap = spectral_gap(n);
    if !(lambda.is_finite() && lambda < gap) {
        return Err(invalid("lambda", format!("need lambda < (n-1)^2/4 = {gap}, got {lambda}")));
    }
    Ok(())
}

pub fn mass(u: &RadialField) -> f64 {
    u.grid().integrate(u.values().iter().map(|z| z.norm_sqr()))
}

/// Discrete `int |grad u|^2`.
pub fn dirichlet(u: &RadialField) -> f64 {
    u.grid().dirichlet(u.values())
}

/// `int |u|^{p+1}`.
pub fn lp1(u: &RadialField, p: f64) -> f64 {
    u.grid().integrate(u.values().iter().map(|&z| abs_pow_p1(z, p)))
}

/// `||u||_H^2 = int |grad u|^2 - (n-1)^2/4 int |u|^2`.
pub fn h_sq(u: &RadialField) -> f64 {
    dirichlet(u) - spectral_gap(u.n()) * mass(u)
}

pub fn h_lambda_sq(u: &RadialField, lambda: f64) -> Result<f64> {
    check_lambda(u.n(), lambda)?;
    Ok(dirichlet(u) - lambda * mass(u))
}

pub fn h1_sq(u: &RadialField) -> f64 {
    dirichlet(u) + mass(u)
}

pub fn energy(u: &RadialField, p: f64) -> f64 {
    0.5 * dirichlet(u) - lp1(u, p) / (p + 1.0)
}

pub fn energy_lambda(u: &RadialField, lambda: f64, p: f64) -> Result<f64> {
    Ok(0.5 * h_lambda_sq(u, lambda)? - lp1(u, p) / (p + 1.0))
}

pub fn delta_lambda(u: &RadialField, gs: &GroundState) -> Result<f64> {
    Ok(h_lambda_sq(u, gs.lambda)? - gs.hlam_sq)
}

/// `G(u) = 8||u||_H^2 + 2(n-1)(n-3) int |u|^2 W1 - 4(p-1)/(p+1) int |u|^{p+1} W2`.
pub fn g_functional(u: &RadialField, p: f64) -> f64 {
    let grid = u.grid();
    let w = grid.weights();
    let n = grid.n();
    let nonlinear = grid.integrate(u.values().iter().zip(&w.w2).map(|(&z, &b)| abs_pow_p1(z, p) * b));
    let mut g = 8.0 * h_sq(u) - 4.0 * (p - 1.0) / (p + 1.0) * nonlinear;
    if n != 3 {
        let m = n as f64 - 1.0;
        let curv = grid.integrate(u.values().iter().zip(&w.w1).map(|(z, &a)| z.norm_sqr() * a));
        g += 2.0 * m * (n as f64 - 3.0) * curv;
    }
    g
}

/// `G(u) - 16 E_lambda(u) + 16 E_lambda(Q)`.
pub fn h_aux(u: &RadialField, gs: &GroundState) -> Result<f64> {
    Ok(g_functional(u, gs.p) - 16.0 * energy_lambda(u, gs.lambda, gs.p)? + 16.0 * gs.energy_lambda)
}

pub fn second_moment(u: &RadialField) -> f64 {
    let grid = u.grid();
    grid.integrate(u.values().iter().zip(grid.nodes()).map(|(z, r)| r * r * z.norm_sqr()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum SignHistory {
    ConstantNegative,
    ConstantPositive,
    /// First record whose `delta_lambda` sign differs from the first record's.
    Violation { t: f64 },
}

/// Whether `delta_lambda` kept one strict sign along a run. A zero counts as a change.
pub fn trapping_sign_check(series: &[DiagnosticsRecord]) -> Result<SignHistory> {
    let first = series.first().ok_or(Error::TooFewRecords { got: 0, need: 1 })?;
    if first.delta_lambda == 0.0 {
        return Ok(SignHistory::Violation { t: first.t });
    }
    let sign = first.delta_lambda.signum();
    match series.iter().find(|r| r.delta_lambda == 0.0 || r.delta_lambda.signum() != sign) {
        Some(r) => Ok(SignHistory::Violation { t: r.t }),
        None if sign < 0.0 => Ok(SignHistory::ConstantNegative),
        None => Ok(SignHistory::ConstantPositive),
    }
}

/// `(E_lambda(u) / E_lambda(Q)) ||Q||^2_{H_lambda} - ||u||^2_{H_lambda}` from the two
/// monitored quantities. `None` unless `E_lambda(u) <= E_lambda(Q)` and
/// `||u||_{H_lambda} <= ||Q||_{H_lambda}`.
pub fn bound_residual(energy_lambda: f64, hlam_sq: f64, gs: &GroundState) -> Result<Option<f64>> {
    if !(gs.energy_lambda > 0.0) {
        return Err(Error::CorruptGroundState(format!("E_lambda(Q) = {} is not positive", gs.energy_lambda)));
    }
    if energy_lambda > gs.energy_lambda || hlam_sq > gs.hlam_sq {
        return Ok(None);
    }
    Ok(Some(energy_lambda / gs.energy_lambda * gs.hlam_sq - hlam_sq))
}

/// [`bound_residual`] evaluated at `u`; nonnegative whenever it applies.
pub fn variational_bound_check(u: &RadialField, gs: &GroundState) -> Result<Option<f64>> {
    bound_residual(energy_lambda(u, gs.lambda, gs.p)?, h_lambda_sq(u, gs.lambda)?, gs)
}

/// Radial profile `phi` with `phi(s) = s^2` on `[0, 1]`, constant on `[2, inf)` and a
/// polynomial bridge `phi(1 + t) = sum c_k t^k` on `t in [0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CutoffProfile {
    bridge: Vec<f64>,
    top: f64,
}

impl CutoffProfile {
    /// `phi'' = 2 - 2 S(t) - 420 t^3 (1-t)^3` with `S` the quintic smoothstep; C^4 at both joints.
    pub fn standard() -> Self {
        Self::from_bridge(vec![1.0, 2.0, 1.0, 0.0, 0.0, -22.0, 43.0, -212.0 / 7.0, 7.5])
            .expect("standard bridge satisfies the shape constraints")
    }

    pub fn from_bridge(bridge: Vec<f64>) -> Result<Self> {
        let probe = Self { top: 0.0, bridge };
        let left = [1.0, 2.0, 2.0, 0.0, 0.0];
        for (k, &want) in left.iter().enumerate() {
            if (probe.poly(0.0, k) - want).abs() > 1e-9 {
                return Err(invalid("cutoff", format!("derivative {k} does not match s^2 at s = 1")));
            }
        }
        for k in 1..=4 {
            if probe.poly(1.0, k).abs() > 1e-9 {
                return Err(invalid("cutoff", format!("derivative {k} does not vanish at s = 2")));
            }
        }
        for i in 0..=2000 {
            let t = i as f64 / 2000.0;
            if probe.poly(t, 2) > 2.0 + 1e-12 {
                return Err(invalid("cutoff", format!("phi'' exceeds 2 at s = {}", 1.0 + t)));
            }
            if probe.poly(t, 0) <= 0.0 {
                return Err(invalid("cutoff", "phi must stay positive"));
            }
        }
        let top = probe.poly(1.0, 0);
        Ok(Self { top, bridge: probe.bridge })
    }

    fn poly(&self, t: f64, k: usize) -> f64 {
        let mut acc = 0.0;
        for (i, &c) in self.bridge.iter().enumerate().skip(k).rev() {
            let mut f = 1.0;
            for m in 0..k {
                f *= (i - m) as f64;
            }
            acc = acc * t + c * f;
        }
        // the Horner loop above accumulates powers t^{i-k}
        acc
    }

    /// k-th derivative of `phi` at `s >= 0`, `k <= 4`.
    pub fn derivative(&self, s: f64, k: usize) -> f64 {
        if s <= 1.0 {
            match k {
                0 => s * s,
                1 => 2.0 * s,
                2 => 2.0,
                _ => 0.0,
            }
        } else if s >= 2.0 {
            if k == 0 {
                self.top
            } else {
                0.0
            }
        } else {
            self.poly(s - 1.0, k)
        }
    }
}

/// Derivatives `h, h', ..., h''''` of `h_R(r) = R^2 phi(r/R)`.
fn weight_derivs(cut: &CutoffProfile, radius: f64, r: f64) -> [f64; 5] {
    let s = r / radius;
    [
        radius * radius * cut.derivative(s, 0),
        radius * cut.derivative(s, 1),
        cut.derivative(s, 2),
        cut.derivative(s, 3) / radius,
        cut.derivative(s, 4) / (radius * radius),
    ]
}

/// Nodal `Delta h_R` and `Delta^2 h_R`.
fn weight_laplacians(grid: &RadialGrid, cut: &CutoffProfile, radius: f64) -> (Vec<f64>, Vec<f64>) {
    let n = grid.n() as f64;
    let m = n - 1.0;
    let w = grid.weights();
    let mut lap = Vec::with_capacity(grid.num_points());
    let mut bilap = Vec::with_capacity(grid.num_points());
    for (j, &r) in grid.nodes().iter().enumerate() {
        if r <= radius {
            lap.push(w.lap_r2[j]);
            bilap.push(w.bilap_r2[j]);
            continue;
        }
        let h = weight_derivs(cut, radius, r);
        let ct = coth(r);
        let csch2 = ct * ct - 1.0;
        lap.push(h[2] + m * ct * h[1]);
        bilap.push(
            h[4] + 2.0 * m * ct * h[3] + m * (m * ct * ct - 2.0 * csch2) * h[2] + m * (3.0 - n) * csch2 * ct * h[1],
        );
    }
    (lap, bilap)
}

/// Discrete `int |u_r|^2 w(r)` on faces, consistent with the Dirichlet form.
fn face_kinetic(u: &RadialField, weight: impl Fn(f64) -> f64) -> f64 {
    let grid = u.grid();
    let v = u.values();
    let face = grid.face_density();
    let dr = grid.dr();
    let last = v.len() - 1;
    let mut s = 0.0;
    for j in 0..last {
        s += face[j] * (v[j + 1] - v[j]).norm_sqr() * weight((j + 1) as f64 * dr);
    }
    s += 2.0 * face[last] * v[last].norm_sqr() * weight(grid.r_max());
    s * grid.sphere_area() / dr
}

/// `int 4|u_r|^2 h'' - |u|^2 Delta^2 h - 2(p-1)/(p+1) |u|^{p+1} Delta h` for `h = h_R`.
/// Equals `G(u)` when `u` lives inside `r <= R`.
pub fn localized_virial(u: &RadialField, radius: f64, cut: &CutoffProfile, p: f64) -> f64 {
    let grid = u.grid();
    let (lap, bilap) = weight_laplacians(grid, cut, radius);
    let kinetic = face_kinetic(u, |r| cut.derivative(r / radius, 2));
    let c = 2.0 * (p - 1.0) / (p + 1.0);
    let rest = grid.integrate(
        u.values().iter().zip(lap.iter().zip(&bilap)).map(|(&z, (&l, &b))| -z.norm_sqr() * b - c * abs_pow_p1(z, p) * l),
    );
    4.0 * kinetic + rest
}

/// The three pieces of `localized_virial - G`: kinetic `4 int |u_r|^2 (h'' - 2)`,
/// linear `-int |u|^2 (Delta^2 h - Delta^2 r^2)` and nonlinear
/// `-2(p-1)/(p+1) int |u|^{p+1} (Delta h - Delta r^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VirialRemainders {
    pub kinetic: f64,
    pub linear: f64,
    pub nonlinear: f64,
}

impl VirialRemainders {
    pub fn total(&self) -> f64 {
        self.kinetic + self.linear + self.nonlinear
    }
}

pub fn virial_remainders(u: &RadialField, radius: f64, cut: &CutoffProfile, p: f64) -> VirialRemainders {
    let grid = u.grid();
    let w = grid.weights();
    let (lap, bilap) = weight_laplacians(grid, cut, radius);
    let kinetic = 4.0 * face_kinetic(u, |r| cut.derivative(r / radius, 2) - 2.0);
    let linear = -grid.integrate(u.values().iter().enumerate().map(|(j, z)| z.norm_sqr() * (bilap[j] - w.bilap_r2[j])));
    let c = 2.0 * (p - 1.0) / (p + 1.0);
    let nonlinear = -c * grid.integrate(u.values().iter().enumerate().map(|(j, &z)| abs_pow_p1(z, p) * (lap[j] - w.lap_r2[j])));
    VirialRemainders { kinetic, linear, nonlinear }
}

/// One row of the time series. Column order is fixed by `CSV_HEADER`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub energy_lambda: f64,
    pub hlam_sq: f64,
    pub h_sq: f64,
    pub lp1: f64,
    pub delta_lambda: f64,
    #[serde(rename = "G_value")]
    pub g_value: f64,
    pub second_moment: f64,
    pub loc_virial: f64,
    pub h1_sq: f64,
}

impl DiagnosticsRecord {
    pub const CSV_HEADER: &'static str =
        "t,mass,energy,energy_lambda,hlam_sq,h_sq,lp1,delta_lambda,G_value,second_moment,loc_virial,h1_sq";

    pub fn compute(t: f64, u: &RadialField, gs: &GroundState, radius: f64, cut: &CutoffProfile) -> Self {
        let p = gs.p;
        let m = mass(u);
        let d = dirichlet(u);
        let l = lp1(u, p);
        let hlam = d - gs.lambda * m;
        let energy = 0.5 * d - l / (p + 1.0);
        Self {
            t,
            mass: m,
            energy,
            energy_lambda: energy - 0.5 * gs.lambda * m,
            hlam_sq: hlam,
            h_sq: d - spectral_gap(u.n()) * m,
            lp1: l,
            delta_lambda: hlam - gs.hlam_sq,
            g_value: g_functional(u, p),
            second_moment: second_moment(u),
            loc_virial: localized_virial(u, radius, cut, p),
            h1_sq: d + m,
        }
    }

    pub fn to_csv_row(&self) -> String {
        let v = self.as_array();
        v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(",")
    }

    pub fn as_array(&self) -> [f64; 12] {
        [
            self.t,
            self.mass,
            self.energy,
            self.energy_lambda,
            self.hlam_sq,
            self.h_sq,
            self.lp1,
            self.delta_lambda,
            self.g_value,
            self.second_moment,
            self.loc_virial,
            self.h1_sq,
        ]
    }

    pub fn from_array(v: [f64; 12]) -> Self {
        Self {
            t: v[0],
            mass: v[1],
            energy: v[2],
            energy_lambda: v[3],
            hlam_sq: v[4],
            h_sq: v[5],
            lp1: v[6],
            delta_lambda: v[7],
            g_value: v[8],
            second_moment: v[9],
            loc_virial: v[10],
            h1_sq: v[11],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_cutoff_joins_smoothly() {
        let c = CutoffProfile::standard();
        for k in 0..=4 {
            let below = c.derivative(1.0 - 1e-12, k);
            let above = c.derivative(1.0 + 1e-12, k);
            assert!((below - above).abs() < 1e-6, "k = {k}: {below} vs {above}");
            let below = c.derivative(2.0 - 1e-12, k);
            let above = c.derivative(2.0 + 1e-12, k);
            assert!((below - above).abs() < 1e-6, "k = {k} at 2");
        }
        assert!(c.derivative(3.0, 0) > 1.0);
    }

    #[test]
    fn cutoff_rejects_bad_bridges() {
        assert!(CutoffProfile::from_bridge(vec![1.0, 2.0, 1.0]).is_err());
        let mut b = vec![1.0, 2.0, 1.0, 0.0, 0.0, -22.0, 43.0, -212.0 / 7.0, 7.5];
        b[5] = -21.0;
        assert!(CutoffProfile::from_bridge(b).is_err());
    }
}
