//! Radial geometry of H^n (n = 2, 3): cell-centered grid, volume weights,
//! midpoint quadrature and the divergence-form Laplacian.
//!
//! Nodes sit at `r_j = (j + 1/2) dr`. The Laplacian is
//! `[s(j+1/2)(f[j+1]-f[j]) - s(j-1/2)(f[j]-f[j-1])] / (dr^2 sinh^{n-1}(r_j))`
//! with `s = sinh^{n-1}` at the faces, a zero flux through `r = 0` and an odd ghost
//! value `f[N] = -f[N-1]` that pins `f(r_max) = 0`.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::field::RadialField;

/// Below this radius the weight functions switch to their Taylor expansions.
pub const SERIES_CUTOFF: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    pub volume: Vec<f64>,
    pub coth: Vec<f64>,
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    pub lap_r2: Vec<f64>,
    pub bilap_r2: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    n: usize,
    r_max: f64,
    dr: f64,
    nodes: Vec<f64>,
    sphere_area: f64,
    weights: WeightTable,
    // face density sinh^{n-1}((j+1) dr), j = 0..N-1; the last face is r_max
    face: Vec<f64>,
    lap_lower: Vec<f64>,
    lap_diag: Vec<f64>,
    lap_upper: Vec<f64>,
}

pub fn sphere_area(n: usize) -> Result<f64> {
    match n {
        2 => Ok(2.0 * std::f64::consts::PI),
        3 => Ok(4.0 * std::f64::consts::PI),
        _ => Err(Error::UnsupportedDimension(n)),
    }
}

/// Bottom of the spectrum of -Delta on H^n, `(n-1)^2/4`.
pub fn spectral_gap(n: usize) -> f64 {
    let rho = (n as f64 - 1.0) / 2.0;
    rho * rho
}

pub fn build_grid(n: usize, r_max: f64, num_points: usize) -> Result<Arc<RadialGrid>> {
    let omega = sphere_area(n)?;
    if !(r_max.is_finite() && r_max > 0.0) {
        return Err(invalid("r_max", format!("must be positive and finite, got {r_max}")));
    }
    if r_max > 300.0 {
        return Err(invalid("r_max", "sinh^{n-1}(r_max) would overflow; keep r_max <= 300"));
    }
    if num_points < 16 {
        return Err(invalid("num_points", format!("need at least 16 nodes, got {num_points}")));
    }
    let dr = r_max / num_points as f64;
    let nodes: Vec<f64> = (0..num_points).map(|j| (j as f64 + 0.5) * dr).collect();
    let weights = weights_for_nodes(n, &nodes);
    let face: Vec<f64> = (0..num_points).map(|j| sinh_pow(n, (j + 1) as f64 * dr)).collect();

    let h2 = dr * dr;
    let mut lap_lower = vec![0.0; num_points];
    let mut lap_upper = vec![0.0; num_points];
    let mut lap_diag = vec![0.0; num_points];
    for j in 0..num_points {
        let v = weights.volume[j] * h2;
        let left = if j == 0 { 0.0 } else { face[j - 1] / v };
        let right = face[j] / v;
        lap_lower[j] = left;
        if j + 1 < num_points {
            lap_upper[j] = right;
            lap_diag[j] = -left - right;
        } else {
            lap_diag[j] = -left - 2.0 * right;
        }
    }
    Ok(Arc::new(RadialGrid {
        n,
        r_max,
        dr,
        nodes,
        sphere_area: omega,
        weights,
        face,
        lap_lower,
        lap_diag,
        lap_upper,
    }))
}

pub fn build_weights(grid: &RadialGrid) -> WeightTable {
    weights_for_nodes(grid.n, &grid.nodes)
}

fn weights_for_nodes(n: usize, nodes: &[f64]) -> WeightTable {
    WeightTable {
        volume: nodes.iter().map(|&r| sinh_pow(n, r)).collect(),
        coth: nodes.iter().map(|&r| coth(r)).collect(),
        w1: nodes.iter().map(|&r| w1(r)).collect(),
        w2: nodes.iter().map(|&r| w2(n, r)).collect(),
        lap_r2: nodes.iter().map(|&r| lap_r2(n, r)).collect(),
        bilap_r2: nodes.iter().map(|&r| bilap_r2(n, r)).collect(),
    }
}

impl RadialGrid {
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn r_max(&self) -> f64 {
        self.r_max
    }
    pub fn num_points(&self) -> usize {
        self.nodes.len()
    }
    pub fn dr(&self) -> f64 {
        self.dr
    }
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
    pub fn sphere_area(&self) -> f64 {
        self.sphere_area
    }
    pub fn weights(&self) -> &WeightTable {
        &self.weights
    }
    /// `sinh^{n-1}` at the right face of each cell.
    pub fn face_density(&self) -> &[f64] {
        &self.face
    }
    /// Row coefficients of the discrete Laplacian: `(lower, diag, upper)`.
    pub fn laplacian_rows(&self) -> (&[f64], &[f64], &[f64]) {
        (&self.lap_lower, &self.lap_diag, &self.lap_upper)
    }

    /// Same geometry, same nodes (pointer or value equality).
    pub fn same_as(&self, other: &RadialGrid) -> bool {
        std::ptr::eq(self, other)
            || (self.n == other.n && self.r_max == other.r_max && self.nodes.len() == other.nodes.len())
    }

    /// `omega * sum f_j sinh^{n-1}(r_j) dr`, no length check.
    pub(crate) fn integrate(&self, f: impl Iterator<Item = f64>) -> f64 {
        let s: f64 = f.zip(&self.weights.volume).map(|(a, w)| a * w).sum();
        s * self.dr * self.sphere_area
    }

    /// Discrete Dirichlet form, `-<Delta_h f, f>` exactly.
    pub fn dirichlet(&self, f: &[Complex64]) -> f64 {
        let n = f.len();
        let mut s = 0.0;
        for j in 0..n - 1 {
            s += self.face[j] * (f[j + 1] - f[j]).norm_sqr();
        }
        s += 2.0 * self.face[n - 1] * f[n - 1].norm_sqr();
        s * self.sphere_area / self.dr
    }

    pub fn dirichlet_real(&self, f: &[f64]) -> f64 {
        let n = f.len();
        let mut s = 0.0;
        for j in 0..n - 1 {
            let d = f[j + 1] - f[j];
            s += self.face[j] * d * d;
        }
        s += 2.0 * self.face[n - 1] * f[n - 1] * f[n - 1];
        s * self.sphere_area / self.dr
    }

    pub fn laplacian_real(&self, f: &[f64]) -> Vec<f64> {
        let n = f.len();
        (0..n)
            .map(|j| {
                let mut s = self.lap_diag[j] * f[j];
                if j > 0 {
                    s += self.lap_lower[j] * f[j - 1];
                }
                if j + 1 < n {
                    s += self.lap_upper[j] * f[j + 1];
                }
                s
            })
            .collect()
    }

    pub(crate) fn laplacian_complex(&self, f: &[Complex64]) -> Vec<Complex64> {
        let n = f.len();
        (0..n)
            .map(|j| {
                let mut s = f[j] * self.lap_diag[j];
                if j > 0 {
                    s += f[j - 1] * self.lap_lower[j];
                }
                if j + 1 < n {
                    s += f[j + 1] * self.lap_upper[j];
                }
                s
            })
            .collect()
    }
}

pub fn quadrature(f: &[f64], grid: &RadialGrid) -> Result<f64> {
    if f.len() != grid.num_points() {
        return Err(Error::GridMismatch);
    }
    Ok(grid.integrate(f.iter().copied()))
}

pub fn apply_laplacian(field: &RadialField) -> RadialField {
    let grid = field.grid();
    RadialField::from_values(grid.clone(), grid.laplacian_complex(field.values()))
        .expect("same length as the input field")
}

pub fn sinh_pow(n: usize, r: f64) -> f64 {
    let s = r.sinh();
    match n {
        2 => s,
        3 => s * s,
        _ => s.powi(n as i32 - 1),
    }
}

pub fn coth(r: f64) -> f64 {
    if r < SERIES_CUTOFF {
        let r2 = r * r;
        1.0 / r + r * (1.0 / 3.0 - r2 / 45.0)
    } else {
        1.0 / r.tanh()
    }
}

/// `r coth r`, equal to 1 at the origin.
pub fn r_coth(r: f64) -> f64 {
    if r < SERIES_CUTOFF {
        let r2 = r * r;
        1.0 + r2 * (1.0 / 3.0 - r2 * (1.0 / 45.0 - r2 * 2.0 / 945.0))
    } else {
        r / r.tanh()
    }
}

/// `(r cosh r - sinh r) / sinh^3 r`: decreasing from 1/3 at the origin to 0.
pub fn w1(r: f64) -> f64 {
    if r < SERIES_CUTOFF {
        let r2 = r * r;
        1.0 / 3.0 - r2 * (2.0 / 15.0 - r2 * (2.0 / 63.0 - r2 * 4.0 / 675.0))
    } else if r > 40.0 {
        // sinh^3 overflows long after this, but the ratio is already ~ 4 r e^{-2r}
        4.0 * (r - 1.0) * (-2.0 * r).exp()
    } else {
        let s = r.sinh();
        r_cosh_minus_sinh(r) / (s * s * s)
    }
}

/// `r cosh r - sinh r` without cancellation: below 1 it is summed as `sum 2k r^{2k+1} / (2k+1)!`.
fn r_cosh_minus_sinh(r: f64) -> f64 {
    if r >= 1.0 {
        return r * r.cosh() - r.sinh();
    }
    let r2 = r * r;
    // term_k = r^{2k+1} / (2k+1)!
    let mut term = r * r2 / 6.0;
    let mut sum = 2.0 * term;
    for k in 2..20 {
        term *= r2 / ((2 * k) * (2 * k + 1)) as f64;
        sum += 2.0 * k as f64 * term;
        if term < 1e-18 * sum {
            break;
        }
    }
    sum
}

/// `1 + (n-1) r coth r`.
pub fn w2(n: usize, r: f64) -> f64 {
    1.0 + (n as f64 - 1.0) * r_coth(r)
}

/// `Delta (r^2) = 2 + 2(n-1) r coth r`.
pub fn lap_r2(n: usize, r: f64) -> f64 {
    2.0 + 2.0 * (n as f64 - 1.0) * r_coth(r)
}

/// `Delta^2 (r^2) = 2(n-1)^2 - 2(n-1)(n-3) W1(r)`.
pub fn bilap_r2(n: usize, r: f64) -> f64 {
    let m = n as f64 - 1.0;
    2.0 * m * m - 2.0 * m * (n as f64 - 3.0) * w1(r)
}
